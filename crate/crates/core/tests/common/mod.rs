//! Finite-difference checks of every differentiable tape op, shared by the
//! integration tests and the acceptance runner.

#![allow(dead_code)]

use std::sync::Arc;

use lisa::autodiff::gradcheck::grad_check;
use lisa::autodiff::{DftBasis, Tape, Tensor, Var};
use lisa::rng::derive_rng;
use lisa::Result;
use rand::Rng;

pub const STEP: f64 = 1e-6;

fn rand_tensor(rng: &mut impl Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Values with magnitude in `[0.2, 1.5]` and random sign, away from kinks.
fn signed(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let mut t = rand_tensor(rng, shape, 0.2, 1.5);
    for v in t.data_mut() {
        if rng.random::<bool>() {
            *v = -*v;
        }
    }
    t
}

/// Reduces a tensor to a scalar through a fixed random projection, so the
/// incoming gradient is not uniform.
fn project(tape: &mut Tape<f64>, v: Var, seed: u64) -> Result<Var> {
    let mut rng = derive_rng(seed, &[0x9e0]);
    let shape = tape.value(v).shape().to_vec();
    let w = tape.constant(rand_tensor(&mut rng, &shape, -1.0, 1.0));
    let p = tape.mul(v, w)?;
    Ok(tape.sum(p))
}

type OpCheck = fn(u64) -> Result<f64>;

/// `(name, check)` for each op; a check returns the worst relative error
/// for one seed.
pub fn op_checks() -> Vec<(&'static str, OpCheck)> {
    vec![
        ("conv1d", conv1d),
        ("dense", dense),
        ("relu", relu),
        ("add", add),
        ("sub", sub),
        ("mul", mul),
        ("div", div),
        ("scale", scale),
        ("concat", concat),
        ("slice", slice),
        ("reshape", reshape),
        ("sum", sum),
        ("mean", mean),
        ("log", log),
        ("square", square),
        ("sqrt", sqrt),
        ("abs", abs),
        ("frobenius_norm", frobenius),
        ("l1_loss", l1),
        ("frame", frame),
        ("dft_magnitude", dft_magnitude),
        ("gather_context", gather_context),
    ]
}

fn unary(seed: u64, inputs: Vec<Tensor<f64>>, f: fn(&mut Tape<f64>, Var) -> Var) -> Result<f64> {
    grad_check(
        |tape, v| {
            let y = f(tape, v[0]);
            project(tape, y, seed)
        },
        &inputs,
        STEP,
    )
}

fn binary(seed: u64, f: fn(&mut Tape<f64>, Var, Var) -> Result<Var>, positive_rhs: bool) -> Result<f64> {
    let mut rng = derive_rng(seed, &[1]);
    let a = signed(&mut rng, &[3, 4]);
    let b = if positive_rhs { rand_tensor(&mut rng, &[3, 4], 0.5, 2.0) } else { signed(&mut rng, &[3, 4]) };
    grad_check(
        |tape, v| {
            let y = f(tape, v[0], v[1])?;
            project(tape, y, seed)
        },
        &[a, b],
        STEP,
    )
}

fn conv1d(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[2]);
    let inputs = vec![signed(&mut rng, &[3, 12]), signed(&mut rng, &[4, 3, 5]), signed(&mut rng, &[4])];
    grad_check(
        |tape, v| {
            let y = tape.conv1d(v[0], v[1], v[2])?;
            project(tape, y, seed)
        },
        &inputs,
        STEP,
    )
}

fn dense(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[3]);
    let inputs = vec![signed(&mut rng, &[5, 7]), signed(&mut rng, &[4, 7]), signed(&mut rng, &[4]), signed(&mut rng, &[7])];
    grad_check(
        |tape, v| {
            let rows = tape.dense(v[0], v[1], v[2])?;
            let single = tape.dense(v[3], v[1], v[2])?;
            let a = project(tape, rows, seed)?;
            let b = project(tape, single, seed + 1)?;
            tape.add(a, b)
        },
        &inputs,
        STEP,
    )
}

fn relu(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[4]);
    unary(seed, vec![signed(&mut rng, &[20])], |t, v| t.relu(v))
}

fn add(seed: u64) -> Result<f64> {
    binary(seed, |t, a, b| t.add(a, b), false)
}

fn sub(seed: u64) -> Result<f64> {
    binary(seed, |t, a, b| t.sub(a, b), false)
}

fn mul(seed: u64) -> Result<f64> {
    binary(seed, |t, a, b| t.mul(a, b), false)
}

fn div(seed: u64) -> Result<f64> {
    binary(seed, |t, a, b| t.div(a, b), true)
}

fn scale(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[5]);
    unary(seed, vec![signed(&mut rng, &[9])], |t, v| t.scale(v, -1.7))
}

fn concat(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[6]);
    let inputs = vec![signed(&mut rng, &[2, 3]), signed(&mut rng, &[4, 3])];
    grad_check(
        |tape, v| {
            let y = tape.concat(&[v[0], v[1], v[0]])?;
            project(tape, y, seed)
        },
        &inputs,
        STEP,
    )
}

fn slice(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[7]);
    grad_check(
        |tape, v| {
            let y = tape.slice(v[0], 1, 3)?;
            project(tape, y, seed)
        },
        &[signed(&mut rng, &[6, 3])],
        STEP,
    )
}

fn reshape(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[8]);
    grad_check(
        |tape, v| {
            let y = tape.reshape(v[0], vec![3, 4])?;
            project(tape, y, seed)
        },
        &[signed(&mut rng, &[12])],
        STEP,
    )
}

fn sum(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[9]);
    grad_check(|tape, v| Ok(tape.sum(v[0])), &[signed(&mut rng, &[3, 5])], STEP)
}

fn mean(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[10]);
    grad_check(|tape, v| Ok(tape.mean(v[0])), &[signed(&mut rng, &[3, 5])], STEP)
}

fn log(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[11]);
    unary(seed, vec![rand_tensor(&mut rng, &[10], 0.3, 3.0)], |t, v| t.log(v))
}

fn square(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[12]);
    unary(seed, vec![signed(&mut rng, &[10])], |t, v| t.square(v))
}

fn sqrt(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[13]);
    unary(seed, vec![rand_tensor(&mut rng, &[10], 0.3, 3.0)], |t, v| t.sqrt(v))
}

fn abs(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[14]);
    unary(seed, vec![signed(&mut rng, &[10])], |t, v| t.abs(v))
}

fn frobenius(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[15]);
    grad_check(|tape, v| Ok(tape.frobenius_norm(v[0])), &[signed(&mut rng, &[4, 3])], STEP)
}

fn l1(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[16]);
    let a = signed(&mut rng, &[15]);
    let mut b = a.clone();
    for v in b.data_mut() {
        *v += rng.random_range(0.1..0.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    grad_check(|tape, v| tape.l1_loss(v[0], v[1]), &[a, b], STEP)
}

fn frame(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[17]);
    let window: Vec<f64> = (0..12).map(|_| rng.random_range(0.1..1.0)).collect();
    let x = signed(&mut rng, &[41]);
    grad_check(
        move |tape, v| {
            let y = tape.frame(v[0], &window, 5, 16)?;
            project(tape, y, seed)
        },
        &[x],
        STEP,
    )
}

fn dft_magnitude(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[18]);
    let basis = Arc::new(DftBasis::new(16));
    grad_check(
        move |tape, v| {
            let y = tape.dft_magnitude(v[0], &basis)?;
            project(tape, y, seed)
        },
        &[signed(&mut rng, &[3, 16])],
        STEP,
    )
}

fn gather_context(seed: u64) -> Result<f64> {
    let mut rng = derive_rng(seed, &[19]);
    let centers: Vec<usize> = (0..9).map(|_| rng.random_range(0..6)).chain([0, 5]).collect();
    let rel: Vec<f64> = centers.iter().map(|_| rng.random_range(-0.5..0.5)).collect();
    grad_check(
        move |tape, v| {
            let y = tape.gather_context(v[0], &centers, &rel)?;
            project(tape, y, seed)
        },
        &[signed(&mut rng, &[4, 6])],
        STEP,
    )
}

/// Worst relative error of the full training loss (waveform plus
/// multi-scale spectral term, deterministic selection) with respect to
/// sampled parameters of the default architecture.
pub fn composite(seed: u64) -> Result<f64> {
    use lisa::audio_io::AudioSignal;
    use lisa::autodiff::gradcheck::grad_check_sampled;
    use lisa::training::{task_forward, PreparedSpectralLoss, SpectralLossConfig, StftScale, TrainTask};
    use lisa::{ModelConfig, ModelWeights};

    let model = ModelConfig::default();
    let weights = ModelWeights::<f64>::init(model.clone(), seed)?;
    let mut rng = derive_rng(seed, &[20]);
    let freq: f64 = rng.random_range(0.2..1.2);
    let input = AudioSignal::new((0..24).map(|i| (i as f64 * freq).sin() * 0.5).collect(), 8000.0)?;
    let rate: f64 = rng.random_range(9000.0..20000.0);
    let coords: Vec<f64> = (0..40).map(|j| j as f64 / rate).collect();
    let amps: Vec<f64> = coords.iter().map(|t| (t * 5000.0 * freq).sin() * 0.4).collect();
    let task = TrainTask { input, target_rate: rate, target_coords: coords, target_amps: amps.clone() };
    let spectral = SpectralLossConfig {
        scales: vec![
            StftScale { fft_size: 16, hop: 4, window_length: 16 },
            StftScale { fft_size: 32, hop: 8, window_length: 32 },
        ],
    };
    let loss = PreparedSpectralLoss::<f64>::new(&spectral)?;
    grad_check_sampled(
        |tape, vars| {
            let pred = task_forward(tape, vars, &model, &task, 0.0, &mut derive_rng(0, &[]))?;
            let target = tape.constant(Tensor::vector(amps.clone()));
            Ok(loss.total_on_tape(tape, target, pred, 1.0)?.total)
        },
        weights.params(),
        STEP,
        40,
        seed,
    )
}
