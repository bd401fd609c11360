use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(n: usize, seed: u64, rate: f64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioSignal::new((0..n).map(|_| rng.random_range(-0.8..0.8)).collect(), rate).unwrap()
}

fn weights() -> ModelWeights<f32> {
    ModelWeights::init(ModelConfig::default(), 1).unwrap()
}

/// Independent symbolic count: sum of `c_in * c_out * k + c_out`.
fn symbolic_encoder_count(kernels: &[usize], channels: &[usize]) -> usize {
    let mut c_in = 1;
    let mut total = 0;
    for (&k, &c_out) in kernels.iter().zip(channels) {
        total += c_in * c_out * k + c_out;
        c_in = c_out;
    }
    total
}

#[test]
fn receptive_half_width_is_five() {
    assert_eq!(ModelConfig::default().receptive_half_width(), 5);
    assert_eq!(ModelConfig::default().decoder_input_dim(), 97);
}

#[test]
fn parameter_counts() {
    let w = weights();
    let sym = symbolic_encoder_count(&[7, 3, 3, 1], &[16, 32, 64, 32]);
    assert_eq!(sym, 9984);
    assert_eq!(w.encoder_parameter_count(), sym);
    let total = w.parameter_count();
    assert!((80_000..=100_000).contains(&total), "{total}");

    let mut wide = ModelConfig::default();
    wide.hidden *= 2;
    let wide = ModelWeights::<f32>::init(wide, 1).unwrap();
    assert!(wide.parameter_count() > total);
}

#[test]
fn encode_shape_and_short_input() {
    let w = weights();
    let lat = encode(&noise(100, 2, 8000.0), &w).unwrap();
    assert_eq!(lat.codes().shape(), &[100, 32]);
    assert!(matches!(encode(&noise(10, 2, 8000.0), &w), Err(Error::TooShort { needed: 11, got: 10 })));
    assert!(encode(&noise(11, 2, 8000.0), &w).is_ok());
}

#[test]
fn codes_depend_only_on_receptive_field() {
    let w = weights();
    let x = noise(100, 3, 8000.0);
    let mut y = x.samples().to_vec();
    y[20] += 0.5;
    let y = AudioSignal::new(y, 8000.0).unwrap();
    let (a, b) = (encode(&x, &w).unwrap(), encode(&y, &w).unwrap());
    for i in (0..=14).chain(26..100) {
        assert_eq!(a.code(i), b.code(i), "index {i}");
    }
    assert!((15..=25).any(|i| a.code(i) != b.code(i)));
}

#[test]
fn zero_input_gives_constant_interior_codes() {
    let w = weights();
    let lat = encode(&AudioSignal::new(vec![0.0; 64], 8000.0).unwrap(), &w).unwrap();
    for i in 5..59 {
        assert_eq!(lat.code(i), lat.code(5));
    }
}

#[test]
fn shifting_input_shifts_codes() {
    let w = weights();
    let base = noise(120, 4, 8000.0);
    let m = 7;
    let mut shifted = vec![0.0; m];
    shifted.extend_from_slice(&base.samples()[..120 - m]);
    let a = encode(&base, &w).unwrap();
    let b = encode(&AudioSignal::new(shifted, 8000.0).unwrap(), &w).unwrap();
    let k = 5;
    for i in k..120 - m - k {
        assert_eq!(a.code(i), b.code(i + m), "index {i}");
    }
}

#[test]
fn gather_context_examples() {
    let w = weights();
    let lat = encode(&noise(32, 5, 8000.0), &w).unwrap();
    let g = *lat.grid();
    let dim = lat.dim();

    let (rel, trip) = gather_context(&lat, g.time(7));
    assert_eq!(rel, 0.0);
    assert_eq!(&trip[..dim], lat.code(6));
    assert_eq!(&trip[dim..2 * dim], lat.code(7));
    assert_eq!(&trip[2 * dim..], lat.code(8));

    // 7.5 / 8000 is exact in binary, so this is a true midpoint.
    let (rel, trip) = gather_context(&lat, 7.5 / 8000.0);
    assert_eq!(rel, 0.5);
    assert_eq!(&trip[dim..2 * dim], lat.code(7));

    let (rel, trip) = gather_context(&lat, -0.3 / 8000.0);
    assert!((rel + 0.3).abs() < 1e-6);
    assert!(trip[..dim].iter().all(|&v| v == 0.0));
    assert_eq!(&trip[dim..2 * dim], lat.code(0));
    assert_eq!(&trip[2 * dim..], lat.code(1));

    let (_, trip) = gather_context(&lat, g.time(31));
    assert!(trip[2 * dim..].iter().all(|&v| v == 0.0));
}

#[test]
fn decode_is_deterministic_and_affine_at_zero_weights() {
    let w = weights();
    let trip: Vec<f32> = (0..96).map(|i| (i as f32 * 0.37).sin()).collect();
    let a = decode(0.25, &trip, &w).unwrap();
    assert_eq!(a.to_bits(), decode(0.25, &trip, &w).unwrap().to_bits());

    let mut params: Vec<Tensor<f32>> = w.params().iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
    let last = params.len() - 1;
    params[last] = Tensor::vector(vec![0.125]);
    let z = ModelWeights::from_params(ModelConfig::default(), params).unwrap();
    assert_eq!(decode(-0.4, &trip, &z).unwrap(), 0.125);
    assert_eq!(decode(3.0, &vec![5.0; 96], &z).unwrap(), 0.125);
}

#[test]
fn decode_rejects_non_finite() {
    let w = weights();
    assert!(decode(f32::NAN, &[0.0; 96], &w).is_err());
    assert!(decode_rows(&[0.0f32; 50], &w).is_err());
}

#[test]
fn decode_is_finite_over_random_latents() {
    let w = weights();
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trip: Vec<f32> = (0..96).map(|_| rng.random_range(-3.0..3.0)).collect();
        let rel = rng.random_range(-0.5f32..0.5);
        assert!(decode(rel, &trip, &w).unwrap().is_finite());
    }
}

#[test]
fn predict_equals_gather_then_decode() {
    let w = weights();
    let x = noise(50, 6, 8000.0);
    let lat = encode(&x, &w).unwrap();
    let coords: Vec<f64> = (0..140).map(|m| m as f64 / 22050.0 - 0.0001).collect();
    let batched = predict(&x, &w, &coords).unwrap();
    for (&t, &v) in coords.iter().zip(&batched) {
        let (rel, trip) = gather_context(&lat, t);
        assert_eq!(decode(rel, &trip, &w).unwrap().to_bits(), v.to_bits(), "t = {t}");
    }
}

#[test]
fn predict_is_local() {
    let w = weights();
    let x = noise(80, 7, 8000.0);
    let t = 40.3 / 8000.0;
    let center = 40;
    let base = predict(&x, &w, &[t]).unwrap()[0];
    for j in 0..80usize {
        let mut y = x.samples().to_vec();
        y[j] += 0.3;
        let out = predict(&AudioSignal::new(y, 8000.0).unwrap(), &w, &[t]).unwrap()[0];
        if j.abs_diff(center) > 6 {
            assert_eq!(out, base, "sample {j} leaked into the prediction");
        }
    }
}

#[test]
fn tape_matches_inference_bitwise() {
    let w = weights();
    let x = noise(40, 8, 8000.0);
    let lat = encode(&x, &w).unwrap();
    let mut tape = Tape::new();
    let p = params_on_tape(&mut tape, &w);
    let input: Vec<f32> = x.samples().iter().map(|&v| v as f32).collect();
    let inp = tape.constant(Tensor::vector(input));
    let z = encode_on_tape(&mut tape, &p, w.config(), inp).unwrap();
    let zt = tape.value(z);
    for i in 0..40 {
        for c in 0..32 {
            assert_eq!(zt.data()[c * 40 + i].to_bits(), lat.code(i)[c].to_bits());
        }
    }
    let coords = [0.0, 3.3 / 8000.0, 39.6 / 8000.0];
    let centers: Vec<usize> = coords.iter().map(|&t| nearest_index(t, lat.grid())).collect();
    let rel: Vec<f32> = coords.iter().zip(&centers).map(|(&t, &c)| relative_coord(t, lat.grid(), c) as f32).collect();
    let rows = tape.gather_context(z, &centers, &rel).unwrap();
    let out = decode_on_tape(&mut tape, &p, w.config(), rows).unwrap();
    let want = predict(&x, &w, &coords).unwrap();
    assert_eq!(tape.value(out).data(), &want[..]);
}

#[test]
fn checkpoint_round_trip() {
    let w = weights();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.ckpt");
    w.save(&p).unwrap();
    let back = ModelWeights::load(&p).unwrap();
    assert_eq!(back, w);
    assert_eq!(back.parameter_count(), w.parameter_count());
}

#[test]
fn init_is_seeded() {
    let a = ModelWeights::<f32>::init(ModelConfig::default(), 3).unwrap();
    let b = ModelWeights::<f32>::init(ModelConfig::default(), 3).unwrap();
    let c = ModelWeights::<f32>::init(ModelConfig::default(), 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
