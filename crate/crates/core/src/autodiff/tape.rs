use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::kernels::{conv1d_same, dense_forward, matmul, relu};
use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Floor applied to STFT magnitudes before anything takes a log of them.
pub const MAG_FLOOR: f64 = 1e-7;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Forward and inverse FFT plans for frames of `n` samples; only the
/// `n/2 + 1` non-negative frequency bins are kept.
pub struct DftBasis<T: Real> {
    n: usize,
    bins: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for DftBasis<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftBasis").field("n", &self.n).field("bins", &self.bins).finish()
    }
}

impl<T: Real> DftBasis<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, bins: n / 2 + 1, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> usize {
        self.bins
    }
}

enum Op<T: Real> {
    Leaf,
    Conv1d { input: Var, weight: Var, bias: Var, cols: Vec<T>, c_in: usize, len: usize, c_out: usize, k: usize },
    Dense { input: Var, weight: Var, bias: Var, rows: usize, d_in: usize, d_out: usize },
    Relu(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, T),
    Concat(Vec<Var>),
    Slice { src: Var, offset: usize },
    Reshape(Var),
    Sum(Var),
    Mean(Var),
    Log(Var),
    Square(Var),
    Sqrt(Var),
    Abs(Var),
    FrobeniusNorm(Var),
    L1Loss(Var, Var),
    Frame { src: Var, hop: usize, window: Vec<T>, fft_size: usize },
    DftMagnitude { frames: Var, basis: Arc<DftBasis<T>>, spectrum: Vec<T> },
    GatherContext { latents: Var, centers: Vec<usize>, channels: usize, len: usize },
}

struct Node<T: Real> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Append-only record of a forward computation. Nodes are stored in creation
/// order, which is a topological order, so backward is a reverse sweep.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of a scalar with respect to every node that needed one.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<Tensor<T>> {
        self.grads[v.0].as_ref().map(|g| Tensor::new(self.shapes[v.0].clone(), g.clone()).expect("grad shape"))
    }

    /// Gradient data, or zeros if nothing flowed into `v`.
    pub fn get_or_zeros(&self, v: Var) -> Tensor<T> {
        self.get(v).unwrap_or_else(|| Tensor::zeros(self.shapes[v.0].clone()))
    }
}

fn same_shape<T: Real>(a: &Tensor<T>, b: &Tensor<T>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn add_into<T: Real>(slot: &mut Option<Vec<T>>, g: Vec<T>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        None => *slot = Some(g),
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var], name: &'static str) -> Var {
        let _ = name;
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. Gradients are only tracked through leaves created
    /// with `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad: requires_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn map_unary(&mut self, a: Var, f: impl Fn(T) -> T, op: Op<T>, name: &'static str) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|&v| f(v)).collect();
        let out = Tensor::new(x.shape().to_vec(), data).expect("unary shape");
        self.push(out, op, &[a], name)
    }

    fn map_binary(&mut self, a: Var, b: Var, f: impl Fn(T, T) -> T, op: Op<T>, name: &'static str) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape(x, y, name)?;
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(out, op, &[a, b], name))
    }

    /// Stride-1 "same" convolution: `[c_in, L] * [c_out, c_in, K] + [c_out]`.
    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (x, w, b) = (self.value(input), self.value(weight), self.value(bias));
        let (&[c_in, len], &[c_out, wc_in, k], &[bc]) = (x.shape(), w.shape(), b.shape()) else {
            return Err(Error::Shape(format!("conv1d: {:?} {:?} {:?}", x.shape(), w.shape(), b.shape())));
        };
        if wc_in != c_in || bc != c_out || k % 2 == 0 {
            return Err(Error::Shape(format!("conv1d: {:?} {:?} {:?}", x.shape(), w.shape(), b.shape())));
        }
        let (out, cols) = conv1d_same(x.data(), c_in, len, w.data(), b.data(), c_out, k);
        let out = Tensor::new(vec![c_out, len], out)?;
        let op = Op::Conv1d { input, weight, bias, cols, c_in, len, c_out, k };
        Ok(self.push(out, op, &[input, weight, bias], "conv1d"))
    }

    /// Affine map `x W^T + b` over the rows of `[N, d_in]` (or a single
    /// `[d_in]` vector).
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (x, w, b) = (self.value(input), self.value(weight), self.value(bias));
        let (rows, d_in, vector) = match *x.shape() {
            [n] => (1, n, true),
            [r, n] => (r, n, false),
            _ => return Err(Error::Shape(format!("dense input {:?}", x.shape()))),
        };
        let (&[d_out, w_in], &[b_out]) = (w.shape(), b.shape()) else {
            return Err(Error::Shape(format!("dense: {:?} {:?}", w.shape(), b.shape())));
        };
        if w_in != d_in || b_out != d_out {
            return Err(Error::Shape(format!("dense: {:?} x {:?} + {:?}", x.shape(), w.shape(), b.shape())));
        }
        let y = dense_forward(x.data(), rows, d_in, w.data(), b.data(), d_out);
        let shape = if vector { vec![d_out] } else { vec![rows, d_out] };
        let out = Tensor::new(shape, y)?;
        Ok(self.push(out, Op::Dense { input, weight, bias, rows, d_in, d_out }, &[input, weight, bias], "dense"))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map_unary(a, relu, Op::Relu(a), "relu")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.map_binary(a, b, |p, q| p + q, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.map_binary(a, b, |p, q| p - q, Op::Sub(a, b), "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.map_binary(a, b, |p, q| p * q, Op::Mul(a, b), "mul")
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.map_binary(a, b, |p, q| p / q, Op::Div(a, b), "div")
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        self.map_unary(a, |v| v * c, Op::Scale(a, c), "scale")
    }

    /// Concatenation along the first axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(Error::Shape("concat of nothing".into()));
        };
        let tail = self.value(*first).shape()[1..].to_vec();
        let mut lead = 0;
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.shape()[1..] != tail[..] {
                return Err(Error::Shape(format!("concat: {:?} vs trailing {tail:?}", v.shape())));
            }
            lead += v.shape()[0];
            data.extend_from_slice(v.data());
        }
        let mut shape = vec![lead];
        shape.extend(tail);
        let out = Tensor::new(shape, data)?;
        Ok(self.push(out, Op::Concat(parts.to_vec()), parts, "concat"))
    }

    /// Rows `[start, start + len)` along the first axis.
    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(src);
        let lead = v.shape()[0];
        if start + len > lead {
            return Err(Error::Shape(format!("slice {start}..{} of {lead}", start + len)));
        }
        let stride: usize = v.shape()[1..].iter().product();
        let mut shape = v.shape().to_vec();
        shape[0] = len;
        let out = Tensor::new(shape, v.data()[start * stride..(start + len) * stride].to_vec())?;
        Ok(self.push(out, Op::Slice { src, offset: start * stride }, &[src], "slice"))
    }

    pub fn reshape(&mut self, src: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(src).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(src), &[src], "reshape"))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &v| acc + v);
        self.push(Tensor::scalar(s), Op::Sum(a), &[a], "sum")
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let s = x.data().iter().fold(T::zero(), |acc, &v| acc + v) / T::of(x.len() as f64);
        self.push(Tensor::scalar(s), Op::Mean(a), &[a], "mean")
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.map_unary(a, |v| v.ln(), Op::Log(a), "log")
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.map_unary(a, |v| v * v, Op::Square(a), "square")
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.map_unary(a, |v| v.sqrt(), Op::Sqrt(a), "sqrt")
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.map_unary(a, |v| v.abs(), Op::Abs(a), "abs")
    }

    pub fn frobenius_norm(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        self.push(Tensor::scalar(s), Op::FrobeniusNorm(a), &[a], "frobenius_norm")
    }

    /// Mean absolute difference.
    pub fn l1_loss(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape(x, y, "l1_loss")?;
        let s = x.data().iter().zip(y.data()).fold(T::zero(), |acc, (&p, &q)| acc + (p - q).abs());
        let s = s / T::of(x.len().max(1) as f64);
        Ok(self.push(Tensor::scalar(s), Op::L1Loss(a, b), &[a, b], "l1_loss"))
    }

    /// Windowed frames of a 1-D signal, zero-padded on the right to
    /// `fft_size`. Produces `1 + (L - window.len()) / hop` frames.
    pub fn frame(&mut self, src: Var, window: &[T], hop: usize, fft_size: usize) -> Result<Var> {
        let x = self.value(src);
        let win = window.len();
        if x.shape().len() != 1 {
            return Err(Error::Shape(format!("frame expects a 1-D signal, got {:?}", x.shape())));
        }
        if hop == 0 || win == 0 || win > fft_size {
            return Err(Error::Config(format!("frame: window {win}, hop {hop}, fft {fft_size}")));
        }
        if x.len() < win {
            return Err(Error::TooShort { needed: win, got: x.len() });
        }
        let count = 1 + (x.len() - win) / hop;
        let mut data = vec![T::zero(); count * fft_size];
        for f in 0..count {
            let src_frame = &x.data()[f * hop..f * hop + win];
            for (i, (&s, &w)) in src_frame.iter().zip(window).enumerate() {
                data[f * fft_size + i] = s * w;
            }
        }
        let out = Tensor::new(vec![count, fft_size], data)?;
        let op = Op::Frame { src, hop, window: window.to_vec(), fft_size };
        Ok(self.push(out, op, &[src], "frame"))
    }

    /// `|DFT|` of each row of `[F, N]`, giving `[F, N/2 + 1]`, floored at
    /// [`MAG_FLOOR`].
    pub fn dft_magnitude(&mut self, frames: Var, basis: &Arc<DftBasis<T>>) -> Result<Var> {
        let x = self.value(frames);
        let &[count, n] = x.shape() else {
            return Err(Error::Shape(format!("dft_magnitude expects [F, N], got {:?}", x.shape())));
        };
        if count == 0 {
            return Err(Error::EmptyInput);
        }
        if n != basis.n {
            return Err(Error::Shape(format!("frames of {n} against a {}-point basis", basis.n)));
        }
        let bins = basis.bins;
        let mut spectrum = vec![T::zero(); count * 2 * bins];
        let floor = T::of(MAG_FLOOR);
        let mut mag = vec![T::zero(); count * bins];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for (f, row) in x.data().chunks_exact(n).enumerate() {
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex::new(v, T::zero());
            }
            basis.forward.process(&mut buf);
            for (k, c) in buf[..bins].iter().enumerate() {
                spectrum[f * 2 * bins + k] = c.re;
                spectrum[f * 2 * bins + bins + k] = c.im;
                mag[f * bins + k] = (c.re * c.re + c.im * c.im).sqrt().max(floor);
            }
        }
        let out = Tensor::new(vec![count, bins], mag)?;
        let op = Op::DftMagnitude { frames, basis: Arc::clone(basis), spectrum };
        Ok(self.push(out, op, &[frames], "dft_magnitude"))
    }

    /// Decoder inputs for a batch of query points. `latents` is `[C, L]`;
    /// row `r` of the result is `[rel[r], z[c-1], z[c], z[c+1]]` with
    /// `c = centers[r]` and zero vectors for neighbours outside `[0, L)`.
    pub fn gather_context(&mut self, latents: Var, centers: &[usize], rel: &[T]) -> Result<Var> {
        let z = self.value(latents);
        let &[channels, len] = z.shape() else {
            return Err(Error::Shape(format!("gather_context latents {:?}", z.shape())));
        };
        if centers.len() != rel.len() {
            return Err(Error::LengthMismatch(centers.len(), rel.len()));
        }
        if let Some(&c) = centers.iter().find(|&&c| c >= len) {
            return Err(Error::Shape(format!("center {c} outside {len} latents")));
        }
        let width = 1 + 3 * channels;
        let mut data = vec![T::zero(); centers.len() * width];
        for (r, (&c, &dt)) in centers.iter().zip(rel).enumerate() {
            let row = &mut data[r * width..(r + 1) * width];
            row[0] = dt;
            for slot in 0..3 {
                let Some(idx) = (c + slot).checked_sub(1).filter(|&i| i < len) else { continue };
                for ch in 0..channels {
                    row[1 + slot * channels + ch] = z.data()[ch * len + idx];
                }
            }
        }
        let out = Tensor::new(vec![centers.len(), width], data)?;
        let op = Op::GatherContext { latents, centers: centers.to_vec(), channels, len };
        Ok(self.push(out, op, &[latents], "gather_context"))
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!("backward from non-scalar {:?}", self.value(loss).shape())));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(node, &g, &mut grads);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn backprop_node(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let out = &node.value;
        let val = |v: Var| self.nodes[v.0].value.data();
        let mut send = |v: Var, contrib: Vec<T>| {
            if self.nodes[v.0].needs_grad {
                add_into(&mut grads[v.0], contrib);
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Conv1d { input, weight, bias, cols, c_in, len, c_out, k } => {
                let (c_in, len, c_out, k) = (*c_in, *len, *c_out, *k);
                let ck = c_in * k;
                if self.wants(*bias) {
                    send(*bias, g.chunks_exact(len).map(|row| row.iter().fold(T::zero(), |a, &v| a + v)).collect());
                }
                if self.wants(*weight) {
                    let mut dw = vec![T::zero(); c_out * ck];
                    matmul(g, false, cols, true, c_out, len, ck, &mut dw, false);
                    send(*weight, dw);
                }
                if self.wants(*input) {
                    let mut dcols = vec![T::zero(); ck * len];
                    matmul(val(*weight), true, g, false, ck, c_out, len, &mut dcols, false);
                    let pad = (k - 1) / 2;
                    let mut dx = vec![T::zero(); c_in * len];
                    for ci in 0..c_in {
                        for kk in 0..k {
                            let row = &dcols[(ci * k + kk) * len..(ci * k + kk + 1) * len];
                            // Output t read padded input t + kk, i.e. input t + kk - pad.
                            for (t, &d) in row.iter().enumerate() {
                                let src = t + kk;
                                if src >= pad && src - pad < len {
                                    dx[ci * len + src - pad] += d;
                                }
                            }
                        }
                    }
                    send(*input, dx);
                }
            }
            Op::Dense { input, weight, bias, rows, d_in, d_out } => {
                let (rows, d_in, d_out) = (*rows, *d_in, *d_out);
                if self.wants(*bias) {
                    let mut db = vec![T::zero(); d_out];
                    for row in g.chunks_exact(d_out) {
                        db.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
                    }
                    send(*bias, db);
                }
                if self.wants(*weight) {
                    let mut dw = vec![T::zero(); d_out * d_in];
                    matmul(g, true, val(*input), false, d_out, rows, d_in, &mut dw, false);
                    send(*weight, dw);
                }
                if self.wants(*input) {
                    let mut dx = vec![T::zero(); rows * d_in];
                    matmul(g, false, val(*weight), false, rows, d_out, d_in, &mut dx, false);
                    send(*input, dx);
                }
            }
            Op::Relu(a) => {
                let x = val(*a);
                send(*a, g.iter().zip(x).map(|(&d, &v)| if v > T::zero() { d } else { T::zero() }).collect());
            }
            Op::Add(a, b) => {
                send(*a, g.to_vec());
                send(*b, g.to_vec());
            }
            Op::Sub(a, b) => {
                send(*a, g.to_vec());
                send(*b, g.iter().map(|&d| -d).collect());
            }
            Op::Mul(a, b) => {
                let (x, y) = (val(*a), val(*b));
                send(*a, g.iter().zip(y).map(|(&d, &q)| d * q).collect());
                send(*b, g.iter().zip(x).map(|(&d, &p)| d * p).collect());
            }
            Op::Div(a, b) => {
                let (x, y) = (val(*a), val(*b));
                send(*a, g.iter().zip(y).map(|(&d, &q)| d / q).collect());
                send(*b, g.iter().zip(x.iter().zip(y)).map(|(&d, (&p, &q))| -d * p / (q * q)).collect());
            }
            Op::Scale(a, c) => send(*a, g.iter().map(|&d| d * *c).collect()),
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.nodes[p.0].value.len();
                    send(p, g[offset..offset + n].to_vec());
                    offset += n;
                }
            }
            Op::Slice { src, offset } => {
                let mut d = vec![T::zero(); self.nodes[src.0].value.len()];
                d[*offset..*offset + g.len()].copy_from_slice(g);
                send(*src, d);
            }
            Op::Reshape(a) => send(*a, g.to_vec()),
            Op::Sum(a) => send(*a, vec![g[0]; self.nodes[a.0].value.len()]),
            Op::Mean(a) => {
                let n = self.nodes[a.0].value.len();
                send(*a, vec![g[0] / T::of(n as f64); n]);
            }
            Op::Log(a) => send(*a, g.iter().zip(val(*a)).map(|(&d, &v)| d / v).collect()),
            Op::Square(a) => send(*a, g.iter().zip(val(*a)).map(|(&d, &v)| d * (v + v)).collect()),
            Op::Sqrt(a) => {
                let half = T::of(0.5);
                send(*a, g.iter().zip(out.data()).map(|(&d, &s)| d * half / s).collect());
            }
            Op::Abs(a) => send(*a, g.iter().zip(val(*a)).map(|(&d, &v)| d * sign(v)).collect()),
            Op::FrobeniusNorm(a) => {
                let norm = out.item();
                let x = val(*a);
                if norm > T::zero() {
                    send(*a, x.iter().map(|&v| g[0] * v / norm).collect());
                } else {
                    send(*a, vec![T::zero(); x.len()]);
                }
            }
            Op::L1Loss(a, b) => {
                let (x, y) = (val(*a), val(*b));
                let n = T::of(x.len().max(1) as f64);
                let da: Vec<T> = x.iter().zip(y).map(|(&p, &q)| g[0] * sign(p - q) / n).collect();
                if self.wants(*b) {
                    send(*b, da.iter().map(|&d| -d).collect());
                }
                send(*a, da);
            }
            Op::Frame { src, hop, window, fft_size } => {
                let mut d = vec![T::zero(); self.nodes[src.0].value.len()];
                for (f, frame) in g.chunks_exact(*fft_size).enumerate() {
                    for (i, &w) in window.iter().enumerate() {
                        d[f * hop + i] += frame[i] * w;
                    }
                }
                send(*src, d);
            }
            Op::DftMagnitude { frames, basis, spectrum } => {
                let bins = basis.bins;
                let count = out.shape()[0];
                let floor = T::of(MAG_FLOOR);
                let mut dspec = vec![T::zero(); count * 2 * bins];
                for f in 0..count {
                    for k in 0..bins {
                        let m = out.data()[f * bins + k];
                        let (re, im) = (spectrum[f * 2 * bins + k], spectrum[f * 2 * bins + bins + k]);
                        if (re * re + im * im).sqrt() > floor {
                            let d = g[f * bins + k];
                            dspec[f * 2 * bins + k] = d * re / m;
                            dspec[f * 2 * bins + bins + k] = d * im / m;
                        }
                    }
                }
                // d|X_k|/dx_t = Re(conj(X_k) e^{-2 pi i k t / n}) / |X_k|, so the
                // input gradient is the real part of an unnormalized inverse
                // FFT of the weighted one-sided spectrum.
                let n = basis.n;
                let mut dx = vec![T::zero(); count * n];
                let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
                for f in 0..count {
                    buf.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
                    for k in 0..bins {
                        buf[k] = Complex::new(dspec[f * 2 * bins + k], dspec[f * 2 * bins + bins + k]);
                    }
                    basis.inverse.process(&mut buf);
                    for (d, c) in dx[f * n..(f + 1) * n].iter_mut().zip(&buf) {
                        *d = c.re;
                    }
                }
                send(*frames, dx);
            }
            Op::GatherContext { latents, centers, channels, len } => {
                let (channels, len) = (*channels, *len);
                let width = 1 + 3 * channels;
                let mut d = vec![T::zero(); channels * len];
                for (r, &c) in centers.iter().enumerate() {
                    let row = &g[r * width..(r + 1) * width];
                    for slot in 0..3 {
                        let Some(idx) = (c + slot).checked_sub(1).filter(|&i| i < len) else { continue };
                        for ch in 0..channels {
                            d[ch * len + idx] += row[1 + slot * channels + ch];
                        }
                    }
                }
                send(*latents, d);
            }
        }
    }
}

/// Sign with `sign(0) = 0`.
fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
