use super::{Real, Tensor};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Per-parameter moment estimates for bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self {
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update in place. Fails without touching anything if a
    /// gradient is non-finite or shapes disagree.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>], lr: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::LengthMismatch(params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || self.m[i].len() != p.len() {
                return Err(Error::Shape(format!("param {i}: {:?} vs grad {:?}", p.shape(), g.shape())));
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient(i));
            }
        }
        if !(lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2));
        let c1 = T::of(1.0 - ADAM_BETA1.powi(t));
        let c2 = T::of(1.0 - ADAM_BETA2.powi(t));
        let (lr, eps) = (T::of(lr), T::of(ADAM_EPS));
        let one = T::one();
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, (w, &d)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[j] = b1 * m[j] + (one - b1) * d;
                v[j] = b2 * v[j] + (one - b2) * d * d;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// L2 norm over every element of every gradient, accumulated in f64.
pub fn global_norm<T: Real>(grads: &[Tensor<T>]) -> f64 {
    grads.iter().flat_map(|g| g.data()).map(|&v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
}

/// Rescales all gradients by `max_norm / g` when their global norm `g`
/// exceeds `max_norm`. Returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(grads: &mut [Tensor<T>], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm.is_finite() {
        let s = T::of(max_norm / norm);
        for g in grads.iter_mut() {
            g.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_from_zero() {
        let mut p = vec![Tensor::vector(vec![0.0f64])];
        let mut st = AdamState::new(&p);
        st.step(&mut p, &[Tensor::vector(vec![1.0])], 0.001).unwrap();
        // m_hat = 1, v_hat = 1, so the update is lr / (1 + eps).
        let want = -0.001 / (1.0 + 1e-8);
        assert!((p[0].item() - want).abs() < 1e-15, "{}", p[0].item());
        assert!((p[0].item() + 0.000_999_999).abs() < 1e-9);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_param() {
        let mut p = vec![Tensor::vector(vec![0.25f32, -3.0])];
        let mut st = AdamState::new(&p);
        st.step(&mut p, &[Tensor::vector(vec![0.0, 0.0])], 0.001).unwrap();
        assert_eq!(p[0].data(), &[0.25, -3.0]);
    }

    #[test]
    fn deterministic() {
        let g = vec![Tensor::vector(vec![0.3f32, -0.2, 5.0])];
        let run = || {
            let mut p = vec![Tensor::vector(vec![1.0f32, 2.0, 3.0])];
            let mut st = AdamState::new(&p);
            for _ in 0..3 {
                st.step(&mut p, &g, 0.01).unwrap();
            }
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_gradient_is_an_error() {
        let mut p = vec![Tensor::vector(vec![1.0f32])];
        let mut st = AdamState::new(&p);
        let r = st.step(&mut p, &[Tensor::vector(vec![f32::NAN])], 0.001);
        assert!(matches!(r, Err(Error::NonFiniteGradient(0))));
        assert_eq!(p[0].item(), 1.0);
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn clipping() {
        // norm 0.0005 < 0.001: unchanged
        let mut g = vec![Tensor::vector(vec![0.0003f64, 0.0004])];
        let n = clip_grad_norm(&mut g, 0.001);
        assert!((n - 0.0005).abs() < 1e-15);
        assert_eq!(g[0].data(), &[0.0003, 0.0004]);
        // norm 0.002: halved
        let mut g = vec![Tensor::vector(vec![0.0012f64]), Tensor::vector(vec![0.0016])];
        clip_grad_norm(&mut g, 0.001);
        assert!((g[0].item() - 0.0006).abs() < 1e-15);
        assert!((g[1].item() - 0.0008).abs() < 1e-15);
        assert!(global_norm(&g) <= 0.001 + 1e-9);
    }
}
