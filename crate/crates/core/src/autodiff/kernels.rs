//! Forward kernels shared by the tape and the inference path.
//!
//! Each output element of [`matmul`] is a dot product accumulated in a fixed
//! order that does not depend on how many rows or columns are computed in
//! the same call. Streaming inference relies on this to reproduce offline
//! results bit for bit.

use super::Real;

/// `c = op(a) * op(b)` (or `c += ...` when `accumulate`), where `op`
/// optionally transposes. `a` is stored `[m, k]` (or `[k, m]` if
/// `a_transposed`), `b` is `[k, n]` (or `[n, k]`), `c` is `[m, n]`.
#[allow(clippy::too_many_arguments)]
pub fn matmul<T: Real>(
    a: &[T],
    a_transposed: bool,
    b: &[T],
    b_transposed: bool,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [T],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_transposed { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_transposed { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { T::one() } else { T::zero() };
    // SAFETY: slice lengths were checked against the strides above.
    unsafe {
        T::gemm_raw(m, k, n, T::one(), a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1)
    }
}

#[inline]
pub fn relu<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

pub fn relu_inplace<T: Real>(xs: &mut [T]) {
    for v in xs {
        *v = relu(*v);
    }
}

/// Unpadded 1-D convolution over channel-major `x: [c_in, len]` with
/// `weight: [c_out, c_in, k]`. Returns `([c_out, len - k + 1], im2col)`.
pub fn conv1d_valid<T: Real>(
    x: &[T],
    c_in: usize,
    len: usize,
    weight: &[T],
    bias: &[T],
    c_out: usize,
    k: usize,
) -> (Vec<T>, Vec<T>) {
    assert_eq!(x.len(), c_in * len);
    assert!(len >= k);
    let n = len - k + 1;
    let mut cols = vec![T::zero(); c_in * k * n];
    for ci in 0..c_in {
        let row = &x[ci * len..(ci + 1) * len];
        for kk in 0..k {
            cols[(ci * k + kk) * n..(ci * k + kk + 1) * n].copy_from_slice(&row[kk..kk + n]);
        }
    }
    let mut out = vec![T::zero(); c_out * n];
    matmul(weight, false, &cols, false, c_out, c_in * k, n, &mut out, false);
    for (co, row) in out.chunks_exact_mut(n).enumerate() {
        let b = bias[co];
        for v in row {
            *v += b;
        }
    }
    (out, cols)
}

/// Zero-padded ("same") stride-1 convolution; output length equals `len`.
/// `k` must be odd.
pub fn conv1d_same<T: Real>(
    x: &[T],
    c_in: usize,
    len: usize,
    weight: &[T],
    bias: &[T],
    c_out: usize,
    k: usize,
) -> (Vec<T>, Vec<T>) {
    let pad = (k - 1) / 2;
    let padded_len = len + 2 * pad;
    let mut padded = vec![T::zero(); c_in * padded_len];
    for ci in 0..c_in {
        padded[ci * padded_len + pad..ci * padded_len + pad + len].copy_from_slice(&x[ci * len..(ci + 1) * len]);
    }
    conv1d_valid(&padded, c_in, padded_len, weight, bias, c_out, k)
}

/// Affine map of each row: `x: [rows, d_in]`, `weight: [d_out, d_in]`.
pub fn dense_forward<T: Real>(x: &[T], rows: usize, d_in: usize, weight: &[T], bias: &[T], d_out: usize) -> Vec<T> {
    let mut y = vec![T::zero(); rows * d_out];
    matmul(x, false, weight, true, rows, d_in, d_out, &mut y, false);
    for row in y.chunks_exact_mut(d_out) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
    y
}
