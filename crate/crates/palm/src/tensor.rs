//! Dense row-major matrices over a configurable float precision.
//!
//! Everything numeric in this crate is generic over [`Real`], so the same
//! model code runs in `f32` (the default runtime precision, matching the
//! checkpoint payload) and in `f64` (used by the verification suites).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Float precision the numeric core is instantiated at.
pub trait Real:
    Float + num_traits::NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Row-major 2-d array. Vectors are 1×n or n×1 tensors.
#[derive(Clone, PartialEq)]
pub struct Tensor<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Debug for Tensor<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor[{}x{}]", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl<F: Real> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: F) -> Self {
        Tensor { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn scalar(v: F) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![v] }
    }

    /// 1×n row vector.
    pub fn row(data: Vec<F>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    /// n×1 column vector.
    pub fn col(data: Vec<F>) -> Self {
        Tensor { rows: data.len(), cols: 1, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> F {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn item(&self) -> F {
        debug_assert_eq!(self.data.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn row_slice(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_slice_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        assert!(self.same_shape(other), "shape mismatch in zip_map");
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// self (p×q) · other (q×r) -> p×r.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let (p, q, r) = (self.rows, self.cols, other.cols);
        let mut out = vec![F::zero(); p * r];
        for i in 0..p {
            let a_row = &self.data[i * q..(i + 1) * q];
            let o_row = &mut out[i * r..(i + 1) * r];
            for (k, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[k * r..(k + 1) * r];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Tensor { rows: p, cols: r, data: out }
    }

    /// self (p×q) · otherᵀ (q×r from r×q) -> p×r.
    pub fn matmul_bt(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul_bt inner dimension mismatch");
        let (p, q, r) = (self.rows, self.cols, other.rows);
        let mut out = vec![F::zero(); p * r];
        for i in 0..p {
            let a_row = &self.data[i * q..(i + 1) * q];
            for j in 0..r {
                let b_row = &other.data[j * q..(j + 1) * q];
                let mut acc = F::zero();
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc += a * b;
                }
                out[i * r + j] = acc;
            }
        }
        Tensor { rows: p, cols: r, data: out }
    }

    /// selfᵀ (q×p from p×q) · other (p×r) -> q×r.
    pub fn matmul_at(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "matmul_at inner dimension mismatch");
        let (p, q, r) = (self.rows, self.cols, other.cols);
        let mut out = vec![F::zero(); q * r];
        for i in 0..p {
            let a_row = &self.data[i * q..(i + 1) * q];
            let b_row = &other.data[i * r..(i + 1) * r];
            for (k, &a) in a_row.iter().enumerate() {
                let o_row = &mut out[k * r..(k + 1) * r];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Tensor { rows: q, cols: r, data: out }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert!(self.same_shape(other), "shape mismatch in add_assign");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: F) {
        assert!(self.same_shape(other), "shape mismatch in add_assign_scaled");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn scale_assign(&mut self, s: F) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn sum(&self) -> F {
        self.data.iter().copied().sum()
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn l2_norm_sq(&self) -> F {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Precision conversion, used by checkpoint I/O and the test suites.
    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| G::from_f64(x.to_f64())).collect(),
        }
    }
}

/// max-subtracted softmax of a slice, written into a fresh vec.
pub fn softmax_slice<F: Real>(xs: &[F]) -> Vec<F> {
    let m = xs.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
    let mut out: Vec<F> = xs.iter().map(|&x| (x - m).exp()).collect();
    let z: F = out.iter().copied().sum();
    for o in &mut out {
        *o = *o / z;
    }
    out
}

/// log of the max-subtracted softmax.
pub fn log_softmax_slice<F: Real>(xs: &[F]) -> Vec<F> {
    let m = xs.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
    let z: F = xs.iter().map(|&x| (x - m).exp()).sum();
    let lz = z.ln() + m;
    xs.iter().map(|&x| x - lz).collect()
}

/// Numerically stable log σ(x) = −softplus(−x).
pub fn log_sigmoid<F: Real>(x: F) -> F {
    // softplus(y) = ln(1 + e^y), computed without overflow.
    let y = -x;
    if y > F::zero() {
        -(y + (-y).exp().ln_1p())
    } else {
        -y.exp().ln_1p()
    }
}

pub fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_transposed_variants_agree() {
        let a = Tensor::from_fn(3, 4, |r, c| (r * 4 + c) as f64 * 0.3 - 1.0);
        let b = Tensor::from_fn(4, 2, |r, c| (r * 2 + c) as f64 * 0.7 - 2.0);
        let direct = a.matmul(&b);
        // a·b == a·(bᵀ)ᵀ via matmul_bt with b stored transposed
        let bt = Tensor::from_fn(2, 4, |r, c| b.at(c, r));
        let via_bt = a.matmul_bt(&bt);
        assert_eq!(direct.data(), via_bt.data());
        // (aᵀ)ᵀ·b via matmul_at with a stored transposed
        let at = Tensor::from_fn(4, 3, |r, c| a.at(c, r));
        let via_at = at.matmul_at(&b);
        assert_eq!(direct.data(), via_at.data());
    }

    #[test]
    fn softmax_sums_to_one() {
        let w = softmax_slice(&[0.0f64, 1.0, -2.0, 3.5]);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sigmoid_stable_at_extremes() {
        assert!(log_sigmoid(800.0f64) > -1e-300);
        assert!(log_sigmoid(800.0f64) <= 0.0);
        let v = log_sigmoid(-800.0f64);
        assert!((v + 800.0).abs() < 1e-9);
        assert!((log_sigmoid(0.0f64) - 0.5f64.ln()).abs() < 1e-12);
    }
}
