//! Dense row-major `f64` tensors.
//!
//! Every reduction and product accumulates in ascending flat-index order, so
//! results are bit-identical from run to run.

use crate::error::{Error, Result};
use crate::prng::Prng;

/// How to fill a freshly created tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    Constant(f64),
    /// Uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
    /// Uniform on `[-L, L)` with `L = sqrt(6 / (fan_in + fan_out))`.
    ScaledUniform { fan_in: usize, fan_out: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Axes {
    All,
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape { shape: vec![], reason: "empty shape list".into() });
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape { shape: shape.to_vec(), reason: "zero extent".into() });
    }
    Ok(shape.iter().product())
}

impl Tensor {
    pub fn create(shape: &[usize], fill: Fill, rng: &mut Prng) -> Result<Self> {
        let len = check_shape(shape)?;
        let data = match fill {
            Fill::Constant(v) => vec![v; len],
            Fill::Uniform { low, high } => (0..len).map(|_| rng.uniform(low, high)).collect(),
            Fill::ScaledUniform { fan_in, fan_out } => {
                if fan_in + fan_out == 0 {
                    return Err(Error::InvalidParameter {
                        name: "fan_in + fan_out",
                        reason: "must be positive".into(),
                    });
                }
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..len).map(|_| rng.uniform(-limit, limit)).collect()
            }
        };
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Zero tensor. Panics on an empty shape or a zero extent.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    /// Constant tensor. Panics on an empty shape or a zero extent.
    pub fn full(shape: &[usize], value: f64) -> Self {
        let len = check_shape(shape).expect("Tensor::full called with an invalid shape");
        Self { shape: shape.to_vec(), data: vec![value; len] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len = check_shape(shape)?;
        if len != data.len() {
            return Err(Error::mismatch(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn scalar(value: f64) -> Self {
        Self { shape: vec![1], data: vec![value] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let len = check_shape(shape)?;
        if len != self.data.len() {
            return Err(Error::mismatch(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data: self.data.clone() })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    fn zip_with(&self, other: &Tensor, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::mismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn elementwise(&self, op: ElementwiseOp, other: &Tensor) -> Result<Tensor> {
        match op {
            ElementwiseOp::Add => self.zip_with(other, "add", |a, b| a + b),
            ElementwiseOp::Sub => self.zip_with(other, "sub", |a, b| a - b),
            ElementwiseOp::Mul => self.zip_with(other, "mul", |a, b| a * b),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Add, other)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Sub, other)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.elementwise(ElementwiseOp::Mul, other)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|x| x * factor)
    }

    pub fn clamp(&self, low: f64, high: f64) -> Tensor {
        self.map(|x| x.clamp(low, high))
    }

    /// `self += alpha * other`, in place.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::mismatch(format!(
                "axpy: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    /// `[m,k] x [k,n] -> [m,n]`; each output sums over `k` in ascending order.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = match self.shape[..] {
            [m, k] => (m, k),
            _ => return Err(Error::mismatch(format!("matmul lhs must be 2-D, got {:?}", self.shape))),
        };
        let (k2, n) = match other.shape[..] {
            [k2, n] => (k2, n),
            _ => return Err(Error::mismatch(format!("matmul rhs must be 2-D, got {:?}", other.shape))),
        };
        if k != k2 {
            return Err(Error::mismatch(format!(
                "matmul inner extents differ: {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor { shape: vec![m, n], data: out })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Reduces over the given axes, dropping them from the shape. Reducing
    /// every axis yields a one-element tensor of shape `[1]`.
    pub fn reduce(&self, op: ReduceOp, axes: &Axes) -> Result<Tensor> {
        let rank = self.shape.len();
        let mut reduced = vec![false; rank];
        match axes {
            Axes::All => reduced.iter_mut().for_each(|r| *r = true),
            Axes::List(list) => {
                for &a in list {
                    if a >= rank {
                        return Err(Error::mismatch(format!(
                            "axis {a} out of range for shape {:?}",
                            self.shape
                        )));
                    }
                    reduced[a] = true;
                }
            }
        }
        let out_shape: Vec<usize> = self
            .shape
            .iter()
            .zip(&reduced)
            .filter(|(_, &r)| !r)
            .map(|(&d, _)| d)
            .collect();
        let out_shape = if out_shape.is_empty() { vec![1] } else { out_shape };
        let out_len: usize = out_shape.iter().product();
        let group: usize =
            self.shape.iter().zip(&reduced).filter(|(_, &r)| r).map(|(&d, _)| d).product();

        let init = if op == ReduceOp::Max { f64::NEG_INFINITY } else { 0.0 };
        let mut out = vec![init; out_len];
        let mut index = vec![0usize; rank];
        for &x in &self.data {
            let mut o = 0;
            for ax in 0..rank {
                if !reduced[ax] {
                    o = o * self.shape[ax] + index[ax];
                }
            }
            match op {
                ReduceOp::Max => out[o] = out[o].max(x),
                _ => out[o] += x,
            }
            for ax in (0..rank).rev() {
                index[ax] += 1;
                if index[ax] < self.shape[ax] {
                    break;
                }
                index[ax] = 0;
            }
        }
        if op == ReduceOp::Mean {
            out.iter_mut().for_each(|v| *v /= group as f64);
        }
        Ok(Tensor { shape: out_shape, data: out })
    }
}

/// Dot product with four interleaved partial sums, combined as
/// `(s0 + s1) + (s2 + s3)` followed by the tail in order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn create_zero_fill() {
        let z = Tensor::create(&[2, 2], Fill::Constant(0.0), &mut Prng::new(0)).unwrap();
        assert_eq!(z.data(), &[0.0; 4]);
    }

    #[test]
    fn create_rejects_bad_shapes() {
        let mut rng = Prng::new(0);
        assert!(matches!(
            Tensor::create(&[], Fill::Constant(1.0), &mut rng),
            Err(Error::InvalidShape { .. })
        ));
        assert!(matches!(
            Tensor::create(&[2, 0], Fill::Constant(1.0), &mut rng),
            Err(Error::InvalidShape { .. })
        ));
    }

    #[test]
    fn create_uniform_is_seeded() {
        let u = Fill::Uniform { low: 0.0, high: 1.0 };
        let a = Tensor::create(&[3], u, &mut Prng::new(7)).unwrap();
        let b = Tensor::create(&[3], u, &mut Prng::new(7)).unwrap();
        assert_eq!(a, b);
        // First two draws of the generator, evaluated independently.
        let s7 = Tensor::create(&[2], u, &mut Prng::new(7)).unwrap();
        let s8 = Tensor::create(&[2], u, &mut Prng::new(8)).unwrap();
        assert_eq!(s7.data(), &[0.3898297483912715, 0.01678829452815611]);
        assert_eq!(s8.data(), &[0.6185046250316943, 0.6119480962583931]);
    }

    #[test]
    fn scaled_uniform_bounds() {
        let w = Tensor::create(&[50, 30], Fill::ScaledUniform { fan_in: 50, fan_out: 30 }, &mut Prng::new(1))
            .unwrap();
        let limit = (6.0f64 / 80.0).sqrt();
        assert!(w.data().iter().all(|x| x.abs() <= limit));
        assert!(w.max() > 0.8 * limit && w.min() < -0.8 * limit);
    }

    #[test]
    fn matmul_small_cases() {
        let a = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let eye = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(eye.matmul(&a).unwrap(), a);
        let col = t(&[2, 1], &[0.0, 1.0]);
        assert_eq!(a.matmul(&col).unwrap().data(), &[2.0, 4.0]);
        assert!(matches!(a.matmul(&t(&[3, 1], &[1.0; 3])), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = Prng::new(5);
        let u = Fill::Uniform { low: -1.0, high: 1.0 };
        let a = Tensor::create(&[4, 5], u, &mut rng).unwrap();
        let b = Tensor::create(&[5, 3], u, &mut rng).unwrap();
        let c = a.matmul(&b).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let mut s = 0.0;
                for p in 0..5 {
                    s += a.data()[i * 5 + p] * b.data()[p * 3 + j];
                }
                assert_eq!(c.data()[i * 3 + j], s);
            }
        }
    }

    #[test]
    fn elementwise_identities() {
        let a = t(&[3], &[-1.0, 0.5, 2.0]);
        assert_eq!(a.add(&Tensor::zeros(&[3])).unwrap(), a);
        assert_eq!(a.scale(1.0), a);
        assert_eq!(a.clamp(0.0, 1.0).data(), &[0.0, 0.5, 1.0]);
        assert!(matches!(a.add(&Tensor::zeros(&[2])), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn reductions() {
        assert_eq!(t(&[3], &[1.0, 2.0, 3.0]).mean(), 2.0);
        let ones = Tensor::full(&[2, 3], 1.0);
        assert_eq!(ones.reduce(ReduceOp::Sum, &Axes::All).unwrap().data(), &[6.0]);
        let m = t(&[2, 2], &[1.0, 5.0, 4.0, 2.0]);
        let mx = m.reduce(ReduceOp::Max, &Axes::List(vec![0])).unwrap();
        assert_eq!(mx.shape(), &[2]);
        assert_eq!(mx.data(), &[4.0, 5.0]);
        let rows = m.reduce(ReduceOp::Mean, &Axes::List(vec![1])).unwrap();
        assert_eq!(rows.data(), &[3.0, 3.0]);
        assert!(m.reduce(ReduceOp::Sum, &Axes::List(vec![2])).is_err());
    }

    #[test]
    fn reshape_keeps_length() {
        let a = t(&[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = a.reshape(&[3, 2]).unwrap();
        assert_eq!(r.len(), a.len());
        assert!(a.reshape(&[4]).is_err());
    }

    #[test]
    fn dot_matches_naive_closely() {
        let mut rng = Prng::new(9);
        let a: Vec<f64> = (0..37).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..37).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
