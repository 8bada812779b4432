//! Pointwise activations and their backward passes.

use crate::tensor::Tensor;

/// Largest `f64` strictly below one.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn forward(self, x: &Tensor) -> Tensor {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Gradient w.r.t. the activation input `x`, given the upstream gradient.
    pub fn backward(self, x: &Tensor, grad: &Tensor) -> Tensor {
        match self {
            Activation::Identity => grad.clone(),
            Activation::Relu => relu_backward(x, grad),
            Activation::Sigmoid => sigmoid_backward(x, grad),
        }
    }
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Subgradient at zero is zero.
pub fn relu_backward(x: &Tensor, grad: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(x.shape(), data).expect("relu_backward shape")
}

/// Logistic function, kept strictly inside `(0, 1)` even where `f64`
/// would round to an endpoint.
pub fn sigmoid_scalar(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

pub fn sigmoid_backward(x: &Tensor, grad: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| {
            let s = sigmoid_scalar(v);
            g * s * (1.0 - s)
        })
        .collect();
    Tensor::from_vec(x.shape(), data).expect("sigmoid_backward shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(d: &[f64]) -> Tensor {
        Tensor::from_vec(&[d.len()], d.to_vec()).unwrap()
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&t(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        let pos = t(&[0.1, 3.0]);
        assert_eq!(relu(&pos), pos);
        let g = relu_backward(&t(&[-1.0, 0.0, 2.0]), &t(&[1.0, 1.0, 1.0]));
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_cases() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!(sigmoid_scalar(50.0) > 1.0 - 1e-9);
        assert!(sigmoid_scalar(50.0) < 1.0);
        assert!(sigmoid_scalar(-800.0) > 0.0);
        let d = sigmoid_backward(&t(&[0.0]), &t(&[1.0]));
        assert_eq!(d.data(), &[0.25]);
    }
}
