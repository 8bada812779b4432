//! Layers with hand-written forward and backward passes.
//!
//! Every layer works on a single sample (`[C, H, W]` or `[N]`). A train-mode
//! forward caches what the backward pass needs; an eval-mode forward is pure
//! and leaves the layer untouched. `backward` consumes the cache, returns the
//! gradient w.r.t. the layer input and accumulates parameter gradients.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod pool;
pub mod reshape;
pub mod residual;

pub use activation::Activation;
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use pool::MaxPool2d;
pub use reshape::{Flatten, GlobalAvgPool};
pub use residual::ResidualBlock;

use crate::error::Result;
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A parameter tensor together with its gradient accumulator.
pub struct ParamMut<'a> {
    pub name: String,
    pub value: &'a mut Tensor,
    pub grad: &'a mut Tensor,
    pub regularized: bool,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    Dropout(Dropout),
    Flatten(Flatten),
    Dense(Dense),
    GlobalAvgPool(GlobalAvgPool),
    Residual(ResidualBlock),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
            Layer::GlobalAvgPool(_) => "global_avg_pool",
            Layer::Residual(_) => "residual",
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(l) => l.output_shape(input),
            Layer::MaxPool2d(l) => l.output_shape(input),
            Layer::Dropout(_) => Ok(input.to_vec()),
            Layer::Flatten(l) => l.output_shape(input),
            Layer::Dense(l) => l.output_shape(input),
            Layer::GlobalAvgPool(l) => l.output_shape(input),
            Layer::Residual(l) => l.output_shape(input),
        }
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.forward_eval(input),
            Layer::MaxPool2d(l) => l.forward_eval(input),
            Layer::Dropout(l) => Ok(l.forward_eval(input)),
            Layer::Flatten(l) => Ok(l.forward_eval(input)),
            Layer::Dense(l) => l.forward_eval(input),
            Layer::GlobalAvgPool(l) => l.forward_eval(input),
            Layer::Residual(l) => l.forward_eval(input),
        }
    }

    pub fn forward_train(&mut self, input: &Tensor, rng: &mut Prng) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.forward_train(input),
            Layer::MaxPool2d(l) => l.forward_train(input),
            Layer::Dropout(l) => Ok(l.forward_train(input, rng)),
            Layer::Flatten(l) => Ok(l.forward_train(input)),
            Layer::Dense(l) => l.forward_train(input),
            Layer::GlobalAvgPool(l) => l.forward_train(input),
            Layer::Residual(l) => l.forward_train(input),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.backward(grad),
            Layer::MaxPool2d(l) => l.backward(grad),
            Layer::Dropout(l) => l.backward(grad),
            Layer::Flatten(l) => l.backward(grad),
            Layer::Dense(l) => l.backward(grad),
            Layer::GlobalAvgPool(l) => l.backward(grad),
            Layer::Residual(l) => l.backward(grad),
        }
    }

    pub fn clear_cache(&mut self) {
        match self {
            Layer::Conv2d(l) => l.clear_cache(),
            Layer::MaxPool2d(l) => l.clear_cache(),
            Layer::Dropout(l) => l.clear_cache(),
            Layer::Flatten(l) => l.clear_cache(),
            Layer::Dense(l) => l.clear_cache(),
            Layer::GlobalAvgPool(l) => l.clear_cache(),
            Layer::Residual(l) => l.clear_cache(),
        }
    }

    /// Parameters in a fixed order; names are prefixed with `prefix`.
    pub fn params_mut(&mut self, prefix: &str) -> Vec<ParamMut<'_>> {
        fn conv<'a>(prefix: &str, c: &'a mut Conv2d, out: &mut Vec<ParamMut<'a>>) {
            out.push(ParamMut {
                name: format!("{prefix}.kernel"),
                value: &mut c.kernel,
                grad: &mut c.kernel_grad,
                regularized: false,
            });
            out.push(ParamMut {
                name: format!("{prefix}.bias"),
                value: &mut c.bias,
                grad: &mut c.bias_grad,
                regularized: false,
            });
        }
        let mut out = Vec::new();
        match self {
            Layer::Conv2d(c) => conv(prefix, c, &mut out),
            Layer::Dense(d) => {
                out.push(ParamMut {
                    name: format!("{prefix}.weight"),
                    value: &mut d.weight,
                    grad: &mut d.weight_grad,
                    regularized: d.regularized,
                });
                out.push(ParamMut {
                    name: format!("{prefix}.bias"),
                    value: &mut d.bias,
                    grad: &mut d.bias_grad,
                    regularized: false,
                });
            }
            Layer::Residual(r) => {
                conv(&format!("{prefix}.conv_a"), &mut r.conv_a, &mut out);
                conv(&format!("{prefix}.conv_b"), &mut r.conv_b, &mut out);
                if let Some(p) = &mut r.projection {
                    conv(&format!("{prefix}.projection"), p, &mut out);
                }
            }
            Layer::MaxPool2d(_) | Layer::Dropout(_) | Layer::Flatten(_) | Layer::GlobalAvgPool(_) => {}
        }
        out
    }

    /// One-line structural description without the output shape.
    pub fn describe(&self) -> String {
        match self {
            Layer::Conv2d(c) => {
                let (kh, kw) = c.kernel_size();
                format!(
                    "conv2d filters={} kernel={kh}x{kw} stride={}x{} padding={} activation={}",
                    c.filters(),
                    c.stride.0,
                    c.stride.1,
                    c.padding,
                    c.activation.name()
                )
            }
            Layer::MaxPool2d(p) => {
                format!("maxpool2d pool={}x{} stride={}x{}", p.pool.0, p.pool.1, p.stride.0, p.stride.1)
            }
            Layer::Dropout(d) => format!("dropout p={}", d.p),
            Layer::Flatten(_) => "flatten".to_string(),
            Layer::Dense(d) => format!(
                "dense neurons={} activation={}{}",
                d.outputs(),
                d.activation.name(),
                if d.regularized { " l2" } else { "" }
            ),
            Layer::GlobalAvgPool(_) => "global_avg_pool".to_string(),
            Layer::Residual(r) => format!(
                "residual filters={} stride={} shortcut={}",
                r.conv_b.filters(),
                r.conv_a.stride.0,
                if r.projection.is_some() { "projection" } else { "identity" }
            ),
        }
    }
}
