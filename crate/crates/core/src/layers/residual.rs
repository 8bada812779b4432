//! Basic residual block: `relu(conv_b(relu(conv_a(x))) + shortcut(x))`.
//!
//! Both branch convolutions are 3x3 with one pixel of zero padding, so the
//! branch keeps the spatial extent apart from the stride of `conv_a`. The
//! shortcut is the identity when input and output shapes agree and a 1x1
//! strided projection otherwise.

use crate::error::{Error, Result};
use crate::layers::activation::{relu, relu_backward, Activation};
use crate::layers::conv::Conv2d;
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct ResidualBlock {
    pub conv_a: Conv2d,
    pub conv_b: Conv2d,
    pub projection: Option<Conv2d>,
    sum_cache: Option<Tensor>,
}

impl ResidualBlock {
    pub fn new(in_channels: usize, out_channels: usize, stride: usize, rng: &mut Prng) -> Result<Self> {
        let conv_a = Conv2d::new(in_channels, out_channels, (3, 3), (stride, stride), 1, Activation::Relu, rng)?;
        let conv_b = Conv2d::new(out_channels, out_channels, (3, 3), (1, 1), 1, Activation::Identity, rng)?;
        let projection = if in_channels != out_channels || stride != 1 {
            Some(Conv2d::new(in_channels, out_channels, (1, 1), (stride, stride), 0, Activation::Identity, rng)?)
        } else {
            None
        };
        Self::from_parts(conv_a, conv_b, projection)
    }

    pub fn from_parts(conv_a: Conv2d, conv_b: Conv2d, projection: Option<Conv2d>) -> Result<Self> {
        if conv_b.in_channels() != conv_a.filters() {
            return Err(Error::mismatch("residual branch channel counts disagree"));
        }
        let identity_ok = conv_a.in_channels() == conv_b.filters() && conv_a.stride == (1, 1);
        match &projection {
            None if !identity_ok => {
                return Err(Error::mismatch(
                    "residual block changes shape but has no projection shortcut",
                ))
            }
            Some(p) if p.in_channels() != conv_a.in_channels() || p.filters() != conv_b.filters() => {
                return Err(Error::mismatch("projection shortcut channels disagree with the branch"));
            }
            _ => {}
        }
        Ok(Self { conv_a, conv_b, projection, sum_cache: None })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let branch = self.conv_b.output_shape(&self.conv_a.output_shape(input)?)?;
        let short = match &self.projection {
            Some(p) => p.output_shape(input)?,
            None => input.to_vec(),
        };
        if branch != short {
            return Err(Error::mismatch(format!(
                "residual branch {branch:?} and shortcut {short:?} disagree"
            )));
        }
        Ok(branch)
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        self.output_shape(input.shape())?;
        let branch = self.conv_b.forward_eval(&self.conv_a.forward_eval(input)?)?;
        let sum = match &self.projection {
            Some(p) => branch.add(&p.forward_eval(input)?)?,
            None => branch.add(input)?,
        };
        Ok(relu(&sum))
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        self.output_shape(input.shape())?;
        let hidden = self.conv_a.forward_train(input)?;
        let branch = self.conv_b.forward_train(&hidden)?;
        let sum = match &mut self.projection {
            Some(p) => branch.add(&p.forward_train(input)?)?,
            None => branch.add(input)?,
        };
        let out = relu(&sum);
        self.sum_cache = Some(sum);
        Ok(out)
    }

    pub fn clear_cache(&mut self) {
        self.sum_cache = None;
        self.conv_a.clear_cache();
        self.conv_b.clear_cache();
        if let Some(p) = &mut self.projection {
            p.clear_cache();
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let sum = self
            .sum_cache
            .take()
            .ok_or_else(|| Error::Usage("residual backward without a train-mode forward".into()))?;
        let g = relu_backward(&sum, grad);
        let through_branch = self.conv_a.backward(&self.conv_b.backward(&g)?)?;
        let through_shortcut = match &mut self.projection {
            Some(p) => p.backward(&g)?,
            None => g,
        };
        through_branch.add(&through_shortcut)
    }
}
