use crate::error::{Error, Result};
use crate::prng::Prng;
use crate::tensor::Tensor;

/// Inverted dropout: survivors are scaled by `1 / (1 - p)` in train mode,
/// eval mode is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidHyperparameter {
                name: "dropout probability",
                reason: format!("{p} is outside [0, 1)"),
            });
        }
        Ok(Self { p, mask: None })
    }

    pub fn forward_eval(&self, input: &Tensor) -> Tensor {
        input.clone()
    }

    pub fn forward_train(&mut self, input: &Tensor, rng: &mut Prng) -> Tensor {
        let keep = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..input.len())
            .map(|_| if self.p > 0.0 && rng.bernoulli(self.p) { 0.0 } else { keep })
            .collect();
        let data = input.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        self.mask = Some(mask);
        Tensor::from_vec(input.shape(), data).expect("dropout shape")
    }

    pub fn clear_cache(&mut self) {
        self.mask = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mask = self
            .mask
            .take()
            .ok_or_else(|| Error::Usage("dropout backward without a train-mode forward".into()))?;
        if mask.len() != grad.len() {
            return Err(Error::mismatch(format!("dropout backward grad {:?}", grad.shape())));
        }
        let data = grad.data().iter().zip(&mask).map(|(&g, &m)| g * m).collect();
        Tensor::from_vec(grad.shape(), data)
    }
}
