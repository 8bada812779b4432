use crate::error::{Error, Result};
use crate::layers::activation::Activation;
use crate::prng::Prng;
use crate::tensor::{dot, Fill, Tensor};

/// Fully connected layer, `out = act(x^T W + b)` with `W: [n, m]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub weight_grad: Tensor,
    pub bias_grad: Tensor,
    pub activation: Activation,
    /// Whether the weight matrix carries the L2 penalty.
    pub regularized: bool,
    cache: Option<(Tensor, Tensor)>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, regularized: bool, rng: &mut Prng) -> Result<Self> {
        let weight =
            Tensor::create(&[inputs, outputs], Fill::ScaledUniform { fan_in: inputs, fan_out: outputs }, rng)?;
        let bias = Tensor::create(&[outputs], Fill::Constant(0.0), rng)?;
        Self::from_params(weight, bias, activation, regularized)
    }

    pub fn from_params(weight: Tensor, bias: Tensor, activation: Activation, regularized: bool) -> Result<Self> {
        match weight.shape() {
            &[_, m] if bias.shape() == [m] => {}
            _ => {
                return Err(Error::mismatch(format!(
                    "dense weight {:?} and bias {:?} disagree",
                    weight.shape(),
                    bias.shape()
                )))
            }
        }
        Ok(Self {
            weight_grad: Tensor::zeros(weight.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            weight,
            bias,
            activation,
            regularized,
            cache: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input != [self.inputs()] {
            return Err(Error::mismatch(format!(
                "dense expects input [{}], got {input:?}",
                self.inputs()
            )));
        }
        Ok(vec![self.outputs()])
    }

    fn pre_activation(&self, input: &Tensor) -> Result<Tensor> {
        self.output_shape(input.shape())?;
        let m = self.outputs();
        let mut out = self.bias.data().to_vec();
        for (i, &x) in input.data().iter().enumerate() {
            let row = &self.weight.data()[i * m..(i + 1) * m];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        Tensor::from_vec(&[m], out)
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.activation.forward(&self.pre_activation(input)?))
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        let z = self.pre_activation(input)?;
        let out = self.activation.forward(&z);
        self.cache = Some((input.clone(), z));
        Ok(out)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (input, z) = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("dense backward without a train-mode forward".into()))?;
        if grad.shape() != z.shape() {
            return Err(Error::mismatch(format!("dense backward grad {:?} vs {:?}", grad.shape(), z.shape())));
        }
        let gz = self.activation.backward(&z, grad);
        let m = self.outputs();
        let g = gz.data();
        for (b, &gj) in self.bias_grad.data_mut().iter_mut().zip(g) {
            *b += gj;
        }
        let wg = self.weight_grad.data_mut();
        for (i, &x) in input.data().iter().enumerate() {
            for (w, &gj) in wg[i * m..(i + 1) * m].iter_mut().zip(g) {
                *w += x * gj;
            }
        }
        let w = self.weight.data();
        let dx = (0..self.inputs()).map(|i| dot(&w[i * m..(i + 1) * m], g)).collect();
        Tensor::from_vec(&[self.inputs()], dx)
    }
}
