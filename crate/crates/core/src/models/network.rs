use crate::error::{Error, Result};
use crate::layers::{Activation, Layer, Mode, ParamMut};
use crate::loss::l2_penalty;
use crate::optim::AdamState;
use crate::prng::Prng;
use crate::tensor::Tensor;

/// An ordered stack of layers mapping a `[C, H, W]` image to one probability.
#[derive(Debug, Clone)]
pub struct Network {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
    mode: Mode,
}

impl Network {
    /// Checks the shape chain and that the last layer is a one-neuron
    /// sigmoid dense layer. Starts in eval mode.
    pub fn new(name: impl Into<String>, input_shape: &[usize], layers: Vec<Layer>) -> Result<Self> {
        let mut shapes = Vec::with_capacity(layers.len());
        let mut shape = input_shape.to_vec();
        for layer in &layers {
            shape = layer.output_shape(&shape)?;
            shapes.push(shape.clone());
        }
        match layers.last() {
            Some(Layer::Dense(d)) if d.outputs() == 1 && d.activation == Activation::Sigmoid => {}
            _ => return Err(Error::mismatch("network must end in a one-neuron sigmoid dense layer")),
        }
        Ok(Self { name: name.into(), input_shape: input_shape.to_vec(), layers, shapes, mode: Mode::Eval })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Output shape of each layer.
    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        if mode == Mode::Eval {
            self.layers.iter_mut().for_each(Layer::clear_cache);
        }
        self.mode = mode;
    }

    /// Indices of layers whose weights carry the L2 penalty.
    pub fn regularized_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Dense(d) if d.regularized))
            .map(|(i, _)| i)
            .collect()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::mismatch(format!(
                "{} expects input {:?}, got {:?}",
                self.name,
                self.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    /// Pure forward pass regardless of mode.
    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward_eval(&h)?;
        }
        Ok(h)
    }

    /// Forward pass in the current mode; train mode caches for `backward`.
    pub fn forward(&mut self, x: &Tensor, rng: &mut Prng) -> Result<Tensor> {
        if self.mode == Mode::Eval {
            return self.forward_eval(x);
        }
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward_train(&h, rng)?;
        }
        Ok(h)
    }

    /// Eval-mode outputs of every layer.
    pub fn activations(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        self.check_input(x)?;
        let mut out: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = layer.forward_eval(out.last().unwrap_or(x))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Back-propagates `grad` (w.r.t. the network output), accumulating
    /// parameter gradients. Returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| {
                let prefix = format!("{i:02}.{}", l.kind());
                l.params_mut(&prefix)
            })
            .collect()
    }

    /// `(name, shape)` of every parameter, in archive order.
    pub fn param_shapes_named(&mut self) -> Vec<(String, Vec<usize>)> {
        self.params_mut().into_iter().map(|p| (p.name, p.value.shape().to_vec())).collect()
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(0.0);
        }
    }

    /// L2 penalty of the regularized weights, without touching gradients.
    pub fn l2_value(&mut self, lambda: f64) -> Result<f64> {
        let params = self.params_mut();
        let weights: Vec<&Tensor> = params.iter().filter(|p| p.regularized).map(|p| &*p.value).collect();
        Ok(l2_penalty(&weights, lambda)?.0)
    }

    /// Adds the L2 gradient `2 * lambda * w` to every regularized weight's
    /// gradient and returns the penalty.
    pub fn apply_l2(&mut self, lambda: f64) -> Result<f64> {
        let mut params = self.params_mut();
        let regularized: Vec<&mut ParamMut<'_>> = params.iter_mut().filter(|p| p.regularized).collect();
        let weights: Vec<&Tensor> = regularized.iter().map(|p| &*p.value).collect();
        let (penalty, grads) = l2_penalty(&weights, lambda)?;
        for (p, g) in regularized.into_iter().zip(&grads) {
            p.grad.axpy(1.0, g)?;
        }
        Ok(penalty)
    }

    /// Sizes `adam`'s moment buffers for this network.
    pub fn init_optimizer(&mut self, adam: &mut AdamState) {
        let shapes: Vec<Vec<usize>> = self.param_shapes_named().into_iter().map(|(_, s)| s).collect();
        adam.initialize(&shapes);
    }

    pub fn adam_step(&mut self, adam: &mut AdamState) -> Result<()> {
        let params = self.params_mut();
        let mut values = Vec::with_capacity(params.len());
        let mut grads = Vec::with_capacity(params.len());
        for p in params {
            values.push(p.value);
            grads.push(&*p.grad);
        }
        adam.step(&mut values, &grads)
    }

    /// Probability for one image. The network must be in eval mode.
    pub fn predict(&self, image: &Tensor) -> Result<f64> {
        if self.mode != Mode::Eval {
            return Err(Error::Usage("predict requires eval mode".into()));
        }
        Ok(self.forward_eval(image)?.data()[0])
    }

    /// Structural dump: one line for the input, then one per layer with
    /// its output shape.
    pub fn describe(&self) -> String {
        let dims = |s: &[usize]| s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
        let mut out = format!("{} input={}\n", self.name, dims(&self.input_shape));
        for (i, (layer, shape)) in self.layers.iter().zip(&self.shapes).enumerate() {
            out.push_str(&format!("{i:>2} {} -> {}\n", layer.describe(), dims(shape)));
        }
        out
    }
}

/// Label 1 iff `p > threshold`.
pub fn classify(p: f64, threshold: f64) -> u8 {
    u8::from(p > threshold)
}
