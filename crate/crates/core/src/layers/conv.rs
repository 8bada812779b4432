//! 2-D convolution over `[C, H, W]` inputs via an im2col lowering.

use crate::error::{Error, Result};
use crate::layers::activation::Activation;
use crate::prng::Prng;
use crate::tensor::{dot, Fill, Tensor};

/// `floor((input + 2 * padding - kernel) / stride) + 1`.
pub fn output_extent(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::InvalidHyperparameter { name: "stride", reason: "must be positive".into() });
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::mismatch(format!(
            "window {kernel} larger than input extent {input} (padding {padding})"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Debug, Clone)]
struct ConvCache {
    input_shape: [usize; 3],
    cols: Vec<f64>,
    pre_activation: Tensor,
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub kernel: Tensor,
    pub bias: Tensor,
    pub kernel_grad: Tensor,
    pub bias_grad: Tensor,
    pub stride: (usize, usize),
    pub padding: usize,
    pub activation: Activation,
    cache: Option<ConvCache>,
}

impl Conv2d {
    /// Scaled-uniform kernel initialization, zero bias.
    pub fn new(
        in_channels: usize,
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: usize,
        activation: Activation,
        rng: &mut Prng,
    ) -> Result<Self> {
        let (kh, kw) = kernel;
        let fill = Fill::ScaledUniform { fan_in: in_channels * kh * kw, fan_out: filters * kh * kw };
        let kernel = Tensor::create(&[filters, in_channels, kh, kw], fill, rng)?;
        let bias = Tensor::create(&[filters], Fill::Constant(0.0), rng)?;
        Self::from_params(kernel, bias, stride, padding, activation)
    }

    pub fn from_params(
        kernel: Tensor,
        bias: Tensor,
        stride: (usize, usize),
        padding: usize,
        activation: Activation,
    ) -> Result<Self> {
        if kernel.shape().len() != 4 {
            return Err(Error::mismatch(format!("conv kernel must be 4-D, got {:?}", kernel.shape())));
        }
        if bias.shape() != [kernel.shape()[0]] {
            return Err(Error::mismatch(format!(
                "conv bias {:?} does not match {} filters",
                bias.shape(),
                kernel.shape()[0]
            )));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::InvalidHyperparameter { name: "stride", reason: "must be positive".into() });
        }
        Ok(Self {
            kernel_grad: Tensor::zeros(kernel.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            kernel,
            bias,
            stride,
            padding,
            activation,
            cache: None,
        })
    }

    pub fn filters(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernel.shape()[2], self.kernel.shape()[3])
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let [c, h, w] = spatial(input)?;
        if c != self.in_channels() {
            return Err(Error::mismatch(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels()
            )));
        }
        let (kh, kw) = self.kernel_size();
        Ok(vec![
            self.filters(),
            output_extent(h, kh, self.stride.0, self.padding)?,
            output_extent(w, kw, self.stride.1, self.padding)?,
        ])
    }

    fn im2col(&self, input: &Tensor, out_h: usize, out_w: usize) -> Vec<f64> {
        let [c_in, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2]];
        let (kh, kw) = self.kernel_size();
        let (sh, sw) = self.stride;
        let pad = self.padding as isize;
        let positions = out_h * out_w;
        let x = input.data();
        let mut cols = vec![0.0; c_in * kh * kw * positions];
        let mut row = 0;
        for c in 0..c_in {
            for u in 0..kh {
                for v in 0..kw {
                    let dst = &mut cols[row * positions..(row + 1) * positions];
                    for i in 0..out_h {
                        let y = (i * sh + u) as isize - pad;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        let src = (c * h + y as usize) * w;
                        for j in 0..out_w {
                            let xj = (j * sw + v) as isize - pad;
                            if xj >= 0 && xj < w as isize {
                                dst[i * out_w + j] = x[src + xj as usize];
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
        cols
    }

    fn pre_activation(&self, input: &Tensor) -> Result<(Tensor, Vec<f64>)> {
        let out_shape = self.output_shape(input.shape())?;
        let (out_h, out_w) = (out_shape[1], out_shape[2]);
        let positions = out_h * out_w;
        let cols = self.im2col(input, out_h, out_w);
        let depth = self.kernel.len() / self.filters();
        let k = self.kernel.data();
        let mut out = vec![0.0; self.filters() * positions];
        for f in 0..self.filters() {
            let row = &mut out[f * positions..(f + 1) * positions];
            row.fill(self.bias.data()[f]);
            for d in 0..depth {
                let weight = k[f * depth + d];
                let col = &cols[d * positions..(d + 1) * positions];
                for (o, &x) in row.iter_mut().zip(col) {
                    *o += weight * x;
                }
            }
        }
        Ok((Tensor::from_vec(&out_shape, out)?, cols))
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        let (z, _) = self.pre_activation(input)?;
        Ok(self.activation.forward(&z))
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        let (z, cols) = self.pre_activation(input)?;
        let out = self.activation.forward(&z);
        let s = input.shape();
        self.cache = Some(ConvCache { input_shape: [s[0], s[1], s[2]], cols, pre_activation: z });
        Ok(out)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("conv2d backward without a train-mode forward".into()))?;
        if grad.shape() != cache.pre_activation.shape() {
            return Err(Error::mismatch(format!(
                "conv2d backward grad {:?} vs output {:?}",
                grad.shape(),
                cache.pre_activation.shape()
            )));
        }
        let gz = self.activation.backward(&cache.pre_activation, grad);
        let [c_in, h, w] = cache.input_shape;
        let (out_h, out_w) = (gz.shape()[1], gz.shape()[2]);
        let positions = out_h * out_w;
        let filters = self.filters();
        let depth = self.kernel.len() / filters;
        let g = gz.data();

        for f in 0..filters {
            let gf = &g[f * positions..(f + 1) * positions];
            self.bias_grad.data_mut()[f] += gf.iter().sum::<f64>();
            for d in 0..depth {
                self.kernel_grad.data_mut()[f * depth + d] +=
                    dot(gf, &cache.cols[d * positions..(d + 1) * positions]);
            }
        }

        let k = self.kernel.data();
        let mut dcols = vec![0.0; depth * positions];
        for f in 0..filters {
            let gf = &g[f * positions..(f + 1) * positions];
            for d in 0..depth {
                let weight = k[f * depth + d];
                let dst = &mut dcols[d * positions..(d + 1) * positions];
                for (o, &x) in dst.iter_mut().zip(gf) {
                    *o += weight * x;
                }
            }
        }

        let (kh, kw) = self.kernel_size();
        let (sh, sw) = self.stride;
        let pad = self.padding as isize;
        let mut dx = vec![0.0; c_in * h * w];
        let mut row = 0;
        for c in 0..c_in {
            for u in 0..kh {
                for v in 0..kw {
                    let src = &dcols[row * positions..(row + 1) * positions];
                    for i in 0..out_h {
                        let y = (i * sh + u) as isize - pad;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        let base = (c * h + y as usize) * w;
                        for j in 0..out_w {
                            let xj = (j * sw + v) as isize - pad;
                            if xj >= 0 && xj < w as isize {
                                dx[base + xj as usize] += src[i * out_w + j];
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
        Tensor::from_vec(&[c_in, h, w], dx)
    }
}

pub(crate) fn spatial(shape: &[usize]) -> Result<[usize; 3]> {
    match shape {
        &[c, h, w] => Ok([c, h, w]),
        _ => Err(Error::mismatch(format!("expected a [C, H, W] input, got {shape:?}"))),
    }
}
