use crate::error::{Error, Result};
use crate::layers::conv::{output_extent, spatial};
use crate::tensor::Tensor;

/// Max pooling. Ties route the gradient to the first maximum in row-major
/// window order.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub pool: (usize, usize),
    pub stride: (usize, usize),
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(pool: (usize, usize), stride: (usize, usize)) -> Result<Self> {
        if pool.0 == 0 || pool.1 == 0 {
            return Err(Error::InvalidHyperparameter { name: "pool", reason: "must be positive".into() });
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::InvalidHyperparameter { name: "stride", reason: "must be positive".into() });
        }
        Ok(Self { pool, stride, cache: None })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let [c, h, w] = spatial(input)?;
        Ok(vec![
            c,
            output_extent(h, self.pool.0, self.stride.0, 0)?,
            output_extent(w, self.pool.1, self.stride.1, 0)?,
        ])
    }

    fn run(&self, input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        let out_shape = self.output_shape(input.shape())?;
        let [c, h, w] = spatial(input.shape())?;
        let (oh, ow) = (out_shape[1], out_shape[2]);
        let x = input.data();
        let mut out = Vec::with_capacity(c * oh * ow);
        let mut argmax = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_at = usize::MAX;
                    for u in 0..self.pool.0 {
                        let row = (ch * h + i * self.stride.0 + u) * w + j * self.stride.1;
                        for v in 0..self.pool.1 {
                            let val = x[row + v];
                            if best_at == usize::MAX || val > best {
                                best = val;
                                best_at = row + v;
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_at);
                }
            }
        }
        Ok((Tensor::from_vec(&out_shape, out)?, argmax))
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.run(input)?.0)
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        let (out, argmax) = self.run(input)?;
        self.cache = Some((input.shape().to_vec(), argmax));
        Ok(out)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (shape, argmax) = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("maxpool2d backward without a train-mode forward".into()))?;
        if grad.len() != argmax.len() {
            return Err(Error::mismatch(format!("maxpool2d backward grad {:?}", grad.shape())));
        }
        let mut dx = Tensor::zeros(&shape);
        let d = dx.data_mut();
        for (&at, &g) in argmax.iter().zip(grad.data()) {
            d[at] += g;
        }
        Ok(dx)
    }
}
