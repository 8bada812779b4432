use crate::error::{Error, Result};
use crate::layers::conv::spatial;
use crate::tensor::Tensor;

/// Row-major flatten of any input to a vector.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(vec![input.iter().product()])
    }

    pub fn forward_eval(&self, input: &Tensor) -> Tensor {
        input.reshape(&[input.len()]).expect("flatten")
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Tensor {
        self.input_shape = Some(input.shape().to_vec());
        self.forward_eval(input)
    }

    pub fn clear_cache(&mut self) {
        self.input_shape = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self
            .input_shape
            .take()
            .ok_or_else(|| Error::Usage("flatten backward without a train-mode forward".into()))?;
        grad.reshape(&shape)
    }
}

/// Mean over each channel's `H x W` plane.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    input_shape: Option<[usize; 3]>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let [c, _, _] = spatial(input)?;
        Ok(vec![c])
    }

    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        let [c, h, w] = spatial(input.shape())?;
        let plane = h * w;
        let out = (0..c)
            .map(|ch| input.data()[ch * plane..(ch + 1) * plane].iter().sum::<f64>() / plane as f64)
            .collect();
        Tensor::from_vec(&[c], out)
    }

    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        let out = self.forward_eval(input)?;
        self.input_shape = Some(spatial(input.shape())?);
        Ok(out)
    }

    pub fn clear_cache(&mut self) {
        self.input_shape = None;
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let [c, h, w] = self
            .input_shape
            .take()
            .ok_or_else(|| Error::Usage("global_avg_pool backward without a train-mode forward".into()))?;
        if grad.shape() != [c] {
            return Err(Error::mismatch(format!("global_avg_pool backward grad {:?}", grad.shape())));
        }
        let plane = h * w;
        let mut dx = Vec::with_capacity(c * plane);
        for &g in grad.data() {
            dx.extend(std::iter::repeat(g / plane as f64).take(plane));
        }
        Tensor::from_vec(&[c, h, w], dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_cases() {
        let f = Flatten::new();
        assert_eq!(f.output_shape(&[64, 18, 18]).unwrap(), vec![20736]);
        let x = Tensor::from_vec(&[1, 1, 1], vec![4.0]).unwrap();
        assert_eq!(f.forward_eval(&x).data(), &[4.0]);
        let y = Tensor::from_vec(&[2, 1, 3], (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(f.forward_eval(&y).reshape(&[2, 1, 3]).unwrap(), y);
    }

    #[test]
    fn gap_cases() {
        let mut g = GlobalAvgPool::new();
        assert_eq!(g.forward_eval(&Tensor::full(&[1, 3, 3], 2.5)).unwrap().data(), &[2.5]);
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_eq!(g.forward_train(&x).unwrap().data(), &[4.0]);
        let dx = g.backward(&Tensor::full(&[1], 1.0)).unwrap();
        assert_eq!(dx.data(), &[0.25; 4]);
    }
}
