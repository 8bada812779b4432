//! The two classifier architectures.

use crate::error::{Error, Result};
use crate::layers::{Activation, Conv2d, Dense, Dropout, Flatten, GlobalAvgPool, Layer, MaxPool2d, ResidualBlock};
use crate::models::network::Network;
use crate::prng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Base,
    ResMini,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Base => "base",
            ModelKind::ResMini => "resmini",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(ModelKind::Base),
            "resmini" => Ok(ModelKind::ResMini),
            other => Err(Error::Usage(format!("unknown model `{other}`; expected base or resmini"))),
        }
    }
}

/// Shallow CNN: two strided 3x3 convolutions with max pooling, then a
/// dropout-regularized three-layer dense head. Valid padding throughout.
pub fn build_base_cnn(input: (usize, usize), rng: &mut Prng) -> Result<Network> {
    let (h, w) = input;
    if h < 16 || w < 16 {
        return Err(Error::InvalidShape { shape: vec![3, h, w], reason: "base CNN needs at least 16x16 input".into() });
    }
    let conv1 = Conv2d::new(3, 32, (3, 3), (2, 2), 0, Activation::Relu, rng)?;
    let pool1 = MaxPool2d::new((2, 2), (2, 2))?;
    let conv2 = Conv2d::new(32, 64, (3, 3), (2, 2), 0, Activation::Relu, rng)?;
    let pool2 = MaxPool2d::new((2, 2), (2, 2))?;

    let shape = conv1
        .output_shape(&[3, h, w])
        .and_then(|s| pool1.output_shape(&s))
        .and_then(|s| conv2.output_shape(&s))
        .and_then(|s| pool2.output_shape(&s))
        .map_err(|_| Error::InvalidShape {
            shape: vec![3, h, w],
            reason: "input too small for the base CNN shape chain".into(),
        })?;
    let flat: usize = shape.iter().product();

    let layers = vec![
        Layer::Conv2d(conv1),
        Layer::MaxPool2d(pool1),
        Layer::Conv2d(conv2),
        Layer::MaxPool2d(pool2),
        Layer::Dropout(Dropout::new(0.25)?),
        Layer::Flatten(Flatten::new()),
        Layer::Dense(Dense::new(flat, 128, Activation::Relu, true, rng)?),
        Layer::Dropout(Dropout::new(0.5)?),
        Layer::Dense(Dense::new(128, 64, Activation::Relu, true, rng)?),
        Layer::Dense(Dense::new(64, 1, Activation::Sigmoid, false, rng)?),
    ];
    Network::new("base", &[3, h, w], layers)
}

/// Channel widths of the residual stages, widest last.
pub const RES_STAGE_WIDTHS: [usize; 3] = [16, 32, 64];

/// Small residual network: strided stem convolution and max pool, residual
/// stages that halve the resolution at each stage boundary, global average
/// pooling and a single sigmoid output neuron. No hidden dense layers and no
/// L2 penalty.
pub fn build_res_mini(input: (usize, usize), stages: usize, blocks_per_stage: usize, rng: &mut Prng) -> Result<Network> {
    if stages == 0 || stages > RES_STAGE_WIDTHS.len() {
        return Err(Error::InvalidParameter {
            name: "stages",
            reason: format!("must be between 1 and {}", RES_STAGE_WIDTHS.len()),
        });
    }
    if blocks_per_stage == 0 {
        return Err(Error::InvalidParameter { name: "blocks_per_stage", reason: "must be at least 1".into() });
    }
    let (h, w) = input;
    let stem_width = RES_STAGE_WIDTHS[0];
    let mut layers = vec![
        Layer::Conv2d(Conv2d::new(3, stem_width, (3, 3), (2, 2), 0, Activation::Relu, rng)?),
        Layer::MaxPool2d(MaxPool2d::new((2, 2), (2, 2))?),
    ];
    let mut channels = stem_width;
    for (stage, &width) in RES_STAGE_WIDTHS[..stages].iter().enumerate() {
        for block in 0..blocks_per_stage {
            let stride = if stage > 0 && block == 0 { 2 } else { 1 };
            layers.push(Layer::Residual(ResidualBlock::new(channels, width, stride, rng)?));
            channels = width;
        }
    }
    layers.push(Layer::GlobalAvgPool(GlobalAvgPool::new()));
    layers.push(Layer::Dense(Dense::new(channels, 1, Activation::Sigmoid, false, rng)?));
    Network::new("resmini", &[3, h, w], layers).map_err(|e| match e {
        Error::ShapeMismatch(reason) => Error::InvalidShape { shape: vec![3, h, w], reason },
        other => other,
    })
}

pub fn build(kind: ModelKind, input: (usize, usize), rng: &mut Prng) -> Result<Network> {
    match kind {
        ModelKind::Base => build_base_cnn(input, rng),
        ModelKind::ResMini => build_res_mini(input, 3, 2, rng),
    }
}
