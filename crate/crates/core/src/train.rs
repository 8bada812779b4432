//! The training loop: balanced batches, weighted BCE plus L2, Adam, and a
//! per-epoch validation pass that drives the plateau rule.

use crate::data::augment::{resize_bilinear, AugmentConfig};
use crate::data::dataset::{LoadedDataset, Split};
use crate::data::sampler::{balanced_batches, BalancedSampler, SamplerConfig};
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::loss::{weighted_bce, LossConfig};
use crate::models::Network;
use crate::optim::{AdamConfig, AdamState, PlateauState};
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub sampler: SamplerConfig,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub reduce_factor: f64,
    pub patience: usize,
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            sampler: SamplerConfig::default(),
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            reduce_factor: 0.8,
            patience: 5,
            augment: AugmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate after this epoch's plateau check.
    pub lr: f64,
}

/// Decimal rendering with nine significant digits, never in exponent form.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.8}");
    }
    let sci = format!("{:.8e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

pub const LOG_COLUMNS: &str = "epoch\ttrain_loss\tval_loss\tlr";

impl EpochRecord {
    pub fn log_line(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.epoch, sig9(self.train_loss), sig9(self.val_loss), sig9(self.lr))
    }
}

/// Mean weighted BCE over a split plus the network's L2 penalty.
pub fn split_loss(net: &mut Network, data: &LoadedDataset, split: Split, loss: &LossConfig) -> Result<f64> {
    let (h, w) = (net.input_shape()[1], net.input_shape()[2]);
    let indices = data.index.indices(split);
    if indices.is_empty() {
        return Err(Error::Usage(format!("{split} split is empty")));
    }
    let mut total = 0.0;
    for &i in &indices {
        let img = resize_bilinear(&data.images[i], h, w)?;
        let p = net.forward_eval(&img)?.data()[0];
        total += weighted_bce(p, data.label(i), loss)?.0;
    }
    Ok(total / indices.len() as f64 + net.l2_value(loss.lambda)?)
}

pub struct Trainer {
    pub config: TrainConfig,
    adam: AdamState,
    plateau: PlateauState,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.loss.validate()?;
        config.adam.validate()?;
        config.sampler.validate()?;
        let plateau = PlateauState::new(config.reduce_factor, config.patience)?;
        Ok(Self { adam: AdamState::new(config.adam), plateau, config })
    }

    pub fn learning_rate(&self) -> f64 {
        self.adam.alpha
    }

    /// Runs every epoch, calling `on_epoch` after each one. The network is
    /// left in eval mode.
    pub fn run(
        &mut self,
        net: &mut Network,
        data: &LoadedDataset,
        rng: &mut Prng,
        mut on_epoch: impl FnMut(&EpochRecord) -> Result<()>,
    ) -> Result<Vec<EpochRecord>> {
        let sampler = BalancedSampler::new(&data.index, Split::Train, self.config.sampler)?;
        for label in [0u8, 1] {
            if data.index.count(Split::Validation, label) == 0 {
                return Err(Error::Usage(format!("validation split has no samples of class {label}")));
            }
        }
        let target = (net.input_shape()[1], net.input_shape()[2]);
        let mut sample_rng = rng.split();
        let mut dropout_rng = rng.split();
        net.init_optimizer(&mut self.adam);

        let mut records = Vec::with_capacity(self.config.epochs);
        for epoch in 1..=self.config.epochs {
            net.set_mode(Mode::Train);
            let mut loss_sum = 0.0;
            let mut batches = 0usize;
            let stream = balanced_batches(data, &sampler, self.config.augment, target, &mut sample_rng);
            for (b, batch) in stream.enumerate() {
                let batch = batch?;
                let loss = self.step(net, &batch.images, &batch.labels, &mut dropout_rng)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
                }
                loss_sum += loss;
                batches += 1;
            }
            net.set_mode(Mode::Eval);
            let val_loss = split_loss(net, data, Split::Validation, &self.config.loss)?;
            if !val_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: 0 });
            }
            self.plateau.update(val_loss, &mut self.adam);
            let record = EpochRecord { epoch, train_loss: loss_sum / batches as f64, val_loss, lr: self.adam.alpha };
            on_epoch(&record)?;
            records.push(record);
        }
        net.set_mode(Mode::Eval);
        Ok(records)
    }

    /// One optimizer step on a batch; returns mean BCE plus L2 penalty.
    pub fn step(&mut self, net: &mut Network, images: &[Tensor], labels: &[u8], rng: &mut Prng) -> Result<f64> {
        if self.adam.second_moments().is_empty() {
            net.init_optimizer(&mut self.adam);
        }
        net.zero_grads();
        let n = images.len() as f64;
        let mut bce = 0.0;
        for (img, &y) in images.iter().zip(labels) {
            let p = net.forward(img, rng)?.data()[0];
            let (l, dl_dp) = weighted_bce(p, y, &self.config.loss)?;
            bce += l;
            net.backward(&Tensor::scalar(dl_dp / n))?;
        }
        let penalty = net.apply_l2(self.config.loss.lambda)?;
        net.adam_step(&mut self.adam)?;
        Ok(bce / n + penalty)
    }
}
