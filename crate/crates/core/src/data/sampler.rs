//! Class-ratio batch sampling with replacement.

use crate::data::augment::AugmentConfig;
use crate::data::dataset::{LoadedDataset, Split, DatasetIndex};
use crate::error::{Error, Result};
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub ratio_pos: usize,
    pub ratio_neg: usize,
    pub batch_size: usize,
    /// Samples drawn per epoch; the final batch may be short.
    pub epoch_size: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { ratio_pos: 1, ratio_neg: 2, batch_size: 32, epoch_size: 3000 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratio_pos == 0 || self.ratio_neg == 0 {
            return Err(Error::InvalidParameter { name: "ratio", reason: "both parts must be at least 1".into() });
        }
        if self.batch_size < self.ratio_pos + self.ratio_neg {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                reason: format!(
                    "{} cannot hold a {}:{} ratio",
                    self.batch_size, self.ratio_pos, self.ratio_neg
                ),
            });
        }
        if self.epoch_size == 0 {
            return Err(Error::InvalidParameter { name: "epoch_size", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Positives and negatives in a batch of `len` samples, with
    /// `positives = round(len * pos / (pos + neg))`, halves rounding up.
    pub fn composition(&self, len: usize) -> (usize, usize) {
        let parts = self.ratio_pos + self.ratio_neg;
        let pos = (2 * len * self.ratio_pos + parts) / (2 * parts);
        (pos, len - pos)
    }

    /// Batch lengths for one epoch.
    pub fn batch_lengths(&self) -> impl Iterator<Item = usize> {
        let (bs, total) = (self.batch_size, self.epoch_size);
        (0..total.div_ceil(bs)).map(move |b| bs.min(total - b * bs))
    }
}

/// One sample drawn into a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    /// Position in the dataset's sample list.
    pub sample: usize,
    pub label: u8,
}

#[derive(Debug, Clone)]
pub struct BalancedSampler {
    positives: Vec<usize>,
    negatives: Vec<usize>,
    config: SamplerConfig,
}

impl BalancedSampler {
    pub fn new(index: &DatasetIndex, split: Split, config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        let members = index.indices(split);
        let positives: Vec<usize> = members.iter().copied().filter(|&i| index.samples()[i].label == 1).collect();
        let negatives: Vec<usize> = members.iter().copied().filter(|&i| index.samples()[i].label == 0).collect();
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::UnsatisfiableRatio(format!(
                "{split} split has {} positives and {} negatives; both classes are required",
                positives.len(),
                negatives.len()
            )));
        }
        Ok(Self { positives, negatives, config })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Draws `len` samples: positives first, then negatives, then a shuffle.
    pub fn draw_batch(&self, len: usize, rng: &mut Prng) -> Vec<Draw> {
        let (n_pos, n_neg) = self.config.composition(len);
        let mut batch = Vec::with_capacity(len);
        for _ in 0..n_pos {
            batch.push(Draw { sample: self.positives[rng.below(self.positives.len())], label: 1 });
        }
        for _ in 0..n_neg {
            batch.push(Draw { sample: self.negatives[rng.below(self.negatives.len())], label: 0 });
        }
        rng.shuffle(&mut batch);
        batch
    }

    /// Index-only plan of one epoch of batches.
    pub fn plan_epoch(&self, rng: &mut Prng) -> Vec<Vec<Draw>> {
        self.config.batch_lengths().map(|len| self.draw_batch(len, rng)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub images: Vec<Tensor>,
    pub labels: Vec<u8>,
}

/// One epoch of augmented batches. Each batch first draws its samples, then
/// augments them in batch order, all from the same `rng`.
pub struct BalancedBatches<'a> {
    data: &'a LoadedDataset,
    sampler: &'a BalancedSampler,
    augment: AugmentConfig,
    target: (usize, usize),
    rng: &'a mut Prng,
    lengths: Vec<usize>,
    next: usize,
}

pub fn balanced_batches<'a>(
    data: &'a LoadedDataset,
    sampler: &'a BalancedSampler,
    augment: AugmentConfig,
    target: (usize, usize),
    rng: &'a mut Prng,
) -> BalancedBatches<'a> {
    let lengths = sampler.config.batch_lengths().collect();
    BalancedBatches { data, sampler, augment, target, rng, lengths, next: 0 }
}

impl Iterator for BalancedBatches<'_> {
    type Item = Result<Batch>;

    fn next(&mut self) -> Option<Self::Item> {
        let len = *self.lengths.get(self.next)?;
        self.next += 1;
        let draws = self.sampler.draw_batch(len, self.rng);
        let mut images = Vec::with_capacity(len);
        for d in &draws {
            match self.augment.augment(&self.data.images[d.sample], self.target, self.rng) {
                Ok(img) => images.push(img),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(Batch { images, labels: draws.iter().map(|d| d.label).collect() }))
    }
}
