//! Decoding, augmentation, splits, balanced sampling and synthetic data.

pub mod augment;
pub mod dataset;
pub mod netpbm;
pub mod sampler;
pub mod synth;

pub use augment::{adjust_brightness, flip, resize_bilinear, AugmentConfig, FlipAxis};
pub use dataset::{split_dataset, DatasetIndex, LoadedDataset, Record, Sample, Split};
pub use netpbm::{decode_pgm, decode_ppm, encode_image, ImageFormat};
pub use sampler::{balanced_batches, BalancedSampler, Batch, Draw, SamplerConfig};
pub use synth::synth_generate;
