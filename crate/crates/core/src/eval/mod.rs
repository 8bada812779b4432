//! Split evaluation, confusion-matrix metrics and feature-map export.

pub mod featuremap;
pub mod metrics;

pub use featuremap::{channel_means, export_feature_maps, normalize_channels, spatial_layers};
pub use metrics::{confusion, error_reduction, format_metric, metrics, ConfusionMatrix, MetricsReport};

use crate::data::augment::resize_bilinear;
use crate::data::dataset::{LoadedDataset, Split};
use crate::error::{Error, Result};
use crate::models::{classify, Network};

/// Probabilities for every sample of `split`, in manifest order. Images are
/// resized to the network input, never augmented.
pub fn predict_split(net: &Network, data: &LoadedDataset, split: Split) -> Result<Vec<(f64, u8)>> {
    let indices = data.index.indices(split);
    if indices.is_empty() {
        return Err(Error::Usage(format!("{split} split is empty")));
    }
    let (h, w) = (net.input_shape()[1], net.input_shape()[2]);
    indices
        .into_iter()
        .map(|i| {
            let img = resize_bilinear(&data.images[i], h, w)?;
            Ok((net.predict(&img)?, data.label(i)))
        })
        .collect()
}

pub fn evaluate_split(net: &Network, data: &LoadedDataset, split: Split, threshold: f64) -> Result<MetricsReport> {
    let scored = predict_split(net, data, split)?;
    let preds: Vec<u8> = scored.iter().map(|&(p, _)| classify(p, threshold)).collect();
    let truths: Vec<u8> = scored.iter().map(|&(_, y)| y).collect();
    Ok(metrics(&confusion(&preds, &truths)?))
}
