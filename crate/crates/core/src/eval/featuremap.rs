use std::path::{Path, PathBuf};

use crate::data::netpbm::{encode_image, ImageFormat};
use crate::error::{Error, Result};
use crate::models::Network;
use crate::tensor::Tensor;

/// Layers whose output is a `[C, H, W]` feature map.
pub fn spatial_layers(net: &Network) -> Vec<usize> {
    net.shapes().iter().enumerate().filter(|(_, s)| s.len() == 3).map(|(i, _)| i).collect()
}

fn spatial_output(net: &Network, image: &Tensor, layer: usize) -> Result<Tensor> {
    let valid = spatial_layers(net);
    if !valid.contains(&layer) {
        return Err(Error::Usage(format!(
            "layer {layer} has no spatial output; spatial layers are {valid:?}"
        )));
    }
    let mut acts = net.activations(image)?;
    Ok(acts.swap_remove(layer))
}

/// Min-max normalizes each channel to `[0, 1]`; constant channels map to 0.5.
pub fn normalize_channels(maps: &Tensor) -> Result<Vec<Tensor>> {
    let (c, h, w) = match maps.shape() {
        &[c, h, w] => (c, h, w),
        s => return Err(Error::mismatch(format!("expected [C, H, W] feature maps, got {s:?}"))),
    };
    let plane = h * w;
    (0..c)
        .map(|ch| {
            let values = &maps.data()[ch * plane..(ch + 1) * plane];
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let data = if hi > lo {
                values.iter().map(|v| (v - lo) / (hi - lo)).collect()
            } else {
                vec![0.5; plane]
            };
            Tensor::from_vec(&[h, w], data)
        })
        .collect()
}

/// Writes one P5 file per channel of layer `layer`'s output, named
/// `layer{L}_ch{c}.pgm`, and returns their paths.
pub fn export_feature_maps(net: &Network, image: &Tensor, layer: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let maps = spatial_output(net, image, layer)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    for (ch, channel) in normalize_channels(&maps)?.iter().enumerate() {
        let path = out_dir.join(format!("layer{layer}_ch{ch}.pgm"));
        let bytes = encode_image(channel, ImageFormat::P5)?;
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Mean activation of every channel of layer `layer`, averaged over `images`.
pub fn channel_means(net: &Network, images: &[&Tensor], layer: usize) -> Result<Vec<f64>> {
    let mut sums: Vec<f64> = Vec::new();
    for image in images {
        let maps = spatial_output(net, image, layer)?;
        let (c, plane) = (maps.shape()[0], maps.shape()[1] * maps.shape()[2]);
        sums.resize(c, 0.0);
        for (ch, s) in sums.iter_mut().enumerate() {
            *s += maps.data()[ch * plane..(ch + 1) * plane].iter().sum::<f64>() / plane as f64;
        }
    }
    Ok(sums.into_iter().map(|s| s / images.len().max(1) as f64).collect())
}
