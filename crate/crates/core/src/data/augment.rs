//! Brightness, flips and bilinear resizing of `[C, H, W]` images.

use crate::error::{Error, Result};
use crate::layers::conv::spatial;
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipAxis {
    /// Mirror left-right (reverse columns).
    Horizontal,
    /// Mirror top-bottom (reverse rows).
    Vertical,
}

/// `clamp(pixel * factor, 0, 1)`.
pub fn adjust_brightness(image: &Tensor, factor: f64) -> Result<Tensor> {
    if !(factor > 0.0) {
        return Err(Error::InvalidParameter { name: "brightness factor", reason: format!("{factor} must be positive") });
    }
    Ok(image.map(|v| (v * factor).clamp(0.0, 1.0)))
}

pub fn flip(image: &Tensor, axis: FlipAxis) -> Result<Tensor> {
    let [c, h, w] = spatial(image.shape())?;
    let src = image.data();
    let mut out = Vec::with_capacity(src.len());
    for ch in 0..c {
        for y in 0..h {
            let sy = if axis == FlipAxis::Vertical { h - 1 - y } else { y };
            let row = &src[(ch * h + sy) * w..(ch * h + sy + 1) * w];
            match axis {
                FlipAxis::Horizontal => out.extend(row.iter().rev()),
                FlipAxis::Vertical => out.extend_from_slice(row),
            }
        }
    }
    Tensor::from_vec(image.shape(), out)
}

/// Bilinear resize with half-pixel centres: output `i` samples source
/// coordinate `(i + 0.5) * in / out - 0.5`, clamped to the valid range.
pub fn resize_bilinear(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidParameter { name: "resize target", reason: "zero extent".into() });
    }
    let [c, h, w] = spatial(image.shape())?;
    if (h, w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let ys = taps(out_h, h);
    let xs = taps(out_w, w);
    let src = image.data();
    let mut out = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
                let bottom = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Tensor::from_vec(&[c, out_h, out_w], out)
}

/// Training-time augmentation: a uniform brightness factor, then an
/// independent coin flip for each mirror axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub brightness_low: f64,
    pub brightness_high: f64,
    pub flip_probability: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { brightness_low: 0.8, brightness_high: 1.2, flip_probability: 0.5 }
    }
}

impl AugmentConfig {
    /// No augmentation at all; `augment` then only resizes.
    pub fn none() -> Self {
        Self { brightness_low: 1.0, brightness_high: 1.0, flip_probability: 0.0 }
    }

    /// Brightness, then flips, then resize. Always draws exactly three
    /// numbers from `rng`, so streams stay aligned whatever the settings.
    pub fn augment(&self, image: &Tensor, target: (usize, usize), rng: &mut Prng) -> Result<Tensor> {
        let factor = rng.uniform(self.brightness_low, self.brightness_high);
        let flip_h = rng.bernoulli(self.flip_probability);
        let flip_v = rng.bernoulli(self.flip_probability);
        let mut img = if factor == 1.0 { image.clone() } else { adjust_brightness(image, factor)? };
        if flip_h {
            img = flip(&img, FlipAxis::Horizontal)?;
        }
        if flip_v {
            img = flip(&img, FlipAxis::Vertical)?;
        }
        resize_bilinear(&img, target.0, target.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(c: usize, h: usize, w: usize, data: &[f64]) -> Tensor {
        Tensor::from_vec(&[c, h, w], data.to_vec()).unwrap()
    }

    #[test]
    fn brightness_cases() {
        let x = img(1, 1, 2, &[0.9, 0.5]);
        assert_eq!(adjust_brightness(&x, 1.0).unwrap(), x);
        assert_eq!(adjust_brightness(&x, 1.2).unwrap().data()[0], 1.0);
        assert!((adjust_brightness(&x, 0.8).unwrap().data()[1] - 0.4).abs() < 1e-15);
        assert!(adjust_brightness(&x, 0.0).is_err());
    }

    #[test]
    fn flip_cases() {
        let x = img(1, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(flip(&x, FlipAxis::Horizontal).unwrap().data(), &[2.0, 1.0, 4.0, 3.0]);
        assert_eq!(flip(&x, FlipAxis::Vertical).unwrap().data(), &[3.0, 4.0, 1.0, 2.0]);
        let twice = flip(&flip(&x, FlipAxis::Vertical).unwrap(), FlipAxis::Vertical).unwrap();
        assert_eq!(twice, x);
        let col = img(1, 3, 1, &[1.0, 2.0, 3.0]);
        assert_eq!(flip(&col, FlipAxis::Horizontal).unwrap(), col);
    }

    #[test]
    fn resize_cases() {
        let x = img(1, 2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(resize_bilinear(&x, 2, 3).unwrap(), x);
        let c = Tensor::full(&[3, 5, 7], 0.37);
        let r = resize_bilinear(&c, 11, 4).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));
        assert!(resize_bilinear(&x, 0, 4).is_err());
    }

    #[test]
    fn checkerboard_upsample() {
        let x = img(1, 2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let r = resize_bilinear(&x, 4, 4).unwrap();
        let d = r.data();
        assert_eq!([d[0], d[3], d[12], d[15]], [1.0, 0.0, 0.0, 1.0]);
        // Output (1, 1) samples source (0.25, 0.25).
        assert!((d[5] - 0.625).abs() < 1e-15);
    }
}
