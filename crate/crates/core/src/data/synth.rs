//! Synthetic fundus-like images.
//!
//! Negatives are a dark reddish disc with a few thin bright vessel curves.
//! Positives add a thick bright circular-arc ridge whose width is 4 to 8
//! percent of the image width, at a random radius and orientation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::data::dataset::Record;
use crate::data::netpbm::{encode_image, ImageFormat};
use crate::error::{Error, Result};
use crate::prng::Prng;
use crate::tensor::Tensor;

struct Canvas {
    h: usize,
    w: usize,
    rgb: Vec<[f64; 3]>,
}

impl Canvas {
    fn blend(&mut self, x: usize, y: usize, color: [f64; 3], alpha: f64) {
        let px = &mut self.rgb[y * self.w + x];
        for c in 0..3 {
            px[c] = px[c] * (1.0 - alpha) + color[c] * alpha;
        }
    }

    /// Soft disc stamp used to rasterize strokes.
    fn stamp(&mut self, cx: f64, cy: f64, radius: f64, color: [f64; 3], strength: f64) {
        let x0 = (cx - radius - 1.0).floor().max(0.0) as usize;
        let y0 = (cy - radius - 1.0).floor().max(0.0) as usize;
        let x1 = ((cx + radius + 1.0).ceil() as usize).min(self.w - 1);
        let y1 = ((cy + radius + 1.0).ceil() as usize).min(self.h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                let cover = (radius + 0.5 - d).clamp(0.0, 1.0);
                if cover > 0.0 {
                    self.blend(x, y, color, cover * strength);
                }
            }
        }
    }

    fn into_tensor(self) -> Tensor {
        let plane = self.h * self.w;
        let mut data = vec![0.0; 3 * plane];
        for (i, px) in self.rgb.iter().enumerate() {
            for c in 0..3 {
                data[c * plane + i] = px[c].clamp(0.0, 1.0);
            }
        }
        Tensor::from_vec(&[3, self.h, self.w], data).expect("canvas shape")
    }
}

/// Renders one image. Deterministic in `rng`.
pub fn render(positive: bool, height: usize, width: usize, rng: &mut Prng) -> Tensor {
    let scale = height.min(width) as f64;
    let cx = width as f64 / 2.0 + rng.uniform(-0.04, 0.04) * scale;
    let cy = height as f64 / 2.0 + rng.uniform(-0.04, 0.04) * scale;
    let radius = rng.uniform(0.42, 0.48) * scale;
    let tint = rng.uniform(0.85, 1.15);

    let mut canvas = Canvas { h: height, w: width, rgb: vec![[0.0; 3]; height * width] };
    for y in 0..height {
        for x in 0..width {
            let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt() / radius;
            let noise = rng.uniform(-0.03, 0.03);
            if d <= 1.0 {
                let glow = 1.0 - 0.35 * d * d;
                canvas.rgb[y * width + x] =
                    [(0.36 * tint * glow + noise), (0.14 * glow + noise * 0.5), (0.07 * glow + noise * 0.3)];
            }
        }
    }

    // Optic disc: a small bright spot that vessels radiate from.
    let od_angle = rng.uniform(0.0, 2.0 * PI);
    let od_x = cx + 0.45 * radius * od_angle.cos();
    let od_y = cy + 0.45 * radius * od_angle.sin();
    canvas.stamp(od_x, od_y, 0.06 * scale, [0.75, 0.55, 0.35], 0.8);

    let vessel_width = (0.006 * scale).max(0.5);
    let vessels = 4 + rng.below(3);
    for _ in 0..vessels {
        let mut heading = rng.uniform(0.0, 2.0 * PI);
        let curvature = rng.uniform(-0.04, 0.04);
        let length = rng.uniform(0.5, 0.9) * radius;
        let (mut x, mut y) = (od_x, od_y);
        let step = 0.5;
        let brightness = rng.uniform(0.45, 0.6);
        let mut travelled = 0.0;
        while travelled < length {
            let inside = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() < radius;
            if inside {
                canvas.stamp(x, y, vessel_width, [brightness, 0.22, 0.12], 0.9);
            }
            heading += curvature * step + rng.uniform(-0.02, 0.02);
            x += heading.cos() * step;
            y += heading.sin() * step;
            travelled += step;
        }
    }

    if positive {
        let ridge_radius = rng.uniform(0.45, 0.8) * radius;
        let start = rng.uniform(0.0, 2.0 * PI);
        let span = rng.uniform(PI / 3.0, 2.0 * PI / 3.0);
        let half_width = rng.uniform(0.04, 0.08) * width as f64 / 2.0;
        let arc_steps = (span * ridge_radius / 0.5).ceil() as usize;
        let color = [0.95, 0.88, 0.78];
        for k in 0..=arc_steps {
            let a = start + span * k as f64 / arc_steps as f64;
            let x = cx + ridge_radius * a.cos();
            let y = cy + ridge_radius * a.sin();
            canvas.stamp(x, y, half_width, color, 0.9);
        }
    }
    canvas.into_tensor()
}

/// Writes `count_pos` positive then `count_neg` negative images as P6 files
/// under `out_dir/images` and returns their records, paths relative to
/// `out_dir`.
pub fn synth_generate(
    count_pos: usize,
    count_neg: usize,
    size: (usize, usize),
    out_dir: &Path,
    rng: &mut Prng,
) -> Result<Vec<Record>> {
    if size.0 == 0 || size.1 == 0 {
        return Err(Error::InvalidParameter { name: "size", reason: "zero extent".into() });
    }
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
    let mut records = Vec::with_capacity(count_pos + count_neg);
    let jobs = (0..count_pos).map(|i| (1u8, i)).chain((0..count_neg).map(|i| (0u8, i)));
    for (label, i) in jobs {
        let id = format!("{}_{i:05}", if label == 1 { "pos" } else { "neg" });
        let image = render(label == 1, size.0, size.1, rng);
        let rel = PathBuf::from("images").join(format!("{id}.ppm"));
        let path = out_dir.join(&rel);
        let bytes = encode_image(&image, ImageFormat::P6)?;
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        records.push(Record { id, path: rel, label });
    }
    Ok(records)
}
