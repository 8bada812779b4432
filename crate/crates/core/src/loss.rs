//! Class-weighted binary cross-entropy and the L2 kernel penalty.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub w_pos: f64,
    pub w_neg: f64,
    /// L2 coefficient applied to every regularized weight matrix.
    pub lambda: f64,
    /// Probabilities are clamped to `[eps_clip, 1 - eps_clip]` before the log.
    pub eps_clip: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { w_pos: 1.0, w_neg: 2.0, lambda: 0.001, eps_clip: 1e-7 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_pos > 0.0) {
            return Err(Error::InvalidHyperparameter { name: "w_pos", reason: "must be positive".into() });
        }
        if !(self.w_neg > 0.0) {
            return Err(Error::InvalidHyperparameter { name: "w_neg", reason: "must be positive".into() });
        }
        if !(self.eps_clip > 0.0 && self.eps_clip < 0.5) {
            return Err(Error::InvalidHyperparameter { name: "eps_clip", reason: "must lie in (0, 0.5)".into() });
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidHyperparameter { name: "lambda", reason: "must be non-negative".into() });
        }
        Ok(())
    }
}

/// `-w_pos * y * ln(p) - w_neg * (1 - y) * ln(1 - p)` and its derivative in
/// `p`, both evaluated at the clamped probability.
pub fn weighted_bce(p: f64, label: u8, cfg: &LossConfig) -> Result<(f64, f64)> {
    let p = p.clamp(cfg.eps_clip, 1.0 - cfg.eps_clip);
    match label {
        1 => Ok((-cfg.w_pos * p.ln(), -cfg.w_pos / p)),
        0 => Ok((-cfg.w_neg * (1.0 - p).ln(), cfg.w_neg / (1.0 - p))),
        other => Err(Error::InvalidLabel(other as i64)),
    }
}

/// Mean weighted BCE over a batch of `(probability, label)` pairs.
pub fn batch_bce(pairs: &[(f64, u8)], cfg: &LossConfig) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Usage("empty batch".into()));
    }
    let mut total = 0.0;
    for &(p, y) in pairs {
        total += weighted_bce(p, y, cfg)?.0;
    }
    Ok(total / pairs.len() as f64)
}

/// `lambda * sum(w^2)` over all given matrices, with per-weight gradients `2 * lambda * w`.
pub fn l2_penalty(weights: &[&Tensor], lambda: f64) -> Result<(f64, Vec<Tensor>)> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidHyperparameter { name: "lambda", reason: format!("{lambda} is negative") });
    }
    let mut penalty = 0.0;
    let mut grads = Vec::with_capacity(weights.len());
    for w in weights {
        penalty += lambda * w.data().iter().map(|x| x * x).sum::<f64>();
        grads.push(w.scale(2.0 * lambda));
    }
    Ok((penalty, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn reference_values() {
        let cfg = LossConfig::default();
        assert!((weighted_bce(0.5, 1, &cfg).unwrap().0 - LN2).abs() < 1e-15);
        assert!((weighted_bce(0.5, 0, &cfg).unwrap().0 - 2.0 * LN2).abs() < 1e-15);
        let (l, _) = weighted_bce(1.0 - 1e-12, 0, &cfg).unwrap();
        assert!(l.is_finite());
        // 1 - (1 - 1e-7) is not exactly 1e-7 in f64; allow for that rounding.
        assert!((l - 2.0 * 1e7f64.ln()).abs() < 1e-8, "{l}");
        assert!(matches!(weighted_bce(0.5, 2, &cfg), Err(Error::InvalidLabel(2))));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let cfg = LossConfig::default();
        let h = 1e-6;
        for &p in &[0.1, 0.5, 0.9] {
            for y in [0u8, 1] {
                let (_, d) = weighted_bce(p, y, &cfg).unwrap();
                let fd = (weighted_bce(p + h, y, &cfg).unwrap().0 - weighted_bce(p - h, y, &cfg).unwrap().0) / (2.0 * h);
                assert!(((d - fd) / fd).abs() < 1e-6, "p={p} y={y}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn penalty_values() {
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 0.0]).unwrap();
        let (p0, g0) = l2_penalty(&[&w], 0.0).unwrap();
        assert_eq!(p0, 0.0);
        assert!(g0[0].data().iter().all(|&g| g == 0.0));
        let (p, g) = l2_penalty(&[&w], 0.001).unwrap();
        assert!((p - 0.014).abs() < 1e-15);
        assert!((g[0].data()[2] - 0.006).abs() < 1e-15);
        assert!(l2_penalty(&[&w], -1.0).is_err());
    }
}
