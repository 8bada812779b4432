//! Run configuration: flat `key = value` files, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ropnet::data::{AugmentConfig, SamplerConfig};
use ropnet::loss::LossConfig;
use ropnet::models::ModelKind;
use ropnet::optim::AdamConfig;
use ropnet::train::TrainConfig;

pub const KEYS: &[&str] = &[
    "seed",
    "model",
    "input_size",
    "batch_size",
    "epochs",
    "epoch_size",
    "ratio",
    "lambda",
    "alpha",
    "beta1",
    "beta2",
    "eta",
    "reduce_factor",
    "patience",
    "w_pos",
    "w_neg",
    "eps_clip",
    "threshold",
    "manifest",
    "weights",
    "out",
];

/// Raw settings in the order they were applied; later writes win.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", n + 1))?;
            s.set(k.trim(), v.trim()).with_context(|| format!("config line {}", n + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown config key `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) -> Result<()> {
        match value {
            Some(v) => self.set(key, &v.to_string()),
            None => Ok(()),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("bad value `{v}` for `{key}`: {e}")))
            .transpose()
    }
}

pub fn parse_ratio(text: &str) -> Result<(usize, usize)> {
    let (p, n) = text.split_once(':').ok_or_else(|| anyhow!("ratio `{text}` is not of the form P:N"))?;
    let p: usize = p.trim().parse().with_context(|| format!("ratio `{text}`"))?;
    let n: usize = n.trim().parse().with_context(|| format!("ratio `{text}`"))?;
    if p == 0 || n == 0 {
        bail!("ratio `{text}` must have positive parts");
    }
    Ok((p, n))
}

pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let (h, w) = match text.split_once('x') {
        Some((h, w)) => (h.trim().parse()?, w.trim().parse()?),
        None => {
            let s: usize = text.trim().parse().with_context(|| format!("size `{text}`"))?;
            (s, s)
        }
    };
    if h == 0 || w == 0 {
        bail!("size `{text}` has a zero extent");
    }
    Ok((h, w))
}

/// Fully resolved run settings. Unset values take the full-size defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelKind,
    pub input_size: (usize, usize),
    pub train: TrainConfig,
    pub threshold: f64,
    pub manifest: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        let model: ModelKind = match s.values.get("model") {
            Some(m) => m.parse()?,
            None => ModelKind::Base,
        };
        let (default_batch, default_epochs) = match model {
            ModelKind::Base => (32, 25),
            ModelKind::ResMini => (64, 30),
        };
        let (ratio_pos, ratio_neg) = match s.values.get("ratio") {
            Some(r) => parse_ratio(r)?,
            None => (1, 2),
        };
        let input_size = match s.values.get("input_size") {
            Some(v) => parse_size(v)?,
            None => (300, 300),
        };
        let defaults = TrainConfig::default();
        let adam_d = AdamConfig::default();
        let loss_d = LossConfig::default();
        let train = TrainConfig {
            epochs: s.get("epochs")?.unwrap_or(default_epochs),
            sampler: SamplerConfig {
                ratio_pos,
                ratio_neg,
                batch_size: s.get("batch_size")?.unwrap_or(default_batch),
                epoch_size: s.get("epoch_size")?.unwrap_or(SamplerConfig::default().epoch_size),
            },
            loss: LossConfig {
                // Class weights follow the batch ratio unless set explicitly.
                w_pos: s.get("w_pos")?.unwrap_or(ratio_pos as f64),
                w_neg: s.get("w_neg")?.unwrap_or(ratio_neg as f64),
                lambda: s.get("lambda")?.unwrap_or(loss_d.lambda),
                eps_clip: s.get("eps_clip")?.unwrap_or(loss_d.eps_clip),
            },
            adam: AdamConfig {
                alpha: s.get("alpha")?.unwrap_or(adam_d.alpha),
                beta1: s.get("beta1")?.unwrap_or(adam_d.beta1),
                beta2: s.get("beta2")?.unwrap_or(adam_d.beta2),
                eta: s.get("eta")?.unwrap_or(adam_d.eta),
            },
            reduce_factor: s.get("reduce_factor")?.unwrap_or(defaults.reduce_factor),
            patience: s.get("patience")?.unwrap_or(defaults.patience),
            augment: AugmentConfig::default(),
        };
        Ok(Self {
            seed: s.get("seed")?.unwrap_or(0),
            model,
            input_size,
            train,
            threshold: s.get("threshold")?.unwrap_or(0.5),
            manifest: s.get("manifest")?,
            weights: s.get("weights")?,
            out: s.get("out")?,
        })
    }

    /// Config text that resolves back to the same training settings.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let mut lines = vec![
            format!("seed = {}", self.seed),
            format!("model = {}", self.model.name()),
            format!("input_size = {}x{}", self.input_size.0, self.input_size.1),
            format!("batch_size = {}", t.sampler.batch_size),
            format!("epochs = {}", t.epochs),
            format!("epoch_size = {}", t.sampler.epoch_size),
            format!("ratio = {}:{}", t.sampler.ratio_pos, t.sampler.ratio_neg),
            format!("w_pos = {}", t.loss.w_pos),
            format!("w_neg = {}", t.loss.w_neg),
            format!("lambda = {}", t.loss.lambda),
            format!("eps_clip = {}", t.loss.eps_clip),
            format!("alpha = {}", t.adam.alpha),
            format!("beta1 = {}", t.adam.beta1),
            format!("beta2 = {}", t.adam.beta2),
            format!("eta = {}", t.adam.eta),
            format!("reduce_factor = {}", t.reduce_factor),
            format!("patience = {}", t.patience),
            format!("threshold = {}", self.threshold),
        ];
        lines.push(String::new());
        lines.join("\n")
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        self.manifest.as_deref().ok_or_else(|| anyhow!("--manifest is required"))
    }

    pub fn require_out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required"))
    }

    pub fn require_weights(&self) -> Result<&Path> {
        self.weights.as_deref().ok_or_else(|| anyhow!("--weights is required"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_model() {
        let base = RunConfig::resolve(&Settings::default()).unwrap();
        assert_eq!(base.train.sampler.batch_size, 32);
        assert_eq!(base.train.epochs, 25);
        assert_eq!(base.train.sampler.epoch_size, 3000);
        assert_eq!(base.train.adam, AdamConfig::default());
        assert_eq!((base.train.loss.w_pos, base.train.loss.w_neg), (1.0, 2.0));
        assert_eq!(base.train.loss.lambda, 0.001);
        assert_eq!((base.train.reduce_factor, base.train.patience), (0.8, 5));
        assert_eq!(base.input_size, (300, 300));

        let mut s = Settings::default();
        s.set("model", "resmini").unwrap();
        let res = RunConfig::resolve(&s).unwrap();
        assert_eq!((res.train.sampler.batch_size, res.train.epochs), (64, 30));
    }

    #[test]
    fn file_syntax_and_overrides() {
        let mut s = Settings::parse("# comment\nseed = 9\nratio = 1:5  # trailing\ninput_size = 64\n").unwrap();
        s.set("seed", "10").unwrap();
        let cfg = RunConfig::resolve(&s).unwrap();
        assert_eq!(cfg.seed, 10);
        assert_eq!((cfg.train.sampler.ratio_pos, cfg.train.sampler.ratio_neg), (1, 5));
        assert_eq!(cfg.train.loss.w_neg, 5.0);
        assert_eq!(cfg.input_size, (64, 64));
        assert!(Settings::parse("bogus = 1").is_err());
        assert!(Settings::parse("seed 1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut s = Settings::default();
        s.set("model", "resmini").unwrap();
        s.set("alpha", "0.002").unwrap();
        let cfg = RunConfig::resolve(&s).unwrap();
        let again = RunConfig::resolve(&Settings::parse(&cfg.to_text()).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn ratio_and_size_parsing() {
        assert_eq!(parse_ratio("1:2").unwrap(), (1, 2));
        assert!(parse_ratio("0:2").is_err());
        assert!(parse_ratio("12").is_err());
        assert_eq!(parse_size("64x48").unwrap(), (64, 48));
        assert_eq!(parse_size("300").unwrap(), (300, 300));
    }
}
