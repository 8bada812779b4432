//! Command implementations behind the `ropnet` binary.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ropnet::data::{decode_ppm, resize_bilinear, split_dataset, synth_generate, LoadedDataset, Split};
use ropnet::eval::{evaluate_split, export_feature_maps, format_metric, MetricsReport};
use ropnet::models::{build, load_weights, save_weights, Network};
use ropnet::train::{EpochRecord, Trainer, LOG_COLUMNS};
use ropnet::Prng;

pub use config::{RunConfig, Settings};

pub const WEIGHTS_FILE: &str = "weights.ropw";
pub const LOG_FILE: &str = "train.log";
pub const RUN_CONFIG_FILE: &str = "run.cfg";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const SWEEP_FILE: &str = "sweep.tsv";

#[derive(Debug, Parser)]
#[command(name = "ropnet", version, about = "Train and evaluate ridge-detection CNNs on fundus images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ridge-image dataset and its manifest.
    Synth(SynthArgs),
    /// Train a model and write weights, a training log and the resolved config.
    Train(RunArgs),
    /// Evaluate saved weights on one split.
    Eval(EvalArgs),
    /// Export one layer's feature maps for an image as PGM files.
    Featuremap(FeaturemapArgs),
    /// Train and validate one model per balancing ratio.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub pos: usize,
    #[arg(long, default_value_t = 400)]
    pub neg: usize,
    /// Image size, `N` or `HxW`.
    #[arg(long, default_value = "64")]
    pub size: String,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.49,0.21,0.30")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Flags shared by every command that builds a network.
#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub ratio: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub input_size: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epoch_size: Option<usize>,
    /// Any config key, as `key=value`; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    /// Config file (or `fallback` when none is given), then flags.
    pub fn settings(&self, fallback: Option<&Path>) -> Result<Settings> {
        let mut s = match (&self.config, fallback) {
            (Some(path), _) => Settings::load(path)?,
            (None, Some(path)) if path.is_file() => Settings::load(path)?,
            _ => Settings::default(),
        };
        s.set_opt("seed", self.seed)?;
        s.set_opt("manifest", self.manifest.as_ref().map(|p| p.display()))?;
        s.set_opt("out", self.out.as_ref().map(|p| p.display()))?;
        s.set_opt("model", self.model.as_ref())?;
        s.set_opt("ratio", self.ratio.as_ref())?;
        s.set_opt("threshold", self.threshold)?;
        s.set_opt("input_size", self.input_size.as_ref())?;
        s.set_opt("epochs", self.epochs)?;
        s.set_opt("batch_size", self.batch_size)?;
        s.set_opt("epoch_size", self.epoch_size)?;
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct FeaturemapArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub layer: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated `P:N` ratios.
    #[arg(long, default_value = "1:1,1:2")]
    pub ratios: String,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a).map(|_| ()),
        Command::Train(a) => {
            let cfg = RunConfig::resolve(&a.settings(None)?)?;
            cmd_train(&cfg).map(|_| ())
        }
        Command::Eval(a) => {
            let cfg = RunConfig::resolve(&a.run.settings(Some(&sibling_config(&a.weights)))?)?;
            let split: Split = a.split.parse()?;
            let report = cmd_eval(&cfg, &a.weights, split)?;
            print!("{report}");
            Ok(())
        }
        Command::Featuremap(a) => {
            let cfg = RunConfig::resolve(&a.run.settings(Some(&sibling_config(&a.weights)))?)?;
            let files = cmd_featuremap(&cfg, &a.weights, &a.image, a.layer)?;
            println!("wrote {} feature maps", files.len());
            Ok(())
        }
        Command::Sweep(a) => {
            let settings = a.run.settings(None)?;
            let ratios = a.ratios.split(',').map(|r| r.trim().to_string()).collect::<Vec<_>>();
            let table = cmd_sweep(&settings, &ratios)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn sibling_config(weights: &Path) -> PathBuf {
    weights.parent().unwrap_or(Path::new(".")).join(RUN_CONFIG_FILE)
}

fn parse_fractions(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("split fraction `{p}`")))
        .collect::<Result<_>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| anyhow!("--split needs three comma-separated fractions"))
}

/// Writes `images/` and `manifest.tsv` under `out` and returns the per-split
/// `(negatives, positives)` counts.
pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<(Split, usize, usize)>> {
    let size = config::parse_size(&args.size)?;
    let fractions = parse_fractions(&args.split)?;
    let mut root = Prng::new(args.seed);
    let mut render_rng = root.split();
    let mut split_rng = root.split();
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let records = synth_generate(args.pos, args.neg, size, &args.out, &mut render_rng)?;
    let index = split_dataset(records, fractions, &mut split_rng)?;
    let manifest = args.out.join(MANIFEST_FILE);
    std::fs::write(&manifest, index.to_manifest()).with_context(|| format!("writing {}", manifest.display()))?;
    let counts: Vec<_> = Split::ALL.into_iter().map(|s| (s, index.count(s, 0), index.count(s, 1))).collect();
    for (split, neg, pos) in &counts {
        println!("{split}\tpositive={pos}\tnegative={neg}");
    }
    Ok(counts)
}

/// Builds the network from the config's seed and trains it. The root stream
/// is split into an initialization stream and a training stream, in that
/// order, so `train` and `sweep` produce identical models.
pub fn train_model(
    cfg: &RunConfig,
    data: &LoadedDataset,
    on_epoch: impl FnMut(&EpochRecord) -> ropnet::Result<()>,
) -> Result<(Network, Vec<EpochRecord>)> {
    let mut root = Prng::new(cfg.seed);
    let mut init_rng = root.split();
    let mut train_rng = root.split();
    let mut net = build(cfg.model, cfg.input_size, &mut init_rng)?;
    let mut trainer = Trainer::new(cfg.train.clone())?;
    let records = trainer.run(&mut net, data, &mut train_rng, on_epoch)?;
    Ok((net, records))
}

pub struct TrainOutput {
    pub network: Network,
    pub records: Vec<EpochRecord>,
    pub weights: PathBuf,
    pub log: PathBuf,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutput> {
    let data = LoadedDataset::from_manifest(cfg.require_manifest()?)?;
    let out = cfg.require_out()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join(RUN_CONFIG_FILE), cfg.to_text())?;

    let log_path = out.join(LOG_FILE);
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let started = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(log, "# started_unix={started}")?;
    writeln!(log, "{LOG_COLUMNS}")?;
    log.flush()?;

    let (mut network, records) = train_model(cfg, &data, |r| {
        let line = r.log_line();
        eprintln!("{line}");
        writeln!(log, "{line}").and_then(|_| log.flush()).map_err(|e| ropnet::Error::io(&log_path, e))
    })?;
    drop(log);

    let weights = out.join(WEIGHTS_FILE);
    std::fs::write(&weights, save_weights(&mut network)?).with_context(|| format!("writing {}", weights.display()))?;
    Ok(TrainOutput { network, records, weights, log: log_path })
}

pub fn load_network(cfg: &RunConfig, weights: &Path) -> Result<Network> {
    let bytes = std::fs::read(weights).with_context(|| format!("reading {}", weights.display()))?;
    let mut net = build(cfg.model, cfg.input_size, &mut Prng::new(0))?;
    load_weights(&mut net, &bytes).with_context(|| {
        format!("loading {} into {} at {}x{}", weights.display(), cfg.model.name(), cfg.input_size.0, cfg.input_size.1)
    })?;
    Ok(net)
}

/// Evaluates `weights` on `split`; writes `report_{split}.txt` under `out`
/// when an output directory is configured.
pub fn cmd_eval(cfg: &RunConfig, weights: &Path, split: Split) -> Result<MetricsReport> {
    let net = load_network(cfg, weights)?;
    let data = LoadedDataset::from_manifest(cfg.require_manifest()?)?;
    let report = evaluate_split(&net, &data, split, cfg.threshold)?;
    if let Some(out) = &cfg.out {
        std::fs::create_dir_all(out)?;
        let path = out.join(format!("report_{split}.txt"));
        std::fs::write(&path, report.to_string()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

pub fn cmd_featuremap(cfg: &RunConfig, weights: &Path, image: &Path, layer: usize) -> Result<Vec<PathBuf>> {
    let net = load_network(cfg, weights)?;
    let bytes = std::fs::read(image).with_context(|| format!("reading {}", image.display()))?;
    let img = decode_ppm(&bytes).with_context(|| format!("decoding {}", image.display()))?;
    let img = resize_bilinear(&img, cfg.input_size.0, cfg.input_size.1)?;
    Ok(export_feature_maps(&net, &img, layer, cfg.require_out()?)?)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub ratio: String,
    pub report: MetricsReport,
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut text = String::from("ratio\tprecision\tsensitivity\tspecificity\taccuracy\tf1\n");
    for row in rows {
        let r = &row.report;
        let cells = [r.precision, r.sensitivity, r.specificity, r.accuracy, r.f1].map(format_metric);
        text.push_str(&format!("{}\t{}\n", row.ratio, cells.join("\t")));
    }
    text
}

/// Trains one model per ratio with otherwise identical settings, scores each
/// on the validation split and returns the table sorted by F1, best first.
pub fn cmd_sweep(settings: &Settings, ratios: &[String]) -> Result<String> {
    if ratios.is_empty() {
        bail!("sweep needs at least one ratio");
    }
    let base = RunConfig::resolve(settings)?;
    let data = LoadedDataset::from_manifest(base.require_manifest()?)?;
    let mut rows = Vec::with_capacity(ratios.len());
    for ratio in ratios {
        let outcome = (|| {
            let mut s = settings.clone();
            s.set("ratio", ratio)?;
            let cfg = RunConfig::resolve(&s)?;
            let (net, _) = train_model(&cfg, &data, |_| Ok(()))?;
            let report = evaluate_split(&net, &data, Split::Validation, cfg.threshold)?;
            Ok::<_, anyhow::Error>(report)
        })();
        let report = outcome.with_context(|| format!("sweep run for ratio {ratio} failed"))?;
        eprintln!("ratio {ratio}: f1={}", format_metric(report.f1));
        rows.push(SweepRow { ratio: ratio.clone(), report });
    }
    rows.sort_by(|a, b| {
        let key = |r: &SweepRow| r.report.f1.unwrap_or(f64::NEG_INFINITY);
        key(b).total_cmp(&key(a))
    });
    let table = sweep_table(&rows);
    if let Some(out) = &base.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join(SWEEP_FILE), &table)?;
    }
    Ok(table)
}
