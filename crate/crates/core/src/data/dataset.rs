//! Labeled sample records, stratified splits and the manifest file.
//!
//! Manifest format: one UTF-8 line per sample, LF-terminated, four
//! tab-separated fields `id`, `path` (relative to the manifest), `label`
//! (`0` or `1`) and `split` (`train`, `validation` or `test`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::netpbm::decode_ppm;
use crate::error::{Error, Result};
use crate::prng::Prng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Usage(format!("unknown split `{other}`"))),
        }
    }
}

/// A labeled image before split assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub path: PathBuf,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub path: PathBuf,
    pub label: u8,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetIndex {
    samples: Vec<Sample>,
    /// `counts[split][label]`.
    counts: [[usize; 2]; 3],
}

impl DatasetIndex {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut counts = [[0usize; 2]; 3];
        let mut ids = std::collections::HashSet::new();
        for s in &samples {
            if s.label > 1 {
                return Err(Error::InvalidLabel(s.label as i64));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Usage(format!("duplicate sample id `{}`", s.id)));
            }
            counts[s.split.index()][s.label as usize] += 1;
        }
        Ok(Self { samples, counts })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, split: Split, label: u8) -> usize {
        self.counts[split.index()][label as usize]
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.count(split, 0) + self.count(split, 1)
    }

    /// Positions in `samples()` belonging to `split`, in manifest order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.samples[i].split == split).collect()
    }

    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", s.id, s.path.display(), s.label, s.split));
        }
        out
    }

    pub fn parse_manifest(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, path, label, split] = fields[..] else {
                return Err(Error::Manifest { line: line_no, reason: format!("expected 4 fields, got {}", fields.len()) });
            };
            let label = match label {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Manifest { line: line_no, reason: format!("bad label `{other}`") }),
            };
            let split = split
                .parse::<Split>()
                .map_err(|_| Error::Manifest { line: line_no, reason: format!("bad split `{split}`") })?;
            samples.push(Sample { id: id.to_string(), path: PathBuf::from(path), label, split });
        }
        Self::new(samples)
    }

    pub fn read_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_manifest(&text)
    }
}

/// Apportions `n` items over `fractions` by largest remainder; ties go to
/// the earlier split.
fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let quotas = fractions.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Stratified split: each class is shuffled and apportioned separately.
/// Output keeps the input order of records.
pub fn split_dataset(records: Vec<Record>, fractions: [f64; 3], rng: &mut Prng) -> Result<DatasetIndex> {
    for f in fractions {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidParameter { name: "split fraction", reason: format!("{f} is outside (0, 1)") });
        }
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter { name: "split fractions", reason: format!("sum to {total}, not 1") });
    }
    let mut assignment = vec![Split::Train; records.len()];
    for label in [0u8, 1] {
        let mut members: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == label).collect();
        rng.shuffle(&mut members);
        let sizes = apportion(members.len(), fractions);
        let mut at = 0;
        for (split, size) in Split::ALL.into_iter().zip(sizes) {
            for &i in &members[at..at + size] {
                assignment[i] = split;
            }
            at += size;
        }
    }
    let samples = records
        .into_iter()
        .zip(assignment)
        .map(|(r, split)| Sample { id: r.id, path: r.path, label: r.label, split })
        .collect();
    DatasetIndex::new(samples)
}

/// A dataset index with every image decoded into memory.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub index: DatasetIndex,
    pub images: Vec<Tensor>,
}

impl LoadedDataset {
    /// Decodes every image, resolving paths relative to `root`.
    pub fn load(index: DatasetIndex, root: &Path) -> Result<Self> {
        let mut images = Vec::with_capacity(index.len());
        for s in index.samples() {
            let path = root.join(&s.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            images.push(decode_ppm(&bytes)?);
        }
        Ok(Self { index, images })
    }

    pub fn from_manifest(manifest: &Path) -> Result<Self> {
        let index = DatasetIndex::read_manifest(manifest)?;
        let root = manifest.parent().unwrap_or_else(|| Path::new("."));
        Self::load(index, root)
    }

    pub fn label(&self, i: usize) -> u8 {
        self.index.samples()[i].label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(pos: usize, neg: usize) -> Vec<Record> {
        (0..pos + neg)
            .map(|i| Record {
                id: format!("s{i}"),
                path: PathBuf::from(format!("images/s{i}.ppm")),
                label: u8::from(i < pos),
            })
            .collect()
    }

    #[test]
    fn ten_samples() {
        let idx = split_dataset(records(0, 10), [0.5, 0.2, 0.3], &mut Prng::new(1)).unwrap();
        let sizes: Vec<usize> = Split::ALL.iter().map(|&s| idx.split_len(s)).collect();
        assert_eq!(sizes, [5, 2, 3]);
    }

    #[test]
    fn reproduces_reported_split_counts() {
        // 382 positives and 2021 negatives split 0.49 / 0.21 / 0.30.
        let idx = split_dataset(records(382, 2021), [0.49, 0.21, 0.30], &mut Prng::new(3)).unwrap();
        assert_eq!((idx.count(Split::Train, 1), idx.count(Split::Train, 0)), (187, 990));
        assert_eq!((idx.count(Split::Validation, 1), idx.count(Split::Validation, 0)), (80, 425));
        assert_eq!((idx.count(Split::Test, 1), idx.count(Split::Test, 0)), (115, 606));
    }

    #[test]
    fn deterministic_and_disjoint() {
        let a = split_dataset(records(30, 70), [0.49, 0.21, 0.30], &mut Prng::new(8)).unwrap();
        let b = split_dataset(records(30, 70), [0.49, 0.21, 0.30], &mut Prng::new(8)).unwrap();
        assert_eq!(a, b);
        let total: usize = Split::ALL.iter().map(|&s| a.indices(s).len()).sum();
        assert_eq!(total, 100);
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(split_dataset(records(1, 1), [0.0, 0.5, 0.5], &mut Prng::new(0)).is_err());
        assert!(split_dataset(records(1, 1), [0.5, 0.3, 0.3], &mut Prng::new(0)).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let idx = split_dataset(records(4, 6), [0.5, 0.2, 0.3], &mut Prng::new(2)).unwrap();
        let text = idx.to_manifest();
        assert_eq!(text.lines().count(), 10);
        assert_eq!(DatasetIndex::parse_manifest(&text).unwrap(), idx);
        assert!(matches!(
            DatasetIndex::parse_manifest("a\tb\t2\ttrain\n"),
            Err(Error::Manifest { line: 1, .. })
        ));
    }
}
