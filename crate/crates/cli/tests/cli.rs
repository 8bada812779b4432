use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ropnet::data::{decode_pgm, DatasetIndex, Split};

fn ropnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ropnet")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ropnet(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn synth(dir: &Path, pos: usize, neg: usize, size: usize, seed: u64) -> PathBuf {
    ok(&["synth", "--out", s(dir), "--pos", &pos.to_string(), "--neg", &neg.to_string(), "--size", &size.to_string(), "--seed", &seed.to_string()]);
    dir.join("manifest.tsv")
}

/// Small, fast training flags for a 32x32 corpus.
fn quick<'a>(head: &[&'a str], manifest: &'a Path, out: &'a Path, epochs: &'a str) -> Vec<&'a str> {
    let mut args = head.to_vec();
    args.extend([
        "--manifest", s(manifest), "--out", s(out), "--input-size", "32", "--epochs", epochs,
        "--epoch-size", "96", "--batch-size", "16", "--seed", "3",
    ]);
    args
}

fn report(text: &str) -> BTreeMap<String, String> {
    text.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn synth_writes_disjoint_stratified_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["synth", "--out", s(dir.path()), "--pos", "120", "--neg", "240", "--size", "24", "--seed", "4"]);
    let idx = DatasetIndex::read_manifest(&dir.path().join("manifest.tsv")).unwrap();
    assert_eq!(idx.len(), 360);
    let total: usize = Split::ALL.iter().map(|&sp| idx.indices(sp).len()).sum();
    assert_eq!(total, 360);
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.contains("train\tpositive=59\tnegative=118"), "{stdout}");
    for sample in idx.samples() {
        assert!(dir.path().join(&sample.path).is_file());
    }
}

#[test]
fn synth_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), 6, 9, 20, 11);
    synth(b.path(), 6, 9, 20, 11);
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn synth_degenerate_and_failing_cases() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(dir.path()), "--pos", "0", "--neg", "0"]);
    assert_eq!(std::fs::read(dir.path().join("manifest.tsv")).unwrap(), b"");

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = ropnet(&["synth", "--out", s(&blocker.join("sub")), "--pos", "1", "--neg", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn train_with_zero_epochs_writes_initial_weights_and_empty_log() {
    let data = tempfile::tempdir().unwrap();
    let manifest = synth(data.path(), 4, 8, 32, 1);
    let out = tempfile::tempdir().unwrap();
    ok(&quick(&["train"], &manifest, out.path(), "0"));
    let log = std::fs::read_to_string(out.path().join("train.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# started_unix="));
    assert_eq!(lines[1], "epoch\ttrain_loss\tval_loss\tlr");

    let mut init = ropnet::models::build_base_cnn((32, 32), &mut ropnet::Prng::new(3).split()).unwrap();
    let expected = ropnet::models::save_weights(&mut init).unwrap();
    assert_eq!(std::fs::read(out.path().join("weights.ropw")).unwrap(), expected);
    let cfg = std::fs::read_to_string(out.path().join("run.cfg")).unwrap();
    assert!(cfg.contains("input_size = 32x32") && cfg.contains("model = base"), "{cfg}");
}

#[test]
fn train_fails_on_a_missing_class() {
    let data = tempfile::tempdir().unwrap();
    let manifest = synth(data.path(), 0, 8, 32, 1);
    let out = tempfile::tempdir().unwrap();
    let result = ropnet(&quick(&["train"], &manifest, out.path(), "1"));
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("positives"), "{stderr}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let data = tempfile::tempdir().unwrap();
    let manifest = synth(data.path(), 4, 8, 32, 1);
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("my.cfg");
    std::fs::write(&cfg, "epochs = 7\nseed = 99\ninput_size = 32\nepoch_size = 16\nbatch_size = 8\n").unwrap();
    ok(&["train", "--config", s(&cfg), "--epochs", "1", "--manifest", s(&manifest), "--out", s(out.path())]);
    let resolved = std::fs::read_to_string(out.path().join("run.cfg")).unwrap();
    assert!(resolved.contains("epochs = 1\n") && resolved.contains("seed = 99\n"), "{resolved}");
    let bad = ropnet(&["train", "--config", s(&cfg), "--set", "nonsense=1", "--manifest", s(&manifest)]);
    assert!(!bad.status.success());
}

#[test]
fn train_eval_and_featuremap_round_trip() {
    let data = tempfile::tempdir().unwrap();
    let manifest = synth(data.path(), 10, 20, 32, 2);
    let run = tempfile::tempdir().unwrap();
    ok(&quick(&["train"], &manifest, run.path(), "2"));
    let log = std::fs::read_to_string(run.path().join("train.log")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let weights = run.path().join("weights.ropw");

    // Architecture settings come from the run.cfg next to the weights.
    let reports = tempfile::tempdir().unwrap();
    let printed = ok(&["eval", "--weights", s(&weights), "--manifest", s(&manifest), "--out", s(reports.path())]);
    let written = std::fs::read_to_string(reports.path().join("report_test.txt")).unwrap();
    assert_eq!(printed, written);
    let r = report(&printed);
    let counts: usize = ["tp", "tn", "fp", "fn"].iter().map(|k| r[*k].parse::<usize>().unwrap()).sum();
    assert_eq!(counts, 9);

    let all_positive = report(&ok(&["eval", "--weights", s(&weights), "--manifest", s(&manifest), "--threshold", "0"]));
    assert_eq!(all_positive["specificity"], "0.000000");
    assert_eq!(all_positive["sensitivity"], "1.000000");
    let none_positive = report(&ok(&["eval", "--weights", s(&weights), "--manifest", s(&manifest), "--threshold", "1"]));
    assert_eq!(none_positive["sensitivity"], "0.000000");
    assert_eq!(none_positive["precision"], "undefined");
    assert_eq!(none_positive["f1"], "undefined");

    let wrong = ropnet(&["eval", "--weights", s(&weights), "--manifest", s(&manifest), "--model", "resmini"]);
    assert!(!wrong.status.success());
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("entry"));

    let image = data.path().join("images/pos_00000.ppm");
    let (fa, fb) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [fa.path(), fb.path()] {
        let msg = ok(&["featuremap", "--weights", s(&weights), "--image", s(&image), "--layer", "2", "--out", s(dir)]);
        assert_eq!(msg.trim(), "wrote 64 feature maps");
    }
    let maps = tree(fa.path());
    assert_eq!(maps, tree(fb.path()));
    assert_eq!(maps.len(), 64);
    for bytes in maps.values() {
        // 32 -> conv 15 -> pool 7 -> conv 3
        assert_eq!(decode_pgm(bytes).unwrap().shape(), &[3, 3]);
    }
    let bad = ropnet(&["featuremap", "--weights", s(&weights), "--image", s(&image), "--layer", "6", "--out", s(fa.path())]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("spatial layers are [0, 1, 2, 3, 4]"));
}

#[test]
fn memorized_split_scores_perfectly() {
    // Four images repeated under new ids in every split.
    let data = tempfile::tempdir().unwrap();
    synth(data.path(), 2, 2, 32, 8);
    let base = DatasetIndex::read_manifest(&data.path().join("manifest.tsv")).unwrap();
    let mut lines = String::new();
    for split in ["train", "validation", "test"] {
        for sample in base.samples() {
            lines.push_str(&format!("{split}_{}\t{}\t{}\t{split}\n", sample.id, sample.path.display(), sample.label));
        }
    }
    let manifest = data.path().join("memorize.tsv");
    std::fs::write(&manifest, lines).unwrap();
    let run = tempfile::tempdir().unwrap();
    ok(&quick(&["train"], &manifest, run.path(), "25"));
    let r = report(&ok(&["eval", "--weights", s(&run.path().join("weights.ropw")), "--manifest", s(&manifest)]));
    for key in ["precision", "sensitivity", "specificity", "accuracy", "f1"] {
        assert_eq!(r[key], "1.000000", "{key}: {r:?}");
    }
}

#[test]
fn sweep_ranks_ratios_and_matches_plain_training() {
    let data = tempfile::tempdir().unwrap();
    let manifest = synth(data.path(), 10, 20, 32, 5);
    let out = tempfile::tempdir().unwrap();
    let table = ok(&quick(&["sweep", "--ratios", "1:1,1:2,1:5"], &manifest, out.path(), "2"));
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "ratio\tprecision\tsensitivity\tspecificity\taccuracy\tf1");
    assert_eq!(rows.len(), 4);
    let f1: Vec<f64> = rows[1..].iter().map(|r| r.rsplit('\t').next().unwrap().parse().unwrap_or(f64::NEG_INFINITY)).collect();
    assert!(f1.windows(2).all(|w| w[0] >= w[1]), "{table}");
    assert_eq!(std::fs::read_to_string(out.path().join("sweep.tsv")).unwrap(), table);

    let single = tempfile::tempdir().unwrap();
    let table = ok(&quick(&["sweep", "--ratios", "1:2"], &manifest, single.path(), "2"));
    let row: Vec<&str> = table.lines().nth(1).unwrap().split('\t').collect();

    let run = tempfile::tempdir().unwrap();
    ok(&quick(&["train", "--ratio", "1:2"], &manifest, run.path(), "2"));
    let r = report(&ok(&["eval", "--weights", s(&run.path().join("weights.ropw")), "--manifest", s(&manifest), "--split", "validation"]));
    assert_eq!(row, vec!["1:2", &r["precision"], &r["sensitivity"], &r["specificity"], &r["accuracy"], &r["f1"]]);

    let failing = ropnet(&quick(&["sweep", "--ratios", "1:2,0:3"], &manifest, out.path(), "1"));
    assert!(!failing.status.success());
    assert!(String::from_utf8_lossy(&failing.stderr).contains("ratio 0:3"));
}
