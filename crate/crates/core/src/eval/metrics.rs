//! Confusion-matrix metrics. Any ratio whose denominator is zero is
//! reported as `None` rather than coerced to a number.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, pred: u8, truth: u8) {
        match (pred, truth) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (1, 0) => self.fp += 1,
            _ => self.fn_ += 1,
        }
    }
}

pub fn confusion(preds: &[u8], truths: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(Error::Usage(format!(
            "{} predictions for {} ground-truth labels",
            preds.len(),
            truths.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truths) {
        for l in [p, t] {
            if l > 1 {
                return Err(Error::InvalidLabel(l as i64));
            }
        }
        cm.record(p, t);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionMatrix,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricsReport {
        precision,
        sensitivity,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        f1,
        counts: *cm,
    }
}

/// `(human_error - model_error) / human_error`.
pub fn error_reduction(human_error: f64, model_error: f64) -> Result<f64> {
    if human_error == 0.0 {
        return Err(Error::UndefinedComparison("human error is zero".into()));
    }
    if !(human_error > 0.0) {
        return Err(Error::InvalidParameter { name: "human_error", reason: format!("{human_error} must be positive") });
    }
    Ok((human_error - model_error) / human_error)
}

pub fn format_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "undefined".to_string(),
    }
}

impl MetricsReport {
    pub fn rows(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("precision", self.precision),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("accuracy", self.accuracy),
            ("f1", self.f1),
        ]
    }
}

/// Flat `key=value` lines: the five metrics, then `tp`, `tn`, `fp`, `fn`.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.rows() {
            writeln!(f, "{k}={}", format_metric(v))?;
        }
        let c = &self.counts;
        writeln!(f, "tp={}\ntn={}\nfp={}\nfn={}", c.tp, c.tn, c.fp, c.fn_)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_cases() {
        let truths = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let cm = confusion(&truths, &truths).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 5, tn: 5, fp: 0, fn_: 0 });
        let cm = confusion(&[1; 4], &[0; 4]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 0, tn: 0, fp: 4, fn_: 0 });
        let cm = confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 1, fp: 1, fn_: 1 });
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::Usage(_))));
    }

    #[test]
    fn perfect_and_degenerate() {
        let r = metrics(&ConfusionMatrix { tp: 5, tn: 5, fp: 0, fn_: 0 });
        assert!(r.rows().iter().all(|(_, v)| *v == Some(1.0)));
        let r = metrics(&ConfusionMatrix { tp: 0, tn: 7, fp: 0, fn_: 3 });
        assert_eq!(r.precision, None);
        assert_eq!(r.sensitivity, Some(0.0));
        assert_eq!(r.specificity, Some(1.0));
        assert_eq!(r.accuracy, Some(0.7));
        assert_eq!(r.f1, None);
    }

    #[test]
    fn reported_f1() {
        // 91 / 96 = 0.9479 precision, 91 / 100 = 0.91 sensitivity.
        let r = metrics(&ConfusionMatrix { tp: 91, tn: 500, fp: 5, fn_: 9 });
        assert!((r.precision.unwrap() - 0.9479).abs() < 5e-5);
        assert_eq!(r.sensitivity, Some(0.91));
        assert!((r.f1.unwrap() - 0.9286).abs() <= 0.0005);
    }

    #[test]
    fn error_reduction_cases() {
        assert!((error_reduction(0.09, 0.03).unwrap() - 0.6667).abs() < 1e-4);
        assert_eq!(error_reduction(0.2, 0.0).unwrap(), 1.0);
        assert_eq!(error_reduction(0.2, 0.2).unwrap(), 0.0);
        assert!(error_reduction(0.1, 0.2).unwrap() < 0.0);
        assert!(matches!(error_reduction(0.0, 0.1), Err(Error::UndefinedComparison(_))));
    }

    #[test]
    fn report_text() {
        let r = metrics(&ConfusionMatrix { tp: 0, tn: 7, fp: 0, fn_: 3 });
        let text = r.to_string();
        assert!(text.starts_with("precision=undefined\nsensitivity=0.000000\n"));
        assert!(text.ends_with("tp=0\ntn=7\nfp=0\nfn=3\n"));
    }
}
