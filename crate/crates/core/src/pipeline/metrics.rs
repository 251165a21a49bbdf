use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::Label;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid argument: {0}")]
pub struct MetricsError(String);

fn check(predictions: &[Label], labels: &[Label]) -> Result<(), MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(MetricsError("no predictions".into()));
    }
    Ok(())
}

/// Fraction of predictions equal to their label.
pub fn accuracy(predictions: &[Label], labels: &[Label]) -> Result<f64, MetricsError> {
    check(predictions, labels)?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// 2×2 confusion counts with +1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

/// Per-cell Poisson error, `sqrt(count)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonErrors {
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tn: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn poisson_errors(&self) -> PoissonErrors {
        let e = |c: u64| (c as f64).sqrt();
        PoissonErrors {
            tp: e(self.tp),
            fp: e(self.fp),
            fn_: e(self.fn_),
            tn: e(self.tn),
        }
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    check(predictions, labels)?;
    let mut m = ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for (p, l) in predictions.iter().zip(labels) {
        match (l, p) {
            (Label::Plus, Label::Plus) => m.tp += 1,
            (Label::Minus, Label::Plus) => m.fp += 1,
            (Label::Plus, Label::Minus) => m.fn_ += 1,
            (Label::Minus, Label::Minus) => m.tn += 1,
        }
    }
    Ok(m)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Minus as M, Plus as P};

    #[test]
    fn accuracy_examples() {
        assert!((accuracy(&[P, P, M], &[P, M, M]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&[P, M], &[P, M]).unwrap(), 1.0);
        assert_eq!(accuracy(&[P, M], &[M, P]).unwrap(), 0.0);
        assert!(accuracy(&[P], &[P, M]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn confusion_examples() {
        let labels: Vec<_> = (0..20).map(|i| if i < 10 { P } else { M }).collect();
        let m = confusion(&labels, &labels).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (10, 0, 0, 10));

        let m = confusion(&[P; 20], &labels).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (10, 10, 0, 0));
        assert_eq!(m.accuracy(), 0.5);

        let m = ConfusionMatrix { tp: 49, fp: 0, fn_: 0, tn: 0 };
        assert_eq!(m.poisson_errors().tp, 7.0);
        assert!(confusion(&[P], &[]).is_err());
    }

    #[test]
    fn moments() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
    }
}
