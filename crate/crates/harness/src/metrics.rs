//! Confusion counts and the run report. The positive class is the good state.

use std::collections::BTreeMap;
use std::path::Path;

use colanet_core::WeightRow;
use colanet_pong::WindowInfo;
use serde::{Deserialize, Serialize};

use crate::data::{read_json, write_json};
use crate::error::{Error, Result};
use crate::train::TrainStats;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[bool], truth: &[bool]) -> Result<Self> {
        if predictions.len() != truth.len() {
            return Err(Error::LengthMismatch {
                predictions: predictions.len(),
                truth: truth.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predictions.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_measure(&self) -> f64 {
        f_measure(self.precision(), self.recall())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean; zero when both are zero.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn truth_of(windows: &[WindowInfo]) -> Vec<bool> {
    windows.iter().map(|w| w.label.is_good()).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Spikes per section over the evaluated region.
    pub spikes: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightRow>,
}

impl RunReport {
    pub fn new(confusion: Confusion) -> Self {
        RunReport {
            confusion,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f_measure: confusion.f_measure(),
            ..RunReport::default()
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn evaluate(predictions: &[bool], windows: &[WindowInfo]) -> Result<RunReport> {
    Ok(RunReport::new(Confusion::from_predictions(
        predictions,
        &truth_of(windows),
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let t = [true, false, true];
        let c = Confusion::from_predictions(&t, &t).unwrap();
        assert_eq!((c.precision(), c.recall(), c.f_measure()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_negative() {
        let c = Confusion::from_predictions(&[false; 3], &[true, false, true]).unwrap();
        assert_eq!((c.recall(), c.f_measure()), (0.0, 0.0));
    }

    #[test]
    fn harmonic_mean() {
        assert!((f_measure(0.66, 0.34) - 0.448_8).abs() < 1e-4);
        assert_eq!(f_measure(0.0, 0.0), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            Confusion::from_predictions(&[true], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn json_names_the_false_negatives_fn() {
        let r = RunReport::new(Confusion {
            tp: 1,
            fp: 2,
            tn: 3,
            fn_: 4,
        });
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["fn"], 4);
        assert_eq!(v["precision"], 1.0 / 3.0);
    }
}
