//! The six tuned hyperparameters and their search ranges.

use std::fmt;
use std::str::FromStr;

use colanet_core::topology::{BuildOptions, PlasticityOverrides};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gene {
    DDopamine,
    HebbianRatio,
    WMax,
    WMin,
    Microcolumns,
    Alpha,
}

impl Gene {
    pub const ALL: [Gene; 6] = [
        Gene::DDopamine,
        Gene::HebbianRatio,
        Gene::WMax,
        Gene::WMin,
        Gene::Microcolumns,
        Gene::Alpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gene::DDopamine => "d_dopamine",
            Gene::HebbianRatio => "hebbian_ratio",
            Gene::WMax => "w_max",
            Gene::WMin => "w_min",
            Gene::Microcolumns => "microcolumns",
            Gene::Alpha => "alpha",
        }
    }

    /// Inclusive search range.
    pub fn range(self) -> (f64, f64) {
        match self {
            Gene::DDopamine => (0.004, 0.4),
            Gene::HebbianRatio => (0.0, 1.0),
            Gene::WMax => (0.04, 0.4),
            Gene::WMin => (-0.4, -0.0004),
            Gene::Microcolumns => (1.0, 30.0),
            Gene::Alpha => (0.001, 0.3),
        }
    }

    pub fn is_integer(self) -> bool {
        self == Gene::Microcolumns
    }
}

impl fmt::Display for Gene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Gene::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Hyperparameter {
                name: s.to_owned(),
                message: format!(
                    "unknown; expected one of {}",
                    Gene::ALL.map(Gene::name).join(", ")
                ),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub d_dopamine: f64,
    /// `d_hebbian / d_dopamine`.
    pub hebbian_ratio: f64,
    pub w_max: f64,
    pub w_min: f64,
    pub microcolumns: usize,
    pub alpha: f64,
}

impl Hyperparameters {
    /// Tuned optimum, run with four microcolumns as in the shipped network file.
    pub fn reference() -> Self {
        Hyperparameters {
            d_dopamine: 0.0186,
            hebbian_ratio: 0.582,
            w_max: 0.328,
            w_min: -0.00746,
            microcolumns: 4,
            alpha: 0.005525,
        }
    }

    pub fn get(&self, gene: Gene) -> f64 {
        match gene {
            Gene::DDopamine => self.d_dopamine,
            Gene::HebbianRatio => self.hebbian_ratio,
            Gene::WMax => self.w_max,
            Gene::WMin => self.w_min,
            Gene::Microcolumns => self.microcolumns as f64,
            Gene::Alpha => self.alpha,
        }
    }

    /// Sets a gene; integer genes are rounded.
    pub fn put(&mut self, gene: Gene, value: f64) {
        match gene {
            Gene::DDopamine => self.d_dopamine = value,
            Gene::HebbianRatio => self.hebbian_ratio = value,
            Gene::WMax => self.w_max = value,
            Gene::WMin => self.w_min = value,
            Gene::Microcolumns => self.microcolumns = value.round().max(0.0) as usize,
            Gene::Alpha => self.alpha = value,
        }
    }

    /// Parses and range-checks `value` for the gene called `key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let gene: Gene = key.parse()?;
        let bad = |message: String| Error::Hyperparameter {
            name: key.to_owned(),
            message,
        };
        let v = if gene.is_integer() {
            value
                .parse::<usize>()
                .map_err(|_| bad(format!("expected a whole number, got {value:?}")))?
                as f64
        } else {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("expected a number, got {value:?}")))?
        };
        check(gene, v)?;
        self.put(gene, v);
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Hyperparameter {
                name: o.to_owned(),
                message: "expected key=value".into(),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Gene::ALL
            .into_iter()
            .try_for_each(|g| check(g, self.get(g)))
    }

    pub fn to_build_options(&self, seed: u64) -> BuildOptions {
        BuildOptions {
            seed,
            plasticity: PlasticityOverrides {
                d_dopamine: Some(self.d_dopamine),
                hebbian_ratio: Some(self.hebbian_ratio),
                w_min: Some(self.w_min),
                w_max: Some(self.w_max),
                alpha: Some(self.alpha),
                ..PlasticityOverrides::default()
            },
            microcolumns: Some(self.microcolumns),
            ..BuildOptions::default()
        }
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::reference()
    }
}

fn check(gene: Gene, v: f64) -> Result<()> {
    let (lo, hi) = gene.range();
    if !(lo..=hi).contains(&v) {
        return Err(Error::Hyperparameter {
            name: gene.name().into(),
            message: format!("{v} outside [{lo}, {hi}]"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_in_range() {
        Hyperparameters::reference().validate().unwrap();
    }

    #[test]
    fn overrides() {
        let mut h = Hyperparameters::reference();
        h.apply_overrides(&["w_max=0.2", "microcolumns = 7"])
            .unwrap();
        assert_eq!(h.w_max, 0.2);
        assert_eq!(h.microcolumns, 7);
        assert!(h.set("w_max", "0.5").is_err());
        assert!(h.set("microcolumns", "2.5").is_err());
        assert!(h.set("beta", "1").is_err());
        assert!(h.apply_overrides(&["alpha"]).is_err());
        assert_eq!(h.w_max, 0.2);
    }

    #[test]
    fn build_options_carry_every_gene() {
        let o = Hyperparameters::reference().to_build_options(3);
        assert_eq!(o.seed, 3);
        assert_eq!(o.microcolumns, Some(4));
        assert_eq!(o.plasticity.alpha, Some(0.005525));
        assert_eq!(o.plasticity.w_min, Some(-0.00746));
    }
}
