//! Dataset generation and its on-disk layout.
//!
//! A dataset directory holds the three stream files plus
//! `calibration.json` (velocity bin edges and conditional means) and
//! `balance.json` (class counts per region).

use std::fs;
use std::path::Path;

use colanet_pong::{
    calibrate_velocity_bins, extract_fragments, read_stream, record_run, shuffle_and_interleave,
    write_stream, AssembledStream, ClassBalance, ConditionalMeans, EncoderConfig, ExtractOptions,
    StreamPaths,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::seeds::{stage_rng, CALIBRATE, MEANS, RECORD, SHUFFLE};

pub const CALIBRATION_FILE: &str = "calibration.json";
pub const BALANCE_FILE: &str = "balance.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    /// Length of the recorded game, s.
    pub seconds: f64,
    /// Fragment length before each event, ticks.
    pub horizon: usize,
    /// Length of the free run used for bin edges and conditional means, s.
    pub calibration_seconds: f64,
    pub train_fraction: f64,
    /// Label every interval by its own frozen-racket future instead of the
    /// fragment's outcome.
    pub relabel: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            seconds: 2000.0,
            horizon: 300,
            calibration_seconds: 2000.0,
            train_fraction: 2.0 / 3.0,
            relabel: false,
        }
    }
}

fn ticks(seconds: f64) -> usize {
    (seconds * 1000.0).round().max(0.0) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub encoder: EncoderConfig,
    pub means: ConditionalMeans,
}

impl Calibration {
    pub fn measure(config: &DataConfig, seed: u64) -> Result<Self> {
        let n = ticks(config.calibration_seconds);
        let encoder = calibrate_velocity_bins(n, &mut stage_rng(seed, CALIBRATE))?;
        let means = ConditionalMeans::measure(&encoder, n, &mut stage_rng(seed, MEANS));
        Ok(Calibration { encoder, means })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Balance {
    pub events: usize,
    pub train: ClassBalance,
    pub test: ClassBalance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub calibration: Calibration,
    pub stream: AssembledStream,
    pub balance: Balance,
}

impl Dataset {
    /// Stream files, calibration and balance report.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_stream(&self.stream, &StreamPaths::in_dir(dir))?;
        write_json(&dir.join(CALIBRATION_FILE), &self.calibration)?;
        write_json(&dir.join(BALANCE_FILE), &self.balance)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let stream = read_stream(&StreamPaths::in_dir(dir))?;
        let calibration = read_json(&dir.join(CALIBRATION_FILE))?;
        let balance = read_json(&dir.join(BALANCE_FILE))?;
        Ok(Dataset {
            calibration,
            stream,
            balance,
        })
    }
}

pub fn generate_dataset(config: &DataConfig, seed: u64) -> Result<Dataset> {
    let calibration = Calibration::measure(config, seed)?;
    generate_with(calibration, config, seed)
}

/// Records and assembles a stream with an existing calibration.
pub fn generate_with(calibration: Calibration, config: &DataConfig, seed: u64) -> Result<Dataset> {
    let run = record_run(
        ticks(config.seconds),
        &calibration.encoder,
        &mut stage_rng(seed, RECORD),
    );
    let intervals = extract_fragments(
        &run,
        &ExtractOptions {
            horizon: config.horizon,
            relabel: config.relabel,
        },
    );
    let stream = shuffle_and_interleave(
        &intervals,
        &mut stage_rng(seed, SHUFFLE),
        config.train_fraction,
    )?;
    let n_train = stream.train_windows();
    let balance = Balance {
        events: run.events.len(),
        train: ClassBalance::of(stream.windows[..n_train].iter().map(|w| &w.label)),
        test: ClassBalance::of(stream.windows[n_train..].iter().map(|w| &w.label)),
    };
    log::info!(
        "{} events, {} intervals ({} train, {} test)",
        balance.events,
        intervals.len(),
        balance.train.total(),
        balance.test.total()
    );
    Ok(Dataset {
        calibration,
        stream,
        balance,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}
