//! Accuracy ceiling of any classifier that sees only the encoded state.
//!
//! Each interval's raster is decoded back to its active bins, the bins are
//! replaced by the mean world state observed behind them during calibration,
//! and the reconstructed state is rolled forward with the racket frozen.

use colanet_pong::encoder::DecodedBins;
use colanet_pong::{label_state, AssembledStream, Label, WindowInfo};

use crate::data::Calibration;
use crate::error::Result;
use crate::metrics::{evaluate, RunReport};

/// Predicts good iff the reconstructed state reaches the racket within
/// `horizon` ticks.
pub fn oracle_predict(calibration: &Calibration, raster: &[Vec<u16>], horizon: usize) -> bool {
    let bins = DecodedBins::from_raster(raster).complete();
    let state = calibration.means.reconstruct(&calibration.encoder, &bins);
    label_state(&state, horizon) == Some(Label::Good)
}

/// Oracle metrics over the windows `range` of `stream`.
pub fn theoretical_limit(
    calibration: &Calibration,
    stream: &AssembledStream,
    range: std::ops::Range<usize>,
    horizon: usize,
) -> Result<RunReport> {
    let predictions: Vec<bool> = range
        .clone()
        .map(|w| oracle_predict(calibration, stream.stimulus(w), horizon))
        .collect();
    let windows: Vec<WindowInfo> = stream.windows[range].to_vec();
    evaluate(&predictions, &windows)
}

/// Oracle on the test region.
pub fn theoretical_limit_test(
    calibration: &Calibration,
    stream: &AssembledStream,
    horizon: usize,
) -> Result<RunReport> {
    theoretical_limit(
        calibration,
        stream,
        stream.train_windows()..stream.windows.len(),
        horizon,
    )
}
