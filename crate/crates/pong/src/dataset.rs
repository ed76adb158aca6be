//! Recording the world, cutting labelled intervals and assembling the
//! presentation stream fed to the network.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode_interval, ActiveNodes, EncoderConfig};
use crate::error::{Error, Result};
use crate::world::{label_state, reset_world, step_world, Event, Label, WorldState};

/// Ticks of stimulus per presentation.
pub const INTERVAL: usize = 10;
/// Silent ticks after each stimulus.
pub const SILENCE: usize = 10;
pub const WINDOW: usize = INTERVAL + SILENCE;
/// Index of the class label node within the label receptor.
pub const LABEL_NODE: u16 = 0;

/// A free-running simulation, one entry per tick.
#[derive(Clone, Debug, Default)]
pub struct RecordedRun {
    pub states: Vec<WorldState>,
    pub active: Vec<ActiveNodes>,
    /// Left-border events; the tick is the first one after the reset.
    pub events: Vec<(usize, Event)>,
}

impl RecordedRun {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Simulates `ticks` ticks, resetting the world after every left-border event.
pub fn record_run<R: Rng>(ticks: usize, encoder: &EncoderConfig, rng: &mut R) -> RecordedRun {
    let mut run = RecordedRun {
        states: Vec::with_capacity(ticks),
        active: Vec::with_capacity(ticks),
        events: Vec::new(),
    };
    if ticks == 0 {
        return run;
    }
    let mut s = reset_world(rng);
    for t in 0..ticks {
        run.states.push(s);
        run.active.push(encoder.active_nodes(&s));
        let (next, event) = step_world(&s);
        s = match event {
            Some(e) => {
                if t + 1 < ticks {
                    run.events.push((t + 1, e));
                }
                reset_world(rng)
            }
            None => next,
        };
    }
    run
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledInterval {
    /// First tick in the recorded run.
    pub start: usize,
    /// Spiking input nodes on each of the `INTERVAL` ticks.
    pub raster: Vec<Vec<u16>>,
    pub label: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Lookback before each event, ticks.
    pub horizon: usize,
    /// Label every interval from its own first state instead of the
    /// fragment's terminating event; intervals without an outcome are dropped.
    pub relabel: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            horizon: 300,
            relabel: false,
        }
    }
}

/// Cuts the `horizon` ticks before each event (never reaching back past
/// the previous event) into `INTERVAL`-tick pieces.
pub fn extract_fragments(run: &RecordedRun, options: &ExtractOptions) -> Vec<LabeledInterval> {
    let mut out = Vec::new();
    let mut prev = 0;
    for &(e, event) in &run.events {
        let start = e.saturating_sub(options.horizon).max(prev);
        let fragment_label = Label::from_event(event);
        let mut t = start;
        while t + INTERVAL <= e {
            let label = if options.relabel {
                label_state(&run.states[t], options.horizon)
            } else {
                Some(fragment_label)
            };
            if let Some(label) = label {
                out.push(LabeledInterval {
                    start: t,
                    raster: encode_interval(&run.active[t..t + INTERVAL]),
                    label,
                });
            }
            t += INTERVAL;
        }
        prev = e;
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub good: usize,
    pub bad: usize,
}

impl ClassBalance {
    pub fn of<'a>(labels: impl IntoIterator<Item = &'a Label>) -> Self {
        let mut b = ClassBalance::default();
        for l in labels {
            match l {
                Label::Good => b.good += 1,
                Label::Bad => b.bad += 1,
            }
        }
        b
    }

    pub fn total(&self) -> usize {
        self.good + self.bad
    }
}

pub fn class_balance(intervals: &[LabeledInterval]) -> ClassBalance {
    ClassBalance::of(intervals.iter().map(|i| &i.label))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub start: usize,
    pub label: Label,
}

/// Presentation stream: per-tick input and label-node spikes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssembledStream {
    pub inputs: Vec<Vec<u16>>,
    pub targets: Vec<Option<u16>>,
    pub windows: Vec<WindowInfo>,
    /// First tick of the inference region.
    pub learning_time: usize,
}

impl AssembledStream {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Windows starting before `learning_time`.
    pub fn train_windows(&self) -> usize {
        self.windows
            .partition_point(|w| w.start < self.learning_time)
    }

    pub fn test_windows(&self) -> &[WindowInfo] {
        &self.windows[self.train_windows()..]
    }

    /// Stimulus raster of window `w`.
    pub fn stimulus(&self, w: usize) -> &[Vec<u16>] {
        let s = self.windows[w].start;
        &self.inputs[s..s + INTERVAL]
    }

    /// A new stream made of the given windows, the first `train` of which
    /// carry label spikes when good.
    pub fn select(&self, windows: &[usize], train: usize) -> AssembledStream {
        let rasters: Vec<(&[Vec<u16>], Label)> = windows
            .iter()
            .map(|&w| (self.stimulus(w), self.windows[w].label))
            .collect();
        assemble(&rasters, train)
    }
}

/// Lays out `(raster, label)` pairs as consecutive windows.
pub fn assemble(items: &[(&[Vec<u16>], Label)], n_train: usize) -> AssembledStream {
    let n = items.len();
    let mut s = AssembledStream {
        inputs: Vec::with_capacity(n * WINDOW),
        targets: Vec::with_capacity(n * WINDOW),
        windows: Vec::with_capacity(n),
        learning_time: n_train.min(n) * WINDOW,
    };
    for (i, (raster, label)) in items.iter().enumerate() {
        debug_assert_eq!(raster.len(), INTERVAL);
        let start = i * WINDOW;
        s.windows.push(WindowInfo {
            start,
            label: *label,
        });
        s.inputs.extend(raster.iter().cloned());
        s.inputs
            .extend(std::iter::repeat_with(Vec::new).take(SILENCE));
        let target = (i < n_train && label.is_good()).then_some(LABEL_NODE);
        s.targets.extend(std::iter::repeat_n(target, WINDOW));
    }
    s
}

/// Number of training items for a split fraction.
pub fn train_count(n: usize, train_fraction: f64) -> usize {
    ((n as f64 * train_fraction) + 1e-9).floor().min(n as f64) as usize
}

/// Shuffles the intervals and assembles them; the first `train_fraction`
/// form the training region.
pub fn shuffle_and_interleave<R: Rng>(
    intervals: &[LabeledInterval],
    rng: &mut R,
    train_fraction: f64,
) -> Result<AssembledStream> {
    if intervals.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.shuffle(rng);
    let items: Vec<_> = order
        .iter()
        .map(|&i| (intervals[i].raster.as_slice(), intervals[i].label))
        .collect();
    Ok(assemble(
        &items,
        train_count(intervals.len(), train_fraction),
    ))
}
