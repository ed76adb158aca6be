//! Feeding a presentation stream to a built network.
//!
//! The network is expected to have receptors `R` (stimulus) and `Target`
//! (label nodes), and sections `L`, `WTA`, `OUT` and `BIASGATE`. During the
//! training region label spikes drive `Target`; every window is checked for
//! the learning choreography of each column:
//!
//! * at most one WTA spike;
//! * at most one dopamine act on L;
//! * no BIASGATE spike reaches L before window tick 10.

use std::collections::BTreeMap;

use colanet_core::network::Network;
use colanet_core::{ActKind, Scalar, Source};
use colanet_pong::{AssembledStream, INTERVAL, LABEL_NODE, WINDOW};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indices of the parts of a network the harness talks to.
#[derive(Clone, Debug)]
pub struct Wiring {
    stimulus_start: usize,
    stimulus_len: usize,
    label_start: usize,
    label_len: usize,
    columns: usize,
    l: (usize, usize),
    wta: (usize, usize),
    out: (usize, usize),
    /// Column of L reached by each synapse from BIASGATE.
    bias_to_l: Vec<Option<usize>>,
    section_of: Vec<usize>,
    section_names: Vec<String>,
}

fn span<T: Scalar>(net: &Network<T>, name: &str) -> Result<(usize, usize)> {
    let s = net
        .section(name)
        .ok_or_else(|| Error::MissingPart(format!("section {name}")))?;
    Ok((s.start, s.per_column))
}

impl Wiring {
    pub fn of<T: Scalar>(net: &Network<T>) -> Result<Self> {
        let r = net
            .receptor("R")
            .ok_or_else(|| Error::MissingPart("receptor R".into()))?;
        let target = net
            .receptor("Target")
            .ok_or_else(|| Error::MissingPart("receptor Target".into()))?;
        let bias = net
            .section("BIASGATE")
            .ok_or_else(|| Error::MissingPart("section BIASGATE".into()))?;
        let l = net
            .section("L")
            .ok_or_else(|| Error::MissingPart("section L".into()))?;
        let bias_to_l = net
            .synapses()
            .iter()
            .map(|s| {
                let from_bias = matches!(s.pre, Source::Neuron(n) if bias.contains(n));
                (from_bias && l.contains(s.post)).then(|| l.column_of(s.post))
            })
            .collect();
        let mut section_of = vec![0; net.neurons().len()];
        for (i, s) in net.sections().iter().enumerate() {
            section_of[s.range()].fill(i);
        }
        Ok(Wiring {
            stimulus_start: r.start,
            stimulus_len: r.len(),
            label_start: target.start,
            label_len: target.len(),
            columns: l.columns,
            l: span(net, "L")?,
            wta: span(net, "WTA")?,
            out: span(net, "OUT")?,
            bias_to_l,
            section_of,
            section_names: net.sections().iter().map(|s| s.name.clone()).collect(),
        })
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    fn column(span: (usize, usize), neuron: usize) -> Option<usize> {
        (neuron >= span.0).then(|| (neuron - span.0) / span.1)
    }

    fn in_section(&self, name_index: usize, neuron: usize) -> bool {
        self.section_of[neuron] == name_index
    }

    /// Network input indices for one stream tick.
    fn inputs(&self, stimulus: &[u16], label: Option<u16>, out: &mut Vec<usize>) -> Result<()> {
        out.clear();
        for &n in stimulus {
            let n = n as usize;
            if n >= self.stimulus_len {
                return Err(Error::MissingPart(format!("stimulus node {n}")));
            }
            out.push(self.stimulus_start + n);
        }
        if let Some(k) = label {
            let k = k as usize;
            if k >= self.label_len {
                return Err(Error::MissingPart(format!("label node {k}")));
            }
            out.push(self.label_start + k);
        }
        Ok(())
    }

    fn section_index(&self, name: &str) -> usize {
        self.section_names
            .iter()
            .position(|n| n == name)
            .expect("wiring checked the section exists")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ViolationKind {
    /// Number of WTA spikes in the window.
    WtaSpikes(usize),
    /// Number of dopamine acts on L in the window.
    DopamineActs(usize),
    /// Window tick of the first BIASGATE spike reaching L.
    EarlyBias(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub window: usize,
    pub column: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnViolation {
    /// Stop at the first violation with an error naming the window.
    #[default]
    Abort,
    /// Count violations and keep going.
    Record,
}

/// Violations kept verbatim in [`TrainStats`]; the rest are only counted.
pub const MAX_LOGGED_VIOLATIONS: usize = 100;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub windows: usize,
    pub ticks: usize,
    pub spikes: BTreeMap<String, u64>,
    pub dopamine_acts: u64,
    pub anti_hebbian_acts: u64,
    pub max_wta_per_window: usize,
    pub max_dopamine_per_window: usize,
    /// Earliest window tick at which a BIASGATE spike reached L.
    pub earliest_bias_arrival: Option<usize>,
    pub wta_violations: usize,
    pub dopamine_violations: usize,
    pub early_bias_violations: usize,
    pub violations: Vec<Violation>,
}

impl TrainStats {
    pub fn violation_count(&self) -> usize {
        self.wta_violations + self.dopamine_violations + self.early_bias_violations
    }
}

#[derive(Clone, Default)]
struct WindowCounts {
    wta: Vec<usize>,
    dopamine: Vec<usize>,
    first_bias: Vec<Option<usize>>,
}

impl WindowCounts {
    fn new(columns: usize) -> Self {
        WindowCounts {
            wta: vec![0; columns],
            dopamine: vec![0; columns],
            first_bias: vec![None; columns],
        }
    }

    fn clear(&mut self) {
        self.wta.fill(0);
        self.dopamine.fill(0);
        self.first_bias.fill(None);
    }
}

fn close_window(
    window: usize,
    counts: &WindowCounts,
    stats: &mut TrainStats,
    policy: OnViolation,
) -> Result<()> {
    for c in 0..counts.wta.len() {
        stats.max_wta_per_window = stats.max_wta_per_window.max(counts.wta[c]);
        stats.max_dopamine_per_window = stats.max_dopamine_per_window.max(counts.dopamine[c]);
        if let Some(t) = counts.first_bias[c] {
            stats.earliest_bias_arrival = Some(stats.earliest_bias_arrival.map_or(t, |e| e.min(t)));
        }
        let mut found = Vec::new();
        if counts.wta[c] > 1 {
            stats.wta_violations += 1;
            found.push(ViolationKind::WtaSpikes(counts.wta[c]));
        }
        if counts.dopamine[c] > 1 {
            stats.dopamine_violations += 1;
            found.push(ViolationKind::DopamineActs(counts.dopamine[c]));
        }
        if let Some(t) = counts.first_bias[c].filter(|&t| t < INTERVAL) {
            stats.early_bias_violations += 1;
            found.push(ViolationKind::EarlyBias(t));
        }
        for kind in found {
            if policy == OnViolation::Abort {
                let message = match kind {
                    ViolationKind::WtaSpikes(n) => format!("{n} WTA spikes"),
                    ViolationKind::DopamineActs(n) => format!("{n} dopamine acts"),
                    ViolationKind::EarlyBias(t) => format!("BIASGATE reached L at window tick {t}"),
                };
                return Err(Error::Choreography {
                    window,
                    column: c,
                    message,
                });
            }
            if stats.violations.len() < MAX_LOGGED_VIOLATIONS {
                stats.violations.push(Violation {
                    window,
                    column: c,
                    kind,
                });
            }
        }
    }
    Ok(())
}

/// Runs the training region `[0, learning_time)` with plasticity on.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    stream: &AssembledStream,
    policy: OnViolation,
) -> Result<TrainStats> {
    let wiring = Wiring::of(net)?;
    let wta_index = wiring.section_index("WTA");
    let l_index = wiring.section_index("L");
    let mut stats = TrainStats::default();
    let mut spikes = vec![0u64; wiring.section_names.len()];
    let n_windows = stream.train_windows();
    let end = stream.learning_time.min(stream.len());
    net.set_plasticity(true);

    let mut counts = WindowCounts::new(wiring.columns);
    let mut window = 0usize;
    let mut inputs = Vec::new();
    for t in 0..end {
        while window + 1 < n_windows && t >= stream.windows[window + 1].start {
            close_window(window, &counts, &mut stats, policy)?;
            counts.clear();
            window += 1;
        }
        let window_tick = t.saturating_sub(stream.windows.get(window).map_or(0, |w| w.start));
        wiring.inputs(&stream.inputs[t], stream.targets[t], &mut inputs)?;
        let report = net.tick(&inputs)?;
        for f in &report.fired {
            spikes[wiring.section_of[f.neuron]] += 1;
            if wiring.in_section(wta_index, f.neuron) {
                if let Some(c) = Wiring::column(wiring.wta, f.neuron) {
                    counts.wta[c] += 1;
                }
            }
        }
        for a in &report.acts {
            match a.kind {
                ActKind::Dopamine => {
                    stats.dopamine_acts += 1;
                    if wiring.in_section(l_index, a.neuron) {
                        if let Some(c) = Wiring::column(wiring.l, a.neuron) {
                            counts.dopamine[c] += 1;
                        }
                    }
                }
                ActKind::AntiHebbian => stats.anti_hebbian_acts += 1,
            }
        }
        for &s in &report.fixed_deliveries {
            if let Some(c) = wiring.bias_to_l[s] {
                counts.first_bias[c].get_or_insert(window_tick);
            }
        }
    }
    if n_windows > 0 && end > 0 {
        close_window(window, &counts, &mut stats, policy)?;
    }
    stats.windows = n_windows;
    stats.ticks = end;
    stats.spikes = named(&wiring, &spikes);
    Ok(stats)
}

fn named(wiring: &Wiring, counts: &[u64]) -> BTreeMap<String, u64> {
    wiring
        .section_names
        .iter()
        .cloned()
        .zip(counts.iter().copied())
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    /// One prediction per test window: the good-state column's OUT neuron
    /// spiked at least once.
    pub predictions: Vec<bool>,
    pub spikes: BTreeMap<String, u64>,
}

/// Runs the inference region `[learning_time, len)` with plasticity off and
/// no label spikes.
pub fn infer<T: Scalar>(net: &mut Network<T>, stream: &AssembledStream) -> Result<Inference> {
    let wiring = Wiring::of(net)?;
    let column = LABEL_NODE as usize;
    if column >= wiring.columns {
        return Err(Error::MissingPart(format!("column {column}")));
    }
    let out_neurons =
        wiring.out.0 + column * wiring.out.1..wiring.out.0 + (column + 1) * wiring.out.1;
    let mut spikes = vec![0u64; wiring.section_names.len()];
    net.set_plasticity(false);

    let test = stream.test_windows();
    let mut predictions = vec![false; test.len()];
    let mut inputs = Vec::new();
    let mut w = 0usize;
    for t in stream.learning_time.min(stream.len())..stream.len() {
        while w < test.len() && t >= test[w].start + WINDOW {
            w += 1;
        }
        wiring.inputs(&stream.inputs[t], None, &mut inputs)?;
        let report = net.tick(&inputs)?;
        for f in &report.fired {
            spikes[wiring.section_of[f.neuron]] += 1;
            if out_neurons.contains(&f.neuron) && w < test.len() && t >= test[w].start {
                predictions[w] = true;
            }
        }
    }
    Ok(Inference {
        predictions,
        spikes: named(&wiring, &spikes),
    })
}
