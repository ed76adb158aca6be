//! Clock-driven simulation of a built network.
//!
//! One call to [`Network::tick`] advances the network by one millisecond in
//! a fixed phase order:
//!
//! 1. collect spikes due now: queued deliveries plus undelayed input spikes;
//! 2. leak every membrane potential;
//! 3. deliver: gating spikes first, then potential-changing spikes, then
//!    reward spikes;
//! 4. threshold check, section by section. Sections with same-tick lateral
//!    gating (winner-take-all groups) check their candidates in a seeded
//!    random order and apply the gating of each winner immediately;
//! 5. queue outgoing spikes; spikes between neurons take at least one tick;
//! 6. plasticity for this tick's firings and reward arrivals;
//! 7. advance every activity time.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activity::ActivityTime;
use crate::error::{Error, Result};
use crate::neuron::{fire_check, integrate_spike, NeuronState, SectionParams};
use crate::plasticity::{ActKind, LearningState, PlasticityParams};
use crate::scalar::Scalar;
use crate::synapse::{Source, Synapse, SynapseId, SynapseKind, Tick};

/// A population of identical neurons replicated across columns.
#[derive(Clone, Debug)]
pub struct Section<T> {
    pub name: String,
    pub per_column: usize,
    pub columns: usize,
    /// Global index of the first neuron.
    pub start: usize,
    pub params: SectionParams<T>,
    pub plasticity: Option<PlasticityParams<T>>,
    /// Reward spikes trigger dopamine plasticity.
    pub dopamine_enabled: bool,
    /// Fires in random order with same-tick lateral gating.
    pub lateral_gating: bool,
    decay: T,
}

impl<T> Section<T> {
    pub fn len(&self) -> usize {
        self.per_column * self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }

    pub fn neuron(&self, column: usize, i: usize) -> usize {
        debug_assert!(column < self.columns && i < self.per_column);
        self.start + column * self.per_column + i
    }

    pub fn column_of(&self, neuron: usize) -> usize {
        (neuron - self.start) / self.per_column
    }

    pub fn contains(&self, neuron: usize) -> bool {
        self.range().contains(&neuron)
    }
}

/// A block of input nodes. Column-scoped receptors hold `per_column` nodes
/// for every column; shared ones a single block seen by all columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receptor {
    pub name: String,
    pub per_column: usize,
    pub columns: usize,
    pub column_scoped: bool,
    pub start: usize,
}

impl Receptor {
    pub fn len(&self) -> usize {
        self.per_column * self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, column: usize, i: usize) -> usize {
        self.start + column * self.per_column + i
    }

    pub fn contains(&self, node: usize) -> bool {
        (self.start..self.start + self.len()).contains(&node)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiringRecord {
    pub neuron: usize,
    pub forced: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActRecord {
    pub neuron: usize,
    pub kind: ActKind,
}

/// What happened during one tick.
#[derive(Clone, Debug, Default)]
pub struct TickReport {
    pub tick: Tick,
    pub fired: Vec<FiringRecord>,
    pub acts: Vec<ActRecord>,
    /// Fixed synapses that delivered a spike this tick.
    pub fixed_deliveries: Vec<SynapseId>,
}

/// One row of the weight dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    /// Index of the learning neuron within its section.
    pub neuron_index: usize,
    /// Index of the plastic synapse within the neuron.
    pub synapse_index: usize,
    pub input_section: String,
    #[serde(rename = "W")]
    pub resource: f64,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// Serializable view of the expanded graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyDump {
    pub receptors: Vec<Receptor>,
    pub sections: Vec<SectionDump>,
    pub synapses: Vec<SynapseDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionDump {
    pub name: String,
    pub per_column: usize,
    pub columns: usize,
    pub start: usize,
    pub tau_v: f64,
    pub initial_activity: Option<i64>,
    pub lateral_gating: bool,
    pub plastic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynapseDump {
    /// `input:<node>` or `<section>:<index>`.
    pub pre: String,
    pub post: String,
    pub kind: SynapseKind,
    pub weight: f64,
    pub delay: u32,
}

struct SpikeLog {
    out: Box<dyn Write + Send>,
}

pub struct Network<T> {
    pub(crate) sections: Vec<Section<T>>,
    pub(crate) receptors: Vec<Receptor>,
    pub(crate) neurons: Vec<NeuronState<T>>,
    pub(crate) section_of: Vec<usize>,
    pub(crate) synapses: Vec<Synapse<T>>,
    pub(crate) from_input: Vec<Vec<SynapseId>>,
    pub(crate) from_neuron: Vec<Vec<SynapseId>>,
    /// Same-tick gating synapses inside a winner-take-all section.
    pub(crate) lateral: Vec<Vec<SynapseId>>,
    pub(crate) learners: Vec<Option<LearningState<T>>>,
    /// Resource entry of each plastic synapse within its learner.
    pub(crate) plastic_entry: Vec<Option<usize>>,
    pub(crate) rng: ChaCha8Rng,
    queue: Vec<Vec<SynapseId>>,
    now: Tick,
    plasticity_enabled: bool,
    report: TickReport,
    due: Vec<SynapseId>,
    fixed_input: Vec<bool>,
    rewarded: Vec<usize>,
    candidates: Vec<usize>,
    spike_log: Option<SpikeLog>,
}

impl<T: Scalar> Network<T> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        sections: Vec<Section<T>>,
        receptors: Vec<Receptor>,
        synapses: Vec<Synapse<T>>,
        learners: Vec<Option<LearningState<T>>>,
        rng: ChaCha8Rng,
    ) -> Self {
        let n_neurons = sections.iter().map(|s| s.len()).sum::<usize>();
        let n_inputs = receptors.iter().map(|r| r.len()).sum::<usize>();
        let mut section_of = vec![0; n_neurons];
        let mut neurons = Vec::with_capacity(n_neurons);
        for (si, s) in sections.iter().enumerate() {
            for n in s.range() {
                section_of[n] = si;
                neurons.push(NeuronState::new(s.params.initial_activity));
            }
        }
        let mut from_input = vec![Vec::new(); n_inputs];
        let mut from_neuron = vec![Vec::new(); n_neurons];
        let mut lateral = vec![Vec::new(); n_neurons];
        let mut max_delay = 0u32;
        for (id, syn) in synapses.iter().enumerate() {
            max_delay = max_delay.max(syn.delay);
            match syn.pre {
                Source::Input(i) => from_input[i].push(id),
                Source::Neuron(n) => {
                    let same_section = section_of[n] == section_of[syn.post];
                    if syn.kind == SynapseKind::Gating && syn.delay == 0 && same_section {
                        lateral[n].push(id);
                    } else {
                        from_neuron[n].push(id);
                    }
                }
            }
        }
        let mut plastic_entry = vec![None; synapses.len()];
        for l in learners.iter().flatten() {
            for (e, &s) in l.synapses.iter().enumerate() {
                plastic_entry[s] = Some(e);
            }
        }
        let mut net = Network {
            sections,
            receptors,
            neurons,
            section_of,
            synapses,
            from_input,
            from_neuron,
            lateral,
            learners,
            plastic_entry,
            rng,
            queue: vec![Vec::new(); max_delay as usize + 2],
            now: 0,
            plasticity_enabled: true,
            report: TickReport::default(),
            due: Vec::new(),
            fixed_input: vec![false; n_neurons],
            rewarded: Vec::new(),
            candidates: Vec::new(),
            spike_log: None,
        };
        for n in 0..n_neurons {
            net.refresh_learner(n);
        }
        net
    }

    /// Returns every neuron, queue and spike history to its state after
    /// building, keeping the resources, and reseeds the tie-breaking RNG.
    /// The clock restarts at zero.
    pub fn reset_dynamics(&mut self, seed: u64) {
        for (n, state) in self.neurons.iter_mut().enumerate() {
            *state = NeuronState::new(self.sections[self.section_of[n]].params.initial_activity);
        }
        self.queue.iter_mut().for_each(Vec::clear);
        self.due.clear();
        self.rewarded.clear();
        self.candidates.clear();
        self.fixed_input.iter_mut().for_each(|f| *f = false);
        for l in self.learners.iter_mut().flatten() {
            l.forget();
        }
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.now = 0;
        for n in 0..self.neurons.len() {
            self.refresh_learner(n);
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn sections(&self) -> &[Section<T>] {
        &self.sections
    }

    pub fn section(&self, name: &str) -> Option<&Section<T>> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn section_of(&self, neuron: usize) -> &Section<T> {
        &self.sections[self.section_of[neuron]]
    }

    pub fn receptors(&self) -> &[Receptor] {
        &self.receptors
    }

    pub fn receptor(&self, name: &str) -> Option<&Receptor> {
        self.receptors.iter().find(|r| r.name == name)
    }

    pub fn n_inputs(&self) -> usize {
        self.from_input.len()
    }

    pub fn neurons(&self) -> &[NeuronState<T>] {
        &self.neurons
    }

    pub fn neurons_mut(&mut self) -> &mut [NeuronState<T>] {
        &mut self.neurons
    }

    pub fn synapses(&self) -> &[Synapse<T>] {
        &self.synapses
    }

    pub fn learner(&self, neuron: usize) -> Option<&LearningState<T>> {
        self.learners.get(neuron).and_then(|l| l.as_ref())
    }

    pub fn learners(&self) -> impl Iterator<Item = (usize, &LearningState<T>)> {
        self.learners
            .iter()
            .enumerate()
            .filter_map(|(n, l)| l.as_ref().map(|l| (n, l)))
    }

    pub fn plasticity_enabled(&self) -> bool {
        self.plasticity_enabled
    }

    /// Freezes (`false`) or unfreezes all learning.
    pub fn set_plasticity(&mut self, enabled: bool) {
        self.plasticity_enabled = enabled;
    }

    /// Appends one `tick<TAB>section<TAB>index` line per spike to `out`.
    pub fn set_spike_log(&mut self, out: Box<dyn Write + Send>) {
        self.spike_log = Some(SpikeLog { out });
    }

    pub fn flush_spike_log(&mut self) -> Result<()> {
        if let Some(log) = &mut self.spike_log {
            log.out.flush()?;
        }
        Ok(())
    }

    fn refresh_learner(&mut self, neuron: usize) {
        let Some(learner) = &self.learners[neuron] else {
            return;
        };
        let params = self.sections[self.section_of[neuron]]
            .plasticity
            .as_ref()
            .expect("learning neurons belong to plastic sections");
        for (&syn, &r) in learner.synapses.iter().zip(learner.resources.connected()) {
            self.synapses[syn].weight = params.weight(r);
        }
        self.neurons[neuron].h = learner.threshold(params);
    }

    /// Advances the network by one tick with the given input nodes spiking.
    pub fn tick(&mut self, inputs: &[usize]) -> Result<&TickReport> {
        let now = self.now;
        let slots = self.queue.len();
        let slot = now.rem_euclid(slots as Tick) as usize;

        // 1
        let mut due = std::mem::take(&mut self.due);
        due.clear();
        due.append(&mut self.queue[slot]);
        for &i in inputs {
            let targets = self.from_input.get(i).ok_or(Error::InputOutOfRange {
                index: i,
                count: self.from_input.len(),
            })?;
            for &s in targets {
                let d = self.synapses[s].delay;
                if d == 0 {
                    due.push(s);
                } else {
                    let at = (now + d as Tick).rem_euclid(slots as Tick) as usize;
                    self.queue[at].push(s);
                }
            }
        }

        // 2
        for (n, state) in self.neurons.iter_mut().enumerate() {
            state.u = state.u * self.sections[self.section_of[n]].decay;
        }

        // 3
        self.report.tick = now;
        self.report.fired.clear();
        self.report.acts.clear();
        self.report.fixed_deliveries.clear();
        self.rewarded.clear();
        self.fixed_input.iter_mut().for_each(|f| *f = false);
        for &s in &due {
            let syn = &mut self.synapses[s];
            if let Some(omega) = syn.gating {
                let post = &mut self.neurons[syn.post];
                post.a = post.a.gate(omega);
                syn.last_pre_spike_tick = Some(now);
            }
        }
        for &s in &due {
            let syn = &mut self.synapses[s];
            match syn.kind {
                SynapseKind::Plastic | SynapseKind::Fixed => {
                    let post = syn.post;
                    integrate_spike(&mut self.neurons[post], syn, now)?;
                    if syn.kind == SynapseKind::Fixed {
                        self.fixed_input[post] = true;
                        self.report.fixed_deliveries.push(s);
                    } else if let (Some(e), Some(l)) =
                        (self.plastic_entry[s], self.learners[post].as_mut())
                    {
                        let horizon = self.sections[self.section_of[post]]
                            .plasticity
                            .as_ref()
                            .map_or(0, |p| p.history_horizon());
                        l.record_arrival(e, now, horizon);
                    }
                }
                SynapseKind::Reward => {
                    syn.last_pre_spike_tick = Some(now);
                    self.rewarded.push(syn.post);
                }
                SynapseKind::Gating => {}
            }
        }
        self.due = due;

        // 4
        for si in 0..self.sections.len() {
            let range = self.sections[si].range();
            if self.sections[si].lateral_gating {
                self.candidates.clear();
                self.candidates.extend(range.filter(|&n| {
                    let s = &self.neurons[n];
                    s.is_active() && s.u > s.h
                }));
                if self.candidates.len() > 1 {
                    self.candidates.shuffle(&mut self.rng);
                }
                for k in 0..self.candidates.len() {
                    let n = self.candidates[k];
                    let f = fire_check(&mut self.neurons[n], self.fixed_input[n], now);
                    if f.fired {
                        self.report.fired.push(FiringRecord {
                            neuron: n,
                            forced: f.forced,
                        });
                        for &s in &self.lateral[n] {
                            let syn = &mut self.synapses[s];
                            let omega = syn.gating.expect("lateral synapses are gating");
                            let post = &mut self.neurons[syn.post];
                            post.a = post.a.gate(omega);
                            syn.last_pre_spike_tick = Some(now);
                        }
                    }
                }
            } else {
                for n in range {
                    let f = fire_check(&mut self.neurons[n], self.fixed_input[n], now);
                    if f.fired {
                        self.report.fired.push(FiringRecord {
                            neuron: n,
                            forced: f.forced,
                        });
                    }
                }
            }
        }

        // 5
        for rec in &self.report.fired {
            for &s in &self.from_neuron[rec.neuron] {
                let d = self.synapses[s].delay.max(1) as Tick;
                let at = (now + d).rem_euclid(slots as Tick) as usize;
                self.queue[at].push(s);
            }
        }

        // 6
        if self.plasticity_enabled {
            for k in 0..self.report.fired.len() {
                let FiringRecord { neuron, forced } = self.report.fired[k];
                let si = self.section_of[neuron];
                if let (Some(l), Some(p)) = (
                    self.learners[neuron].as_mut(),
                    self.sections[si].plasticity.as_ref(),
                ) {
                    if l.anti_hebbian(p, now, forced).is_some() {
                        self.report.acts.push(ActRecord {
                            neuron,
                            kind: ActKind::AntiHebbian,
                        });
                        self.refresh_learner(neuron);
                    }
                }
            }
            for k in 0..self.rewarded.len() {
                let neuron = self.rewarded[k];
                let si = self.section_of[neuron];
                if !self.sections[si].dopamine_enabled {
                    continue;
                }
                let last_fire = self.neurons[neuron].last_fire_tick;
                if let (Some(l), Some(p)) = (
                    self.learners[neuron].as_mut(),
                    self.sections[si].plasticity.as_ref(),
                ) {
                    if l.dopamine(p, now, last_fire).is_some() {
                        self.report.acts.push(ActRecord {
                            neuron,
                            kind: ActKind::Dopamine,
                        });
                        self.refresh_learner(neuron);
                    }
                }
            }
        }
        if let Some(log) = &mut self.spike_log {
            for rec in &self.report.fired {
                let s = &self.sections[self.section_of[rec.neuron]];
                writeln!(log.out, "{now}\t{}\t{}", s.name, rec.neuron - s.start)?;
            }
        }

        // 7
        for state in &mut self.neurons {
            state.a = state.a.advance();
        }
        self.now += 1;
        Ok(&self.report)
    }

    /// Runs `ticks` ticks without input.
    pub fn idle(&mut self, ticks: usize) -> Result<()> {
        for _ in 0..ticks {
            self.tick(&[])?;
        }
        Ok(())
    }

    /// Plastic weights of every learning neuron, in neuron then synapse order.
    pub fn weight_dump(&self) -> Vec<WeightRow> {
        let mut rows = Vec::new();
        for (n, l) in self.learners() {
            let section = self.section_of(n);
            let params = section.plasticity.as_ref().expect("plastic section");
            for (e, (&syn, &r)) in l.synapses.iter().zip(l.resources.connected()).enumerate() {
                let input_section = match self.synapses[syn].pre {
                    Source::Input(i) => self
                        .receptors
                        .iter()
                        .find(|rc| rc.contains(i))
                        .map(|rc| rc.name.clone()),
                    Source::Neuron(m) => Some(self.section_of(m).name.clone()),
                }
                .unwrap_or_default();
                rows.push(WeightRow {
                    neuron_index: n - section.start,
                    synapse_index: e,
                    input_section,
                    resource: r.as_f64(),
                    weight: params.weight(r).as_f64(),
                });
            }
        }
        rows
    }

    /// Restores plastic resources from a weight dump of an identically
    /// built network. Silent entries keep their values.
    pub fn load_weights(&mut self, rows: &[WeightRow]) -> Result<()> {
        let learners: Vec<usize> = self.learners().map(|(n, _)| n).collect();
        let mut staged: Vec<Vec<Option<T>>> = learners
            .iter()
            .map(|&n| vec![None; self.learners[n].as_ref().unwrap().synapses.len()])
            .collect();
        for row in rows {
            let Some(k) = learners
                .iter()
                .position(|&n| n - self.section_of(n).start == row.neuron_index)
            else {
                return Err(Error::WeightDump(format!(
                    "no learning neuron {}",
                    row.neuron_index
                )));
            };
            let slot = staged[k].get_mut(row.synapse_index).ok_or_else(|| {
                Error::WeightDump(format!(
                    "neuron {} has no plastic synapse {}",
                    row.neuron_index, row.synapse_index
                ))
            })?;
            *slot = Some(T::of(row.resource));
        }
        for (k, &n) in learners.iter().enumerate() {
            let values: Option<Vec<T>> = staged[k].iter().copied().collect();
            let values = values.ok_or_else(|| {
                Error::WeightDump(format!(
                    "incomplete dump for neuron {}",
                    n - self.section_of(n).start
                ))
            })?;
            self.learners[n]
                .as_mut()
                .unwrap()
                .resources
                .set_connected(&values);
            self.refresh_learner(n);
        }
        Ok(())
    }

    fn neuron_label(&self, n: usize) -> String {
        let s = self.section_of(n);
        format!("{}:{}", s.name, n - s.start)
    }

    pub fn topology(&self) -> TopologyDump {
        TopologyDump {
            receptors: self.receptors.clone(),
            sections: self
                .sections
                .iter()
                .map(|s| SectionDump {
                    name: s.name.clone(),
                    per_column: s.per_column,
                    columns: s.columns,
                    start: s.start,
                    tau_v: s.params.tau_v.as_f64(),
                    initial_activity: s.params.initial_activity.ticks(),
                    lateral_gating: s.lateral_gating,
                    plastic: s.plasticity.is_some(),
                })
                .collect(),
            synapses: self
                .synapses
                .iter()
                .map(|syn| SynapseDump {
                    pre: match syn.pre {
                        Source::Input(i) => format!("input:{i}"),
                        Source::Neuron(n) => self.neuron_label(n),
                    },
                    post: self.neuron_label(syn.post),
                    kind: syn.kind,
                    weight: match syn.gating {
                        Some(g) => g.get() as f64,
                        None => syn.weight.as_f64(),
                    },
                    delay: syn.delay,
                })
                .collect(),
        }
    }

    /// Activity time a neuron starts with.
    pub fn initial_activity(&self, neuron: usize) -> ActivityTime {
        self.section_of(neuron).params.initial_activity
    }
}

impl<T: Scalar> Section<T> {
    pub(crate) fn new(
        name: String,
        per_column: usize,
        columns: usize,
        start: usize,
        params: SectionParams<T>,
    ) -> Self {
        let decay = params.decay();
        Section {
            name,
            per_column,
            columns,
            start,
            params,
            plasticity: None,
            dopamine_enabled: false,
            lateral_gating: false,
            decay,
        }
    }
}
