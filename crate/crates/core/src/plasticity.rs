//! Resource-based plasticity of learning neurons.
//!
//! Learning acts on a per-synapse *resource* `W`, unbounded in both
//! directions; the synaptic weight is a saturating function of it. Every act
//! changes a subset of a neuron's resources and spreads the opposite change
//! evenly over all remaining entries, including a configurable number of
//! unconnected ("silent") entries, so the neuron's total resource is
//! conserved.
//!
//! Two rules drive the changes:
//!
//! * anti-Hebbian depression by `d_hebbian` of every synapse that received a
//!   spike within `hebbian_window` ticks before a non-forced firing;
//! * dopamine potentiation by `d_dopamine` of the synapses that were active
//!   before the neuron's last firing, applied when a reward spike arrives no
//!   later than `dopamine_window` ticks after that firing.
//!
//! When a reward follows a non-forced firing, the recorded depression is
//! undone from a snapshot and only the excess `d_dopamine - d_hebbian` is
//! applied, so equal rates leave the neuron bit-identical.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::synapse::{SynapseId, Tick};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlasticityParams<T> {
    pub d_dopamine: T,
    pub d_hebbian: T,
    pub w_min: T,
    pub w_max: T,
    /// Lookback before a firing in which presynaptic spikes make a synapse eligible.
    pub hebbian_window: Tick,
    /// Maximum delay between a firing and the reward that credits it.
    pub dopamine_window: Tick,
    /// Threshold variability coefficient.
    pub alpha: T,
    pub n_silent: usize,
}

impl<T: Scalar> PlasticityParams<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPlasticity(m.to_owned()));
        if !(self.w_min < self.w_max) {
            return bad("w_min must be below w_max");
        }
        if !(self.d_dopamine > T::zero()) {
            return bad("d_dopamine must be positive");
        }
        if !(self.d_hebbian >= T::zero()) {
            return bad("d_hebbian must be non-negative");
        }
        if !(self.alpha >= T::zero() && self.alpha < T::one()) {
            return bad("alpha must lie in [0, 1)");
        }
        if self.hebbian_window <= 0 || self.dopamine_window <= 0 {
            return bad("plasticity windows must be positive");
        }
        Ok(())
    }

    pub fn weight(&self, resource: T) -> T {
        resource_to_weight(resource, self.w_min, self.w_max)
    }

    /// Ticks of presynaptic history a learning neuron must remember.
    pub fn history_horizon(&self) -> Tick {
        self.hebbian_window + self.dopamine_window + 1
    }
}

/// Saturating resource-to-weight map, monotone with range `[w_min, w_max)`.
pub fn resource_to_weight<T: Scalar>(resource: T, w_min: T, w_max: T) -> T {
    let span = w_max - w_min;
    let r = resource.max(T::zero());
    w_min + span * r / (span + r)
}

/// Threshold potential from the weights of a neuron's plastic synapses.
pub fn adaptive_threshold<T: Scalar>(weights: impl IntoIterator<Item = T>, alpha: T) -> T {
    let positive = weights
        .into_iter()
        .fold(T::zero(), |acc, w| acc + w.max(T::zero()));
    T::one() + alpha * positive
}

/// Resources of one learning neuron: connected entries first, then silent ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceVector<T> {
    entries: Vec<T>,
    connected: usize,
    total: T,
}

impl<T: Scalar> ResourceVector<T> {
    pub fn new(connected: Vec<T>, n_silent: usize) -> Self {
        let n_connected = connected.len();
        let mut entries = connected;
        entries.resize(n_connected + n_silent, T::zero());
        let total = entries.iter().fold(T::zero(), |a, &b| a + b);
        ResourceVector {
            entries,
            connected: n_connected,
            total,
        }
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn connected(&self) -> &[T] {
        &self.entries[..self.connected]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The conserved total as of construction (or the last [`Self::set_connected`]).
    pub fn total(&self) -> T {
        self.total
    }

    pub fn sum(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Overwrites the connected entries (loading stored weights). Silent
    /// entries are kept and the conserved total is re-based.
    pub fn set_connected(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.connected);
        self.entries[..self.connected].copy_from_slice(values);
        self.total = self.sum();
    }

    /// Applies `deltas` and compensates all other entries. Returns `false`
    /// when every entry was touched and nothing is left to compensate with.
    pub fn conserve(&mut self, deltas: &[(usize, T)]) -> bool {
        conserve_total_resource(&mut self.entries, deltas)
    }
}

/// Applies `deltas` to their entries and shifts every untouched entry by
/// `-(sum of deltas) / (N - |S|)`.
pub fn conserve_total_resource<T: Scalar>(entries: &mut [T], deltas: &[(usize, T)]) -> bool {
    if deltas.is_empty() {
        return true;
    }
    let mut touched = vec![false; entries.len()];
    let mut sum = T::zero();
    for &(i, d) in deltas {
        entries[i] = entries[i] + d;
        touched[i] = true;
        sum = sum + d;
    }
    let untouched = touched.iter().filter(|t| !**t).count();
    if untouched == 0 {
        log::warn!(
            "all {} resource entries changed, total resource not conserved",
            entries.len()
        );
        return false;
    }
    if sum == T::zero() {
        return true;
    }
    let share = sum / T::of(untouched as f64);
    for (e, t) in entries.iter_mut().zip(&touched) {
        if !t {
            *e = *e - share;
        }
    }
    true
}

/// The most recent non-forced firing's depression, kept so that a following
/// reward can undo it exactly.
#[derive(Clone, Debug, PartialEq)]
struct DepressionRecord<T> {
    fire_tick: Tick,
    before: Vec<T>,
}

/// Which rule produced a [`PlasticityAct`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActKind {
    AntiHebbian,
    Dopamine,
}

/// A plasticity act on one neuron: the directly changed entries and their
/// deltas, before compensation.
#[derive(Clone, Debug, PartialEq)]
pub struct PlasticityAct<T> {
    pub kind: ActKind,
    pub deltas: Vec<(usize, T)>,
}

/// Plasticity state of one learning neuron.
#[derive(Clone, Debug)]
pub struct LearningState<T> {
    pub resources: ResourceVector<T>,
    /// Plastic synapse behind each connected entry.
    pub synapses: Vec<SynapseId>,
    arrivals: Vec<VecDeque<Tick>>,
    record: Option<DepressionRecord<T>>,
}

impl<T: Scalar> LearningState<T> {
    pub fn new(synapses: Vec<SynapseId>, initial: Vec<T>, n_silent: usize) -> Self {
        assert_eq!(synapses.len(), initial.len());
        LearningState {
            arrivals: vec![VecDeque::new(); synapses.len()],
            synapses,
            resources: ResourceVector::new(initial, n_silent),
            record: None,
        }
    }

    /// Drops the spike history and any pending depression record.
    pub fn forget(&mut self) {
        self.arrivals.iter_mut().for_each(VecDeque::clear);
        self.record = None;
    }

    pub fn record_arrival(&mut self, entry: usize, tick: Tick, horizon: Tick) {
        let q = &mut self.arrivals[entry];
        while q.front().is_some_and(|&t| t < tick - horizon) {
            q.pop_front();
        }
        if q.back() != Some(&tick) {
            q.push_back(tick);
        }
    }

    /// Connected entries with at least one arrival in `[fire_tick - window, fire_tick]`.
    pub fn eligible(&self, fire_tick: Tick, window: Tick) -> Vec<usize> {
        self.arrivals
            .iter()
            .enumerate()
            .filter(|(_, q)| q.iter().any(|&t| t >= fire_tick - window && t <= fire_tick))
            .map(|(i, _)| i)
            .collect()
    }

    /// Depression after a firing. Forced firings and firings without recent
    /// input leave the resources untouched.
    pub fn anti_hebbian(
        &mut self,
        params: &PlasticityParams<T>,
        fire_tick: Tick,
        forced: bool,
    ) -> Option<PlasticityAct<T>> {
        if forced {
            return None;
        }
        let eligible = self.eligible(fire_tick, params.hebbian_window);
        if eligible.is_empty() || params.d_hebbian == T::zero() {
            return None;
        }
        let before = self.resources.entries().to_vec();
        let deltas: Vec<_> = eligible
            .into_iter()
            .map(|i| (i, -params.d_hebbian))
            .collect();
        self.resources.conserve(&deltas);
        self.record = Some(DepressionRecord { fire_tick, before });
        Some(PlasticityAct {
            kind: ActKind::AntiHebbian,
            deltas,
        })
    }

    /// Potentiation on a reward spike at `reward_tick`, crediting the firing
    /// at `last_fire`. Returns `None` when no firing lies within the window.
    pub fn dopamine(
        &mut self,
        params: &PlasticityParams<T>,
        reward_tick: Tick,
        last_fire: Option<Tick>,
    ) -> Option<PlasticityAct<T>> {
        let fire = last_fire?;
        let lag = reward_tick - fire;
        if lag < 0 || lag > params.dopamine_window {
            return None;
        }
        let eligible = self.eligible(fire, params.hebbian_window);
        let mut increment = params.d_dopamine;
        if let Some(rec) = self.record.take() {
            if rec.fire_tick == fire {
                self.resources.entries.copy_from_slice(&rec.before);
                increment = params.d_dopamine - params.d_hebbian;
            }
        }
        let deltas: Vec<_> = if increment == T::zero() {
            Vec::new()
        } else {
            eligible.into_iter().map(|i| (i, increment)).collect()
        };
        self.resources.conserve(&deltas);
        Some(PlasticityAct {
            kind: ActKind::Dopamine,
            deltas,
        })
    }

    pub fn weights<'a>(&'a self, params: &'a PlasticityParams<T>) -> impl Iterator<Item = T> + 'a {
        self.resources.connected().iter().map(|&r| params.weight(r))
    }

    pub fn threshold(&self, params: &PlasticityParams<T>) -> T {
        adaptive_threshold(self.weights(params), params.alpha)
    }
}
