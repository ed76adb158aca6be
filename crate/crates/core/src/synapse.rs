use serde::{Deserialize, Serialize};

use crate::activity::GatingWeight;
use crate::scalar::Scalar;

pub type Tick = i64;

/// Index into [`crate::Network::synapses`].
pub type SynapseId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynapseKind {
    /// Weight derived from a synaptic resource, subject to learning.
    Plastic,
    /// Constant weight; a firing it contributes to is *forced*.
    Fixed,
    /// Rewrites the target's activity time instead of its potential.
    Gating,
    /// Dopamine trigger for the target's plasticity; never touches the potential.
    Reward,
}

impl SynapseKind {
    pub fn changes_potential(self) -> bool {
        matches!(self, SynapseKind::Plastic | SynapseKind::Fixed)
    }
}

/// Where a synapse's spikes come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "lowercase")]
pub enum Source {
    Input(usize),
    Neuron(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synapse<T> {
    pub pre: Source,
    pub post: usize,
    pub kind: SynapseKind,
    /// Potential jump for plastic and fixed synapses. Gating synapses keep
    /// the config weight here for reporting; [`Synapse::gating`] is what acts.
    pub weight: T,
    pub gating: Option<GatingWeight>,
    pub delay: u32,
    pub last_pre_spike_tick: Option<Tick>,
}

impl<T: Scalar> Synapse<T> {
    pub fn new(pre: Source, post: usize, kind: SynapseKind, weight: T, delay: u32) -> Self {
        Synapse {
            pre,
            post,
            kind,
            weight,
            gating: None,
            delay,
            last_pre_spike_tick: None,
        }
    }

    pub fn new_gating(pre: Source, post: usize, omega: GatingWeight, delay: u32) -> Self {
        Synapse {
            pre,
            post,
            kind: SynapseKind::Gating,
            weight: T::of(omega.get() as f64),
            gating: Some(omega),
            delay,
            last_pre_spike_tick: None,
        }
    }
}

/// A spike in flight on a delayed synapse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpikeEvent {
    pub deliver_tick: Tick,
    pub synapse: SynapseId,
}
