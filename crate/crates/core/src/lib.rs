//! Spiking network engine: leaky integrate-and-fire neurons with activity
//! gating, resource-based three-factor plasticity and a loader for XML
//! network descriptions.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// `!(a < b)` is how NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod error;
pub mod network;
pub mod neuron;
pub mod plasticity;
pub mod scalar;
pub mod synapse;
pub mod topology;

pub use activity::{apply_gating_spike, update_activity_time, ActivityTime, GatingWeight};
pub use error::{Error, Result};
pub use network::{ActRecord, FiringRecord, Receptor, TickReport, TopologyDump, WeightRow};
pub use neuron::{fire_check, integrate_spike, leak_step, Firing};
pub use plasticity::{
    adaptive_threshold, conserve_total_resource, resource_to_weight, ActKind, PlasticityAct,
};
pub use scalar::Scalar;
pub use synapse::{Source, SynapseId, SynapseKind, Tick};
pub use topology::{build_network, parse_config, BuildOptions, NetworkConfig};

pub type Network = network::Network<f64>;
pub type Section = network::Section<f64>;
pub type NeuronState = neuron::NeuronState<f64>;
pub type SectionParams = neuron::SectionParams<f64>;
pub type Synapse = synapse::Synapse<f64>;
pub type PlasticityParams = plasticity::PlasticityParams<f64>;
pub type LearningState = plasticity::LearningState<f64>;
pub type ResourceVector = plasticity::ResourceVector<f64>;
