use thiserror::Error;

use crate::synapse::SynapseKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gating weight {0} does not round to a nonzero whole number of ticks")]
    InvalidGatingWeight(f64),

    #[error("{kind:?} synapse cannot change the membrane potential")]
    NotPotentialSynapse { kind: SynapseKind },

    #[error("line {line}: {message}")]
    Xml { line: usize, message: String },

    #[error("section {section}: {message}")]
    InvalidSection { section: String, message: String },

    #[error("link {from} -> {to}: {message}")]
    InvalidLink {
        from: String,
        to: String,
        message: String,
    },

    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("invalid plasticity parameters: {0}")]
    InvalidPlasticity(String),

    #[error("input node {index} out of range (network has {count} input nodes)")]
    InputOutOfRange { index: usize, count: usize },

    #[error("weight dump: {0}")]
    WeightDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
