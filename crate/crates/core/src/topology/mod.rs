//! Network description files and their expansion into a network.

pub mod build;
pub mod config;
pub mod xml;

pub use build::{
    build_network, expand_link_policy, resize_microcolumns, BuildOptions, Endpoint, ExpandOptions,
    PlasticityOverrides, DEFAULT_D_DOPAMINE, DEFAULT_HEBBIAN_RATIO,
};
pub use config::{
    parse_config, LinkPolicy, LinkSpec, NetworkConfig, ParsedConfig, PlasticitySpec, RangeSpec,
    ReceptorSpec, SectionSpec,
};
