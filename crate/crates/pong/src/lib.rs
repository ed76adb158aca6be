//! Pong world, its 133-node spike encoding and the labelled presentation
//! streams built from it.

pub mod dataset;
pub mod encoder;
pub mod error;
pub mod io;
pub mod world;

pub use dataset::{
    extract_fragments, record_run, shuffle_and_interleave, AssembledStream, ClassBalance,
    ExtractOptions, LabeledInterval, RecordedRun, WindowInfo, INTERVAL, LABEL_NODE, SILENCE,
    WINDOW,
};
pub use encoder::{calibrate_velocity_bins, ActiveNodes, ConditionalMeans, EncoderConfig, N_NODES};
pub use error::{Error, Result};
pub use io::{read_stream, write_stream, StreamPaths};
pub use world::{label_state, reset_world, step_world, Event, Label, WorldState};
