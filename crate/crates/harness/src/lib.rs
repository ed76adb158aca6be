//! Training and evaluation of the pong state classifier: dataset
//! generation, choreography-checked training, inference, metrics, the
//! decoding oracle and the genetic hyperparameter search.

pub mod data;
pub mod error;
pub mod ga;
pub mod hyper;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod seeds;
pub mod train;
pub mod weights;

pub use data::{generate_dataset, Calibration, DataConfig, Dataset};
pub use error::{Error, Result};
pub use ga::{genetic_optimize, genetic_optimize_from, GAConfig, GAResult, GenerationStats};
pub use hyper::{Gene, Hyperparameters};
pub use metrics::{evaluate, f_measure, Confusion, RunReport};
pub use oracle::{oracle_predict, theoretical_limit, theoretical_limit_test};
pub use pipeline::{
    build, default_config, evaluate_weights, run_pipeline, train_and_evaluate, validation_fitness,
    PipelineOutput, DEFAULT_CONFIG,
};
pub use seeds::derive_seed;
pub use train::{infer, train, Inference, OnViolation, TrainStats, Violation, ViolationKind};
pub use weights::{read_weights, write_weights};
