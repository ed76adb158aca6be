//! Build, train and evaluate in one call.

use colanet_core::{build_network, parse_config, Network, NetworkConfig, WeightRow};
use colanet_pong::AssembledStream;

use crate::data::{generate_dataset, DataConfig, Dataset};
use crate::error::Result;
use crate::hyper::Hyperparameters;
use crate::metrics::{evaluate, RunReport};
use crate::seeds::{derive_seed, BUILD, INFER};
use crate::train::{infer, train, Inference, OnViolation};

/// The shipped network description.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/colanet.xml");

pub fn default_config() -> NetworkConfig {
    parse_config(DEFAULT_CONFIG)
        .expect("shipped network description parses")
        .config
}

pub fn build(config: &NetworkConfig, hyper: &Hyperparameters, seed: u64) -> Result<Network> {
    hyper.validate()?;
    Ok(build_network(
        config,
        &hyper.to_build_options(derive_seed(seed, BUILD)),
    )?)
}

/// Inference from a rested network, so that predictions depend on the
/// weights alone and not on how they were obtained.
fn predict(net: &mut Network, stream: &AssembledStream, seed: u64) -> Result<Inference> {
    net.reset_dynamics(derive_seed(seed, INFER));
    infer(net, stream)
}

/// Trains on the training region, then predicts the test region.
pub fn train_and_evaluate(
    config: &NetworkConfig,
    stream: &AssembledStream,
    hyper: &Hyperparameters,
    seed: u64,
    policy: OnViolation,
) -> Result<(Network, RunReport)> {
    let mut net = build(config, hyper, seed)?;
    let stats = train(&mut net, stream, policy)?;
    let inference = predict(&mut net, stream, seed)?;
    let mut report = evaluate(&inference.predictions, stream.test_windows())?;
    report.spikes = inference.spikes;
    report.train = Some(stats);
    report.weights = net.weight_dump();
    Ok((net, report))
}

/// Predicts the test region with frozen weights: the dump if given, the
/// initial resources otherwise.
pub fn evaluate_weights(
    config: &NetworkConfig,
    stream: &AssembledStream,
    hyper: &Hyperparameters,
    seed: u64,
    weights: Option<&[WeightRow]>,
) -> Result<RunReport> {
    let mut net = build(config, hyper, seed)?;
    if let Some(rows) = weights {
        net.load_weights(rows)?;
    }
    let inference = predict(&mut net, stream, seed)?;
    let mut report = evaluate(&inference.predictions, stream.test_windows())?;
    report.spikes = inference.spikes;
    report.weights = net.weight_dump();
    Ok(report)
}

/// Fitness used by the search: `1 - F` on the last `validation_fraction`
/// of the training windows after training on the rest. The test region is
/// never touched.
pub fn validation_fitness(
    config: &NetworkConfig,
    stream: &AssembledStream,
    hyper: &Hyperparameters,
    seed: u64,
    validation_fraction: f64,
) -> Result<f64> {
    let n = stream.train_windows();
    let n_val = ((n as f64) * validation_fraction).round() as usize;
    let order: Vec<usize> = (0..n).collect();
    let sub = stream.select(&order, n - n_val);
    let (_, report) = train_and_evaluate(config, &sub, hyper, seed, OnViolation::Record)?;
    Ok(1.0 - report.f_measure)
}

pub struct PipelineOutput {
    pub dataset: Dataset,
    pub report: RunReport,
}

/// Dataset generation, training and evaluation from a single seed.
pub fn run_pipeline(
    config: &NetworkConfig,
    data: &DataConfig,
    hyper: &Hyperparameters,
    seed: u64,
    policy: OnViolation,
) -> Result<PipelineOutput> {
    let dataset = generate_dataset(data, seed)?;
    let (_, report) = train_and_evaluate(config, &dataset.stream, hyper, seed, policy)?;
    Ok(PipelineOutput { dataset, report })
}
