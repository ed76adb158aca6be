//! `colanet`: dataset generation, training, evaluation, the decoding oracle
//! and hyperparameter search from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use colanet_core::{parse_config, NetworkConfig};
use colanet_harness::data::{write_json, Calibration, CALIBRATION_FILE};
use colanet_harness::ga::write_history;
use colanet_harness::{
    build, evaluate_weights, generate_dataset, genetic_optimize, read_weights, theoretical_limit,
    train_and_evaluate, validation_fitness, write_weights, DataConfig, Dataset, GAConfig, Gene,
    Hyperparameters, OnViolation,
};
use colanet_pong::encoder::{bin_occupancy, sample_velocities};

#[derive(Parser, Debug)]
#[command(
    name = "colanet",
    version,
    about = "Columnar spiking classifier of pong world states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Record a game, cut and label its intervals, and write the presentation stream.
    GenData(GenDataArgs),
    /// Measure velocity bin edges and conditional means only.
    Calibrate(CalibrateArgs),
    /// Train on the training region; writes weights.csv and report.json.
    Train(TrainArgs),
    /// Predict the test region with frozen weights; writes eval_report.json.
    Eval(EvalArgs),
    /// Accuracy of the bin-decoding oracle; writes oracle_report.json.
    Oracle(OracleArgs),
    /// Genetic hyperparameter search; writes ga_history.csv and best.json.
    Optimize(OptimizeArgs),
    /// Write the expanded network graph as topology.json.
    TopologyDump(TopologyArgs),
    /// Print the plastic weights of a built (optionally loaded) network as CSV.
    WeightsDump(WeightsDumpArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output directory.
    #[arg(short, long, env = "COLANET_OUT", default_value = "colanet-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NetArgs {
    /// Network description; the shipped one when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hyperparameter override `key=value` (d_dopamine, hebbian_ratio, w_max,
    /// w_min, microcolumns, alpha); repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl NetArgs {
    fn load(&self) -> Result<(NetworkConfig, Hyperparameters)> {
        let config = match &self.config {
            Some(path) => {
                let text =
                    fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
                let parsed = parse_config(&text).with_context(|| format!("{}", path.display()))?;
                for w in &parsed.warnings {
                    log::warn!("{}: {w}", path.display());
                }
                parsed.config
            }
            None => colanet_harness::default_config(),
        };
        let mut hyper = Hyperparameters::reference();
        hyper.apply_overrides(&self.overrides)?;
        Ok((config, hyper))
    }
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long)]
    seed: u64,
    /// Game length, s.
    #[arg(long, default_value_t = 2000.0)]
    seconds: f64,
    /// Length of the calibration run, s.
    #[arg(long, default_value_t = 2000.0)]
    calibration_seconds: f64,
    /// Fragment length before each event, ticks.
    #[arg(long, default_value_t = 300)]
    horizon: usize,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    train_fraction: f64,
    /// Label each interval by its own frozen-racket future.
    #[arg(long)]
    relabel: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2000.0)]
    seconds: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ViolationPolicy {
    /// Count choreography violations in the report.
    Record,
    /// Stop at the first violation.
    Abort,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    seed: u64,
    /// Dataset directory written by gen-data.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, value_enum, default_value_t = ViolationPolicy::Record)]
    on_violation: ViolationPolicy,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    data: PathBuf,
    /// Trained weights; the initial resources when omitted.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Train,
    Test,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 300)]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    split: Split,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 4)]
    repeats: usize,
    #[arg(long)]
    max_generations: Option<usize>,
    /// Genes to search, comma separated; all six by default.
    #[arg(long, value_delimiter = ',')]
    genes: Vec<String>,
    /// Share of the training windows held out for fitness.
    #[arg(long, default_value_t = 0.25)]
    validation_fraction: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct TopologyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct WeightsDumpArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        bail!("{}: no such dataset directory", dir.display());
    }
    Ok(Dataset::load(dir)?)
}

fn summary(report: &colanet_harness::RunReport) -> String {
    let c = &report.confusion;
    format!(
        "precision {:.4}  recall {:.4}  F {:.4}  (tp {} fp {} tn {} fn {})",
        report.precision, report.recall, report.f_measure, c.tp, c.fp, c.tn, c.fn_
    )
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    let config = DataConfig {
        seconds: a.seconds,
        horizon: a.horizon,
        calibration_seconds: a.calibration_seconds,
        train_fraction: a.train_fraction,
        relabel: a.relabel,
    };
    let dataset = generate_dataset(&config, a.seed)?;
    create_dir(&a.out.out)?;
    dataset.save(&a.out.out)?;
    let b = &dataset.balance;
    println!("events: {}", b.events);
    println!("train: {} good, {} bad", b.train.good, b.train.bad);
    println!("test: {} good, {} bad", b.test.good, b.test.bad);
    println!("learning_time: {}", dataset.stream.learning_time);
    Ok(())
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let config = DataConfig {
        calibration_seconds: a.seconds,
        ..DataConfig::default()
    };
    let calibration = Calibration::measure(&config, a.seed)?;
    create_dir(&a.out.out)?;
    write_json(&a.out.out.join(CALIBRATION_FILE), &calibration)?;
    let mut rng = colanet_harness::seeds::stage_rng(a.seed, "calibrate/check");
    let (vx, vy) = sample_velocities((a.seconds * 1000.0) as usize, &mut rng);
    let fmt = |o: Vec<f64>| {
        o.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("vx edges: {:?}", calibration.encoder.vx_edges);
    println!("vy edges: {:?}", calibration.encoder.vy_edges);
    println!(
        "vx occupancy on a fresh run: {}",
        fmt(bin_occupancy(&calibration.encoder.vx_edges, &vx))
    );
    println!(
        "vy occupancy on a fresh run: {}",
        fmt(bin_occupancy(&calibration.encoder.vy_edges, &vy))
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let (config, hyper) = a.net.load()?;
    let dataset = load_dataset(&a.data)?;
    let policy = match a.on_violation {
        ViolationPolicy::Record => OnViolation::Record,
        ViolationPolicy::Abort => OnViolation::Abort,
    };
    let (_, report) = train_and_evaluate(&config, &dataset.stream, &hyper, a.seed, policy)?;
    create_dir(&a.out.out)?;
    write_weights(&a.out.out.join("weights.csv"), &report.weights)?;
    report.save(&a.out.out.join("report.json"))?;
    if let Some(t) = &report.train {
        if t.violation_count() > 0 {
            log::warn!(
                "choreography violations: {} WTA, {} dopamine, {} early BIASGATE",
                t.wta_violations,
                t.dopamine_violations,
                t.early_bias_violations
            );
        }
    }
    println!("{}", summary(&report));
    Ok(())
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let (config, hyper) = a.net.load()?;
    let dataset = load_dataset(&a.data)?;
    let weights = a.weights.as_deref().map(read_weights).transpose()?;
    let report = evaluate_weights(&config, &dataset.stream, &hyper, a.seed, weights.as_deref())?;
    create_dir(&a.out.out)?;
    report.save(&a.out.out.join("eval_report.json"))?;
    println!("{}", summary(&report));
    Ok(())
}

fn oracle_cmd(a: &OracleArgs) -> Result<()> {
    let dataset = load_dataset(&a.data)?;
    let n_train = dataset.stream.train_windows();
    let range = match a.split {
        Split::Train => 0..n_train,
        Split::Test => n_train..dataset.stream.windows.len(),
    };
    let report = theoretical_limit(&dataset.calibration, &dataset.stream, range, a.horizon)?;
    create_dir(&a.out.out)?;
    report.save(&a.out.out.join("oracle_report.json"))?;
    println!("{}", summary(&report));
    Ok(())
}

fn optimize_cmd(a: &OptimizeArgs) -> Result<()> {
    let (config, base) = a.net.load()?;
    let dataset = load_dataset(&a.data)?;
    let genes = if a.genes.is_empty() {
        Gene::ALL.to_vec()
    } else {
        a.genes
            .iter()
            .map(|g| g.trim().parse())
            .collect::<Result<_, _>>()?
    };
    let cfg = GAConfig {
        population: a.population,
        repeats: a.repeats,
        max_generations: a.max_generations,
        genes,
        jobs: a.jobs,
        ..GAConfig::default()
    };
    let result = genetic_optimize(&cfg, &base, a.seed, |h, s| {
        validation_fitness(&config, &dataset.stream, h, s, a.validation_fraction)
    })?;
    create_dir(&a.out.out)?;
    write_history(&a.out.out.join("ga_history.csv"), &result.history)?;
    write_json(&a.out.out.join("best.json"), &result)?;
    println!(
        "best fitness {:.4} after {} generations ({} genomes evaluated)",
        result.best_fitness,
        result.history.len(),
        result.evaluations
    );
    for g in Gene::ALL {
        println!("{g} = {}", result.best.get(g));
    }
    Ok(())
}

fn topology_cmd(a: &TopologyArgs) -> Result<()> {
    let (config, hyper) = a.net.load()?;
    let net = build(&config, &hyper, a.seed)?;
    create_dir(&a.out.out)?;
    write_json(&a.out.out.join("topology.json"), &net.topology())?;
    println!(
        "{} neurons, {} synapses, {} input nodes",
        net.neurons().len(),
        net.synapses().len(),
        net.n_inputs()
    );
    Ok(())
}

fn weights_dump_cmd(a: &WeightsDumpArgs) -> Result<()> {
    let (config, hyper) = a.net.load()?;
    let mut net = build(&config, &hyper, a.seed)?;
    if let Some(path) = &a.weights {
        net.load_weights(&read_weights(path)?)?;
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    for row in net.weight_dump() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Optimize(a) => optimize_cmd(a),
        Command::TopologyDump(a) => topology_cmd(a),
        Command::WeightsDump(a) => weights_dump_cmd(a),
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    let broken = |io: &std::io::Error| io.kind() == std::io::ErrorKind::BrokenPipe;
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(broken)
            || c.downcast_ref::<csv::Error>()
                .is_some_and(|ce| match ce.kind() {
                    csv::ErrorKind::Io(io) => broken(io),
                    _ => false,
                })
    })
}

/// The error and its causes, skipping causes already spelled out by the
/// message above them.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", chain(&e));
            ExitCode::FAILURE
        }
    }
}
