//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria in `KNOWN_FAILING` are reported but do not fail the run; every
//! other failure makes the process exit nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use colanet_core::topology::{build_network, parse_config, BuildOptions, PlasticityOverrides};
use colanet_core::{
    resource_to_weight, ActKind, ActivityTime, GatingWeight, LearningState, Network,
    PlasticityParams,
};
use colanet_harness::seeds::stage_rng;
use colanet_harness::{
    generate_dataset, genetic_optimize, validation_fitness, Calibration, DataConfig, GAConfig,
    Gene, Hyperparameters, DEFAULT_CONFIG,
};
use colanet_pong::encoder::{bin_occupancy, sample_velocities, PhaseEncoder};
use colanet_pong::ActiveNodes;
use rand::Rng;
use serde_json::Value;

const SEEDS: [u64; 4] = [1, 2, 3, 4];
const KNOWN_FAILING: [usize; 3] = [1, 2, 7];

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Result<Check> {
    Ok(Check {
        pass,
        detail: detail.into(),
    })
}

fn colanet(args: &[&str]) -> Result<String> {
    let out = Command::new(env!("CARGO_BIN_EXE_colanet"))
        .args(args)
        .env_remove("COLANET_OUT")
        .output()
        .context("cannot run colanet")?;
    ensure!(
        out.status.success(),
        "colanet {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(String::from_utf8(out.stdout)?)
}

fn json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    Ok(serde_json::from_str(&text)?)
}

fn num(v: &Value, key: &str) -> Result<f64> {
    v[key].as_f64().with_context(|| format!("no number {key}"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Output of gen-data, train, eval and oracle for one seed.
struct SeedRun {
    dir: PathBuf,
    eval: Value,
    train: Value,
    oracle: Value,
}

fn run_seed(root: &Path, seed: u64, tag: &str) -> Result<SeedRun> {
    let dir = root.join(format!("{tag}{seed}"));
    let seed_arg = seed.to_string();
    let (data, trained, evaluated, oracle) = (
        dir.join("data"),
        dir.join("train"),
        dir.join("eval"),
        dir.join("oracle"),
    );
    colanet(&[
        "gen-data",
        "--seed",
        &seed_arg,
        "--seconds",
        "2000",
        "--horizon",
        "300",
        "-o",
        s(&data),
    ])?;
    colanet(&[
        "train",
        "--seed",
        &seed_arg,
        "--data",
        s(&data),
        "-o",
        s(&trained),
    ])?;
    let weights = trained.join("weights.csv");
    colanet(&[
        "eval",
        "--seed",
        &seed_arg,
        "--data",
        s(&data),
        "--weights",
        s(&weights),
        "-o",
        s(&evaluated),
    ])?;
    colanet(&[
        "oracle",
        "--data",
        s(&data),
        "--horizon",
        "300",
        "-o",
        s(&oracle),
    ])?;
    Ok(SeedRun {
        eval: json(&evaluated.join("eval_report.json"))?,
        train: json(&trained.join("report.json"))?["train"].clone(),
        oracle: json(&oracle.join("oracle_report.json"))?,
        dir,
    })
}

fn prf(v: &Value) -> Result<(f64, f64, f64)> {
    Ok((
        num(v, "precision")?,
        num(v, "recall")?,
        num(v, "f_measure")?,
    ))
}

fn end_to_end(runs: &[SeedRun], elapsed: Duration) -> Result<Check> {
    let mut fs_ = Vec::new();
    let mut lines = Vec::new();
    let mut p_over_r = 0;
    for (seed, r) in SEEDS.iter().zip(runs) {
        let (p, rc, f) = prf(&r.eval)?;
        fs_.push(f);
        p_over_r += usize::from(p > rc);
        lines.push(format!("seed {seed}: P {p:.3} R {rc:.3} F {f:.3}"));
    }
    let f = median(fs_);
    let budget = Duration::from_secs(15 * 60);
    let pass = (0.35..=0.55).contains(&f) && p_over_r * 2 > runs.len() && elapsed <= budget;
    check(
        pass,
        format!(
            "median F {f:.3} (want 0.35..0.55), P > R in {p_over_r}/{} seeds, {:.0} s; {}",
            runs.len(),
            elapsed.as_secs_f64(),
            lines.join("; ")
        ),
    )
}

fn oracle(runs: &[SeedRun]) -> Result<Check> {
    let mut fs_ = Vec::new();
    let mut lines = Vec::new();
    let mut r_over_p = 0;
    for (seed, r) in SEEDS.iter().zip(runs) {
        let (p, rc, f) = prf(&r.oracle)?;
        fs_.push(f);
        r_over_p += usize::from(rc > p);
        lines.push(format!("seed {seed}: P {p:.3} R {rc:.3} F {f:.3}"));
    }
    let f = median(fs_);
    let pass = (0.54..=0.66).contains(&f) && r_over_p * 2 > runs.len();
    check(
        pass,
        format!(
            "median F {f:.3} (want 0.54..0.66), R > P in {r_over_p}/{} seeds; {}",
            runs.len(),
            lines.join("; ")
        ),
    )
}

/// `None` is `+INF`.
fn advance_oracle(a: Option<i64>) -> Option<i64> {
    match a {
        None => None,
        Some(-1) => None,
        Some(a) if a < -1 => Some(a + 1),
        Some(0) => Some(0),
        Some(a) => Some(a - 1),
    }
}

fn gate_oracle(a: Option<i64>, w: i64) -> Option<i64> {
    match (a, w < 0) {
        (None, true) => Some(w),
        (None, false) => None,
        (Some(a), true) => Some(a.min(w)),
        (Some(a), false) => Some(a.max(w)),
    }
}

fn state_machine() -> Result<Check> {
    let states: Vec<Option<i64>> = (-20..=20).map(Some).chain([None]).collect();
    let to_at = |a: Option<i64>| a.map_or(ActivityTime::INFINITE, ActivityTime::finite);
    let mut cases = 0;
    let mut wrong = Vec::new();
    for &a in &states {
        cases += 1;
        if to_at(a).advance() != to_at(advance_oracle(a)) {
            wrong.push(format!("advance {a:?}"));
        }
        for w in (-20..=20).filter(|&w| w != 0) {
            cases += 1;
            let got = to_at(a).gate(GatingWeight::new(w)?);
            if got != to_at(gate_oracle(a, w)) {
                wrong.push(format!("gate {a:?} by {w}"));
            }
        }
    }
    check(
        wrong.is_empty(),
        format!("{cases} cases, {} mismatches {wrong:?}", wrong.len()),
    )
}

fn weight_map() -> Result<Check> {
    let mut rng = stage_rng(0, "acceptance/weight");
    let mut worst_mid = 0.0f64;
    let mut bad = 0;
    for _ in 0..10_000 {
        let w_min: f64 = rng.gen_range(-1.0..0.0);
        let w_max: f64 = w_min + rng.gen_range(1e-4..2.0);
        let r: f64 = rng.gen_range(-10.0..100.0);
        let step: f64 = rng.gen_range(0.0..10.0);
        let w = resource_to_weight(r, w_min, w_max);
        let w2 = resource_to_weight(r + step, w_min, w_max);
        if !(w >= w_min && w < w_max && w2 >= w) {
            bad += 1;
        }
        let mid = resource_to_weight(w_max - w_min, w_min, w_max);
        worst_mid = worst_mid.max((mid - (w_min + w_max) / 2.0).abs());
    }
    check(
        bad == 0 && worst_mid <= 1e-12,
        format!("{bad} range or monotonicity violations, worst midpoint error {worst_mid:.1e}"),
    )
}

fn reference_params(ratio: f64) -> PlasticityParams {
    PlasticityParams {
        d_dopamine: 0.0186,
        d_hebbian: 0.0186 * ratio,
        w_min: -0.00746,
        w_max: 0.328,
        hebbian_window: 11,
        dopamine_window: 10,
        alpha: 0.005525,
        n_silent: 10,
    }
}

fn conservation() -> Result<Check> {
    let p = reference_params(0.582);
    let mut rng = stage_rng(0, "acceptance/conservation");
    let n = 133;
    let initial: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.1)).collect();
    let mut l = LearningState::new((0..n).collect(), initial, p.n_silent);
    let total = l.resources.sum();
    let mut acts = 0;
    let mut tick = 0;
    let mut last_fire = None;
    while acts < 10_000 {
        tick += 1;
        for _ in 0..rng.gen_range(0..6) {
            l.record_arrival(rng.gen_range(0..n), tick, p.history_horizon());
        }
        let act = if rng.gen_bool(0.5) {
            last_fire = Some(tick);
            l.anti_hebbian(&p, tick, rng.gen_bool(0.3))
        } else {
            l.dopamine(&p, tick, last_fire)
        };
        acts += usize::from(act.is_some());
    }
    let drift = ((l.resources.sum() - total) / total).abs();
    check(
        drift < 1e-9,
        format!("relative drift {drift:.2e} after {acts} acts over {tick} ticks"),
    )
}

const SINGLE: &str = r#"<SNN>
  <RECEPTORS name="R" n="3"></RECEPTORS>
  <RECEPTORS name="Rew" n="1"></RECEPTORS>
  <RECEPTORS name="F" n="1"></RECEPTORS>
  <NETWORK ncopies="1"><Sections>
    <Section name="L"><props>
      <n>1</n><chartime>3</chartime>
      <dopamine_plasticity_time>10</dopamine_plasticity_time>
      <minweight>-0.1</minweight><maxweight>2</maxweight>
      <three_factor_plasticity></three_factor_plasticity>
      <nsilentsynapses>4</nsilentsynapses>
      <hebbian_plasticity_chartime_ratio>2</hebbian_plasticity_chartime_ratio>
    </props></Section>
    <Link from="R" to="L" type="plastic">
      <IniResource type="uni"><min>1</min><max>1</max></IniResource>
    </Link>
    <Link from="Rew" to="L" policy="aligned" type="reward"><weight>1</weight></Link>
    <Link from="F" to="L" policy="aligned"><weight>1.2</weight></Link>
  </Sections></NETWORK>
</SNN>"#;

const R1: usize = 1;
const REW: usize = 3;
const FORCE: usize = 4;
const ALL_R: [usize; 3] = [0, 1, 2];
const SILENT: [usize; 4] = [3, 4, 5, 6];

fn single_neuron() -> Result<Network> {
    let options = BuildOptions {
        plasticity: PlasticityOverrides {
            d_dopamine: Some(0.0186),
            hebbian_ratio: Some(1.0),
            ..Default::default()
        },
        ..BuildOptions::seeded(0)
    };
    Ok(build_network(&parse_config(SINGLE)?.config, &options)?)
}

fn resources(n: &Network) -> Vec<f64> {
    n.learner(0)
        .expect("one learner")
        .resources
        .entries()
        .to_vec()
}

/// Entries that changed, split by direction.
fn moved(before: &[f64], after: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let up = (0..before.len())
        .filter(|&i| after[i] > before[i])
        .collect();
    let down = (0..before.len())
        .filter(|&i| after[i] < before[i])
        .collect();
    (up, down)
}

/// Each plastic weight is below threshold and all three together are above
/// it, so every scenario fires exactly once.
fn three_scenarios() -> Result<Check> {
    let mut notes = Vec::new();
    let fired_once = |n: &mut Network, inputs: &[usize]| -> Result<(usize, bool, Vec<ActKind>)> {
        let r = n.tick(inputs)?;
        Ok((
            r.fired.len(),
            r.fired.first().is_some_and(|f| f.forced),
            r.acts.iter().map(|a| a.kind).collect(),
        ))
    };
    let quiet = |n: &mut Network, ticks: usize| -> Result<usize> {
        let mut spikes = 0;
        for _ in 0..ticks {
            spikes += n.tick(&[])?.fired.len();
        }
        Ok(spikes)
    };

    // forced firing, then reward: the eligible synapse is potentiated
    let mut n = single_neuron()?;
    let before = resources(&n);
    let (pre, _, _) = fired_once(&mut n, &[R1])?;
    let (count, forced, acts) = fired_once(&mut n, &[FORCE])?;
    let extra = quiet(&mut n, 1)?;
    let (_, _, reward_acts) = fired_once(&mut n, &[REW])?;
    let (up, down) = moved(&before, &resources(&n));
    let others: Vec<usize> = (0..7).filter(|&i| i != R1).collect();
    let s1 = pre == 0 && count == 1 && forced && acts.is_empty() && extra == 0;
    let s1 = s1 && reward_acts == [ActKind::Dopamine] && up == [R1] && down == others;
    notes.push(format!(
        "1: forced {forced}, reward acts {reward_acts:?}, up {up:?}, down {down:?}"
    ));

    // non-forced firing without reward: the eligible synapses are depressed
    let mut n = single_neuron()?;
    let before = resources(&n);
    let (count, forced, acts) = fired_once(&mut n, &ALL_R)?;
    let extra = quiet(&mut n, 30)?;
    let (up, down) = moved(&before, &resources(&n));
    let s2 = count == 1 && !forced && extra == 0 && acts == [ActKind::AntiHebbian];
    let s2 = s2 && down == ALL_R && up == SILENT;
    notes.push(format!(
        "2: forced {forced}, acts {acts:?}, up {up:?}, down {down:?}"
    ));

    // non-forced firing, then reward with equal rates: nothing changes
    let mut n = single_neuron()?;
    let before = resources(&n);
    let (count, forced, _) = fired_once(&mut n, &ALL_R)?;
    let extra = quiet(&mut n, 2)?;
    let (_, _, reward_acts) = fired_once(&mut n, &[REW])?;
    let after = resources(&n);
    let identical = before
        .iter()
        .zip(&after)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let s3 = count == 1 && !forced && extra == 0 && reward_acts == [ActKind::Dopamine] && identical;
    notes.push(format!(
        "3: reward acts {reward_acts:?}, bit-identical {identical}"
    ));

    check(s1 && s2 && s3, notes.join("; "))
}

fn choreography(runs: &[SeedRun]) -> Result<Check> {
    let mut pass = true;
    let mut lines = Vec::new();
    for (seed, r) in SEEDS.iter().zip(runs) {
        let t = &r.train;
        let wta = t["max_wta_per_window"]
            .as_u64()
            .context("max_wta_per_window")?;
        let dop = t["max_dopamine_per_window"]
            .as_u64()
            .context("max_dopamine_per_window")?;
        let bias = t["earliest_bias_arrival"].as_u64();
        pass &= wta <= 1 && dop <= 1 && bias.is_none_or(|b| b >= 10);
        lines.push(format!(
            "seed {seed}: max WTA {wta}, max dopamine {dop}, earliest BIASGATE tick {}, violations {}/{}/{}",
            bias.map_or("none".into(), |b| b.to_string()),
            t["wta_violations"],
            t["dopamine_violations"],
            t["early_bias_violations"],
        ));
    }
    check(pass, lines.join("; "))
}

fn parser_golden() -> Result<Check> {
    let c = parse_config(DEFAULT_CONFIG)?.config;
    let counts = (c.receptors.len(), c.sections.len(), c.links.len());
    let again = parse_config(&c.to_xml())?.config;
    let round_trip = again == c && again.to_xml() == c.to_xml();
    check(
        counts == (2, 5, 11) && round_trip,
        format!(
            "{} receptors, {} sections, {} links, round trip {round_trip}",
            counts.0, counts.1, counts.2
        ),
    )
}

fn encoder_rate() -> Result<Check> {
    let active = ActiveNodes {
        x: 3,
        y: 17,
        vx: 4,
        vy: 8,
        racket: 29,
        close: Some(12),
    };
    let mut enc = PhaseEncoder::default();
    let mut out = Vec::new();
    for _ in 0..1000 {
        enc.step(&active, &mut out);
    }
    let mut counts = BTreeMap::new();
    for n in out {
        *counts.entry(n).or_insert(0usize) += 1;
    }
    let rate_ok = counts.len() == 6 && counts.values().all(|&c| c == 300);

    let calibration = Calibration::measure(&DataConfig::default(), 11)?;
    let (vx, vy) = sample_velocities(2_000_000, &mut stage_rng(12, "acceptance/held-out"));
    let occupancy: Vec<f64> = bin_occupancy(&calibration.encoder.vx_edges, &vx)
        .into_iter()
        .chain(bin_occupancy(&calibration.encoder.vy_edges, &vy))
        .collect();
    let worst = occupancy
        .iter()
        .map(|o| (o - 1.0 / 9.0).abs())
        .fold(0.0, f64::max);
    check(
        rate_ok && worst <= 0.02,
        format!(
            "spike counts {:?}, worst occupancy deviation {worst:.4}",
            counts.values().collect::<Vec<_>>()
        ),
    )
}

fn determinism(root: &Path, first: &SeedRun) -> Result<Check> {
    let second = run_seed(root, SEEDS[0], "again")?;
    let mut compared = 0;
    let mut differing = Vec::new();
    for sub in ["data", "train", "eval", "oracle"] {
        let (a, b) = (first.dir.join(sub), second.dir.join(sub));
        let mut names: Vec<_> = fs::read_dir(&a)?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<Result<_, _>>()?;
        names.sort();
        for name in names {
            compared += 1;
            if fs::read(a.join(&name))? != fs::read(b.join(&name))? {
                differing.push(format!("{sub}/{}", name.to_string_lossy()));
            }
        }
    }
    let weights = first.dir.join("train").join("weights.csv");
    let dump = |_: ()| colanet(&["weights-dump", "--seed", "1", "--weights", s(&weights)]);
    let dumps_equal = dump(())? == dump(())?;
    check(
        differing.is_empty() && dumps_equal && compared > 0,
        format!("{compared} artifacts compared, differing {differing:?}, weight dumps equal {dumps_equal}"),
    )
}

fn ga_smoke() -> Result<Check> {
    let data = DataConfig {
        seconds: 60.0,
        calibration_seconds: 200.0,
        ..DataConfig::default()
    };
    let dataset = generate_dataset(&data, 21)?;
    let config = colanet_harness::default_config();
    let cfg = GAConfig {
        population: 8,
        repeats: 2,
        genes: vec![Gene::DDopamine, Gene::HebbianRatio, Gene::Alpha],
        ..GAConfig::default()
    };
    let result = genetic_optimize(&cfg, &Hyperparameters::reference(), 21, |h, seed| {
        validation_fitness(&config, &dataset.stream, h, seed, 0.25)
    })?;
    let bests: Vec<f64> = result.history.iter().map(|g| g.best).collect();
    let nonincreasing = bests.windows(2).all(|w| w[1] <= w[0]);
    // generations since the last improvement of the running best
    let mut stale = 0;
    let mut stale_before_end = false;
    for (i, w) in bests.windows(2).enumerate() {
        stale = if w[1] < w[0] { 0 } else { stale + 1 };
        if stale >= 3 && i + 2 < bests.len() {
            stale_before_end = true;
        }
    }
    check(
        nonincreasing && stale == 3 && !stale_before_end,
        format!(
            "{} generations, best per generation {bests:?}, {} genomes evaluated",
            bests.len(),
            result.evaluations
        ),
    )
}

const NAMES: [&str; 11] = [
    "end-to-end reproduction",
    "oracle reproduction",
    "activity-time state machine",
    "resource-to-weight map",
    "resource conservation",
    "three plasticity scenarios",
    "choreography",
    "parser golden document",
    "encoder rate and bin occupancy",
    "determinism",
    "genetic search smoke test",
];

/// Criterion numbers given on the command line; all when none are.
fn selected() -> Vec<usize> {
    let ids: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    if ids.is_empty() {
        (1..=NAMES.len()).collect()
    } else {
        ids
    }
}

fn main() -> ExitCode {
    let ids = selected();
    let root = tempfile::tempdir().expect("temp dir");
    let needs_runs = ids.iter().any(|id| [1, 2, 7, 10].contains(id));
    let started = Instant::now();
    let runs: Result<Vec<SeedRun>> = if needs_runs {
        SEEDS
            .iter()
            .map(|&seed| run_seed(root.path(), seed, "seed"))
            .collect()
    } else {
        Ok(Vec::new())
    };
    let elapsed = started.elapsed();
    let with_runs = |f: &dyn Fn(&[SeedRun]) -> Result<Check>| match &runs {
        Ok(r) => f(r),
        Err(e) => Err(anyhow::anyhow!("pipeline runs failed: {e:#}")),
    };

    let mut unexpected = 0;
    for id in ids {
        let result = match id {
            1 => with_runs(&|r| end_to_end(r, elapsed)),
            2 => with_runs(&oracle),
            3 => state_machine(),
            4 => weight_map(),
            5 => conservation(),
            6 => three_scenarios(),
            7 => with_runs(&choreography),
            8 => parser_golden(),
            9 => encoder_rate(),
            10 => with_runs(&|r| determinism(root.path(), &r[0])),
            11 => ga_smoke(),
            _ => continue,
        };
        let (pass, detail) = match result {
            Ok(c) => (c.pass, c.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        let tag = match (pass, KNOWN_FAILING.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id:>2} {tag}: {}: {detail}", NAMES[id - 1]);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
