//! Generational genetic search over the hyperparameters.
//!
//! Fitness is minimized. Each individual is scored by the mean of
//! `repeats` evaluations whose seeds depend only on the master seed and the
//! repeat number, so equal genomes score equally and are evaluated once.
//! The top `elitism` share is copied unchanged; the rest are bred by binary
//! tournament and uniform crossover, and with probability `mutation` one
//! searched gene is redrawn uniformly from its range.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::{Gene, Hyperparameters};
use crate::seeds::{derive_seed, stage_rng, GA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population: usize,
    /// Probability that an offspring gets one gene redrawn.
    pub mutation: f64,
    /// Share of the population copied unchanged into the next generation.
    pub elitism: f64,
    /// Stop after this many generations without a better best fitness.
    pub stale_generations: usize,
    pub repeats: usize,
    pub max_generations: Option<usize>,
    /// Genes under search; the others keep their base values.
    pub genes: Vec<Gene>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population: 100,
            mutation: 0.5,
            elitism: 0.1,
            stale_generations: 3,
            repeats: 4,
            max_generations: None,
            genes: Gene::ALL.to_vec(),
            jobs: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| {
            Err(Error::Hyperparameter {
                name: "ga".into(),
                message: message.into(),
            })
        };
        if self.population == 0 || self.repeats == 0 || self.stale_generations == 0 {
            return bad("population, repeats and stale generations must be positive");
        }
        if !(0.0..=1.0).contains(&self.mutation) {
            return bad("mutation probability outside [0, 1]");
        }
        if !(self.elitism > 0.0 && self.elitism < 1.0) {
            return bad("elitism outside (0, 1)");
        }
        if self.genes.is_empty() {
            return bad("no genes to search");
        }
        Ok(())
    }

    pub fn elites(&self) -> usize {
        ((self.population as f64 * self.elitism).round() as usize).clamp(1, self.population)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GAResult {
    pub best: Hyperparameters,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    /// Distinct genomes evaluated.
    pub evaluations: usize,
}

type Key = [u64; 6];

fn key(h: &Hyperparameters) -> Key {
    Gene::ALL.map(|g| h.get(g).to_bits())
}

fn draw<R: Rng>(gene: Gene, rng: &mut R) -> f64 {
    let (lo, hi) = gene.range();
    if gene.is_integer() {
        rng.gen_range(lo as usize..=hi as usize) as f64
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Searches from a random population around `base`; individual 0 is `base`.
pub fn genetic_optimize<F>(
    cfg: &GAConfig,
    base: &Hyperparameters,
    seed: u64,
    eval: F,
) -> Result<GAResult>
where
    F: Fn(&Hyperparameters, u64) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut rng = stage_rng(seed, "ga/init");
    let mut population = vec![*base];
    while population.len() < cfg.population {
        let mut h = *base;
        for &g in &cfg.genes {
            h.put(g, draw(g, &mut rng));
        }
        population.push(h);
    }
    genetic_optimize_from(cfg, population, seed, eval)
}

/// Searches from the given initial population.
pub fn genetic_optimize_from<F>(
    cfg: &GAConfig,
    mut population: Vec<Hyperparameters>,
    seed: u64,
    eval: F,
) -> Result<GAResult>
where
    F: Fn(&Hyperparameters, u64) -> Result<f64> + Sync,
{
    cfg.validate()?;
    if population.len() != cfg.population {
        return Err(Error::Hyperparameter {
            name: "ga".into(),
            message: format!(
                "{} initial individuals for population {}",
                population.len(),
                cfg.population
            ),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Hyperparameter {
            name: "jobs".into(),
            message: e.to_string(),
        })?;
    let repeat_seeds: Vec<u64> = (0..cfg.repeats)
        .map(|k| derive_seed(seed, &format!("{GA}/repeat/{k}")))
        .collect();
    let mut rng = stage_rng(seed, GA);
    let mut cache: HashMap<Key, f64> = HashMap::new();
    let mut history = Vec::new();
    let mut best: Option<(f64, Hyperparameters)> = None;
    let mut stale = 0;

    for generation in 0.. {
        let mut fresh: Vec<Hyperparameters> = Vec::new();
        for h in &population {
            if !cache.contains_key(&key(h)) && !fresh.iter().any(|f| key(f) == key(h)) {
                h.validate()?;
                fresh.push(*h);
            }
        }
        let scored: Vec<Result<(Key, f64)>> = pool.install(|| {
            fresh
                .par_iter()
                .map(|h| {
                    let total = repeat_seeds
                        .iter()
                        .map(|&s| eval(h, s))
                        .sum::<Result<f64>>()?;
                    Ok((key(h), total / repeat_seeds.len() as f64))
                })
                .collect()
        });
        for r in scored {
            let (k, f) = r?;
            cache.insert(k, f);
        }
        let fitness: Vec<f64> = population.iter().map(|h| cache[&key(h)]).collect();
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let gen_best = fitness[order[0]];
        let mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
        history.push(GenerationStats {
            generation,
            best: gen_best,
            mean,
        });
        log::info!("generation {generation}: best {gen_best:.4}, mean {mean:.4}");
        match best {
            Some((b, _)) if gen_best >= b => stale += 1,
            _ => {
                best = Some((gen_best, population[order[0]]));
                stale = 0;
            }
        }
        let out_of_budget = cfg.max_generations.is_some_and(|m| generation + 1 >= m);
        if stale >= cfg.stale_generations || out_of_budget {
            break;
        }

        let mut next: Vec<Hyperparameters> = order[..cfg.elites()]
            .iter()
            .map(|&i| population[i])
            .collect();
        let tournament = |rng: &mut rand_chacha::ChaCha8Rng| {
            let a = rng.gen_range(0..population.len());
            let b = rng.gen_range(0..population.len());
            if fitness[b] < fitness[a] {
                b
            } else {
                a
            }
        };
        while next.len() < cfg.population {
            let (pa, pb) = (
                population[tournament(&mut rng)],
                population[tournament(&mut rng)],
            );
            let mut child = pa;
            for g in Gene::ALL {
                if rng.gen_bool(0.5) {
                    child.put(g, pb.get(g));
                }
            }
            if rng.gen_bool(cfg.mutation) {
                let g = *cfg.genes.choose(&mut rng).expect("validated non-empty");
                child.put(g, draw(g, &mut rng));
            }
            next.push(child);
        }
        population = next;
    }

    let (best_fitness, best) = best.expect("at least one generation ran");
    Ok(GAResult {
        best,
        best_fitness,
        history,
        evaluations: cache.len(),
    })
}

/// `generation,best,mean` CSV.
pub fn write_history(path: &Path, history: &[GenerationStats]) -> Result<()> {
    let err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for h in history {
        w.serialize(h).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(population: usize, mutation: f64) -> GAConfig {
        GAConfig {
            population,
            mutation,
            repeats: 2,
            genes: vec![Gene::WMax, Gene::Alpha, Gene::HebbianRatio],
            jobs: 2,
            ..GAConfig::default()
        }
    }

    #[test]
    fn identical_population_without_mutation_stops_after_three_stale_generations() {
        let cfg = small(6, 0.0);
        let pop = vec![Hyperparameters::reference(); 6];
        let r = genetic_optimize_from(&cfg, pop, 1, |h, _| Ok(h.w_max)).unwrap();
        assert_eq!(r.history.len(), 4);
        assert!(r.history.iter().all(|g| g.best == 0.328 && g.mean == 0.328));
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn best_fitness_never_rises() {
        assert_eq!(GAConfig::default().elites(), 10);
        let cfg = small(10, 1.0);
        let r = genetic_optimize(&cfg, &Hyperparameters::reference(), 5, |h, s| {
            Ok((h.w_max - 0.1).abs() + (s % 7) as f64 * 1e-3)
        })
        .unwrap();
        for w in r.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
        assert!((r.best.w_max - 0.1).abs() < 0.328 - 0.1);
    }

    #[test]
    fn search_is_deterministic() {
        let cfg = small(8, 0.5);
        let f = |h: &Hyperparameters, s: u64| Ok(h.alpha * h.w_max + (s % 3) as f64);
        let a = genetic_optimize(&cfg, &Hyperparameters::reference(), 9, f).unwrap();
        let b = genetic_optimize(&cfg, &Hyperparameters::reference(), 9, f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_settings() {
        let mut cfg = small(4, 0.5);
        cfg.elitism = 1.0;
        assert!(genetic_optimize(&cfg, &Hyperparameters::reference(), 0, |_, _| Ok(0.0)).is_err());
    }
}
