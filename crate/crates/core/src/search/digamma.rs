//! Domain-aware genetic algorithm over shared HW genes and per-layer
//! mapping chromosomes.
//!
//! Each generation samples exactly `population_size` fresh genomes. The
//! first generation is random; later ones are bred from the current elites
//! by whole-chromosome crossover followed by the tile, order, parallel-dim
//! and PE mutations. Elites are re-selected from the previous elites plus
//! the new batch, so the best-so-far fitness never decreases.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    rank, Constraint, Individual, Optimizer, Problem, SampleLedger, SearchResult, Tracker,
};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::space::{
    random_chromosome, random_pi, repair, repair_pi, template_mapping, Dim, Genome,
    MappingChromosome, Template,
};
use crate::workload::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: u64,
    pub sample_budget: u64,
    pub elite_ratio: f64,
    pub crossover_rate: f64,
    pub tile_rate: f64,
    pub order_rate: f64,
    pub parallel_rate: f64,
    pub pe_rate: f64,
    /// Per-position resample rate of the standard GA baseline;
    /// `1 / genome length` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gene_rate: Option<f64>,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            sample_budget: 40_000,
            elite_ratio: 0.05,
            crossover_rate: 0.7,
            tile_rate: 0.1,
            order_rate: 0.1,
            parallel_rate: 0.1,
            pe_rate: 0.1,
            gene_rate: None,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: GaConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("GA config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.elite_ratio > 0.0 && self.elite_ratio < 1.0) {
            return bad(format!(
                "elite_ratio must be in (0, 1), got {}",
                self.elite_ratio
            ));
        }
        let rates = [
            ("crossover_rate", Some(self.crossover_rate)),
            ("tile_rate", Some(self.tile_rate)),
            ("order_rate", Some(self.order_rate)),
            ("parallel_rate", Some(self.parallel_rate)),
            ("pe_rate", Some(self.pe_rate)),
            ("gene_rate", self.gene_rate),
        ];
        for (name, rate) in rates {
            if let Some(r) = rate {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("{name} must be in [0, 1], got {r}"));
                }
            }
        }
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            ));
        }
        if self.population_size > self.sample_budget {
            return bad(format!(
                "population_size {} exceeds sample_budget {}",
                self.population_size, self.sample_budget
            ));
        }
        Ok(())
    }

    pub fn generations(&self) -> u64 {
        self.sample_budget / self.population_size
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_ratio * self.population_size as f64).ceil() as usize).max(1)
    }
}

/// Truncation selection: the best `n_elites` by fitness, ties broken by
/// smaller area and then by position in `population`.
pub fn select(population: &[Individual], n_elites: usize) -> Vec<Individual> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| rank(&population[a], &population[b]).then(a.cmp(&b)));
    idx.into_iter()
        .take(n_elites)
        .map(|i| population[i].clone())
        .collect()
}

/// Per-layer uniform crossover of whole chromosomes; the spatial genes
/// come jointly from one parent.
pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    model: &Model,
    platform: &Platform,
    rng: &mut R,
) -> Genome {
    let (pi_l1, pi_l2) = if rng.gen_bool(0.5) {
        (a.pi_l1, a.pi_l2)
    } else {
        (b.pi_l1, b.pi_l2)
    };
    let mappings = a
        .mappings
        .iter()
        .zip(&b.mappings)
        .map(|(ca, cb)| {
            if rng.gen_bool(0.5) {
                ca.clone()
            } else {
                cb.clone()
            }
        })
        .collect();
    repair(
        Genome {
            pi_l2,
            pi_l1,
            mappings,
        },
        model,
        platform,
    )
}

fn each_level(ch: &mut MappingChromosome) -> [&mut crate::space::LevelGene; 2] {
    [&mut ch.l2, &mut ch.l1]
}

/// Resamples one tile per mutated level from `1..=dim`.
pub fn mutate_tile<R: Rng + ?Sized>(
    mut genome: Genome,
    model: &Model,
    platform: &Platform,
    rate: f64,
    rng: &mut R,
) -> Genome {
    if rate <= 0.0 {
        return genome;
    }
    for (ch, layer) in genome.mappings.iter_mut().zip(&model.layers) {
        for level in each_level(ch) {
            if rng.gen_bool(rate) {
                let d = Dim::ALL[rng.gen_range(0..6)];
                level.tiles[d.index()] = rng.gen_range(1..=layer.dim(d));
            }
        }
    }
    repair(genome, model, platform)
}

/// Swaps two loops of each mutated level's order.
pub fn mutate_order<R: Rng + ?Sized>(mut genome: Genome, rate: f64, rng: &mut R) -> Genome {
    if rate <= 0.0 {
        return genome;
    }
    for ch in &mut genome.mappings {
        for level in each_level(ch) {
            if rng.gen_bool(rate) {
                let i = rng.gen_range(0..6);
                let j = (i + rng.gen_range(1..6)) % 6;
                level.order.swap(i, j);
            }
        }
    }
    genome
}

/// Resamples the parallel dim of each mutated level.
pub fn mutate_parallel<R: Rng + ?Sized>(mut genome: Genome, rate: f64, rng: &mut R) -> Genome {
    if rate <= 0.0 {
        return genome;
    }
    for ch in &mut genome.mappings {
        for level in each_level(ch) {
            if rng.gen_bool(rate) {
                level.parallel_dim = Dim::ALL[rng.gen_range(0..6)];
            }
        }
    }
    genome
}

/// Perturbs the PE array: doubles or halves one side, or resamples both.
pub fn mutate_pe<R: Rng + ?Sized>(
    mut genome: Genome,
    model: &Model,
    platform: &Platform,
    rate: f64,
    rng: &mut R,
) -> Genome {
    if rate <= 0.0 || !rng.gen_bool(rate) {
        return genome;
    }
    let cap = platform.pi_cap();
    let double = |v: u64| if v * 2 <= cap { v * 2 } else { v };
    let halve = |v: u64| (v / 2).max(1);
    let (pi_l1, pi_l2) = match rng.gen_range(0..5) {
        0 => (double(genome.pi_l1), genome.pi_l2),
        1 => (halve(genome.pi_l1), genome.pi_l2),
        2 => (genome.pi_l1, double(genome.pi_l2)),
        3 => (genome.pi_l1, halve(genome.pi_l2)),
        _ => random_pi(platform, rng),
    };
    genome.pi_l1 = pi_l1;
    genome.pi_l2 = pi_l2;
    repair(genome, model, platform)
}

fn templated(model: &Model, template: Template, pi_l1: u64, pi_l2: u64) -> Vec<MappingChromosome> {
    model
        .layers
        .iter()
        .map(|layer| template_mapping(template, layer, pi_l1, pi_l2))
        .collect()
}

fn initial_genome<R: Rng + ?Sized>(
    model: &Model,
    platform: &Platform,
    constraint: Constraint,
    rng: &mut R,
) -> Genome {
    let (pi_l1, pi_l2) = match constraint {
        Constraint::FixedHw { pi_l1, pi_l2 } => (pi_l1, pi_l2),
        _ => random_pi(platform, rng),
    };
    let mappings = match constraint {
        Constraint::FixedMapping(t) => templated(model, t, pi_l1, pi_l2),
        _ => model
            .layers
            .iter()
            .map(|layer| random_chromosome(layer, pi_l1, pi_l2, rng))
            .collect(),
    };
    Genome {
        pi_l2,
        pi_l1,
        mappings,
    }
}

fn check_constraint(constraint: Constraint, platform: &Platform) -> Result<()> {
    if let Constraint::FixedHw { pi_l1, pi_l2 } = constraint {
        if pi_l1 == 0 || pi_l2 == 0 || repair_pi(pi_l1, pi_l2, platform) != (pi_l1, pi_l2) {
            return Err(Error::Config(format!(
                "fixed HW {pi_l1}x{pi_l2} exceeds the platform's PE limits"
            )));
        }
    }
    Ok(())
}

fn breed<R: Rng + ?Sized>(
    elites: &[Individual],
    problem: &Problem,
    cfg: &GaConfig,
    constraint: Constraint,
    rng: &mut R,
) -> Genome {
    let (model, platform) = (problem.model, problem.platform);
    let a = &elites.choose(rng).expect("elites").genome;
    let b = &elites.choose(rng).expect("elites").genome;
    let mut child = if rng.gen_bool(cfg.crossover_rate) {
        crossover(a, b, model, platform, rng)
    } else {
        a.clone()
    };
    match constraint {
        Constraint::FixedMapping(t) => {
            child = mutate_pe(child, model, platform, cfg.pe_rate, rng);
            child.mappings = templated(model, t, child.pi_l1, child.pi_l2);
        }
        Constraint::FixedHw { .. } | Constraint::None => {
            child = mutate_tile(child, model, platform, cfg.tile_rate, rng);
            child = mutate_order(child, cfg.order_rate, rng);
            child = mutate_parallel(child, cfg.parallel_rate, rng);
            if constraint == Constraint::None {
                child = mutate_pe(child, model, platform, cfg.pe_rate, rng);
            }
        }
    }
    repair(child, model, platform)
}

/// Runs the GA until `generations * population_size` samples are spent.
pub fn run(problem: &Problem, cfg: &GaConfig, constraint: Constraint) -> Result<SearchResult> {
    cfg.validate()?;
    check_constraint(constraint, problem.platform)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = cfg.population_size as usize;
    let n_elites = cfg.elite_count();
    let mut ledger = SampleLedger::new(cfg.sample_budget);
    let mut tracker = Tracker::new();

    let first: Vec<Genome> = (0..n)
        .map(|_| initial_genome(problem.model, problem.platform, constraint, &mut rng))
        .collect();
    let batch = problem.evaluate_batch(first, &mut ledger)?;
    tracker.record(0, &batch, &ledger);
    let mut elites = select(&batch, n_elites);

    for generation in 1..cfg.generations() {
        let children: Vec<Genome> = (0..n)
            .map(|_| breed(&elites, problem, cfg, constraint, &mut rng))
            .collect();
        let batch = problem.evaluate_batch(children, &mut ledger)?;
        tracker.record(generation, &batch, &ledger);
        elites.extend(batch);
        elites = select(&elites, n_elites);
    }
    tracker.finish(&ledger, problem.platform)
}

/// The co-optimizer as an [`Optimizer`].
#[derive(Clone, Debug)]
pub struct DiGamma {
    pub config: GaConfig,
    pub constraint: Constraint,
}

impl Optimizer for DiGamma {
    fn name(&self) -> String {
        "digamma".into()
    }

    fn search(&self, problem: &Problem) -> Result<SearchResult> {
        run(problem, &self.config, self.constraint)
    }
}
