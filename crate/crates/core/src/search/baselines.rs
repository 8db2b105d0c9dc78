//! Comparison schemes: random search, a structure-agnostic GA over the
//! flat genome, grid search over the PE array with template mappings, and
//! mapping-only search on hand-picked arrays.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::digamma::{self, select, GaConfig};
use super::{Constraint, Problem, SampleLedger, SearchResult, Tracker};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::space::{
    flatten, gene_domains, random_genome, template_mapping, unflatten, Genome, Template,
};

const RANDOM_BATCH: u64 = 100;

/// Samples `budget` independent random genomes in batches of 100.
pub fn random_search(problem: &Problem, budget: u64, seed: u64) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::Config("sample budget must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = SampleLedger::new(budget);
    let mut tracker = Tracker::new();
    let mut generation = 0;
    while ledger.remaining() > 0 {
        let n = ledger.remaining().min(RANDOM_BATCH);
        let genomes = (0..n)
            .map(|_| random_genome(problem.model, problem.platform, &mut rng))
            .collect();
        let batch = problem.evaluate_batch(genomes, &mut ledger)?;
        tracker.record(generation, &batch, &ledger);
        generation += 1;
    }
    tracker.finish(&ledger, problem.platform)
}

/// Standard GA on the flat integer vector: single-point crossover and
/// per-position uniform resampling, with the same selection and budget
/// accounting as the domain-aware GA.
pub fn std_ga(problem: &Problem, cfg: &GaConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let (model, platform) = (problem.model, problem.platform);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let domains = gene_domains(model, platform);
    let len = domains.len();
    let gene_rate = cfg.gene_rate.unwrap_or(1.0 / len as f64);
    let n = cfg.population_size as usize;
    let mut ledger = SampleLedger::new(cfg.sample_budget);
    let mut tracker = Tracker::new();

    let first: Vec<Genome> = (0..n)
        .map(|_| random_genome(model, platform, &mut rng))
        .collect();
    let batch = problem.evaluate_batch(first, &mut ledger)?;
    tracker.record(0, &batch, &ledger);
    let mut elites = select(&batch, cfg.elite_count());

    for generation in 1..cfg.generations() {
        let mut children = Vec::with_capacity(n);
        for _ in 0..n {
            let a = flatten(&elites.choose(&mut rng).expect("elites").genome);
            let b = flatten(&elites.choose(&mut rng).expect("elites").genome);
            let mut child = if rng.gen_bool(cfg.crossover_rate) {
                let cut = rng.gen_range(1..len);
                a[..cut].iter().chain(&b[cut..]).copied().collect()
            } else {
                a
            };
            for (gene, domain) in child.iter_mut().zip(&domains) {
                if gene_rate > 0.0 && rng.gen_bool(gene_rate) {
                    *gene = domain.sample(&mut rng);
                }
            }
            children.push(unflatten(&child, model, platform)?);
        }
        let batch = problem.evaluate_batch(children, &mut ledger)?;
        tracker.record(generation, &batch, &ledger);
        elites.extend(batch);
        elites = select(&elites, cfg.elite_count());
    }
    tracker.finish(&ledger, platform)
}

/// Evaluates every `(pi_l1, pi_l2)` in `grid × grid` that fits the
/// platform, with `template` mappings on each layer. `grid` defaults to the
/// platform's power-of-two choices.
pub fn grid_search_hw(
    problem: &Problem,
    template: Template,
    grid: Option<&[u64]>,
    budget: u64,
) -> Result<SearchResult> {
    let (model, platform) = (problem.model, problem.platform);
    let default_grid = platform.pi_choices();
    let grid = grid.unwrap_or(&default_grid);
    if grid.is_empty() {
        return Err(Error::Config("grid must not be empty".into()));
    }
    let cap = platform.pi_cap();
    let pairs: Vec<(u64, u64)> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| {
            a >= 1 && b >= 1 && a <= cap && b <= cap && a.saturating_mul(b) <= platform.max_pes
        })
        .collect();
    if pairs.len() as u64 > budget {
        return Err(Error::Config(format!(
            "grid has {} points but the sample budget is {budget}",
            pairs.len()
        )));
    }
    let genomes = pairs
        .iter()
        .map(|&(pi_l1, pi_l2)| Genome {
            pi_l2,
            pi_l1,
            mappings: model
                .layers
                .iter()
                .map(|layer| template_mapping(template, layer, pi_l1, pi_l2))
                .collect(),
        })
        .collect();
    let mut ledger = SampleLedger::new(budget);
    let mut tracker = Tracker::new();
    let batch = problem.evaluate_batch(genomes, &mut ledger)?;
    tracker.record(0, &batch, &ledger);
    tracker.finish(&ledger, platform)
}

/// Mapping-only search with the PE array frozen at `(pi_l1, pi_l2)`.
pub fn mapping_opt_fixed_hw(
    problem: &Problem,
    pi_l1: u64,
    pi_l2: u64,
    cfg: &GaConfig,
) -> Result<SearchResult> {
    digamma::run(problem, cfg, Constraint::FixedHw { pi_l1, pi_l2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetKind {
    Buffer,
    Medium,
    Compute,
}

impl PresetKind {
    pub const ALL: [PresetKind; 3] = [PresetKind::Buffer, PresetKind::Medium, PresetKind::Compute];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Buffer => "buffer",
            PresetKind::Medium => "medium",
            PresetKind::Compute => "compute",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}' (expected buffer, medium or compute)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HwPreset {
    pub kind: PresetKind,
    pub pi_l1: u64,
    pub pi_l2: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetSet {
    #[allow(dead_code)]
    name: String,
    area_budget: f64,
    buffer: [u64; 2],
    medium: [u64; 2],
    compute: [u64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    set: Vec<PresetSet>,
}

const PRESETS: &str = include_str!("../../data/presets.toml");

/// The three bundled arrays for the preset set whose area budget is
/// closest (in log scale) to the platform's.
pub fn hw_presets(platform: &Platform) -> Vec<HwPreset> {
    let file: PresetFile = toml::from_str(PRESETS).expect("bundled presets are valid");
    let distance = |s: &PresetSet| (s.area_budget.ln() - platform.area_budget.ln()).abs();
    let set = file
        .set
        .iter()
        .min_by(|a, b| distance(a).total_cmp(&distance(b)))
        .expect("at least one preset set");
    [
        (PresetKind::Buffer, set.buffer),
        (PresetKind::Medium, set.medium),
        (PresetKind::Compute, set.compute),
    ]
    .into_iter()
    .map(|(kind, [pi_l1, pi_l2])| HwPreset { kind, pi_l1, pi_l2 })
    .collect()
}
