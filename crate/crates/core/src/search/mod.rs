//! Optimizers over the co-design space and the machinery they share:
//! batch evaluation, the sample ledger and best-so-far tracking.
//!
//! Any optimizer plugs in by implementing [`Optimizer`]: it proposes
//! genomes, scores them through [`Problem::evaluate_batch`] (which debits
//! the ledger) and reports through a [`Tracker`]. Evaluation is pure, so
//! batches may be scored on any number of threads without changing
//! results.

pub mod baselines;
pub mod digamma;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{evaluate, CostReport, Objective};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::space::{decode, Genome, Template};
use crate::workload::Model;

pub use baselines::{
    grid_search_hw, hw_presets, mapping_opt_fixed_hw, random_search, std_ga, HwPreset, PresetKind,
};
pub use digamma::{
    crossover, mutate_order, mutate_parallel, mutate_pe, mutate_tile, select, GaConfig,
};

/// Optional restriction of the design space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Constraint {
    #[default]
    None,
    /// Spatial genes frozen at `(pi_l1, pi_l2)`; only mappings evolve.
    FixedHw { pi_l1: u64, pi_l2: u64 },
    /// Mappings follow the template; only the spatial genes evolve.
    FixedMapping(Template),
}

/// What is being optimized.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub model: &'a Model,
    pub platform: &'a Platform,
    pub objective: Objective,
}

impl<'a> Problem<'a> {
    pub fn new(model: &'a Model, platform: &'a Platform, objective: Objective) -> Self {
        Self {
            model,
            platform,
            objective,
        }
    }

    pub fn evaluate(&self, genome: &Genome) -> CostReport {
        evaluate(
            &decode(genome, self.model),
            self.model,
            self.platform,
            self.objective,
        )
    }

    /// Scores a batch after debiting one sample per genome. Output order
    /// follows input order.
    pub fn evaluate_batch(
        &self,
        genomes: Vec<Genome>,
        ledger: &mut SampleLedger,
    ) -> Result<Vec<Individual>> {
        ledger.debit(genomes.len() as u64)?;
        Ok(genomes
            .into_par_iter()
            .map(|genome| {
                let report = self.evaluate(&genome);
                Individual { genome, report }
            })
            .collect())
    }
}

#[derive(Clone, Debug)]
pub struct Individual {
    pub genome: Genome,
    pub report: CostReport,
}

/// Orders individuals best first: higher fitness, then smaller area.
pub fn rank(a: &Individual, b: &Individual) -> Ordering {
    b.report
        .fitness
        .total_cmp(&a.report.fitness)
        .then(a.report.area_mm2.total_cmp(&b.report.area_mm2))
}

/// Counts evaluations against a fixed sampling budget.
#[derive(Clone, Copy, Debug)]
pub struct SampleLedger {
    budget: u64,
    used: u64,
}

impl SampleLedger {
    pub fn new(budget: u64) -> Self {
        Self { budget, used: 0 }
    }

    pub fn debit(&mut self, n: u64) -> Result<()> {
        if self.used + n > self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.used += n;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub generation: u64,
    pub samples_used: u64,
    pub best_fitness: f64,
    pub median_fitness: f64,
    pub best_area_mm2: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_genome: Genome,
    pub best_report: CostReport,
    pub trace: Vec<TraceRow>,
    pub samples_used: u64,
}

/// Keeps the best individual ever seen and one trace row per batch.
#[derive(Default)]
pub struct Tracker {
    best: Option<Individual>,
    trace: Vec<TraceRow>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

impl Tracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, generation: u64, batch: &[Individual], ledger: &SampleLedger) {
        for ind in batch {
            let better = match &self.best {
                None => true,
                Some(best) => rank(ind, best) == Ordering::Less,
            };
            if better {
                self.best = Some(ind.clone());
            }
        }
        let Some(best) = &self.best else { return };
        let mut fitness: Vec<f64> = batch.iter().map(|i| i.report.fitness).collect();
        let median_fitness = if fitness.is_empty() {
            best.report.fitness
        } else {
            median(&mut fitness)
        };
        self.trace.push(TraceRow {
            generation,
            samples_used: ledger.used(),
            best_fitness: best.report.fitness,
            median_fitness,
            best_area_mm2: best.report.area_mm2,
        });
    }

    pub fn best(&self) -> Option<&Individual> {
        self.best.as_ref()
    }

    /// Returns the best valid design, or `NoValidDesign` when nothing
    /// sampled met the area budget.
    pub fn finish(self, ledger: &SampleLedger, platform: &Platform) -> Result<SearchResult> {
        let best = self.best.ok_or(Error::NoValidDesign {
            overshoot_pct: f64::INFINITY,
        })?;
        if !best.report.valid {
            return Err(Error::NoValidDesign {
                overshoot_pct: best.report.overshoot(platform) * 100.0,
            });
        }
        Ok(SearchResult {
            best_genome: best.genome,
            best_report: best.report,
            trace: self.trace,
            samples_used: ledger.used(),
        })
    }
}

/// A search strategy over one [`Problem`].
pub trait Optimizer {
    fn name(&self) -> String;
    fn search(&self, problem: &Problem) -> Result<SearchResult>;
}
