//! Named search schemes and the scheme × model × seed comparison table.

use std::fmt;
use std::str::FromStr;

use crate::cost::Objective;
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::search::baselines::{
    grid_search_hw, hw_presets, mapping_opt_fixed_hw, random_search, std_ga,
};
use crate::search::digamma::{self, GaConfig};
use crate::search::{Constraint, PresetKind, Problem, SearchResult};
use crate::space::Template;
use crate::workload::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    DiGamma,
    StdGa,
    Random,
    Grid(Template),
    FixedHw(PresetKind),
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::DiGamma => "digamma".into(),
            Scheme::StdGa => "stdga".into(),
            Scheme::Random => "random".into(),
            Scheme::Grid(t) => format!("grid-{t}"),
            Scheme::FixedHw(k) => format!("fixedhw-{k}"),
        }
    }

    pub fn template(&self) -> Option<Template> {
        match self {
            Scheme::Grid(t) => Some(*t),
            _ => None,
        }
    }

    /// Runs this scheme. `cfg` supplies budget, population and seed;
    /// `constraint` applies to the DiGamma scheme only.
    pub fn run(
        &self,
        problem: &Problem,
        cfg: &GaConfig,
        constraint: Constraint,
    ) -> Result<SearchResult> {
        if constraint != Constraint::None && *self != Scheme::DiGamma {
            return Err(Error::Config(format!(
                "HW or mapping constraints apply only to the digamma scheme, not {}",
                self.name()
            )));
        }
        match self {
            Scheme::DiGamma => digamma::run(problem, cfg, constraint),
            Scheme::StdGa => std_ga(problem, cfg),
            Scheme::Random => random_search(problem, cfg.sample_budget, cfg.rng_seed),
            Scheme::Grid(t) => grid_search_hw(problem, *t, None, cfg.sample_budget),
            Scheme::FixedHw(kind) => {
                let preset = hw_presets(problem.platform)
                    .into_iter()
                    .find(|p| p.kind == *kind)
                    .expect("every preset kind is bundled");
                mapping_opt_fixed_hw(problem, preset.pi_l1, preset.pi_l2, cfg)
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// Accepts `grid-dla` and `grid(dla)` forms alike.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['(', ')'], "-");
        let norm = norm.trim_end_matches('-');
        let bad = |why: String| Error::Parse(format!("scheme '{s}': {why}"));
        match norm {
            "digamma" => Ok(Scheme::DiGamma),
            "stdga" => Ok(Scheme::StdGa),
            "random" => Ok(Scheme::Random),
            _ => {
                if let Some(t) = norm.strip_prefix("grid-") {
                    t.parse().map(Scheme::Grid).map_err(bad)
                } else if let Some(k) = norm.strip_prefix("fixedhw-") {
                    k.parse().map(Scheme::FixedHw).map_err(bad)
                } else {
                    Err(bad(
                        "expected digamma, stdga, random, grid-<dla|shi|eye> or fixedhw-<buffer|medium|compute>"
                            .into(),
                    ))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub scheme: Scheme,
    pub model: String,
    pub seed: u64,
    /// Best objective value found, or the reason the run produced none.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct CompareTable {
    pub schemes: Vec<Scheme>,
    pub models: Vec<String>,
    pub seeds: Vec<u64>,
    pub objective: Objective,
    pub cells: Vec<Cell>,
}

/// Runs every (scheme, model, seed) cell under the budget and population
/// of `base`. Failed runs become N/A cells.
pub fn compare(
    schemes: &[Scheme],
    models: &[Model],
    platform: &Platform,
    objective: Objective,
    base: &GaConfig,
    seeds: &[u64],
) -> Result<CompareTable> {
    if schemes.len() < 2 {
        return Err(Error::Config("compare needs at least two schemes".into()));
    }
    if models.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "compare needs at least one model and one seed".into(),
        ));
    }
    let mut cells = Vec::new();
    for model in models {
        let problem = Problem::new(model, platform, objective);
        for &scheme in schemes {
            for &seed in seeds {
                let cfg = GaConfig {
                    rng_seed: seed,
                    ..base.clone()
                };
                let outcome = scheme
                    .run(&problem, &cfg, Constraint::None)
                    .map(|r| r.best_report.objective_value)
                    .map_err(|e| e.to_string());
                cells.push(Cell {
                    scheme,
                    model: model.name.clone(),
                    seed,
                    outcome,
                });
            }
        }
    }
    Ok(CompareTable {
        schemes: schemes.to_vec(),
        models: models.iter().map(|m| m.name.clone()).collect(),
        seeds: seeds.to_vec(),
        objective,
        cells,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn geomean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

impl CompareTable {
    /// Median over seeds that produced a result.
    pub fn median(&self, scheme: Scheme, model: &str) -> Option<f64> {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.scheme == scheme && c.model == model)
            .filter_map(|c| c.outcome.as_ref().ok().copied())
            .collect();
        median(&vals)
    }

    /// Geomean of the per-model medians; `None` if any model has none.
    pub fn geomean(&self, scheme: Scheme) -> Option<f64> {
        let medians: Option<Vec<f64>> =
            self.models.iter().map(|m| self.median(scheme, m)).collect();
        geomean(&medians?)
    }

    /// `geomean(scheme) / geomean(baseline)`; below 1 means `scheme` is better.
    pub fn normalized(&self, scheme: Scheme, baseline: Scheme) -> Option<f64> {
        Some(self.geomean(scheme)? / self.geomean(baseline)?)
    }

    /// Plain-text table: one row per cell, then per-scheme summaries
    /// normalized to `baseline` (the first scheme when `None`).
    pub fn render(&self, baseline: Option<Scheme>) -> String {
        use std::fmt::Write;
        let baseline = baseline.unwrap_or(self.schemes[0]);
        let fmt_opt = |v: Option<f64>| v.map_or("N/A".to_string(), |v| format!("{v:.6e}"));
        let mut out = String::new();
        writeln!(out, "scheme,model,seed,best_{}", self.objective).unwrap();
        for c in &self.cells {
            let val = match &c.outcome {
                Ok(v) => format!("{v:.6e}"),
                Err(_) => "N/A".into(),
            };
            writeln!(out, "{},{},{},{}", c.scheme, c.model, c.seed, val).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "scheme,geomean,normalized_to_{baseline}").unwrap();
        for &s in &self.schemes {
            let ratio = self
                .normalized(s, baseline)
                .map_or("N/A".to_string(), |r| format!("{r:.4}"));
            writeln!(out, "{},{},{}", s, fmt_opt(self.geomean(s)), ratio).unwrap();
        }
        out
    }
}
