//! Result artifacts: the JSON design report, the CSV search trace and a
//! plain-text design dump. The same builder serves fresh runs and
//! re-loaded checkpoints, so both produce identical numbers.

use std::fmt::Write;

use serde::Serialize;

use crate::cost::{evaluate, LayerCost, Objective};
use crate::platform::Platform;
use crate::search::TraceRow;
use crate::space::{decode, BufferReq, Dim, Genome, LevelGene};
use crate::workload::Model;

pub const TRACE_HEADER: &str = "generation,samples_used,best_fitness,median_fitness,best_area_mm2";

/// How a design was found. Absent when a checkpoint is inspected.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunInfo {
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_hw: Option<String>,
    pub seed: u64,
    pub budget: u64,
    pub population: u64,
    pub samples_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignSummary {
    pub pe_rows: u64,
    pub pe_cols: u64,
    pub num_pes: u64,
    pub l1_words_per_pe: u64,
    pub l2_words: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub pi: u64,
    pub parallel_dim: String,
    pub order: String,
    pub tiles: String,
}

impl LevelSummary {
    fn of(g: &LevelGene) -> Self {
        Self {
            pi: g.pi,
            parallel_dim: g.parallel_dim.to_string(),
            order: g.order_string(),
            tiles: tile_string(&g.tiles),
        }
    }
}

fn tile_string(tiles: &[u64; 6]) -> String {
    Dim::ALL
        .iter()
        .map(|d| format!("{d}{}", tiles[d.index()]))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerReport {
    pub layer: String,
    pub parallelism: String,
    pub l2: LevelSummary,
    pub l1: LevelSummary,
    pub buffer: BufferReq,
    pub cost: LayerCost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Totals {
    pub cycles: u64,
    pub dram_words: u64,
    pub l2_words: u64,
    pub energy_pj: f64,
    pub area_mm2: f64,
    pub area_budget_mm2: f64,
    pub latency_area_product: f64,
    pub objective_value: f64,
    pub valid: bool,
    pub fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
    pub model: String,
    pub platform: String,
    pub objective: Objective,
    pub design: DesignSummary,
    pub layers: Vec<LayerReport>,
    pub totals: Totals,
}

/// Decodes and scores `genome` into a report.
pub fn build_report(
    genome: &Genome,
    model: &Model,
    platform: &Platform,
    platform_label: &str,
    objective: Objective,
    run: Option<RunInfo>,
) -> DesignReport {
    let design = decode(genome, model);
    let cost = evaluate(&design, model, platform, objective);
    let layers = design
        .mappings
        .iter()
        .zip(&design.buffer_reqs)
        .zip(&cost.layers)
        .map(|((ch, buffer), lc)| LayerReport {
            layer: lc.layer.clone(),
            parallelism: ch.parallelism(),
            l2: LevelSummary::of(&ch.l2),
            l1: LevelSummary::of(&ch.l1),
            buffer: *buffer,
            cost: lc.clone(),
        })
        .collect();
    DesignReport {
        run,
        model: model.name.clone(),
        platform: platform_label.to_string(),
        objective,
        design: DesignSummary {
            pe_rows: design.pe_rows,
            pe_cols: design.pe_cols,
            num_pes: design.num_pes,
            l1_words_per_pe: design.l1_words_per_pe,
            l2_words: design.l2_words,
        },
        layers,
        totals: Totals {
            cycles: cost.cycles,
            dram_words: cost.dram_words,
            l2_words: cost.l2_words,
            energy_pj: cost.energy_pj,
            area_mm2: cost.area_mm2,
            area_budget_mm2: platform.area_budget,
            latency_area_product: cost.latency_area_product,
            objective_value: cost.objective_value,
            valid: cost.valid,
            fitness: cost.fitness,
        },
    }
}

impl DesignReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable dump of the design and its costs.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let d = &self.design;
        writeln!(out, "model     {}", self.model).unwrap();
        writeln!(out, "platform  {}", self.platform).unwrap();
        if let Some(run) = &self.run {
            write!(out, "scheme    {}", run.scheme).unwrap();
            if let Some(t) = &run.template {
                write!(out, " (template {t})").unwrap();
            }
            writeln!(out, ", seed {}, {} samples", run.seed, run.samples_used).unwrap();
        }
        writeln!(
            out,
            "PE array  {} x {} = {} PEs",
            d.pe_rows, d.pe_cols, d.num_pes
        )
        .unwrap();
        writeln!(
            out,
            "buffers   L1 {} words/PE, L2 {} words",
            d.l1_words_per_pe, d.l2_words
        )
        .unwrap();
        for l in &self.layers {
            writeln!(out).unwrap();
            writeln!(out, "layer {}  parallelism {}", l.layer, l.parallelism).unwrap();
            for (name, lv) in [("L2", &l.l2), ("L1", &l.l1)] {
                writeln!(
                    out,
                    "  {name} pi {:<5} par {}  order {}  tiles {}",
                    lv.pi, lv.parallel_dim, lv.order, lv.tiles
                )
                .unwrap();
            }
            writeln!(
                out,
                "  buffer L1 {}/PE  L2 {}",
                l.buffer.l1.total(),
                l.buffer.l2.total()
            )
            .unwrap();
            writeln!(
                out,
                "  cycles {} (compute {})  dram {}  l2 {}  energy {:.6e} pJ",
                l.cost.cycles,
                l.cost.compute_cycles,
                l.cost.dram_words,
                l.cost.l2_words,
                l.cost.energy_pj
            )
            .unwrap();
        }
        let t = &self.totals;
        writeln!(out).unwrap();
        writeln!(out, "cycles    {}", t.cycles).unwrap();
        writeln!(out, "energy    {:.6e} pJ", t.energy_pj).unwrap();
        writeln!(
            out,
            "area      {:.6} mm2 of {:.6} ({})",
            t.area_mm2,
            t.area_budget_mm2,
            if t.valid { "valid" } else { "over budget" }
        )
        .unwrap();
        writeln!(out, "lat*area  {:.6e}", t.latency_area_product).unwrap();
        writeln!(out, "{}  {:.6e}", self.objective, t.objective_value).unwrap();
        out
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e}",
            r.generation, r.samples_used, r.best_fitness, r.median_fitness, r.best_area_mm2
        )
        .unwrap();
    }
    out
}
