//! Analytical cost model: compute cycles, per-boundary traffic, energy,
//! area and constrained fitness of a decoded design.
//!
//! Loop nest semantics shared with the [`oracle`] interpreter:
//!
//! * DRAM→L2: the layer is tiled by the L2 tiles `T2` and walked in the L2
//!   gene's order, `N_d = ceil(D_d / T2_d)` steps per dim.
//! * L2→array: each L2 tile is split into L1 sub-tiles `T1`, walked in the
//!   L1 gene's order, `n_d = ceil(T2_d / T1_d)`. The L2 parallel dim's
//!   sub-tiles are dealt to `pi_l2` columns, `s2 = ceil(n_p2 / pi_l2)`
//!   steps. L1 residency restarts with every L2 tile.
//! * Inside a column the L1 parallel dim is block-partitioned over
//!   `pi_l1` PEs, `s1 = ceil(T1_p1 / pi_l1)`; each PE does one MAC per
//!   cycle and columns advance in lockstep.
//!
//! A tensor tile is fetched whenever the indices of its relevant dims
//! change (first access included); outputs are written back as often as
//! they are fetched.

pub mod oracle;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::platform::Platform;
use crate::space::{ceil_div, AcceleratorDesign, Dim, MappingChromosome, TensorWords};
use crate::workload::{total_macs, LayerShape, Model};

pub use oracle::{oracle_simulate, ExactCounts, DEFAULT_MAC_CAP};

/// Offset that keeps every invalid fitness below every valid one.
pub const INVALID_FITNESS_BASE: f64 = 1e60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Latency,
    Energy,
    Edp,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Latency => "latency",
            Objective::Energy => "energy",
            Objective::Edp => "edp",
        })
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latency" => Ok(Objective::Latency),
            "energy" => Ok(Objective::Energy),
            "edp" => Ok(Objective::Edp),
            other => Err(format!(
                "unknown objective '{other}' (expected latency, energy or edp)"
            )),
        }
    }
}

/// Memory boundary whose traffic is counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// DRAM to the shared L2 buffer.
    Dram,
    /// L2 to the PE array.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tensor {
    Weight,
    Input,
    Output,
}

impl Tensor {
    pub(crate) const ALL: [Tensor; 3] = [Tensor::Weight, Tensor::Input, Tensor::Output];

    pub(crate) fn relevant(self, d: Dim) -> bool {
        match self {
            Tensor::Weight => matches!(d, Dim::K | Dim::C | Dim::R | Dim::S),
            Tensor::Input => !matches!(d, Dim::K),
            Tensor::Output => matches!(d, Dim::K | Dim::Y | Dim::X),
        }
    }

    pub(crate) fn of(self, w: &TensorWords) -> u64 {
        match self {
            Tensor::Weight => w.weight,
            Tensor::Input => w.input,
            Tensor::Output => w.output,
        }
    }

    pub(crate) fn slot(self, w: &mut TensorWords) -> &mut u64 {
        match self {
            Tensor::Weight => &mut w.weight,
            Tensor::Input => &mut w.input,
            Tensor::Output => &mut w.output,
        }
    }
}

/// Words crossing a boundary: fetches of every tensor plus output write-back.
pub fn boundary_words(traffic: &TensorWords) -> u64 {
    traffic.total() + traffic.output
}

fn l2_tile_counts(ch: &MappingChromosome, layer: &LayerShape) -> [u64; 6] {
    Dim::ALL.map(|d| ceil_div(layer.dim(d), ch.l2.tile(d)))
}

fn sub_tile_counts(ch: &MappingChromosome) -> [u64; 6] {
    Dim::ALL.map(|d| ceil_div(ch.l2.tile(d), ch.l1.tile(d)))
}

pub fn compute_cycles(ch: &MappingChromosome, layer: &LayerShape, pi_l1: u64, pi_l2: u64) -> u64 {
    let outer: u64 = l2_tile_counts(ch, layer).iter().product();
    let n = sub_tile_counts(ch);
    let p2 = ch.l2.parallel_dim;
    let p1 = ch.l1.parallel_dim;
    let s2 = ceil_div(n[p2.index()], pi_l2);
    let other_sub: u64 = Dim::ALL
        .into_iter()
        .filter(|&d| d != p2)
        .map(|d| n[d.index()])
        .product();
    let s1 = ceil_div(ch.l1.tile(p1), pi_l1);
    let per_pe: u64 = Dim::ALL
        .into_iter()
        .filter(|&d| d != p1)
        .map(|d| ch.l1.tile(d))
        .product();
    outer * s2 * other_sub * s1 * per_pe
}

/// Number of relevant-index changes while walking `order` with `counts`:
/// the product of counts from the outermost loop down to the innermost
/// loop that is relevant and has more than one step.
pub(crate) fn fetch_events(order: &[Dim; 6], counts: &[u64; 6], tensor: Tensor) -> u64 {
    let innermost = order
        .iter()
        .rposition(|&d| tensor.relevant(d) && counts[d.index()] > 1);
    match innermost {
        Some(pos) => order[..=pos].iter().map(|d| counts[d.index()]).product(),
        None => 1,
    }
}

/// Per-tensor fetch words across `boundary` (write-back not included).
pub fn boundary_traffic(
    boundary: Boundary,
    ch: &MappingChromosome,
    layer: &LayerShape,
    pi_l2: u64,
) -> TensorWords {
    let mut out = TensorWords::default();
    match boundary {
        Boundary::Dram => {
            let counts = l2_tile_counts(ch, layer);
            let footprint = TensorWords::of_box(ch.l2.tiles, layer.stride);
            for t in Tensor::ALL {
                *t.slot(&mut out) = t.of(&footprint) * fetch_events(&ch.l2.order, &counts, t);
            }
        }
        Boundary::L2 => {
            let l2_tiles: u64 = l2_tile_counts(ch, layer).iter().product();
            let mut counts = sub_tile_counts(ch);
            let p2 = ch.l2.parallel_dim;
            let n_p2 = counts[p2.index()];
            counts[p2.index()] = ceil_div(n_p2, pi_l2);
            let active_cols = pi_l2.min(n_p2);
            let footprint = TensorWords::of_box(ch.l1.tiles, layer.stride);
            for t in Tensor::ALL {
                let cols = if t.relevant(p2) { active_cols } else { 1 };
                *t.slot(&mut out) =
                    l2_tiles * cols * t.of(&footprint) * fetch_events(&ch.l1.order, &counts, t);
            }
        }
    }
    out
}

/// Area of PEs plus all on-chip buffers.
pub fn area_of(design: &AcceleratorDesign, platform: &Platform) -> f64 {
    let buffer_words = design.num_pes * design.l1_words_per_pe + design.l2_words;
    design.num_pes as f64 * platform.a_pe
        + (buffer_words * platform.word_bytes) as f64 * platform.a_sram
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerCost {
    pub layer: String,
    pub macs: u64,
    pub compute_cycles: u64,
    pub dram_traffic: TensorWords,
    pub l2_traffic: TensorWords,
    pub dram_words: u64,
    pub l2_words: u64,
    pub cycles: u64,
    pub energy_pj: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub cycles: u64,
    pub dram_words: u64,
    pub l2_words: u64,
    pub energy_pj: f64,
    pub area_mm2: f64,
    pub latency_area_product: f64,
    pub objective: Objective,
    pub objective_value: f64,
    pub valid: bool,
    pub fitness: f64,
    pub layers: Vec<LayerCost>,
}

impl CostReport {
    /// `area / budget - 1`, positive only for invalid reports.
    pub fn overshoot(&self, platform: &Platform) -> f64 {
        self.area_mm2 / platform.area_budget - 1.0
    }
}

fn bandwidth_cycles(words: u64, bw: f64) -> u64 {
    (words as f64 / bw).ceil() as u64
}

pub fn evaluate_layer(
    ch: &MappingChromosome,
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
    platform: &Platform,
) -> LayerCost {
    let macs = total_macs(layer);
    let compute = compute_cycles(ch, layer, pi_l1, pi_l2);
    let dram_traffic = boundary_traffic(Boundary::Dram, ch, layer, pi_l2);
    let l2_traffic = boundary_traffic(Boundary::L2, ch, layer, pi_l2);
    let dram_words = boundary_words(&dram_traffic);
    let l2_words = boundary_words(&l2_traffic);
    let cycles = compute
        .max(bandwidth_cycles(dram_words, platform.bw_dram))
        .max(bandwidth_cycles(l2_words, platform.bw_l2));
    let energy_pj = macs as f64 * platform.e_mac
        + dram_words as f64 * platform.e_dram
        + l2_words as f64 * platform.e_l2;
    LayerCost {
        layer: layer.name.clone(),
        macs,
        compute_cycles: compute,
        dram_traffic,
        l2_traffic,
        dram_words,
        l2_words,
        cycles,
        energy_pj,
    }
}

/// Fitness of a report: the negated objective when within budget, a
/// graded value below every valid fitness otherwise.
pub fn fitness(objective_value: f64, area_mm2: f64, platform: &Platform) -> (bool, f64) {
    if area_mm2 <= platform.area_budget {
        (true, -objective_value)
    } else {
        let overshoot = area_mm2 / platform.area_budget - 1.0;
        (false, -INVALID_FITNESS_BASE * (1.0 + overshoot))
    }
}

pub fn evaluate(
    design: &AcceleratorDesign,
    model: &Model,
    platform: &Platform,
    objective: Objective,
) -> CostReport {
    let layers: Vec<LayerCost> = design
        .mappings
        .iter()
        .zip(&model.layers)
        .map(|(ch, layer)| evaluate_layer(ch, layer, design.pi_l1(), design.pi_l2(), platform))
        .collect();
    let cycles = layers.iter().map(|l| l.cycles).sum::<u64>();
    let energy_pj = layers.iter().map(|l| l.energy_pj).sum::<f64>();
    let area_mm2 = area_of(design, platform);
    let objective_value = match objective {
        Objective::Latency => cycles as f64,
        Objective::Energy => energy_pj,
        Objective::Edp => cycles as f64 * energy_pj,
    };
    let (valid, fitness) = fitness(objective_value, area_mm2, platform);
    CostReport {
        cycles,
        dram_words: layers.iter().map(|l| l.dram_words).sum(),
        l2_words: layers.iter().map(|l| l.l2_words).sum(),
        energy_pj,
        area_mm2,
        latency_area_product: cycles as f64 * area_mm2,
        objective,
        objective_value,
        valid,
        fitness,
        layers,
    }
}
