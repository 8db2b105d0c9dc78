//! Brute-force interpreter of the two-level tiled loop nest.
//!
//! Walks every L2 tile, every lockstep step of the column array and every
//! PE block with clipped edge tiles, executes each MAC once, and counts
//! cycles, tile fetches and live buffer words directly from the index sets
//! touched. It shares no arithmetic with the analytical model beyond the
//! loop-nest semantics described in [`crate::cost`].

use std::collections::BTreeSet;

use super::{boundary_words, Tensor};
use crate::error::{Error, Result};
use crate::space::{Dim, MappingChromosome, TensorWords};
use crate::workload::{total_macs, LayerShape};

pub const DEFAULT_MAC_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactCounts {
    pub cycles: u64,
    pub dram_traffic: TensorWords,
    pub l2_traffic: TensorWords,
    pub dram_words: u64,
    pub l2_words: u64,
    pub max_live_l1_words_per_pe: u64,
    pub max_live_l2_words: u64,
    /// MACs executed; equals the layer's MAC count when every point ran once.
    pub macs_executed: u64,
}

/// Half-open index box in canonical dim order.
#[derive(Clone, Copy, Debug)]
struct IndexBox {
    lo: [u64; 6],
    hi: [u64; 6],
}

impl IndexBox {
    fn extent(&self, d: usize) -> u64 {
        self.hi[d] - self.lo[d]
    }

    fn is_empty(&self) -> bool {
        (0..6).any(|d| self.hi[d] <= self.lo[d])
    }

    fn points(&self) -> impl Iterator<Item = [u64; 6]> + '_ {
        let mut cur = self.lo;
        let mut done = self.is_empty();
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = cur;
            let mut d = 5;
            loop {
                cur[d] += 1;
                if cur[d] < self.hi[d] {
                    break;
                }
                cur[d] = self.lo[d];
                if d == 0 {
                    done = true;
                    break;
                }
                d -= 1;
            }
            Some(out)
        })
    }
}

/// Distinct data words a box touches, per tensor.
fn touched(b: &IndexBox, stride: u64) -> TensorWords {
    let (k, c, y, x, r, s) = (0, 1, 2, 3, 4, 5);
    let rows: BTreeSet<u64> = (b.lo[y]..b.hi[y])
        .flat_map(|yy| (b.lo[r]..b.hi[r]).map(move |rr| yy * stride + rr))
        .collect();
    let cols: BTreeSet<u64> = (b.lo[x]..b.hi[x])
        .flat_map(|xx| (b.lo[s]..b.hi[s]).map(move |ss| xx * stride + ss))
        .collect();
    TensorWords {
        weight: b.extent(k) * b.extent(c) * b.extent(r) * b.extent(s),
        input: b.extent(c) * rows.len() as u64 * cols.len() as u64,
        output: b.extent(k) * b.extent(y) * b.extent(x),
    }
}

/// Visits every index tuple of a loop nest whose loops are `order`
/// (outermost first) with trip counts `counts`.
fn walk(order: &[Dim; 6], counts: [u64; 6], mut f: impl FnMut([u64; 6])) {
    if counts.contains(&0) {
        return;
    }
    let mut idx = [0u64; 6];
    loop {
        f(idx);
        let mut pos = 6;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            let d = order[pos].index();
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Last relevant index tuple seen by one fetch stream.
#[derive(Default)]
struct FetchTracker {
    last: Option<Vec<u64>>,
}

impl FetchTracker {
    fn access(&mut self, key: Vec<u64>) -> bool {
        if self.last.as_ref() == Some(&key) {
            false
        } else {
            self.last = Some(key);
            true
        }
    }
}

fn key_of(t: Tensor, idx: &[u64; 6]) -> Vec<u64> {
    Dim::ALL
        .into_iter()
        .filter(|&d| t.relevant(d))
        .map(|d| idx[d.index()])
        .collect()
}

/// Executes one layer's mapping on a `pi_l1 x pi_l2` array.
pub fn oracle_simulate(
    ch: &MappingChromosome,
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
) -> Result<ExactCounts> {
    oracle_simulate_capped(ch, layer, pi_l1, pi_l2, DEFAULT_MAC_CAP)
}

pub fn oracle_simulate_capped(
    ch: &MappingChromosome,
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
    cap: u64,
) -> Result<ExactCounts> {
    let macs = total_macs(layer);
    if macs > cap {
        return Err(Error::OracleCap { macs, cap });
    }
    let dims = layer.dims();
    let t2 = ch.l2.tiles;
    let t1 = ch.l1.tiles;
    let p2 = ch.l2.parallel_dim.index();
    let p1 = ch.l1.parallel_dim.index();
    let stride = layer.stride;

    let mut out = ExactCounts::default();
    let mut executed = vec![0u32; macs as usize];
    let flat = |pt: &[u64; 6]| pt.iter().zip(dims).fold(0u64, |acc, (&i, n)| acc * n + i) as usize;

    let mut dram_trackers: Vec<FetchTracker> =
        Tensor::ALL.iter().map(|_| Default::default()).collect();
    let l2_counts: [u64; 6] = std::array::from_fn(|d| dims[d].div_ceil(t2[d]));

    walk(&ch.l2.order, l2_counts, |tile_idx| {
        let l2_box = IndexBox {
            lo: std::array::from_fn(|d| tile_idx[d] * t2[d]),
            hi: std::array::from_fn(|d| ((tile_idx[d] + 1) * t2[d]).min(dims[d])),
        };
        let l2_live = touched(&l2_box, stride);
        out.max_live_l2_words = out.max_live_l2_words.max(l2_live.total());
        for (i, t) in Tensor::ALL.into_iter().enumerate() {
            if dram_trackers[i].access(key_of(t, &tile_idx)) {
                *t.slot(&mut out.dram_traffic) += t.of(&l2_live);
            }
        }

        // Sub-tiles of this (possibly clipped) L2 tile.
        let sub: [u64; 6] = std::array::from_fn(|d| l2_box.extent(d).div_ceil(t1[d]));
        let mut step_counts = sub;
        step_counts[p2] = sub[p2].div_ceil(pi_l2);
        // One stream per column for tensors that differ across columns,
        // a single multicast stream otherwise.
        let mut l1_trackers: Vec<Vec<FetchTracker>> = Tensor::ALL
            .iter()
            .map(|&t| {
                let n = if t.relevant(ch.l2.parallel_dim) {
                    pi_l2
                } else {
                    1
                };
                (0..n).map(|_| FetchTracker::default()).collect()
            })
            .collect();

        walk(&ch.l1.order, step_counts, |step| {
            let mut step_cycles = 0u64;
            for col in 0..pi_l2 {
                let mut sub_idx = step;
                sub_idx[p2] = step[p2] * pi_l2 + col;
                if sub_idx[p2] >= sub[p2] {
                    continue;
                }
                let l1_box = IndexBox {
                    lo: std::array::from_fn(|d| l2_box.lo[d] + sub_idx[d] * t1[d]),
                    hi: std::array::from_fn(|d| {
                        (l2_box.lo[d] + (sub_idx[d] + 1) * t1[d]).min(l2_box.hi[d])
                    }),
                };
                let l1_tile = touched(&l1_box, stride);
                for (i, t) in Tensor::ALL.into_iter().enumerate() {
                    let stream = if t.relevant(ch.l2.parallel_dim) {
                        col as usize
                    } else {
                        0
                    };
                    if (t.relevant(ch.l2.parallel_dim) || col == 0)
                        && l1_trackers[i][stream].access(key_of(t, &sub_idx))
                    {
                        *t.slot(&mut out.l2_traffic) += t.of(&l1_tile);
                    }
                }

                let span = l1_box.extent(p1);
                let block = span.div_ceil(pi_l1);
                for pe in 0..pi_l1 {
                    let mut pe_box = l1_box;
                    pe_box.lo[p1] = (l1_box.lo[p1] + pe * block).min(l1_box.hi[p1]);
                    pe_box.hi[p1] = (l1_box.lo[p1] + (pe + 1) * block).min(l1_box.hi[p1]);
                    if pe_box.is_empty() {
                        continue;
                    }
                    let mut pe_macs = 0u64;
                    for pt in pe_box.points() {
                        executed[flat(&pt)] += 1;
                        pe_macs += 1;
                    }
                    step_cycles = step_cycles.max(pe_macs);
                    out.max_live_l1_words_per_pe = out
                        .max_live_l1_words_per_pe
                        .max(touched(&pe_box, stride).total());
                }
            }
            out.cycles += step_cycles;
        });
    });

    out.macs_executed = executed.iter().map(|&n| n as u64).sum();
    if executed.iter().any(|&n| n != 1) {
        out.macs_executed = u64::MAX;
    }
    out.dram_words = boundary_words(&out.dram_traffic);
    out.l2_words = boundary_words(&out.l2_traffic);
    Ok(out)
}
