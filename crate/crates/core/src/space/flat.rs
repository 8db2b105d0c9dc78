//! Flat integer-vector view of a genome for structure-agnostic optimizers.
//!
//! Layout: `[pi_l2, pi_l1]` followed, per layer and per level (L2 then
//! L1), by `[parallel_dim, order_code, tile_K .. tile_S]` where
//! `order_code` is the Lehmer index of the permutation.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{repair, Dim, Genome, LevelGene, MappingChromosome};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::workload::Model;

const GENES_PER_LEVEL: usize = 8;
const PERMUTATIONS: u64 = 720;

/// Legal values of one flat position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneDomain {
    Values(Vec<u64>),
    Range { lo: u64, hi: u64 },
}

impl GeneDomain {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            GeneDomain::Values(v) => *v.choose(rng).expect("non-empty domain"),
            GeneDomain::Range { lo, hi } => rng.gen_range(*lo..=*hi),
        }
    }
}

/// Lehmer index of a permutation of the six dims (identity = 0).
pub fn lehmer_encode(order: &[Dim; 6]) -> u64 {
    let mut code = 0u64;
    for i in 0..6 {
        let smaller_after = order[i + 1..]
            .iter()
            .filter(|d| d.index() < order[i].index())
            .count() as u64;
        code = code * (6 - i as u64) + smaller_after;
    }
    code
}

/// Inverse of [`lehmer_encode`]; codes past 719 saturate.
pub fn lehmer_decode(code: u64) -> [Dim; 6] {
    let mut code = code.min(PERMUTATIONS - 1);
    let mut digits = [0usize; 6];
    for i in (0..6).rev() {
        let radix = 6 - i as u64;
        digits[i] = (code % radix) as usize;
        code /= radix;
    }
    let mut pool: Vec<Dim> = Dim::ALL.to_vec();
    let mut out = [Dim::K; 6];
    for (slot, digit) in out.iter_mut().zip(digits) {
        *slot = pool.remove(digit);
    }
    out
}

pub fn gene_count(model: &Model) -> usize {
    2 + model.layers.len() * 2 * GENES_PER_LEVEL
}

pub fn gene_domains(model: &Model, platform: &Platform) -> Vec<GeneDomain> {
    let pis = GeneDomain::Values(platform.pi_choices());
    let mut out = vec![pis.clone(), pis];
    for layer in &model.layers {
        for _ in 0..2 {
            out.push(GeneDomain::Range { lo: 0, hi: 5 });
            out.push(GeneDomain::Range {
                lo: 0,
                hi: PERMUTATIONS - 1,
            });
            for d in Dim::ALL {
                out.push(GeneDomain::Range {
                    lo: 1,
                    hi: layer.dim(d),
                });
            }
        }
    }
    out
}

fn push_level(out: &mut Vec<u64>, level: &LevelGene) {
    out.push(level.parallel_dim.index() as u64);
    out.push(lehmer_encode(&level.order));
    out.extend_from_slice(&level.tiles);
}

pub fn flatten(genome: &Genome) -> Vec<u64> {
    let mut out = Vec::with_capacity(2 + genome.mappings.len() * 2 * GENES_PER_LEVEL);
    out.push(genome.pi_l2);
    out.push(genome.pi_l1);
    for ch in &genome.mappings {
        push_level(&mut out, &ch.l2);
        push_level(&mut out, &ch.l1);
    }
    out
}

fn read_level(genes: &[u64], pi: u64) -> LevelGene {
    let parallel_dim = Dim::ALL[genes[0].min(5) as usize];
    let mut tiles = [1u64; 6];
    tiles.copy_from_slice(&genes[2..GENES_PER_LEVEL]);
    LevelGene {
        pi,
        parallel_dim,
        order: lehmer_decode(genes[1]),
        tiles,
    }
}

/// Rebuilds and repairs a genome from its flat form.
pub fn unflatten(vector: &[u64], model: &Model, platform: &Platform) -> Result<Genome> {
    let expected = gene_count(model);
    if vector.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: vector.len(),
        });
    }
    let (pi_l2, pi_l1) = (vector[0], vector[1]);
    let mappings = vector[2..]
        .chunks_exact(2 * GENES_PER_LEVEL)
        .map(|chunk| MappingChromosome {
            l2: read_level(&chunk[..GENES_PER_LEVEL], pi_l2),
            l1: read_level(&chunk[GENES_PER_LEVEL..], pi_l1),
        })
        .collect();
    Ok(repair(
        Genome {
            pi_l2,
            pi_l1,
            mappings,
        },
        model,
        platform,
    ))
}
