use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dim, LevelGene, MappingChromosome};
use crate::workload::LayerShape;

/// Hand-designed dataflows used by the HW-only baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    /// NVDLA-like, K-C parallelism.
    Dla,
    /// ShiDianNao-like, Y-X parallelism.
    Shi,
    /// Eyeriss-like row stationary, Y-R parallelism.
    Eye,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::Dla, Template::Shi, Template::Eye];

    /// Parallel dims at (L2, L1).
    pub fn parallel_dims(self) -> (Dim, Dim) {
        match self {
            Template::Dla => (Dim::K, Dim::C),
            Template::Shi => (Dim::Y, Dim::X),
            Template::Eye => (Dim::Y, Dim::R),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::Dla => "dla",
            Template::Shi => "shi",
            Template::Eye => "eye",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown template '{s}' (expected dla, shi or eye)"))
    }
}

/// Builds the fixed mapping of `kind` for one layer.
///
/// The L1 tile spans `pi_l1` elements of the L1 parallel dim, the L2 tile
/// spans `pi_l2` such L1 tiles along the L2 parallel dim, and every other
/// tile is 1. Both levels iterate in canonical `KCYXRS` order.
pub fn template_mapping(
    kind: Template,
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
) -> MappingChromosome {
    let (p2, p1) = kind.parallel_dims();
    let mut l1_tiles = [1u64; 6];
    l1_tiles[p1.index()] = layer.dim(p1).min(pi_l1);
    let mut l2_tiles = l1_tiles;
    l2_tiles[p2.index()] = (l1_tiles[p2.index()] * pi_l2).min(layer.dim(p2));
    MappingChromosome {
        l2: LevelGene {
            pi: pi_l2,
            parallel_dim: p2,
            order: Dim::ALL,
            tiles: l2_tiles,
        },
        l1: LevelGene {
            pi: pi_l1,
            parallel_dim: p1,
            order: Dim::ALL,
            tiles: l1_tiles,
        },
    }
}
