//! Genome encoding of a design point and its decoding into an accelerator.
//!
//! A genome holds one shared pair of spatial HW genes (`pi_l2` columns of
//! `pi_l1`-long 1-D PE arrays) plus one two-level mapping chromosome per
//! model layer. Buffers are not genes: decoding sizes them to the exact
//! live footprint of the mapping.

mod checkpoint;
mod flat;
mod template;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::platform::Platform;
use crate::workload::{LayerShape, Model};

pub use checkpoint::{genome_from_json, genome_to_json};
pub use flat::{flatten, gene_domains, lehmer_decode, lehmer_encode, unflatten, GeneDomain};
pub use template::{template_mapping, Template};

/// One of the six loop dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    K,
    C,
    Y,
    X,
    R,
    S,
}

impl Dim {
    pub const ALL: [Dim; 6] = [Dim::K, Dim::C, Dim::Y, Dim::X, Dim::R, Dim::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['K', 'C', 'Y', 'X', 'R', 'S'][self.index()]
    }

    pub fn from_letter(c: char) -> Option<Dim> {
        Dim::ALL.into_iter().find(|d| d.letter() == c)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Dim {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Dim::from_letter), chars.next()) {
            (Some(d), None) => Ok(d),
            _ => Err(format!("unknown dimension '{s}'")),
        }
    }
}

/// Weight, input and output word counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorWords {
    pub weight: u64,
    pub input: u64,
    pub output: u64,
}

impl TensorWords {
    pub fn total(&self) -> u64 {
        self.weight + self.input + self.output
    }

    /// Box footprints of a tile with the given extents (canonical dim order).
    pub fn of_box(extents: [u64; 6], stride: u64) -> Self {
        let [k, c, y, x, r, s] = extents;
        Self {
            weight: k * c * r * s,
            input: c * ((y - 1) * stride + r) * ((x - 1) * stride + s),
            output: k * y * x,
        }
    }
}

/// Mapping and spatial size for one hierarchy level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelGene {
    pub pi: u64,
    pub parallel_dim: Dim,
    /// Temporal loop order, outermost first.
    pub order: [Dim; 6],
    /// Tile size per dim, indexed by `Dim::index`.
    pub tiles: [u64; 6],
}

impl LevelGene {
    pub fn tile(&self, d: Dim) -> u64 {
        self.tiles[d.index()]
    }

    pub fn order_string(&self) -> String {
        self.order.iter().map(|d| d.letter()).collect()
    }

    fn unit(pi: u64) -> Self {
        Self {
            pi,
            parallel_dim: Dim::K,
            order: Dim::ALL,
            tiles: [1; 6],
        }
    }
}

/// Per-layer mapping: `l2` maps the layer onto the array of columns,
/// `l1` maps an L2 sub-tile onto one column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MappingChromosome {
    pub l2: LevelGene,
    pub l1: LevelGene,
}

impl MappingChromosome {
    pub fn unit(pi_l1: u64, pi_l2: u64) -> Self {
        Self {
            l2: LevelGene::unit(pi_l2),
            l1: LevelGene::unit(pi_l1),
        }
    }

    /// Parallel dims as `"<L2>-<L1>"`, e.g. `"K-C"`.
    pub fn parallelism(&self) -> String {
        format!("{}-{}", self.l2.parallel_dim, self.l1.parallel_dim)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Genome {
    pub pi_l2: u64,
    pub pi_l1: u64,
    pub mappings: Vec<MappingChromosome>,
}

impl Genome {
    pub fn num_pes(&self) -> u64 {
        self.pi_l1 * self.pi_l2
    }
}

/// Minimum per-level buffer footprint of one layer's mapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferReq {
    /// Per PE.
    pub l1: TensorWords,
    /// Shared global buffer.
    pub l2: TensorWords,
}

/// A decoded design point.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceleratorDesign {
    pub pe_rows: u64,
    pub pe_cols: u64,
    pub num_pes: u64,
    pub l1_words_per_pe: u64,
    pub l2_words: u64,
    pub mappings: Vec<MappingChromosome>,
    pub buffer_reqs: Vec<BufferReq>,
}

impl AcceleratorDesign {
    pub fn pi_l1(&self) -> u64 {
        self.pe_rows
    }

    pub fn pi_l2(&self) -> u64 {
        self.pe_cols
    }
}

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Tile extents held by one PE: the L1 tile with the `l1` parallel dim
/// block-partitioned over `pi_l1` PEs.
pub fn per_pe_extents(l1: &LevelGene, pi_l1: u64) -> [u64; 6] {
    let mut ext = l1.tiles;
    let p = l1.parallel_dim.index();
    ext[p] = ceil_div(ext[p], pi_l1);
    ext
}

pub fn min_buffer_requirement(
    chromosome: &MappingChromosome,
    layer: &LayerShape,
    pi_l1: u64,
) -> BufferReq {
    BufferReq {
        l1: TensorWords::of_box(per_pe_extents(&chromosome.l1, pi_l1), layer.stride),
        l2: TensorWords::of_box(chromosome.l2.tiles, layer.stride),
    }
}

fn repair_order(order: &mut [Dim; 6]) {
    let mut seen = [false; 6];
    let mut kept: Vec<Dim> = Vec::with_capacity(6);
    for &d in order.iter() {
        if !seen[d.index()] {
            seen[d.index()] = true;
            kept.push(d);
        }
    }
    kept.extend(Dim::ALL.into_iter().filter(|d| !seen[d.index()]));
    order.copy_from_slice(&kept);
}

/// Brings a chromosome inside the legal space of `layer`.
pub fn repair_chromosome(
    chromosome: &mut MappingChromosome,
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
) {
    chromosome.l2.pi = pi_l2;
    chromosome.l1.pi = pi_l1;
    for d in Dim::ALL {
        let i = d.index();
        let t2 = chromosome.l2.tiles[i].clamp(1, layer.dim(d));
        chromosome.l2.tiles[i] = t2;
        chromosome.l1.tiles[i] = chromosome.l1.tiles[i].clamp(1, t2);
    }
    repair_order(&mut chromosome.l2.order);
    repair_order(&mut chromosome.l1.order);
}

/// Clamps the spatial genes to the platform limits, halving the larger
/// one (`pi_l1` on ties) until the PE count fits.
pub fn repair_pi(pi_l1: u64, pi_l2: u64, platform: &Platform) -> (u64, u64) {
    let cap = platform.pi_cap();
    let (mut a, mut b) = (pi_l1.clamp(1, cap), pi_l2.clamp(1, cap));
    while a.saturating_mul(b) > platform.max_pes {
        if a >= b {
            a = (a / 2).max(1);
        } else {
            b = (b / 2).max(1);
        }
    }
    (a, b)
}

/// Returns the genome clamped into the legal space. Idempotent.
pub fn repair(mut genome: Genome, model: &Model, platform: &Platform) -> Genome {
    let (pi_l1, pi_l2) = repair_pi(genome.pi_l1, genome.pi_l2, platform);
    genome.pi_l1 = pi_l1;
    genome.pi_l2 = pi_l2;
    if genome.mappings.len() != model.layers.len() {
        genome
            .mappings
            .resize(model.layers.len(), MappingChromosome::unit(pi_l1, pi_l2));
    }
    for (chromosome, layer) in genome.mappings.iter_mut().zip(&model.layers) {
        repair_chromosome(chromosome, layer, pi_l1, pi_l2);
    }
    genome
}

/// True when `genome` is a fixed point of [`repair`] for this model.
pub fn is_legal(genome: &Genome, model: &Model, platform: &Platform) -> bool {
    genome.mappings.len() == model.layers.len()
        && repair(genome.clone(), model, platform) == *genome
}

pub fn random_level<R: Rng + ?Sized>(layer: &LayerShape, pi: u64, rng: &mut R) -> LevelGene {
    let mut order = Dim::ALL;
    order.shuffle(rng);
    let parallel_dim = Dim::ALL[rng.gen_range(0..6)];
    let mut tiles = [1; 6];
    for d in Dim::ALL {
        tiles[d.index()] = rng.gen_range(1..=layer.dim(d));
    }
    LevelGene {
        pi,
        parallel_dim,
        order,
        tiles,
    }
}

pub fn random_chromosome<R: Rng + ?Sized>(
    layer: &LayerShape,
    pi_l1: u64,
    pi_l2: u64,
    rng: &mut R,
) -> MappingChromosome {
    let l2 = random_level(layer, pi_l2, rng);
    let l1 = random_level(layer, pi_l1, rng);
    let mut chromosome = MappingChromosome { l2, l1 };
    repair_chromosome(&mut chromosome, layer, pi_l1, pi_l2);
    chromosome
}

pub fn random_pi<R: Rng + ?Sized>(platform: &Platform, rng: &mut R) -> (u64, u64) {
    let choices = platform.pi_choices();
    let pi_l1 = *choices.choose(rng).expect("at least one pi choice");
    let pi_l2 = *choices.choose(rng).expect("at least one pi choice");
    repair_pi(pi_l1, pi_l2, platform)
}

/// Samples a repaired genome uniformly over genes.
pub fn random_genome<R: Rng + ?Sized>(model: &Model, platform: &Platform, rng: &mut R) -> Genome {
    let (pi_l1, pi_l2) = random_pi(platform, rng);
    let mappings = model
        .layers
        .iter()
        .map(|layer| random_chromosome(layer, pi_l1, pi_l2, rng))
        .collect();
    Genome {
        pi_l2,
        pi_l1,
        mappings,
    }
}

/// Decodes a repaired genome: the array shape comes from the spatial genes,
/// and each buffer level is sized to the largest per-layer requirement.
pub fn decode(genome: &Genome, model: &Model) -> AcceleratorDesign {
    let buffer_reqs: Vec<BufferReq> = genome
        .mappings
        .iter()
        .zip(&model.layers)
        .map(|(ch, layer)| min_buffer_requirement(ch, layer, genome.pi_l1))
        .collect();
    let l1_words_per_pe = buffer_reqs.iter().map(|b| b.l1.total()).max().unwrap_or(0);
    let l2_words = buffer_reqs.iter().map(|b| b.l2.total()).max().unwrap_or(0);
    AcceleratorDesign {
        pe_rows: genome.pi_l1,
        pe_cols: genome.pi_l2,
        num_pes: genome.num_pes(),
        l1_words_per_pe,
        l2_words,
        mappings: genome.mappings.clone(),
        buffer_reqs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model_of(layers: Vec<LayerShape>) -> Model {
        Model::new("m", layers).unwrap()
    }

    fn platform(max_pes: u64) -> Platform {
        Platform {
            max_pes,
            ..Platform::edge()
        }
    }

    #[test]
    fn random_genome_on_unit_layer_has_unit_tiles() {
        let model = model_of(vec![LayerShape::conv("u", [1; 6], 1)]);
        let p = Platform::edge();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_genome(&model, &p, &mut rng);
        assert!(g.mappings[0].l1.tiles.iter().all(|&t| t == 1));
        assert!(g.mappings[0].l2.tiles.iter().all(|&t| t == 1));
        assert!(p.pi_choices().contains(&g.pi_l1));
        assert!(p.pi_choices().contains(&g.pi_l2));
        assert!(is_legal(&g, &model, &p));
    }

    #[test]
    fn random_genome_is_deterministic_and_seed_sensitive() {
        let model = model_of(vec![LayerShape::conv("e", [8; 6], 1)]);
        let p = Platform::edge();
        let gen = |seed| random_genome(&model, &p, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(gen(7), gen(7));
        let differing = (0..100u64)
            .filter(|&i| gen(2 * i) != gen(2 * i + 1))
            .count();
        assert!(differing >= 95, "{differing}");
    }

    #[test]
    fn repair_clamps_l1_to_l2() {
        let layer = LayerShape::conv("l", [8, 1, 1, 1, 1, 1], 1);
        let model = model_of(vec![layer]);
        let mut ch = MappingChromosome::unit(1, 1);
        ch.l2.tiles[Dim::K.index()] = 4;
        ch.l1.tiles[Dim::K.index()] = 9;
        let g = Genome {
            pi_l2: 1,
            pi_l1: 1,
            mappings: vec![ch],
        };
        let g = repair(g, &model, &platform(2048));
        assert_eq!(g.mappings[0].l1.tile(Dim::K), 4);
    }

    #[test]
    fn repair_halves_larger_pi() {
        assert_eq!(repair_pi(64, 64, &platform(2048)), (32, 64));
        assert_eq!(repair_pi(1, 1, &platform(1)), (1, 1));
        assert_eq!(repair_pi(4, 256, &platform(64)), (4, 16));
    }

    #[test]
    fn repair_fixes_duplicate_order_and_mirrors_pi() {
        let model = model_of(vec![LayerShape::conv("l", [2; 6], 1)]);
        let mut ch = MappingChromosome::unit(3, 3);
        ch.l1.order = [Dim::K, Dim::K, Dim::C, Dim::Y, Dim::X, Dim::R];
        let g = repair(
            Genome {
                pi_l2: 2,
                pi_l1: 4,
                mappings: vec![ch],
            },
            &model,
            &platform(64),
        );
        assert_eq!(g.mappings[0].l1.order_string(), "KCYXRS");
        assert_eq!((g.mappings[0].l1.pi, g.mappings[0].l2.pi), (4, 2));
    }

    #[test]
    fn decode_walkthrough_shape() {
        let model = model_of(vec![LayerShape::conv("l", [64, 64, 8, 8, 3, 3], 1)]);
        let g = Genome {
            pi_l2: 16,
            pi_l1: 64,
            mappings: vec![MappingChromosome::unit(64, 16)],
        };
        let d = decode(&g, &model);
        assert_eq!((d.pe_rows, d.pe_cols, d.num_pes), (64, 16, 1024));
    }

    #[test]
    fn decode_unit_design() {
        let model = model_of(vec![LayerShape::conv("u", [1; 6], 1)]);
        let g = Genome {
            pi_l2: 1,
            pi_l1: 1,
            mappings: vec![MappingChromosome::unit(1, 1)],
        };
        let d = decode(&g, &model);
        assert_eq!((d.num_pes, d.l1_words_per_pe, d.l2_words), (1, 3, 3));
    }

    #[test]
    fn decode_takes_max_over_layers() {
        let a = LayerShape::conv("a", [4, 3, 1, 1, 1, 1], 1);
        let b = LayerShape::conv("b", [5, 4, 1, 1, 1, 1], 1);
        let model = model_of(vec![a.clone(), b.clone()]);
        let mut ca = MappingChromosome::unit(1, 1);
        ca.l2.tiles = a.dims();
        let mut cb = MappingChromosome::unit(1, 1);
        cb.l2.tiles = b.dims();
        let g = Genome {
            pi_l2: 1,
            pi_l1: 1,
            mappings: vec![ca.clone(), cb.clone()],
        };
        let ra = min_buffer_requirement(&ca, &a, 1);
        let rb = min_buffer_requirement(&cb, &b, 1);
        assert_eq!((ra.l2.weight, rb.l2.weight), (12, 20));
        let d = decode(&g, &model);
        assert_eq!(d.l2_words, ra.l2.total().max(rb.l2.total()));
        assert_eq!(d.l2_words, rb.l2.total());
    }

    #[test]
    fn buffer_formulas() {
        let layer = LayerShape::conv("l", [8, 3, 4, 4, 3, 3], 1);
        let mut ch = MappingChromosome::unit(1, 1);
        ch.l2.tiles = [4, 3, 1, 1, 1, 1];
        assert_eq!(min_buffer_requirement(&ch, &layer, 1).l2.weight, 12);
        ch.l2.tiles = [1, 1, 2, 2, 3, 3];
        assert_eq!(min_buffer_requirement(&ch, &layer, 1).l2.input, 16);

        let layer = LayerShape::conv("l", [8, 2, 1, 1, 1, 1], 1);
        let mut ch = MappingChromosome::unit(4, 1);
        ch.l2.tiles = [8, 2, 1, 1, 1, 1];
        ch.l1.tiles = [8, 2, 1, 1, 1, 1];
        ch.l1.parallel_dim = Dim::K;
        assert_eq!(min_buffer_requirement(&ch, &layer, 4).l1.weight, 4);
    }

    #[test]
    fn dim_letters_round_trip() {
        for d in Dim::ALL {
            assert_eq!(d.to_string().parse::<Dim>(), Ok(d));
        }
        assert!("Q".parse::<Dim>().is_err());
    }
}
