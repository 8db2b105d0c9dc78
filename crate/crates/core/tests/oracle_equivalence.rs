//! Analytical cost model against the brute-force loop-nest interpreter.

use mapforge::cost::{boundary_traffic, boundary_words, compute_cycles, oracle_simulate, Boundary};
use mapforge::space::{min_buffer_requirement, per_pe_extents, LevelGene};
use mapforge::{Dim, LayerShape, MappingChromosome};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn random_order(rng: &mut ChaCha8Rng) -> [Dim; 6] {
    let mut o = Dim::ALL;
    o.shuffle(rng);
    o
}

fn fits_evenly(units: u64, pi: u64) -> bool {
    units <= pi || units.is_multiple_of(pi)
}

fn halo_exact(ext: [u64; 6], stride: u64) -> bool {
    (ext[2] == 1 || ext[4] >= stride) && (ext[3] == 1 || ext[5] >= stride)
}

struct Case {
    layer: LayerShape,
    ch: MappingChromosome,
    pi_l1: u64,
    pi_l2: u64,
}

fn divisible_case(rng: &mut ChaCha8Rng) -> Case {
    loop {
        let dims: [u64; 6] = std::array::from_fn(|_| *[1, 2, 3, 4, 6].choose(rng).unwrap());
        let stride = if rng.gen_bool(0.25) { 2 } else { 1 };
        let t2: [u64; 6] = std::array::from_fn(|d| *divisors(dims[d]).choose(rng).unwrap());
        let t1: [u64; 6] = std::array::from_fn(|d| *divisors(t2[d]).choose(rng).unwrap());
        let p2 = *Dim::ALL.choose(rng).unwrap();
        let p1 = *Dim::ALL.choose(rng).unwrap();
        let pi_l2 = *[1, 2, 4].choose(rng).unwrap();
        let pi_l1 = *[1, 2, 4].choose(rng).unwrap();
        let n_p2 = t2[p2.index()] / t1[p2.index()];
        if !fits_evenly(n_p2, pi_l2) || !fits_evenly(t1[p1.index()], pi_l1) {
            continue;
        }
        let l1 = LevelGene {
            pi: pi_l1,
            parallel_dim: p1,
            order: random_order(rng),
            tiles: t1,
        };
        if stride > 1
            && !(halo_exact(t2, stride)
                && halo_exact(t1, stride)
                && halo_exact(per_pe_extents(&l1, pi_l1), stride))
        {
            continue;
        }
        let l2 = LevelGene {
            pi: pi_l2,
            parallel_dim: p2,
            order: random_order(rng),
            tiles: t2,
        };
        return Case {
            layer: LayerShape::conv("case", dims, stride),
            ch: MappingChromosome { l2, l1 },
            pi_l1,
            pi_l2,
        };
    }
}

fn ragged_case(rng: &mut ChaCha8Rng) -> Case {
    let dims: [u64; 6] = std::array::from_fn(|_| rng.gen_range(1..=7));
    let stride = rng.gen_range(1..=3);
    let t2: [u64; 6] = std::array::from_fn(|d| rng.gen_range(1..=dims[d]));
    let t1: [u64; 6] = std::array::from_fn(|d| rng.gen_range(1..=t2[d]));
    let pi_l2 = rng.gen_range(1..=5);
    let pi_l1 = rng.gen_range(1..=5);
    Case {
        layer: LayerShape::conv("ragged", dims, stride),
        ch: MappingChromosome {
            l2: LevelGene {
                pi: pi_l2,
                parallel_dim: *Dim::ALL.choose(rng).unwrap(),
                order: random_order(rng),
                tiles: t2,
            },
            l1: LevelGene {
                pi: pi_l1,
                parallel_dim: *Dim::ALL.choose(rng).unwrap(),
                order: random_order(rng),
                tiles: t1,
            },
        },
        pi_l1,
        pi_l2,
    }
}

#[test]
fn divisible_configs_match_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..300 {
        let c = divisible_case(&mut rng);
        let exact = oracle_simulate(&c.ch, &c.layer, c.pi_l1, c.pi_l2).unwrap();
        let dram = boundary_traffic(Boundary::Dram, &c.ch, &c.layer, c.pi_l2);
        let l2 = boundary_traffic(Boundary::L2, &c.ch, &c.layer, c.pi_l2);
        let buf = min_buffer_requirement(&c.ch, &c.layer, c.pi_l1);
        let ctx = format!(
            "case {i}: {:?} {:?} pi=({}, {})",
            c.layer, c.ch, c.pi_l1, c.pi_l2
        );
        assert_eq!(
            exact.macs_executed,
            c.layer.dims().iter().product::<u64>(),
            "{ctx}"
        );
        assert_eq!(
            compute_cycles(&c.ch, &c.layer, c.pi_l1, c.pi_l2),
            exact.cycles,
            "{ctx}"
        );
        assert_eq!(dram, exact.dram_traffic, "{ctx}");
        assert_eq!(l2, exact.l2_traffic, "{ctx}");
        assert_eq!(boundary_words(&dram), exact.dram_words, "{ctx}");
        assert_eq!(buf.l2.total(), exact.max_live_l2_words, "{ctx}");
        assert_eq!(buf.l1.total(), exact.max_live_l1_words_per_pe, "{ctx}");
    }
}

#[test]
fn ragged_configs_are_upper_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..300 {
        let c = ragged_case(&mut rng);
        let exact = oracle_simulate(&c.ch, &c.layer, c.pi_l1, c.pi_l2).unwrap();
        let ctx = format!(
            "case {i}: {:?} {:?} pi=({}, {})",
            c.layer, c.ch, c.pi_l1, c.pi_l2
        );
        assert_eq!(
            exact.macs_executed,
            c.layer.dims().iter().product::<u64>(),
            "{ctx}"
        );
        assert!(
            compute_cycles(&c.ch, &c.layer, c.pi_l1, c.pi_l2) >= exact.cycles,
            "{ctx}"
        );
        let dram = boundary_traffic(Boundary::Dram, &c.ch, &c.layer, c.pi_l2);
        let l2 = boundary_traffic(Boundary::L2, &c.ch, &c.layer, c.pi_l2);
        for (a, e) in [(dram, exact.dram_traffic), (l2, exact.l2_traffic)] {
            assert!(
                a.weight >= e.weight && a.input >= e.input && a.output >= e.output,
                "{ctx}\n{a:?} vs {e:?}"
            );
        }
        let buf = min_buffer_requirement(&c.ch, &c.layer, c.pi_l1);
        assert!(buf.l2.total() >= exact.max_live_l2_words, "{ctx}");
        assert!(buf.l1.total() >= exact.max_live_l1_words_per_pe, "{ctx}");
    }
}

#[test]
fn every_tensor_moves_at_least_once_from_dram() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let c = divisible_case(&mut rng);
        let t = boundary_traffic(Boundary::Dram, &c.ch, &c.layer, c.pi_l2);
        assert!(t.weight >= c.layer.weight_words());
        // Rows skipped by a stride larger than the filter are never read.
        let l = &c.layer;
        let rows: std::collections::BTreeSet<u64> = (0..l.y)
            .flat_map(|y| (0..l.r).map(move |r| y * l.stride + r))
            .collect();
        let cols: std::collections::BTreeSet<u64> = (0..l.x)
            .flat_map(|x| (0..l.s).map(move |s| x * l.stride + s))
            .collect();
        assert!(t.input >= l.c * rows.len() as u64 * cols.len() as u64);
        assert!(t.output >= c.layer.output_words());
    }
}
