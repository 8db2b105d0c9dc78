//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use mapforge::cost::{boundary_traffic, boundary_words, compute_cycles, oracle_simulate, Boundary};
use mapforge::experiment::{compare, CompareTable, Scheme};
use mapforge::search::{digamma, Constraint, GaConfig, PresetKind, Problem};
use mapforge::space::{decode, min_buffer_requirement, per_pe_extents, random_genome, LevelGene};
use mapforge::workload::{bundled_model, total_macs};
use mapforge::{Dim, Genome, LayerShape, MappingChromosome, Model, Objective, Platform, Template};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tempfile::TempDir;

const COMPARE_BUDGET: u64 = 2000;
const COMPARE_POPULATION: u64 = 50;
const COMPARE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const MIN_GEOMEAN_GAIN_OVER_RANDOM: f64 = 1.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Case {
    layer: LayerShape,
    ch: MappingChromosome,
    pi_l1: u64,
    pi_l2: u64,
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn shuffled(rng: &mut ChaCha8Rng) -> [Dim; 6] {
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
        if !fits_evenly(t2[p2.index()] / t1[p2.index()], pi_l2)
            || !fits_evenly(t1[p1.index()], pi_l1)
        {
            continue;
        }
        let l1 = LevelGene {
            pi: pi_l1,
            parallel_dim: p1,
            order: shuffled(rng),
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
            order: shuffled(rng),
            tiles: t2,
        };
        return Case {
            layer: LayerShape::conv("div", dims, stride),
            ch: MappingChromosome { l2, l1 },
            pi_l1,
            pi_l2,
        };
    }
}

fn ragged_case(rng: &mut ChaCha8Rng) -> Case {
    loop {
        let dims: [u64; 6] = std::array::from_fn(|_| rng.gen_range(1..=7));
        let stride = rng.gen_range(1..=3);
        let t2: [u64; 6] = std::array::from_fn(|d| rng.gen_range(1..=dims[d]));
        let t1: [u64; 6] = std::array::from_fn(|d| rng.gen_range(1..=t2[d]));
        let ragged = (0..6).any(|d| !dims[d].is_multiple_of(t2[d]) || !t2[d].is_multiple_of(t1[d]));
        if !ragged {
            continue;
        }
        let pi_l2 = rng.gen_range(1..=5);
        let pi_l1 = rng.gen_range(1..=5);
        let l2 = LevelGene {
            pi: pi_l2,
            parallel_dim: *Dim::ALL.choose(rng).unwrap(),
            order: shuffled(rng),
            tiles: t2,
        };
        let l1 = LevelGene {
            pi: pi_l1,
            parallel_dim: *Dim::ALL.choose(rng).unwrap(),
            order: shuffled(rng),
            tiles: t1,
        };
        return Case {
            layer: LayerShape::conv("ragged", dims, stride),
            ch: MappingChromosome { l2, l1 },
            pi_l1,
            pi_l2,
        };
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 250;
    for i in 0..n {
        let c = divisible_case(&mut rng);
        let exact = oracle_simulate(&c.ch, &c.layer, c.pi_l1, c.pi_l2).unwrap();
        let dram = boundary_traffic(Boundary::Dram, &c.ch, &c.layer, c.pi_l2);
        let l2 = boundary_traffic(Boundary::L2, &c.ch, &c.layer, c.pi_l2);
        let buf = min_buffer_requirement(&c.ch, &c.layer, c.pi_l1);
        let same = compute_cycles(&c.ch, &c.layer, c.pi_l1, c.pi_l2) == exact.cycles
            && boundary_words(&dram) == exact.dram_words
            && boundary_words(&l2) == exact.l2_words
            && buf.l1.total() == exact.max_live_l1_words_per_pe
            && buf.l2.total() == exact.max_live_l2_words
            && exact.macs_executed == total_macs(&c.layer);
        if !same {
            return outcome(false, format!("case {i} differs: {:?} {:?}", c.layer, c.ch));
        }
    }
    let took = start.elapsed();
    outcome(
        took < Duration::from_secs(60),
        format!("{n} divisible configs exact, {:.1}s", took.as_secs_f64()),
    )
}

fn upper_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 250;
    for i in 0..n {
        let c = ragged_case(&mut rng);
        let exact = oracle_simulate(&c.ch, &c.layer, c.pi_l1, c.pi_l2).unwrap();
        let dram = boundary_words(&boundary_traffic(Boundary::Dram, &c.ch, &c.layer, c.pi_l2));
        let l2 = boundary_words(&boundary_traffic(Boundary::L2, &c.ch, &c.layer, c.pi_l2));
        let cycles = compute_cycles(&c.ch, &c.layer, c.pi_l1, c.pi_l2);
        if cycles < exact.cycles || dram < exact.dram_words || l2 < exact.l2_words {
            return outcome(
                false,
                format!("case {i} under-estimates: {:?} {:?}", c.layer, c.ch),
            );
        }
    }
    outcome(true, format!("{n} non-divisible configs bounded"))
}

fn roofline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let models: Vec<Model> = ["w1", "w2", "w3"]
        .iter()
        .map(|n| bundled_model(n).unwrap())
        .collect();
    let platforms = [Platform::edge(), Platform::cloud()];
    let n = 10_000;
    for i in 0..n {
        let model = &models[i % 3];
        let platform = &platforms[(i / 3) % 2];
        let g = random_genome(model, platform, &mut rng);
        let design = decode(&g, model);
        let report = mapforge::evaluate(&design, model, platform, Objective::Latency);
        let floor: u64 = model
            .layers
            .iter()
            .map(|l| total_macs(l).div_ceil(g.num_pes()))
            .sum();
        let layers_ok = report
            .layers
            .iter()
            .zip(&model.layers)
            .all(|(lc, l)| lc.cycles >= total_macs(l).div_ceil(g.num_pes()));
        if report.cycles < floor || !layers_ok {
            return outcome(false, format!("genome {i} beats the roofline"));
        }
    }
    outcome(true, format!("{n} random genomes above ceil(MACs/PEs)"))
}

fn constraint_soundness() -> Outcome {
    let models: Vec<Model> = ["w1", "w2", "w3"]
        .iter()
        .map(|n| bundled_model(n).unwrap())
        .collect();
    let mut runs = 0;
    for platform in [Platform::edge(), Platform::cloud()] {
        for seed in 0..20u64 {
            let model = &models[seed as usize % 3];
            let problem = Problem::new(model, &platform, Objective::Latency);
            let cfg = GaConfig {
                population_size: 50,
                sample_budget: 2000,
                rng_seed: seed,
                ..GaConfig::default()
            };
            let r = match digamma::run(&problem, &cfg, Constraint::None) {
                Ok(r) => r,
                Err(e) => return outcome(false, format!("seed {seed}: {e}")),
            };
            let monotone = r
                .trace
                .windows(2)
                .all(|w| w[1].best_fitness >= w[0].best_fitness);
            if r.best_report.area_mm2 > platform.area_budget || !r.best_report.valid || !monotone {
                return outcome(
                    false,
                    format!("seed {seed} on {}: area or trace violation", model.name),
                );
            }
            runs += 1;
        }
    }
    outcome(
        true,
        format!("{runs} runs within area budget with monotone traces"),
    )
}

fn comparison_table() -> (CompareTable, Duration) {
    let models: Vec<Model> = ["w1", "w2", "w3"]
        .iter()
        .map(|n| bundled_model(n).unwrap())
        .collect();
    let schemes = [
        Scheme::DiGamma,
        Scheme::StdGa,
        Scheme::Random,
        Scheme::Grid(Template::Dla),
        Scheme::Grid(Template::Shi),
        Scheme::Grid(Template::Eye),
        Scheme::FixedHw(PresetKind::Buffer),
        Scheme::FixedHw(PresetKind::Medium),
        Scheme::FixedHw(PresetKind::Compute),
    ];
    let cfg = GaConfig {
        population_size: COMPARE_POPULATION,
        sample_budget: COMPARE_BUDGET,
        ..GaConfig::default()
    };
    let start = Instant::now();
    let table = compare(
        &schemes,
        &models,
        &Platform::edge(),
        Objective::Latency,
        &cfg,
        &COMPARE_SEEDS,
    )
    .unwrap();
    (table, start.elapsed())
}

fn med(t: &CompareTable, s: Scheme, m: &str) -> f64 {
    t.median(s, m).unwrap_or(f64::INFINITY)
}

fn optimizer_comparison(t: &CompareTable, took: Duration) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in &t.models {
        let (d, s, r) = (
            med(t, Scheme::DiGamma, m),
            med(t, Scheme::StdGa, m),
            med(t, Scheme::Random, m),
        );
        pass &= d <= s && d <= r;
        parts.push(format!("{m}: digamma {d:.3e} stdga {s:.3e} random {r:.3e}"));
    }
    let gain = t.normalized(Scheme::Random, Scheme::DiGamma).unwrap_or(0.0);
    pass &= gain >= MIN_GEOMEAN_GAIN_OVER_RANDOM;
    pass &= took < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "{}; geomean gain over random {gain:.2}x; table {:.0}s",
            parts.join("; "),
            took.as_secs_f64()
        ),
    )
}

fn best_of(t: &CompareTable, schemes: &[Scheme], m: &str) -> f64 {
    schemes
        .iter()
        .map(|&s| med(t, s, m))
        .fold(f64::INFINITY, f64::min)
}

fn wins_against(t: &CompareTable, rivals: &[Scheme]) -> (usize, String) {
    let mut wins = 0;
    let mut parts = Vec::new();
    for m in &t.models {
        let (d, b) = (med(t, Scheme::DiGamma, m), best_of(t, rivals, m));
        if d <= b {
            wins += 1;
        }
        parts.push(format!("{m}: digamma {d:.3e} vs {b:.3e}"));
    }
    (wins, parts.join("; "))
}

fn co_opt_vs_hw_opt(t: &CompareTable) -> Outcome {
    let rivals: Vec<Scheme> = Template::ALL.into_iter().map(Scheme::Grid).collect();
    let (wins, detail) = wins_against(t, &rivals);
    outcome(wins >= 2, format!("{wins}/3 workloads; {detail}"))
}

fn co_opt_vs_mapping_opt(t: &CompareTable) -> Outcome {
    let rivals: Vec<Scheme> = PresetKind::ALL.into_iter().map(Scheme::FixedHw).collect();
    let (wins, detail) = wins_against(t, &rivals);
    outcome(wins >= 2, format!("{wins}/3 workloads; {detail}"))
}

/// Orders of the layer's non-trivial dims, trivial dims held in place.
fn canonical_orders(layer: &LayerShape) -> Vec<[Dim; 6]> {
    let moving: Vec<Dim> = Dim::ALL.into_iter().filter(|&d| layer.dim(d) > 1).collect();
    let mut out = Vec::new();
    let mut perm = moving.clone();
    permute(&mut perm, 0, &mut |p| {
        let mut order = Dim::ALL;
        let mut it = p.iter();
        for slot in order.iter_mut() {
            if layer.dim(*slot) > 1 {
                *slot = *it.next().unwrap();
            }
        }
        out.push(order);
    });
    out
}

fn permute(v: &mut Vec<Dim>, k: usize, emit: &mut dyn FnMut(&[Dim])) {
    if k == v.len() {
        emit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, emit);
        v.swap(k, i);
    }
}

fn tile_boxes(limit: [u64; 6]) -> Vec<[u64; 6]> {
    let mut out = vec![[1u64; 6]];
    for d in 0..6 {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=limit[d]).map(move |v| {
                    let mut t = t;
                    t[d] = v;
                    t
                })
            })
            .collect();
    }
    out
}

fn micro_space_optimality() -> Outcome {
    let layer = LayerShape::conv("micro", [4, 3, 3, 1, 1, 1], 1);
    let model = Model::new("micro", vec![layer.clone()]).unwrap();
    let platform = Platform {
        max_pes: 16,
        max_pi_per_level: Some(4),
        ..Platform::edge()
    };
    let problem = Problem::new(&model, &platform, Objective::Latency);
    let orders = canonical_orders(&layer);
    let tiles: Vec<([u64; 6], [u64; 6])> = tile_boxes(layer.dims())
        .into_iter()
        .flat_map(|t2| tile_boxes(t2).into_iter().map(move |t1| (t2, t1)))
        .collect();
    let pis = [1u64, 2, 4];
    let n_tiles = tiles.len();
    let jobs: Vec<(u64, u64, usize)> = pis
        .iter()
        .flat_map(|&a| {
            pis.iter()
                .flat_map(move |&b| (0..n_tiles).map(move |t| (a, b, t)))
        })
        .collect();
    let (best, optimal, size) = jobs
        .par_iter()
        .map(|&(pi_l1, pi_l2, t)| {
            let (mut best, mut count, mut size) = (f64::INFINITY, 0u64, 0u64);
            for p2 in Dim::ALL {
                for p1 in Dim::ALL {
                    for o2 in &orders {
                        for o1 in &orders {
                            let g = Genome {
                                pi_l2,
                                pi_l1,
                                mappings: vec![MappingChromosome {
                                    l2: LevelGene {
                                        pi: pi_l2,
                                        parallel_dim: p2,
                                        order: *o2,
                                        tiles: tiles[t].0,
                                    },
                                    l1: LevelGene {
                                        pi: pi_l1,
                                        parallel_dim: p1,
                                        order: *o1,
                                        tiles: tiles[t].1,
                                    },
                                }],
                            };
                            size += 1;
                            let r = problem.evaluate(&g);
                            if !r.valid {
                                continue;
                            }
                            if r.objective_value < best {
                                best = r.objective_value;
                                count = 1;
                            } else if r.objective_value == best {
                                count += 1;
                            }
                        }
                    }
                }
            }
            (best, count, size)
        })
        .reduce(
            || (f64::INFINITY, 0, 0),
            |a, b| {
                let size = a.2 + b.2;
                match a.0.total_cmp(&b.0) {
                    std::cmp::Ordering::Less => (a.0, a.1, size),
                    std::cmp::Ordering::Greater => (b.0, b.1, size),
                    std::cmp::Ordering::Equal => (a.0, a.1 + b.1, size),
                }
            },
        );
    let budget = size / 5;
    let found = (1..=5u64)
        .filter(|&seed| {
            let cfg = GaConfig {
                population_size: 100,
                sample_budget: budget,
                rng_seed: seed,
                ..GaConfig::default()
            };
            digamma::run(&problem, &cfg, Constraint::None)
                .map(|r| r.best_report.objective_value == best)
                .unwrap_or(false)
        })
        .count();
    outcome(
        found >= 4,
        format!("space {size}, optimum {best} cycles held by {optimal} points, budget {budget}, found in {found}/5 seeds"),
    )
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mapforge");
    let mut outputs: BTreeSet<(String, String, String)> = BTreeSet::new();
    let dirs: Vec<TempDir> = (0..4).map(|_| TempDir::new().unwrap()).collect();
    let settings: [(Option<&str>, Option<&str>); 4] = [
        (Some("1"), None),
        (Some("2"), None),
        (Some("8"), None),
        (None, Some("3")),
    ];
    for ((flag, env), dir) in settings.iter().zip(&dirs) {
        let mut cmd = Command::new(bin);
        cmd.env_remove("MAPFORGE_THREADS");
        if let Some(t) = flag {
            cmd.args(["--threads", t]);
        }
        if let Some(t) = env {
            cmd.env("MAPFORGE_THREADS", t);
        }
        let status = cmd
            .args([
                "optimize",
                "--model",
                "w1",
                "--platform",
                "edge",
                "--seed",
                "7",
                "--budget",
                "1000",
                "--population",
                "50",
            ])
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(
                false,
                format!(
                    "optimize failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ),
            );
        }
        let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
        outputs.insert((
            read("report.json"),
            read("trace.csv"),
            read("best_genome.json"),
        ));
    }
    let mut tables = BTreeSet::new();
    for threads in ["1", "4"] {
        let out = Command::new(bin)
            .env_remove("MAPFORGE_THREADS")
            .args([
                "--threads",
                threads,
                "compare",
                "--schemes",
                "digamma,stdga,random",
                "--models",
                "w3",
                "--seeds",
                "1,2",
                "--budget",
                "300",
                "--population",
                "30",
            ])
            .output()
            .unwrap();
        tables.insert(out.stdout);
    }
    outcome(
        outputs.len() == 1 && tables.len() == 1,
        format!(
            "{} distinct optimize outputs over 4 thread settings, {} distinct compare tables",
            outputs.len(),
            tables.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "oracle equivalence", oracle_equivalence()),
        (2, "upper bound on non-divisible configs", upper_bound()),
        (3, "roofline bound", roofline()),
        (4, "constraint soundness", constraint_soundness()),
    ];
    let (table, took) = comparison_table();
    results.push((
        5,
        "optimizer comparison",
        optimizer_comparison(&table, took),
    ));
    results.push((6, "co-opt vs HW-opt grid search", co_opt_vs_hw_opt(&table)));
    results.push((
        7,
        "co-opt vs fixed-HW presets",
        co_opt_vs_mapping_opt(&table),
    ));
    results.push((8, "micro-space global optimality", micro_space_optimality()));
    results.push((9, "determinism across thread counts", cli_determinism()));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "criterion {id} {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
