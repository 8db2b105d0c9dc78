use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mapforge::experiment::{compare, Scheme};
use mapforge::report::{build_report, trace_csv, RunInfo};
use mapforge::search::{Constraint, GaConfig, Problem};
use mapforge::space::{genome_from_json, genome_to_json};
use mapforge::workload::resolve_model;
use mapforge::{Error, Objective, Platform, Template};

#[derive(Parser)]
#[command(
    name = "mapforge",
    version,
    about = "Joint accelerator and mapping search under an area budget"
)]
struct Cli {
    /// Worker threads for evaluation; results do not depend on it.
    #[arg(long, global = true, env = "MAPFORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search one model and write report, trace and checkpoint.
    Optimize(OptimizeArgs),
    /// Run a scheme x model x seed table.
    Compare(CompareArgs),
    /// Re-evaluate a checkpoint and print the design.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Platform profile: edge, cloud or a TOML path.
    #[arg(long, default_value = "edge")]
    platform: String,
    #[arg(long, default_value = "latency")]
    objective: Objective,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    population: Option<u64>,
    /// GA settings file; --budget, --population and --seed override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Model: w1, w2, w3 or a JSON path.
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "digamma")]
    scheme: String,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value = "mapforge-out")]
    out: PathBuf,
    /// Freeze the PE array as "ROWS,COLS".
    #[arg(long, conflicts_with = "fix_mapping")]
    fix_hw: Option<String>,
    /// Freeze every layer's mapping to a template.
    #[arg(long)]
    fix_mapping: Option<Template>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',', required = true)]
    schemes: Vec<String>,
    /// Comma-separated models.
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Scheme the summary is normalized to; defaults to the first.
    #[arg(long)]
    baseline: Option<String>,
    #[command(flatten)]
    search: SearchArgs,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Checkpoint written by `optimize`.
    #[arg(long)]
    genome: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "edge")]
    platform: String,
    #[arg(long, default_value = "latency")]
    objective: Objective,
    /// Print the JSON report instead of text.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Input(String),
    NoValid(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_bad_input() {
            Failure::Input(e.to_string())
        } else if matches!(e, Error::NoValidDesign { .. }) {
            Failure::NoValid(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

fn ga_config(args: &SearchArgs, seed: Option<u64>) -> CliResult<GaConfig> {
    let mut cfg = match &args.config {
        Some(path) => GaConfig::load(path)?,
        None => GaConfig::default(),
    };
    if let Some(b) = args.budget {
        cfg.sample_budget = b;
    }
    if let Some(p) = args.population {
        cfg.population_size = p;
    }
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_fix_hw(text: &str) -> CliResult<(u64, u64)> {
    let bad = || {
        Failure::Input(format!(
            "--fix-hw '{text}': expected ROWS,COLS with positive integers"
        ))
    };
    let (r, c) = text.split_once(',').ok_or_else(bad)?;
    let r: u64 = r.trim().parse().map_err(|_| bad())?;
    let c: u64 = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r, c))
}

fn optimize(args: OptimizeArgs) -> CliResult<()> {
    let model = resolve_model(&args.model)?;
    let platform = Platform::resolve(&args.search.platform)?;
    let scheme: Scheme = args.scheme.parse()?;
    let cfg = ga_config(&args.search, args.seed)?;
    let constraint = match (&args.fix_hw, args.fix_mapping) {
        (Some(hw), _) => {
            let (pi_l1, pi_l2) = parse_fix_hw(hw)?;
            Constraint::FixedHw { pi_l1, pi_l2 }
        }
        (None, Some(t)) => Constraint::FixedMapping(t),
        (None, None) => Constraint::None,
    };
    let problem = Problem::new(&model, &platform, args.search.objective);
    let result = scheme.run(&problem, &cfg, constraint)?;

    let template = scheme.template().or(match constraint {
        Constraint::FixedMapping(t) => Some(t),
        _ => None,
    });
    let fixed_hw = match constraint {
        Constraint::FixedHw { pi_l1, pi_l2 } => Some(format!("{pi_l1}x{pi_l2}")),
        _ => None,
    };
    let run = RunInfo {
        scheme: scheme.name(),
        template: template.map(|t| t.to_string()),
        fixed_hw,
        seed: cfg.rng_seed,
        budget: cfg.sample_budget,
        population: cfg.population_size,
        samples_used: result.samples_used,
    };
    let report = build_report(
        &result.best_genome,
        &model,
        &platform,
        &args.search.platform,
        args.search.objective,
        Some(run),
    );

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", args.out.display())))?;
    write_file(&args.out.join("report.json"), &report.to_json())?;
    write_file(&args.out.join("trace.csv"), &trace_csv(&result.trace))?;
    write_file(
        &args.out.join("best_genome.json"),
        &genome_to_json(&result.best_genome, &model),
    )?;
    print!("{}", report.render_text());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_compare(args: CompareArgs) -> CliResult<()> {
    let schemes = args
        .schemes
        .iter()
        .map(|s| s.parse::<Scheme>())
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = args
        .baseline
        .as_deref()
        .map(str::parse::<Scheme>)
        .transpose()?;
    if let Some(b) = baseline {
        if !schemes.contains(&b) {
            return Err(Failure::Input(format!(
                "baseline {b} is not among the compared schemes"
            )));
        }
    }
    let models = args
        .models
        .iter()
        .map(|m| resolve_model(m))
        .collect::<Result<Vec<_>, _>>()?;
    let platform = Platform::resolve(&args.search.platform)?;
    let cfg = ga_config(&args.search, None)?;
    let table = compare(
        &schemes,
        &models,
        &platform,
        args.search.objective,
        &cfg,
        &args.seeds,
    )?;
    let text = table.render(baseline);
    print!("{text}");
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> CliResult<()> {
    let model = resolve_model(&args.model)?;
    let platform = Platform::resolve(&args.platform)?;
    let text = fs::read_to_string(&args.genome)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.genome.display())))?;
    let genome = genome_from_json(&text, &model, &platform)
        .map_err(|e| e.context(&args.genome.display().to_string()))?;
    let report = build_report(
        &genome,
        &model,
        &platform,
        &args.platform,
        args.objective,
        None,
    );
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Optimize(a) => optimize(a),
        Command::Compare(a) => run_compare(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(Failure::Input("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::Internal(format!("thread pool: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::NoValid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(4)
        }
    }
}
