use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use control_landscape::descent::{
    complexity, enumerate_landscape, sample_with_engine, EnumerationOptions, SampleSet,
};
use control_landscape::effective::CouplingTable;
use control_landscape::embedding::{density_peak_cluster, tsne, ClusterOptions, EmbeddingConfig};
use control_landscape::experiment::{
    emit_all, emit_plot_data, run_experiment, ExperimentConfig, ExperimentError, ProblemBlock,
    RunOptions,
};
use control_landscape::quantum::{ControlProblem, FidelityEngine, SpinConvention};
use control_landscape::stats::hamming_matrix;

#[derive(Parser)]
#[command(
    name = "control-landscape",
    version,
    about = "Bang-bang control landscapes of a driven Ising chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check an experiment config.
    Validate { config: PathBuf },
    /// Run a full sweep into its output directory.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Reuse grid points finished by an earlier run.
        #[arg(long)]
        resume: bool,
    },
    /// Sample SD_k local minima at one point.
    Sample {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, short)]
        k: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        /// Write the sample set as JSON here; CSV goes to stdout otherwise.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact couplings of the landscape at one point, as JSON.
    Couplings {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Embed and cluster a saved sample set; CSV to stdout.
    Embed {
        /// Sample set JSON written by `sample --output`.
        input: PathBuf,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expected evaluations to reach the global optimum at one point.
    Complexity {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, short)]
        k: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Regenerate plot tables from a finished run directory.
    Emit {
        run_dir: PathBuf,
        /// One of phase_diagram, complexity_scaling, hamming_hist,
        /// dos_excitations, coupling_maps, embedding_map; all by default.
        #[arg(long)]
        kind: Option<String>,
    },
}

/// A single grid point. Values come from `--config` when given; flags win.
#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 't')]
    duration: Option<f64>,
    #[arg(long, short = 'n')]
    bangs: Option<usize>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    field_max: Option<f64>,
    #[arg(long, value_parser = parse_convention)]
    spin_convention: Option<SpinConvention>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_convention(s: &str) -> Result<SpinConvention, String> {
    match s {
        "pauli" => Ok(SpinConvention::Pauli),
        "spin_half" => Ok(SpinConvention::SpinHalf),
        _ => Err(format!("expected `pauli` or `spin_half`, got `{s}`")),
    }
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    }
}

fn run_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Run(e.to_string())
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::parse(&text)?)
}

struct Point {
    problem: ControlProblem,
    seed: u64,
    config: Option<ExperimentConfig>,
}

fn single<T: Copy>(flag: Option<T>, from_config: Option<Vec<T>>, name: &str) -> Result<T, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match from_config.as_deref() {
        Some([v]) => Ok(*v),
        Some(_) => Err(Failure::Config(format!(
            "config sweeps several {name} values; pick one with --{name}"
        ))),
        None => Err(Failure::Config(format!(
            "--{name} is required without --config"
        ))),
    }
}

fn point(args: &PointArgs) -> Result<Point, Failure> {
    let config = args.config.as_deref().map(load).transpose()?;
    let mut block = config
        .as_ref()
        .map(|c| c.problem.clone())
        .unwrap_or_else(ProblemBlock::default);
    if let Some(s) = args.sites {
        block.sites = s;
    }
    if let Some(h) = args.field_max {
        block.field_max = h;
    }
    if let Some(c) = args.spin_convention {
        block.spin_convention = c;
    }
    let duration = single(
        args.duration,
        config.as_ref().map(|c| c.sweep.durations.values()),
        "duration",
    )?;
    let bangs = single(
        args.bangs,
        config.as_ref().map(|c| c.sweep.bangs.clone()),
        "bangs",
    )?;
    let problem = block.problem(duration, bangs);
    problem
        .validate()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let seed = args.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    Ok(Point {
        problem,
        seed,
        config,
    })
}

fn engine(p: &ControlProblem) -> Result<FidelityEngine, Failure> {
    FidelityEngine::new(p).map_err(run_err)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(run_err)?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            cfg.validate()?;
            println!("{}: ok", config.display());
        }
        Command::Run {
            config,
            output,
            seed,
            workers,
            resume,
        } => {
            let mut cfg = load(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.limits.workers = w;
            }
            let manifest = run_experiment(&cfg, &RunOptions { resume })?;
            let failed = manifest.cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "{} grid points, {failed} failed, {:.1}s -> {}",
                manifest.cells.len(),
                manifest.wall_seconds,
                cfg.output.display()
            );
        }
        Command::Sample {
            point: args,
            k,
            samples,
            output,
        } => {
            let p = point(&args)?;
            let cfg = p.config.as_ref();
            let k = single(k, cfg.map(|c| c.sweep.flips.clone()), "k")?;
            let m = samples.or(cfg.map(|c| c.sweep.samples)).unwrap_or(200);
            let set = sample_with_engine(&engine(&p.problem)?, k, m, p.seed).map_err(run_err)?;
            match output {
                Some(path) => {
                    set.save_json(&path).map_err(run_err)?;
                    eprintln!(
                        "{} minima, {} distinct, best fidelity {:.6} -> {}",
                        set.m(),
                        set.m_star(),
                        set.best().map(|r| r.fidelity).unwrap_or(0.0),
                        path.display()
                    );
                }
                None => set.write_csv(std::io::stdout().lock()).map_err(run_err)?,
            }
        }
        Command::Couplings { point: args } => {
            let p = point(&args)?;
            let cap = p.config.as_ref().map(|c| c.limits.enumeration_cap);
            let table = enumerate_landscape(
                &engine(&p.problem)?,
                EnumerationOptions {
                    cap: cap.unwrap_or(EnumerationOptions::default().cap),
                    keep_table: true,
                },
            )
            .map_err(run_err)?;
            let costs = table.costs().expect("table kept");
            let tab = CouplingTable::from_costs(&costs).map_err(run_err)?;
            let frustration: Vec<_> = [vec![1], vec![1, 2], vec![1, 2, 3]]
                .into_iter()
                .map(|o| {
                    let phi = tab.frustration(&o).ok();
                    (o, phi)
                })
                .collect();
            print_json(&serde_json::json!({
                "problem": p.problem,
                "best_protocol": table.best_protocol.to_string(),
                "best_fidelity": table.best_fidelity,
                "c0": tab.c0,
                "g": tab.g,
                "j": tab.j,
                "k": tab.k,
                "frustration": frustration,
                "three_body_locality": tab.three_body_locality(),
            }))?;
        }
        Command::Embed {
            input,
            perplexity,
            iterations,
            seed,
        } => {
            let set = SampleSet::load_json(&input).map_err(|e| Failure::Config(e.to_string()))?;
            let mut tc = EmbeddingConfig::default();
            if let Some(p) = perplexity {
                tc.perplexity = p;
            }
            if let Some(i) = iterations {
                tc.iterations = i;
            }
            if let Some(s) = seed {
                tc.seed = s;
            }
            let hm = hamming_matrix(&set.protocols()).map_err(run_err)?;
            let emb = tsne(&hm, &tc).map_err(run_err)?;
            let clusters = density_peak_cluster(&emb.distances(), &ClusterOptions::default())
                .map_err(run_err)?;
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(["index", "x", "y", "label", "fidelity"])
                .map_err(run_err)?;
            for (i, c) in emb.coordinates.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    c[0].to_string(),
                    c[1].to_string(),
                    clusters.labels[i].to_string(),
                    set.records[i].fidelity.to_string(),
                ])
                .map_err(run_err)?;
            }
            w.flush().map_err(run_err)?;
            eprintln!("kl {:.4}, {} clusters", emb.kl, clusters.centers.len());
        }
        Command::Complexity {
            point: args,
            k,
            runs,
        } => {
            let p = point(&args)?;
            let cfg = p.config.as_ref();
            let k = single(k, cfg.map(|c| c.sweep.flips.clone()), "k")?;
            let runs = runs
                .or(cfg.and_then(|c| c.analysis.complexity.as_ref().map(|o| o.runs)))
                .unwrap_or(10_000);
            let e = engine(&p.problem)?;
            let cap = cfg.map(|c| c.limits.enumeration_cap);
            let opt = enumerate_landscape(
                &e,
                EnumerationOptions {
                    cap: cap.unwrap_or(EnumerationOptions::default().cap),
                    keep_table: false,
                },
            )
            .map_err(run_err)?;
            print_json(&complexity(&e, k, runs, p.seed, &opt).map_err(run_err)?)?;
        }
        Command::Emit { run_dir, kind } => {
            let written = match kind {
                Some(k) => vec![emit_plot_data(&run_dir, k.parse()?)?],
                None => emit_all(&run_dir)?,
            };
            if written.is_empty() {
                return Err(Failure::Run(format!(
                    "no finished results under {}",
                    run_dir.display()
                )));
            }
            let mut out = std::io::stdout().lock();
            for p in written {
                writeln!(out, "{}", p.display()).map_err(run_err)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
