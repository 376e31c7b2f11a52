//! `iann`: decompose a differentiable black-box function into hierarchical
//! bottleneck structures, train them, and emit level plots and reports.
//!
//! Exit codes: 0 success, 1 demo reference check failed, 2 configuration
//! error, 3 numerical failure, 4 training divergence.

mod config;
mod demo;
mod pipeline;
mod report;

use clap::{Args, Parser, Subcommand};
use config::{RunConfig, Structure};
use iann_core::blackbox::FunctionSpec;
use pipeline::{config_error, CliError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "iann",
    version,
    about = "Interpretable hierarchical decomposition and visualization of black-box functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in function: harmonic, quad5, dash9, borehole, linear-<d>.
    #[arg(long, conflicts_with = "expr")]
    builtin: Option<String>,
    /// Math expression over x1..xd (needs --domain).
    #[arg(long, requires = "domain")]
    expr: Option<String>,
    /// Domain as JSON intervals, e.g. [[0,1],[0,3.14]].
    #[arg(long)]
    domain: Option<String>,
    /// first-level | ovh | dash.
    #[arg(long)]
    structure: Option<String>,
    /// 1-based input whose group must lead the hierarchy (dash).
    #[arg(long)]
    must_lead: Option<usize>,
    /// 1-based input to single out (first-level); omit to sweep all.
    #[arg(long)]
    singled_out: Option<usize>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot grid resolution.
    #[arg(long)]
    res: Option<usize>,
    /// Worker hint; results are identical for any value.
    #[arg(long, env = "IANN_THREADS")]
    threads: Option<usize>,
    /// Training sample count.
    #[arg(long)]
    n_train: Option<usize>,
    /// Maximum training epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Determine the hierarchical input ordering (and groups for dash)
    /// without training.
    Order(RunArgs),
    /// Full fit: order/group, build, train, evaluate, write model.json and
    /// report.json.
    Fit(RunArgs),
    /// Render level_<i>.json / level_<i>.svg from a saved model.
    Plot {
        /// Path to a model.json produced by `fit` or `demo`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 101)]
        res: usize,
        /// Number of contour lines.
        #[arg(long, default_value_t = 15)]
        contours: usize,
        #[arg(long, default_value_t = 640)]
        size_px: u32,
        /// cubehelix | gray.
        #[arg(long, default_value = "cubehelix")]
        colormap: String,
    },
    /// Predict at points from a CSV (raw coordinates, one row per point).
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a pinned-seed benchmark pipeline and print the reference
    /// comparison table.
    Demo {
        /// harmonic-first-level | harmonic-ovh | quad5-ovh | dash9 | borehole.
        benchmark: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the pinned seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "IANN_THREADS")]
        threads: Option<usize>,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                config_error(format!(
                    "{}: invalid config at line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(name) = &args.builtin {
        cfg.function = Some(FunctionSpec::Builtin {
            builtin: name.clone(),
        });
    }
    if let Some(expr) = &args.expr {
        let domain_text = args.domain.as_ref().expect("clap enforces --domain");
        let domain: Vec<(f64, f64)> = serde_json::from_str(domain_text)
            .map_err(|e| config_error(format!("--domain is not a JSON interval list: {e}")))?;
        cfg.function = Some(FunctionSpec::Expression {
            expression: expr.clone(),
            domain,
        });
    }
    if let Some(s) = &args.structure {
        cfg.structure = Structure::parse(s)
            .ok_or_else(|| config_error(format!("unknown structure `{s}` (first-level | ovh | dash)")))?;
    }
    if let Some(j) = args.must_lead {
        cfg.must_lead = Some(j);
    }
    if let Some(j) = args.singled_out {
        cfg.singled_out = Some(j);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(res) = args.res {
        cfg.plot.res = res;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if let Some(n) = args.n_train {
        cfg.n_train = n;
    }
    if let Some(epochs) = args.epochs {
        cfg.optimizer.max_epochs = epochs;
    }
    Ok(cfg)
}

fn run() -> Result<i32, CliError> {
    match Cli::parse().command {
        Command::Order(args) => {
            let cfg = load_config(&args)?;
            let out_dir = PathBuf::from(&cfg.out_dir);
            let report = pipeline::run_order(cfg, &out_dir)?;
            if let Some(o) = &report.ordering {
                println!("input ordering: {:?}", o.permutation);
            }
            if let Some(g) = &report.grouping {
                println!("groups (canonical): {:?}", g.groups);
                println!("hierarchy order:    {:?}", g.ordered_groups);
            }
            println!("report: {}", out_dir.join("report.json").display());
            Ok(0)
        }
        Command::Fit(args) => {
            let cfg = load_config(&args)?;
            let out_dir = PathBuf::from(&cfg.out_dir);
            let report = pipeline::run_fit(cfg, &out_dir)?;
            if let Some(fit) = &report.fit {
                println!(
                    "{}: test r2 {:.5} after {} epochs{}",
                    fit.structure,
                    fit.test_r2,
                    fit.epochs_run,
                    if fit.early_stopped { " (early stop)" } else { "" }
                );
            }
            for note in &report.notes {
                println!("note: {note}");
            }
            println!("artifacts in {}", out_dir.display());
            Ok(0)
        }
        Command::Plot {
            model,
            out,
            res,
            contours,
            size_px,
            colormap,
        } => {
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out"));
            let files = pipeline::run_plot(&model, &out_dir, res, contours, size_px, &colormap)?;
            println!("wrote {} files to {}", files.len(), out_dir.display());
            Ok(0)
        }
        Command::Eval { model, points, out } => {
            let csv = pipeline::run_eval(&model, &points)?;
            match out {
                Some(path) => pipeline::write_text(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::Demo {
            benchmark,
            out,
            seed,
            threads,
        } => {
            let out_dir =
                out.unwrap_or_else(|| PathBuf::from(format!("out/demo-{benchmark}")));
            let (_, checks) = demo::run_demo(&benchmark, &out_dir, seed, threads)?;
            demo::print_checks(&benchmark, &checks);
            println!("artifacts in {}", out_dir.display());
            Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code);
        }
    }
}
