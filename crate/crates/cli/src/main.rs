use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rgf_core::analysis::spectral_report;
use rgf_core::config::{RunConfig, REFERENCE_GRAPH_SEED};
use rgf_core::experiments::{self, DEFAULT_HORIZON, DEFAULT_SEED};
use rgf_core::graph::{equal_neighbor_weights, Digraph};
use rgf_core::simulation::spectral_summary;
use rgf_core::{output, Error};

/// Simulator for randomized gradient-free distributed online optimization.
#[derive(Debug, Parser)]
#[command(name = "rgf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write its trace and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Dotted `key=value` override, applied after parsing the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, env = "RGF_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a canned experiment.
    Experiment {
        name: ExperimentName,
        #[arg(long, env = "RGF_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the power-convergence report of the augmented matrix as JSON.
    Spectral {
        #[arg(long, value_enum, default_value_t = GraphKind::Cycle)]
        graph: GraphKind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        edge_prob: f64,
        #[arg(long, default_value_t = REFERENCE_GRAPH_SEED)]
        graph_seed: u64,
        /// Edge-list file, used with `--graph file`.
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Comma-separated coupling values; defaults to fractions of delta_hat
        /// plus 0.01, 0.05, 0.1.
        #[arg(long, value_delimiter = ',')]
        delta_grid: Vec<f64>,
    },
    /// Validate a configuration and print its spectral summary and warnings.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentName {
    #[value(name = "fig2_3")]
    Fig2_3,
    Fig4,
    Diagnostics,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Cycle,
    Complete,
    Random,
    File,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::Config(_)) => 2,
            Failure::Core(e) if e.is_validation() => 3,
            Failure::Core(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "validation",
            _ => "runtime",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Failure::Usage(e.render().to_string())),
    };
    match dispatch(cli.command) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let body = json!({ "error": f.kind(), "exit_code": f.exit_code(), "message": f.message() });
    eprintln!("{body}");
    ExitCode::from(f.exit_code())
}

fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_json(&text)?.with_overrides(overrides)?)
}

/// Fresh `out/<experiment>/<UTC timestamp>` directory.
fn stamped_dir(root: &Path, experiment: &str) -> Result<PathBuf, Failure> {
    let base = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let mut stamp = base.clone();
    let mut k = 1;
    while root.join(experiment).join(&stamp).exists() {
        stamp = format!("{base}-{k}");
        k += 1;
    }
    Ok(output::run_dir(root, experiment, &stamp)?)
}

fn files_json(dir: &Path, files: &[PathBuf]) -> serde_json::Value {
    json!({ "out_dir": dir, "files": files })
}

fn dispatch(cmd: Command) -> Result<serde_json::Value, Failure> {
    match cmd {
        Command::Run {
            config,
            overrides,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config, &overrides)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let result = experiments::analyse_run(&cfg)?;
            let dir = stamped_dir(&out, "run")?;
            let files = result.write(&dir)?;
            Ok(files_json(&dir, &files))
        }
        Command::Experiment {
            name,
            seed,
            horizon,
            out,
        } => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let (label, dir, files) = match name {
                ExperimentName::Fig2_3 => {
                    let r = experiments::experiment_fig2_3(seed, horizon)?;
                    let dir = stamped_dir(&out, "fig2_3")?;
                    ("fig2_3", dir.clone(), r.write(&dir)?)
                }
                ExperimentName::Fig4 => {
                    let r = experiments::experiment_fig4(seed, horizon)?;
                    let dir = stamped_dir(&out, "fig4")?;
                    ("fig4", dir.clone(), r.write(&dir)?)
                }
                ExperimentName::Diagnostics => {
                    let r = experiments::experiment_diagnostics(seed, horizon)?;
                    let dir = stamped_dir(&out, "diagnostics")?;
                    ("diagnostics", dir.clone(), r.write(&dir)?)
                }
            };
            let mut v = files_json(&dir, &files);
            v["experiment"] = json!(label);
            v["seed"] = json!(seed);
            Ok(v)
        }
        Command::Spectral {
            graph,
            n,
            edge_prob,
            graph_seed,
            edges,
            delta_grid,
        } => {
            let g = match graph {
                GraphKind::Cycle => Digraph::cycle(n)?,
                GraphKind::Complete => Digraph::complete(n)?,
                GraphKind::Random => Digraph::random_strongly_connected(n, edge_prob, graph_seed)?,
                GraphKind::File => {
                    let path = edges.ok_or_else(|| Failure::Usage("--graph file needs --edges".into()))?;
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                    Digraph::from_edge_list(&text)?
                }
            };
            let wp = equal_neighbor_weights(&g)?;
            let grid = if delta_grid.is_empty() {
                experiments::delta_grid(&wp)
            } else {
                delta_grid
            };
            Ok(json!({
                "n_agents": g.n_agents(),
                "edges": g.edges().collect::<Vec<_>>(),
                "rows": spectral_report(&wp, &grid),
            }))
        }
        Command::Diagnose { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            cfg.validate()?;
            let g = cfg.graph.build()?;
            let wp = equal_neighbor_weights(&g)?;
            let s = spectral_summary(&wp, cfg.delta);
            Ok(json!({
                "config": cfg,
                "n_agents": g.n_agents(),
                "edges": g.edges().collect::<Vec<_>>(),
                "spectral": s,
                "delta_exceeds_delta_hat": s.delta_hat.map(|d| cfg.delta > d.value),
            }))
        }
    }
}
