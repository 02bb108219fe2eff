//! Command-line front end: scenario ingestion, analysis orchestration,
//! and report emission.
//!
//! Exit codes: 0 success, 2 input error, 3 conflict between analytic
//! verdicts, 4 runtime failure.

mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use qstab::catalog::{BUILTIN_NAMES, BuiltinParams, builtin_scenario};
use qstab::ctmc_sim::{self, Horizon};
use qstab::drift_model::{DriftModel, StateVector};
use qstab::ode_flow;
use qstab::region2d::{self, PartitionFamily};
use qstab::report::{self, OverallVerdict};
use qstab::scenario::{Scenario, ScenarioError, load_scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qstab",
    version,
    about = "Stability analysis for state-dependent birth-and-death networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Load a scenario and validate its schema and rate functions.
    Validate {
        /// Scenario file path or builtin name.
        scenario: String,
    },
    /// Run the analytic classifiers for the scenario's model family.
    Classify {
        scenario: String,
        /// Replace the arrival vector, e.g. `--lambda 0.5,0.9`.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// Append the simulation cross-check.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Sphere mesh resolution for the flow analysis.
        #[arg(long)]
        mesh: Option<usize>,
        /// Membership / separation tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the arrival plane: stability-region polygon, grid, or SVG.
    Region {
        scenario: String,
        /// Grid resolution per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Upper corner of the swept rectangle, e.g. `--lambda-max 1.2,1.2`.
        #[arg(long, value_delimiter = ',')]
        lambda_max: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the chain and report escape slopes and occupancies.
    Simulate {
        scenario: String,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated-time horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Event-count horizon (overrides --horizon).
        #[arg(long)]
        events: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
        /// Record every n-th event of a single run as a trajectory.
        #[arg(long)]
        thin: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the drift flow from one starting point; CSV trajectory.
    TraceOde {
        scenario: String,
        /// Starting point, e.g. `--x0 1,0`.
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bundle every applicable analysis plus simulation into one report.
    Report {
        scenario: String,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum AppError {
    Input(String),
    Conflict,
    Runtime(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Input(_) => 2,
            AppError::Conflict => 3,
            AppError::Runtime(_) => 4,
        }
    }
}

impl From<ScenarioError> for AppError {
    fn from(e: ScenarioError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<report::AnalyzeError> for AppError {
    fn from(e: report::AnalyzeError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                AppError::Input(msg) => eprintln!("error: {msg}"),
                AppError::Conflict => eprintln!("error: analytic methods disagree (conflict)"),
                AppError::Runtime(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(err.code())
        }
    }
}

fn resolve_scenario(spec: &str) -> Result<Scenario, AppError> {
    if Path::new(spec).exists() {
        return Ok(load_scenario(spec)?);
    }
    if BUILTIN_NAMES.contains(&spec) {
        return Ok(builtin_scenario(spec, &BuiltinParams::default())?);
    }
    Err(AppError::Input(format!(
        "`{spec}` is neither a readable file nor a builtin scenario ({})",
        BUILTIN_NAMES.join(", ")
    )))
}

fn prepare(spec: &str, lambda: Option<&[f64]>, seed: Option<u64>) -> Result<Scenario, AppError> {
    let mut scenario = resolve_scenario(spec)?;
    if let Some(l) = lambda {
        scenario = scenario.with_lambda(l)?;
    }
    if let Some(s) = seed {
        scenario = scenario.with_analysis(|a| a.seed = s)?;
    }
    Ok(scenario)
}

fn emit(out: Option<&Path>, file_name: &str, payload: &str) -> Result<(), AppError> {
    match out {
        None => {
            println!("{payload}");
            Ok(())
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(file_name);
            std::fs::write(&path, payload)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String, AppError> {
    serde_json::to_string_pretty(value).map_err(|e| AppError::Runtime(e.to_string()))
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Validate { scenario } => {
            let s = resolve_scenario(&scenario)?;
            println!(
                "ok: scenario `{}` ({}, dimension {}, fingerprint {})",
                s.name(),
                s.model().family_name(),
                s.dim(),
                s.fingerprint()
            );
            Ok(())
        }
        Command::Classify {
            scenario,
            lambda,
            simulate,
            seed,
            mesh,
            tol,
            out,
        } => {
            let mut s = prepare(&scenario, lambda.as_deref(), seed)?;
            if mesh.is_some() || tol.is_some() {
                s = s.with_analysis(|a| {
                    if let Some(m) = mesh {
                        a.mesh = m;
                    }
                    if let Some(t) = tol {
                        a.tol = t;
                    }
                })?;
            }
            let report = report::analyze(&s, simulate)?;
            emit(
                out.as_deref(),
                &format!("{}-report.json", s.name()),
                &to_json(&report)?,
            )?;
            if report.overall == OverallVerdict::Conflict {
                return Err(AppError::Conflict);
            }
            Ok(())
        }
        Command::Region {
            scenario,
            grid,
            lambda_max,
            tol,
            format,
            out,
        } => {
            let s = resolve_scenario(&scenario)?;
            let family = partition_family(&s)?;
            let sweep_cfg = s.sweep();
            let n = grid.unwrap_or(sweep_cfg.grid);
            let max = match lambda_max {
                Some(v) if v.len() == 2 => [v[0], v[1]],
                Some(v) => {
                    return Err(AppError::Input(format!(
                        "--lambda-max needs 2 components, got {}",
                        v.len()
                    )));
                }
                None => sweep_cfg.lambda_max,
            };
            let tol = tol.unwrap_or(s.analysis().tol);
            let polygon = region2d::region_polygon(&family);
            match format {
                Format::Json => {
                    let payload = serde_json::json!({
                        "scenario": s.name(),
                        "fingerprint": s.fingerprint(),
                        "polygon": polygon,
                        "service_points": family.service_points(),
                    });
                    emit(
                        out.as_deref(),
                        &format!("{}-region.json", s.name()),
                        &to_json(&payload)?,
                    )
                }
                Format::Csv => {
                    let sweep = region2d::sweep_region(&family, n, max, tol);
                    let mut csv = String::from("lambda1,lambda2,verdict\r\n");
                    for (i, &l1) in sweep.lambda1.iter().enumerate() {
                        for (j, &l2) in sweep.lambda2.iter().enumerate() {
                            let v = sweep.verdicts[i * sweep.lambda2.len() + j];
                            csv.push_str(&format!("{l1},{l2},{v}\r\n"));
                        }
                    }
                    emit(out.as_deref(), &format!("{}-region.csv", s.name()), &csv)
                }
                Format::Svg => {
                    let drawing = svg::render_region(&family, &polygon);
                    emit(
                        out.as_deref(),
                        &format!("{}-region.svg", s.name()),
                        &drawing,
                    )
                }
            }
        }
        Command::Simulate {
            scenario,
            lambda,
            seed,
            horizon,
            events,
            replicas,
            thin,
            format,
            out,
        } => {
            let s = prepare(&scenario, lambda.as_deref(), seed)?;
            let mut cfg = s.sim_config();
            if let Some(t) = horizon {
                cfg.horizon = Horizon::Time(t);
            }
            if let Some(e) = events {
                cfg.horizon = Horizon::Events(e);
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            if format == Format::Csv {
                // Thinned trajectory of a single run.
                let single = ctmc_sim::SimConfig {
                    record_every: Some(thin.unwrap_or(1)),
                    ..cfg.clone()
                };
                let summary = ctmc_sim::simulate(s.model(), &single)
                    .map_err(|e| AppError::Runtime(e.to_string()))?;
                let mut csv = String::from("t,");
                csv.push_str(
                    &(1..=s.dim())
                        .map(|i| format!("x{i}"))
                        .collect::<Vec<_>>()
                        .join(","),
                );
                csv.push_str("\r\n");
                for p in summary.trace.iter().flatten() {
                    let cells: Vec<String> = p.state.iter().map(|c| c.to_string()).collect();
                    csv.push_str(&format!("{},{}\r\n", p.t, cells.join(",")));
                }
                return emit(out.as_deref(), &format!("{}-trace.csv", s.name()), &csv);
            }
            let est = ctmc_sim::estimate_recurrence(s.model(), &cfg)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            let trace = match thin {
                Some(n) => {
                    let single = ctmc_sim::SimConfig {
                        record_every: Some(n),
                        ..cfg.clone()
                    };
                    ctmc_sim::simulate(s.model(), &single)
                        .map_err(|e| AppError::Runtime(e.to_string()))?
                        .trace
                }
                None => None,
            };
            let payload = serde_json::json!({
                "scenario": s.name(),
                "fingerprint": s.fingerprint(),
                "estimate": est,
                "trace": trace,
            });
            emit(
                out.as_deref(),
                &format!("{}-simulation.json", s.name()),
                &to_json(&payload)?,
            )
        }
        Command::TraceOde {
            scenario,
            x0,
            t_max,
            out,
        } => {
            let s = resolve_scenario(&scenario)?;
            if !s.model().is_smooth() {
                return Err(AppError::Input(
                    "trace-ode needs a smooth model; piecewise-constant families go through `region`"
                        .into(),
                ));
            }
            let start = StateVector::new(x0).map_err(|e| AppError::Input(e.to_string()))?;
            let mut settings = s.flow_settings();
            if let Some(t) = t_max {
                settings.t_max = t;
            }
            let traj = ode_flow::integrate(s.model(), &start, &settings)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            let mut csv = String::from("t,");
            csv.push_str(
                &(1..=s.dim())
                    .map(|i| format!("u{i}"))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            csv.push_str(",norm\r\n");
            for i in 0..traj.len() {
                let state = traj.state(i);
                let cells: Vec<String> = state.iter().map(|c| c.to_string()).collect();
                csv.push_str(&format!(
                    "{},{},{}\r\n",
                    traj.time(i),
                    cells.join(","),
                    qstab::vecn::norm(state)
                ));
            }
            emit(out.as_deref(), &format!("{}-ode.csv", s.name()), &csv)
        }
        Command::Report {
            scenario,
            lambda,
            seed,
            out,
        } => {
            let s = prepare(&scenario, lambda.as_deref(), seed)?;
            let report = report::analyze(&s, true)?;
            emit(
                out.as_deref(),
                &format!("{}-report.json", s.name()),
                &to_json(&report)?,
            )?;
            if report.overall == OverallVerdict::Conflict {
                return Err(AppError::Conflict);
            }
            Ok(())
        }
    }
}

fn partition_family(s: &Scenario) -> Result<PartitionFamily, AppError> {
    match s.model() {
        DriftModel::Support(m) => {
            PartitionFamily::from_support(m).map_err(|e| AppError::Input(e.to_string()))
        }
        DriftModel::Cones(p) => {
            PartitionFamily::from_partition(p).map_err(|e| AppError::Input(e.to_string()))
        }
        DriftModel::Smooth(_) => Err(AppError::Input(
            "the region construction applies to piecewise-constant models only".into(),
        )),
    }
}
