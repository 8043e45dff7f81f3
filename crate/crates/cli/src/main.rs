//! `finsler`: run declarative scenarios against the finsler-core engine.
//!
//! Exit codes: 0 all gates pass, 1 a gate fails, 2 parse or usage error,
//! 3 hypothesis refused, 4 numerical failure.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::hardy::weighted::{brezis_vazquez_check, weighted_hardy_quotient};
use finsler_core::hardy::{demo_funk_infimum, run_scenario, sharpness_sweep, DEMO_BANNER};
use finsler_core::measure::{comparison_report, default_grid, Comparison};
use finsler_core::models::{sample_flags, ModelSpace};
use finsler_core::report::{csv_table, num, quotient_csv, sweep_csv, to_json};
use finsler_core::Error;

use config::{comparison_name, CompareTask, CurvatureTask, DemoTask, Format, LoadError, ScenarioConfig, Task};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Scenario runner for Finsler Hardy-inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Scenario file (TOML or JSON) or built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Directory for report files; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Starting quadrature refinement level.
    #[arg(long)]
    budget: Option<u32>,
    /// Seed for every random battery or sample in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever task the scenario declares.
    Run(Common),
    Hardy(Common),
    LogHardy(Common),
    /// Weighted Hardy or Brezis–Vázquez scenarios.
    WeightedHardy(Common),
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated family parameters replacing the scenario's list.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Option<Vec<f64>>,
    },
    Curvature {
        #[command(flatten)]
        common: Common,
        /// Model name: euclidean, gaussian, hyperbolic, sphere or funk.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        samples: Option<usize>,
    },
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lemma: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    DemoFunkInfimum(Common),
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

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(m) | LoadError::Parse(m) => Failure::Usage(m),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) => 2,
        Error::Refused(_) | Error::Inadmissible(_) => 3,
        _ => 4,
    }
}

struct Outcome {
    json: String,
    csv: String,
    passed: bool,
    summary: String,
}

fn model_by_name(name: &str, dim: usize) -> Result<ModelSpace, Failure> {
    Ok(match name {
        "euclidean" => ModelSpace::Euclidean { dim },
        "gaussian" => ModelSpace::Gaussian { dim },
        "hyperbolic" => ModelSpace::Hyperbolic { dim },
        "sphere" => ModelSpace::Sphere { dim },
        "funk" => ModelSpace::Funk { dim },
        other => return Err(Failure::Usage(format!("unknown model {other:?}"))),
    })
}

fn execute(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    Ok(match &cfg.task {
        Task::Hardy(s) | Task::LogHardy(s) => {
            let r = run_scenario(s)?;
            Outcome {
                json: to_json(&r)?,
                csv: quotient_csv(&r.reports),
                passed: r.passed,
                summary: format!(
                    "{} {}: {} functions, target {}, worst gap {}",
                    r.scenario,
                    r.tag.name(),
                    r.reports.len(),
                    num(r.gate.target),
                    num(r.worst_gap)
                ),
            }
        }
        Task::Sweep(t) => {
            let table = sharpness_sweep(&t.scenario, &t.values)?;
            Outcome {
                json: to_json(&table)?,
                csv: sweep_csv(&table),
                passed: table.passed,
                summary: format!(
                    "{}: {} rows, target {}, final gap {}, monotone {}",
                    table.scenario,
                    table.rows.len(),
                    num(table.target),
                    num(table.final_gap),
                    table.monotone
                ),
            }
        }
        Task::WeightedHardy(s) => {
            let r = weighted_hardy_quotient(s)?;
            Outcome {
                json: to_json(&r)?,
                csv: quotient_csv(&r.reports),
                passed: r.passed,
                summary: format!("{}: target {}, skipped {}", r.scenario, num(r.target), r.skipped),
            }
        }
        Task::BrezisVazquez(s) => {
            let r = brezis_vazquez_check(s)?;
            let rows: Vec<Vec<String>> = r
                .members
                .iter()
                .map(|m| {
                    vec![
                        m.label.clone(),
                        num(m.gradient),
                        num(m.hardy),
                        num(m.remainder),
                        num(m.margin),
                        m.passed.to_string(),
                    ]
                })
                .collect();
            let worst = r.members.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
            Outcome {
                json: to_json(&r)?,
                csv: csv_table(&["family", "gradient", "hardy", "remainder", "margin", "passed"], &rows),
                passed: r.passed,
                summary: format!(
                    "{}: theta_lower {} (ritz {} x {}), worst margin {}",
                    r.scenario,
                    num(r.theta_lower),
                    num(r.theta.ritz),
                    r.theta.safety_factor,
                    num(worst)
                ),
            }
        }
        Task::Curvature(t) => {
            let table = sample_flags(&t.model, t.samples, t.seed)?;
            let rows: Vec<Vec<String>> = table
                .samples
                .iter()
                .map(|s| {
                    let mut row: Vec<String> = s.x.iter().chain(&s.y).chain(&s.v).map(|v| num(*v)).collect();
                    row.push(num(s.curvature));
                    row
                })
                .collect();
            let n = t.model.dim();
            let mut header: Vec<String> = Vec::new();
            for p in ["x", "y", "v"] {
                header.extend((0..n).map(|i| format!("{p}{i}")));
            }
            header.push("curvature".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            Outcome {
                json: to_json(&table)?,
                csv: csv_table(&header, &rows),
                passed: table.worst_deviation <= t.tolerance,
                summary: format!(
                    "{}: {} flags, worst deviation {} (tolerance {})",
                    t.id,
                    table.samples.len(),
                    num(table.worst_deviation),
                    num(t.tolerance)
                ),
            }
        }
        Task::Compare(t) => {
            let comparison = Comparison::for_model(comparison_name(&t.lemma), &t.model)?;
            let grid = t.grid.clone().unwrap_or_else(|| default_grid(&t.model, &comparison));
            let r = comparison_report(&t.model, comparison, &grid)?;
            let rows = vec![vec![
                r.model.clone(),
                comparison_name(&t.lemma).to_string(),
                num(r.worst_margin),
                num(r.worst_t),
                r.points.to_string(),
            ]];
            Outcome {
                json: to_json(&r)?,
                csv: csv_table(&["model", "comparison", "worst_margin", "worst_t", "points"], &rows),
                passed: r.worst_margin >= t.min_margin,
                summary: format!("{}: worst margin {} over {} points", t.id, num(r.worst_margin), r.points),
            }
        }
        Task::DemoFunkInfimum(t) => {
            eprintln!("{DEMO_BANNER}");
            let d = demo_funk_infimum(&t.budget)?;
            let rows: Vec<Vec<String>> = d
                .rows
                .iter()
                .map(|r| vec![num(r.a), num(r.b), num(r.h), num(r.quotient)])
                .collect();
            Outcome {
                json: to_json(&d)?,
                csv: csv_table(&["a", "b", "h", "quotient"], &rows),
                passed: true,
                summary: format!("{}: smallest quotient {}", t.id, num(d.best.quotient)),
            }
        }
    })
}

fn scenario(common: &Common) -> Result<ScenarioConfig, Failure> {
    match &common.scenario {
        Some(s) => Ok(config::load(s)?),
        None => Err(Failure::Usage("--scenario is required".into())),
    }
}

fn expect(cfg: &ScenarioConfig, ok: bool, command: &str) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Usage(format!("scenario {:?} is not a {command} scenario", cfg.id())))
    }
}

fn build(command: &Command) -> Result<(ScenarioConfig, Common), Failure> {
    let (cfg, common) = match command {
        Command::Run(c) => (scenario(c)?, c),
        Command::Hardy(c) => {
            let cfg = scenario(c)?;
            expect(&cfg, matches!(cfg.task, Task::Hardy(_)), "hardy")?;
            (cfg, c)
        }
        Command::LogHardy(c) => {
            let cfg = scenario(c)?;
            expect(&cfg, matches!(cfg.task, Task::LogHardy(_)), "log-hardy")?;
            (cfg, c)
        }
        Command::WeightedHardy(c) => {
            let cfg = scenario(c)?;
            let ok = matches!(cfg.task, Task::WeightedHardy(_) | Task::BrezisVazquez(_));
            expect(&cfg, ok, "weighted-hardy")?;
            (cfg, c)
        }
        Command::Sweep { common, eps } => {
            let mut cfg = scenario(common)?;
            cfg.task = match (cfg.task, eps) {
                (Task::Sweep(mut t), Some(v)) => {
                    t.values = v.clone();
                    Task::Sweep(t)
                }
                (Task::Sweep(t), None) => Task::Sweep(t),
                (Task::Hardy(s) | Task::LogHardy(s), Some(v)) => Task::Sweep(config::SweepTask {
                    values: v.clone(),
                    scenario: s,
                }),
                _ => return Err(Failure::Usage("sweep needs a sweep scenario or a hardy scenario with --eps".into())),
            };
            (cfg, common)
        }
        Command::Curvature {
            common,
            metric,
            dim,
            samples,
        } => {
            let mut cfg = match (&common.scenario, metric) {
                (Some(_), _) => scenario(common)?,
                (None, Some(m)) => ScenarioConfig {
                    output: Default::default(),
                    task: Task::Curvature(CurvatureTask {
                        id: format!("{m}-curvature"),
                        model: model_by_name(m, *dim)?,
                        samples: 20,
                        seed: 0,
                        tolerance: 1e-6,
                    }),
                },
                (None, None) => return Err(Failure::Usage("curvature needs --scenario or --metric".into())),
            };
            match (&mut cfg.task, samples) {
                (Task::Curvature(t), Some(k)) => t.samples = *k,
                (Task::Curvature(_), None) => {}
                _ => return Err(Failure::Usage("not a curvature scenario".into())),
            }
            (cfg, common)
        }
        Command::Compare {
            common,
            lemma,
            model,
            dim,
        } => {
            let cfg = match (&common.scenario, lemma, model) {
                (Some(_), _, _) => scenario(common)?,
                (None, Some(l), Some(m)) => ScenarioConfig {
                    output: Default::default(),
                    task: Task::Compare(CompareTask {
                        id: format!("{m}-{}", comparison_name(l)),
                        model: model_by_name(m, *dim)?,
                        lemma: l.clone(),
                        grid: None,
                        min_margin: -1e-8,
                    }),
                },
                _ => return Err(Failure::Usage("compare needs --scenario or both --lemma and --model".into())),
            };
            expect(&cfg, matches!(cfg.task, Task::Compare(_)), "compare")?;
            (cfg, common)
        }
        Command::DemoFunkInfimum(c) => {
            let cfg = match &c.scenario {
                Some(_) => scenario(c)?,
                None => ScenarioConfig {
                    output: Default::default(),
                    task: Task::DemoFunkInfimum(DemoTask {
                        id: "funk-infimum-demo".into(),
                        budget: Default::default(),
                    }),
                },
            };
            expect(&cfg, matches!(cfg.task, Task::DemoFunkInfimum(_)), "demo-funk-infimum")?;
            (cfg, c)
        }
    };
    Ok((cfg, common.clone()))
}

fn main_inner(cli: Cli) -> Result<bool, Failure> {
    let (mut cfg, common) = build(&cli.command)?;
    if let Some(seed) = common.seed {
        cfg.apply_seed(seed);
    }
    if let Some(level) = common.budget {
        cfg.apply_level(level);
    }
    let outcome = execute(&cfg)?;
    let format = common.format.or(cfg.output.format).unwrap_or_default();
    let body = match format {
        Format::Json => &outcome.json,
        Format::Csv => &outcome.csv,
    };
    match common.out.as_ref().or(cfg.output.dir.as_ref()) {
        Some(dir) => {
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{}.{ext}", cfg.id()));
            std::fs::write(&path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    eprintln!("{} [{}]", outcome.summary, if outcome.passed { "PASS" } else { "FAIL" });
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
