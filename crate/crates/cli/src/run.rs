//! The `run` subcommand.

use crate::config::{Emit, ExperimentConfig, LoadedProblem, ProblemSource, SolverEntry};
use crate::output::{convergence_svg, write_trajectory};
use accel_admm::engine::{run, RunReport, SolverConfig, StartPoint, Stopping};
use accel_admm::metrics::{fit_rate, Metric};
use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub emit: Option<Emit>,
    pub filter: Option<String>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(emit) = self.emit {
            cfg.emit = emit;
        }
        if let Some(seed) = self.seed {
            cfg.problem.with_seed(seed);
        }
    }

    pub fn selected<'c>(&self, cfg: &'c ExperimentConfig) -> Vec<&'c SolverEntry> {
        cfg.solvers
            .iter()
            .filter(|s| self.filter.as_deref().is_none_or(|f| s.label().contains(f)))
            .collect()
    }
}

#[derive(Serialize)]
struct ExperimentReport<'a> {
    problem: ProblemSummary<'a>,
    verify: bool,
    solvers: Vec<SolverOutcome>,
}

#[derive(Serialize)]
struct ProblemSummary<'a> {
    source: &'a ProblemSource,
    m: usize,
    n: usize,
    p: usize,
    has_reference: bool,
}

#[derive(Serialize)]
pub struct SolverOutcome {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Fitted log-log slopes over the last two decades of recorded iterations.
    pub rate_fits: BTreeMap<&'static str, f64>,
    pub wall_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport<f64>>,
}

impl SolverOutcome {
    /// Binding-certificate violations and Lyapunov increases.
    pub fn failures(&self) -> Vec<String> {
        let Some(r) = &self.report else {
            return vec![format!(
                "{}: {}",
                self.name,
                self.error.as_deref().unwrap_or("failed")
            )];
        };
        let mut out: Vec<String> = r
            .violations
            .iter()
            .map(|v| {
                format!(
                    "{}: {} = {:e} exceeds {:e} at k = {}",
                    self.name,
                    v.metric.name(),
                    v.value,
                    v.bound,
                    v.k
                )
            })
            .collect();
        if let (true, Some(k)) = (r.status.binding, r.lyapunov_increase) {
            out.push(format!(
                "{}: Lyapunov sequence increased at k = {k}",
                self.name
            ));
        }
        out
    }
}

pub fn run_solver(name: String, problem: &LoadedProblem, cfg: &SolverConfig<f64>) -> SolverOutcome {
    let clock = Instant::now();
    let inst = &problem.instance;
    let result = run(
        inst,
        cfg,
        &StartPoint::zeros(inst),
        &Stopping::iterations(cfg.max_outer),
        problem.reference.as_ref(),
    );
    let wall_secs = clock.elapsed().as_secs_f64();
    match result {
        Ok(report) => {
            let hi = cfg.max_outer;
            let lo = (hi / 100).max(10);
            let mut rate_fits = BTreeMap::new();
            if hi >= 10 * lo {
                for m in [
                    Metric::Feasibility,
                    Metric::ObjectiveGap,
                    Metric::LagrangianGap,
                ] {
                    if let Ok(s) = fit_rate(&report, m, lo..=hi) {
                        rate_fits.insert(m.name(), s);
                    }
                }
            }
            SolverOutcome {
                name,
                error: None,
                rate_fits,
                wall_secs,
                report: Some(report),
            }
        }
        Err(e) => {
            log::error!("solver `{name}` failed: {e}");
            SolverOutcome {
                name,
                error: Some(e.to_string()),
                rate_fits: BTreeMap::new(),
                wall_secs,
                report: None,
            }
        }
    }
}

/// File-system friendly form of a solver name.
pub fn dir_name(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn cmd_run(config: &Path, ov: &Overrides) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(config)?;
    ov.apply(&mut cfg);
    let entries = ov.selected(&cfg);
    anyhow::ensure!(!entries.is_empty(), "--filter matched no solver");
    let problem = cfg.problem.load()?;
    let configs = entries
        .iter()
        .map(|e| Ok((e.label(), e.build(&problem.instance)?)))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;

    let outcomes: Vec<SolverOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(name, c)| {
                let problem = &problem;
                scope.spawn(move || run_solver(name.clone(), problem, c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    for o in &outcomes {
        let Some(r) = &o.report else { continue };
        let dir = cfg.output_dir.join(dir_name(&o.name));
        fs::create_dir_all(&dir)?;
        if cfg.emit.csv {
            let f = fs::File::create(dir.join("trajectory.csv"))?;
            write_trajectory(r, std::io::BufWriter::new(f))?;
        }
        if cfg.emit.svg {
            fs::write(dir.join("convergence.svg"), convergence_svg(&o.name, r))?;
        }
        let last = r.last();
        println!(
            "{:<24} k = {:<7} feasibility = {:<11.3e} certificates {:<12} violations = {}",
            o.name,
            last.k,
            last.feasibility,
            if r.status.binding {
                "binding"
            } else {
                "non-binding"
            },
            r.violations.len()
        );
        for note in &r.status.notes {
            println!("  note: {note}");
        }
    }

    let failures: Vec<String> = outcomes.iter().flat_map(SolverOutcome::failures).collect();
    let report = ExperimentReport {
        problem: ProblemSummary {
            source: &cfg.problem,
            m: problem.instance.m(),
            n: problem.instance.n(),
            p: problem.instance.p(),
            has_reference: problem.reference.is_some(),
        },
        verify: cfg.verify,
        solvers: outcomes,
    };
    if cfg.emit.json {
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(cfg.output_dir.join("report.json"), text + "\n")?;
    }

    let errored = report.solvers.iter().any(|o| o.error.is_some());
    if errored || (cfg.verify && !failures.is_empty()) {
        for f in &failures {
            eprintln!("FAIL {f}");
        }
        return Ok(2);
    }
    Ok(0)
}
