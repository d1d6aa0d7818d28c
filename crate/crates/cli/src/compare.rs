//! The `compare-schedules` subcommand.

use crate::config::ExperimentConfig;
use crate::run::{run_solver, Overrides};
use accel_admm::schedule::{ScheduleRule, ScheduleVariant};
use anyhow::{ensure, Result};
use serde::Serialize;
use std::fs;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct ScheduleRow {
    pub schedule: String,
    pub admissible_basic: bool,
    pub admissible_strong: bool,
    pub k_to_tolerance: Option<usize>,
    pub final_t2_feasibility: Option<f64>,
    pub note: String,
}

pub fn describe(rule: &ScheduleRule<f64>) -> String {
    let body = match rule.variant {
        ScheduleVariant::RecurrenceExact => format!("recurrence_exact(t1={})", rule.t1),
        ScheduleVariant::SqrtCap { a } => format!("sqrt_cap(a={a},t1={})", rule.t1),
        ScheduleVariant::MinCap { a } => format!("min_cap(a={a},t1={})", rule.t1),
        ScheduleVariant::LinearShift { alpha } => format!("linear_shift(alpha={alpha})"),
        ScheduleVariant::HalfK => "half_k".to_string(),
        ScheduleVariant::TsengShift => "tseng_shift".to_string(),
        ScheduleVariant::ChambolleDossal { alpha } => format!("chambolle_dossal(alpha={alpha})"),
        ScheduleVariant::AttouchCabot { alpha } => format!("attouch_cabot(alpha={alpha})"),
    };
    if rule.offset > 0 {
        format!("{body}+{}", rule.offset)
    } else {
        body
    }
}

pub fn cmd_compare_schedules(config: &Path, ov: &Overrides) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(config)?;
    ov.apply(&mut cfg);
    ensure!(
        !cfg.schedules.is_empty(),
        "config lists no schedules to compare"
    );
    let entries = ov.selected(&cfg);
    ensure!(!entries.is_empty(), "--filter matched no solver");
    let template = entries[0];
    if entries.len() > 1 {
        log::warn!(
            "comparing schedules with the first solver entry `{}` only",
            template.label()
        );
    }
    let problem = cfg.problem.load()?;
    let base = template.build(&problem.instance)?;
    let horizon = base.max_outer.max(1);

    let rows: Vec<ScheduleRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .schedules
            .iter()
            .map(|rule| {
                let (problem, base, cfg) = (&problem, &base, &cfg);
                scope.spawn(move || {
                    let basic = rule.admissible_basic(horizon);
                    let strong = rule.admissible_strong(cfg.a_cap, horizon);
                    let mut row = ScheduleRow {
                        schedule: describe(rule),
                        admissible_basic: basic.admissible,
                        admissible_strong: strong.admissible,
                        k_to_tolerance: None,
                        final_t2_feasibility: None,
                        note: String::new(),
                    };
                    if let Err(e) = rule.initial_state_checked().and_then(|_| rule.validate()) {
                        row.note = format!("skipped: {e}");
                        return row;
                    }
                    let mut c = base.clone();
                    c.schedule = *rule;
                    let out = run_solver(row.schedule.clone(), problem, &c);
                    match &out.report {
                        Some(r) => {
                            row.k_to_tolerance = r
                                .records
                                .iter()
                                .find(|x| x.feasibility <= cfg.tolerance)
                                .map(|x| x.k);
                            let last = r.last();
                            row.final_t2_feasibility = Some(last.t_k * last.t_k * last.feasibility);
                            if !r.status.binding {
                                row.note = "certificates non-binding".to_string();
                            }
                        }
                        None => row.note = format!("run failed: {}", out.error.unwrap_or_default()),
                    }
                    row
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("schedule thread panicked"))
            .collect()
    });

    fs::create_dir_all(&cfg.output_dir)?;
    if cfg.emit.csv {
        let mut w = csv::Writer::from_path(cfg.output_dir.join("schedules.csv"))?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if cfg.emit.json {
        fs::write(
            cfg.output_dir.join("schedules.json"),
            serde_json::to_string_pretty(&rows)? + "\n",
        )?;
    }
    for row in &rows {
        println!(
            "{:<32} basic {:<5} strong(a={}) {:<5} k_to_tol {:<8} {}",
            row.schedule,
            row.admissible_basic,
            cfg.a_cap,
            row.admissible_strong,
            row.k_to_tolerance
                .map_or("-".to_string(), |k| k.to_string()),
            row.note
        );
    }
    Ok(0)
}
