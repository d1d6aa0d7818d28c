//! The `verify` subcommand: property checks over small instances.

use crate::config::ExperimentConfig;
use accel_admm::engine::{
    certified_config, nesterov_reference, reduce_alm, run, Engine, ErrorPolicy, ErrorSum, Fault,
    NesterovScheme, RunReport, SolverConfig, SolverVariant, StartPoint, Stopping,
};
use accel_admm::linalg::{Matrix, Vector};
use accel_admm::metrics::lambda_recovery;
use accel_admm::model::{CompositeBlock, ProblemInstance, ProxTerm, SaddleReference};
use accel_admm::problems::{generate, p0_reference, scalar_p0, GeneratorSpec, ProblemKind};
use accel_admm::schedule::ScheduleRule;
use anyhow::{ensure, Result};
use serde::Serialize;
use std::path::Path;
use std::sync::OnceLock;

const TWO_BLOCK: [SolverVariant; 8] = [
    SolverVariant::AdmmFirstI,
    SolverVariant::AdmmFirstII,
    SolverVariant::AdmmSecondI,
    SolverVariant::AdmmSecondII,
    SolverVariant::HybridI(1),
    SolverVariant::HybridI(2),
    SolverVariant::HybridII(1),
    SolverVariant::HybridII(2),
];
const CERTIFIED_ITERS: usize = 2000;
const SCHEDULE_HORIZON: usize = 100_000;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, r: std::result::Result<String, String>) -> CheckResult {
    let (passed, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

struct Named {
    name: String,
    inst: ProblemInstance<f64>,
    reference: SaddleReference<f64>,
}

struct Ctx {
    instances: Vec<Named>,
    fault: Option<Fault>,
    certified: OnceLock<Vec<(String, Result<RunReport<f64>, String>)>>,
}

impl Ctx {
    fn engine_config(
        &self,
        inst: &ProblemInstance<f64>,
        v: SolverVariant,
        iters: usize,
    ) -> Result<SolverConfig<f64>, String> {
        let mut c = certified_config(inst, v, iters).map_err(|e| e.to_string())?;
        c.fault = self.fault;
        Ok(c)
    }

    /// Certified runs of every two-block variant on every instance, shared by the
    /// energy and certificate groups.
    fn certified_runs(&self) -> &[(String, Result<RunReport<f64>, String>)] {
        self.certified.get_or_init(|| {
            let jobs: Vec<(&Named, SolverVariant)> = self
                .instances
                .iter()
                .flat_map(|n| TWO_BLOCK.map(|v| (n, v)))
                .collect();
            std::thread::scope(|s| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|&(n, v)| {
                        s.spawn(move || {
                            let rep =
                                self.engine_config(&n.inst, v, CERTIFIED_ITERS)
                                    .and_then(|c| {
                                        run(
                                            &n.inst,
                                            &c,
                                            &StartPoint::zeros(&n.inst),
                                            &Stopping::iterations(CERTIFIED_ITERS),
                                            Some(&n.reference),
                                        )
                                        .map_err(|e| e.to_string())
                                    });
                            (format!("{}/{}", n.name, v.name()), rep)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("verification thread panicked"))
                    .collect()
            })
        })
    }
}

struct Group {
    name: &'static str,
    run: fn(&Ctx) -> Vec<CheckResult>,
}

const GROUPS: [Group; 6] = [
    Group {
        name: "schedule",
        run: schedule_checks,
    },
    Group {
        name: "energy",
        run: energy_checks,
    },
    Group {
        name: "recovery",
        run: recovery_checks,
    },
    Group {
        name: "reductions",
        run: reduction_checks,
    },
    Group {
        name: "certificates",
        run: certificate_checks,
    },
    Group {
        name: "inexact",
        run: inexact_checks,
    },
];

fn schedule_checks(_: &Ctx) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let rules = [
        ScheduleRule::recurrence_exact(1.0),
        ScheduleRule::recurrence_exact(3.0),
        ScheduleRule::min_cap(1.0, 1.0),
        ScheduleRule::min_cap(0.2, 2.0),
        ScheduleRule::sqrt_cap(0.5, 1.0),
        ScheduleRule::sqrt_cap(4.0, 2.0),
    ];
    let mut step = Ok(format!("{} rules, k ≤ {SCHEDULE_HORIZON}", rules.len()));
    let mut growth = step.clone();
    for rule in &rules {
        let seq: Vec<f64> = rule.sequence(SCHEDULE_HORIZON + 1);
        if rule.admissible_basic(SCHEDULE_HORIZON).admissible {
            if let Some(k) = seq
                .windows(2)
                .position(|w| w[1] > w[0] + 1.0 + 1e-12 * w[0])
            {
                step = Err(format!("{rule:?}: t_(k+1) > t_k + 1 at k = {}", k + 1));
            }
        }
        for (i, &t) in seq.iter().enumerate().take(SCHEDULE_HORIZON) {
            match rule.growth_lower_bound(i + 1) {
                Ok(lb) if t >= lb => {}
                Ok(lb) => {
                    growth = Err(format!("{rule:?}: t_{} = {t} below {lb}", i + 1));
                    break;
                }
                Err(e) => {
                    growth = Err(e.to_string());
                    break;
                }
            }
        }
    }
    out.push(check("schedule/step_bound", step));
    out.push(check("schedule/growth", growth));

    let seq: Vec<f64> = ScheduleRule::recurrence_exact(1.0).sequence(10_001);
    let rel = seq
        .windows(2)
        .map(|w| ((w[1] - w[0]) * (w[1] + w[0]) - w[1]).abs() / w[1])
        .fold(0.0, f64::max);
    out.push(check(
        "schedule/saturation",
        if rel <= 1e-10 {
            Ok(format!("max residual {rel:.1e}·t_(k+1)"))
        } else {
            Err(format!("residual {rel:e}·t_(k+1)"))
        },
    ));
    out
}

fn energy_checks(ctx: &Ctx) -> Vec<CheckResult> {
    ctx.certified_runs()
        .iter()
        .map(|(name, rep)| {
            let r = match rep {
                Ok(r) => match r.lyapunov_increase {
                    None => Ok(format!("monotone over {CERTIFIED_ITERS} iterations")),
                    Some(k) => Err(format!("Lyapunov sequence increased at k = {k}")),
                },
                Err(e) => Err(e.clone()),
            };
            check(format!("energy/{name}"), r)
        })
        .collect()
}

fn certificate_checks(ctx: &Ctx) -> Vec<CheckResult> {
    ctx.certified_runs()
        .iter()
        .map(|(name, rep)| {
            let r = match rep {
                Ok(r) if !r.status.binding => {
                    Err(format!("not binding: {}", r.status.notes.join("; ")))
                }
                Ok(r) => match r.violations.first() {
                    None => Ok("all bounds hold".to_string()),
                    Some(v) => Err(format!(
                        "{} violations; first {} = {:e} > {:e} at k = {}",
                        r.violations.len(),
                        v.metric.name(),
                        v.value,
                        v.bound,
                        v.k
                    )),
                },
                Err(e) => Err(e.clone()),
            };
            check(format!("certificates/{name}"), r)
        })
        .collect()
}

fn recovery_checks(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for n in &ctx.instances {
        for (label, recurrence) in [("min_cap", false), ("recurrence", true)] {
            let r = (|| {
                let mut c = ctx
                    .engine_config(&n.inst, SolverVariant::AdmmFirstI, 1000)?
                    .with_iterates();
                if recurrence {
                    c.schedule = ScheduleRule::recurrence_exact(c.schedule.t1);
                }
                let rep = run(
                    &n.inst,
                    &c,
                    &StartPoint::zeros(&n.inst),
                    &Stopping::iterations(1000),
                    None,
                )
                .map_err(|e| e.to_string())?;
                let lmax = rep
                    .records
                    .iter()
                    .filter_map(|x| x.iterate.as_ref().map(|i| i.lambda.norm()))
                    .fold(0.0, f64::max);
                let dev = lambda_recovery(&n.inst, &rep, c.gamma).map_err(|e| e.to_string())?;
                let tol = 1e-8 * (1.0 + lmax);
                if dev <= tol {
                    Ok(format!("deviation {dev:.1e} ≤ {tol:.1e}"))
                } else {
                    Err(format!("deviation {dev:e} > {tol:e}"))
                }
            })();
            out.push(check(format!("recovery/{}/{label}", n.name), r));
        }
    }
    out
}

fn trajectory(
    inst: &ProblemInstance<f64>,
    cfg: &SolverConfig<f64>,
    iters: usize,
) -> Result<Vec<(Vector<f64>, Vector<f64>, Vector<f64>)>, String> {
    let eng = Engine::new(inst, cfg).map_err(|e| e.to_string())?;
    let mut s = eng
        .init_state(&StartPoint::zeros(inst))
        .map_err(|e| e.to_string())?;
    let mut out = vec![(s.x.clone(), s.y.clone(), s.lambda.clone())];
    for _ in 0..iters {
        s = eng.step(&s).map_err(|e| e.to_string())?.0;
        out.push((s.x.clone(), s.y.clone(), s.lambda.clone()));
    }
    Ok(out)
}

fn within(dev: f64) -> std::result::Result<String, String> {
    if dev <= 1e-10 {
        Ok(format!("max deviation {dev:.1e} over 100 iterations"))
    } else {
        Err(format!("max deviation {dev:e}"))
    }
}

fn reduction_checks(ctx: &Ctx) -> Vec<CheckResult> {
    let n = ctx.instances.last().expect("at least one instance");
    let inst = &n.inst;
    let (p, m, dim_y) = (inst.p(), inst.m(), inst.n());
    let iters = 100;
    let mut out = Vec::new();

    // With B = 0 the y-update never feeds back, so x and λ follow the ALM iteration.
    let r = (|| {
        let b0 = inst
            .with_constraints(
                inst.a().clone(),
                Matrix::zeros(p, dim_y),
                inst.rhs().clone(),
            )
            .map_err(|e| e.to_string())?;
        let admm =
            certified_config(&b0, SolverVariant::AdmmFirstI, iters).map_err(|e| e.to_string())?;
        let alm = reduce_alm(&b0, &admm).map_err(|e| e.to_string())?;
        let (s1, s2) = (
            trajectory(&b0, &admm, iters)?,
            trajectory(&b0, &alm, iters)?,
        );
        Ok(s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| a.0.dist(&b.0).max(a.2.dist(&b.2)))
            .fold(0.0, f64::max))
    })();
    out.push(check("reductions/b_zero", r.and_then(within)));

    let r = (|| {
        let a0 = inst
            .with_constraints(Matrix::zeros(p, m), inst.b().clone(), inst.rhs().clone())
            .map_err(|e| e.to_string())?;
        let admm =
            certified_config(&a0, SolverVariant::AdmmSecondII, iters).map_err(|e| e.to_string())?;
        let alm = reduce_alm(&a0, &admm).map_err(|e| e.to_string())?;
        let (s1, s2) = (
            trajectory(&a0, &admm, iters)?,
            trajectory(&a0, &alm, iters)?,
        );
        Ok(s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| a.1.dist(&b.1).max(a.2.dist(&b.2)))
            .fold(0.0, f64::max))
    })();
    out.push(check("reductions/a_zero", r.and_then(within)));

    let rule = ScheduleRule::recurrence_exact(1.0);
    let r = (|| {
        let free = inst
            .with_constraints(
                Matrix::zeros(p, m),
                Matrix::zeros(p, dim_y),
                Vector::zeros(p),
            )
            .map_err(|e| e.to_string())?;
        let step = 1.0 / free.l_f2();
        let cfg = SolverConfig::new(SolverVariant::AlmSecondI, step, 1.0, 1.0, rule, iters);
        let engine = trajectory(&free, &cfg, iters)?;
        let fista = nesterov_reference(
            free.x_block(),
            NesterovScheme::Second,
            &rule,
            step,
            &Vector::zeros(m),
            iters,
        )
        .map_err(|e| e.to_string())?;
        Ok(engine
            .iter()
            .zip(&fista)
            .map(|(a, b)| a.0.dist(b))
            .fold(0.0, f64::max))
    })();
    out.push(check("reductions/fista", r.and_then(within)));

    let r = (|| {
        let smooth = CompositeBlock::new(m, ProxTerm::zero(), inst.x_block().smooth_term.clone())
            .map_err(|e| e.to_string())?;
        let step = 1.0 / inst.l_f2();
        let x0 = Vector::from_fn(m, |i| 1.0 - 0.1 * i as f64);
        let s1 = nesterov_reference(&smooth, NesterovScheme::First, &rule, step, &x0, iters)
            .map_err(|e| e.to_string())?;
        let s2 = nesterov_reference(&smooth, NesterovScheme::Second, &rule, step, &x0, iters)
            .map_err(|e| e.to_string())?;
        Ok(s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max))
    })();
    out.push(check("reductions/smooth_schemes", r.and_then(within)));
    out
}

fn inexact_checks(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let rule = ScheduleRule::recurrence_exact(1.0);
    let cubic = ErrorPolicy::power(1.0, 3.0).expect("valid policy");
    let square = ErrorPolicy::power(1.0, 2.0).expect("valid policy");
    let summable = matches!(cubic.series(&rule), ErrorSum::Summable { .. });
    let rejected = matches!(square.series(&rule), ErrorSum::NonSummable { .. });
    out.push(check(
        "inexact/summability",
        if summable && rejected {
            Ok("k⁻³ summable, k⁻² rejected".to_string())
        } else {
            Err(format!(
                "k⁻³ summable: {summable}, k⁻² rejected: {rejected}"
            ))
        },
    ));

    let n = &ctx.instances[0];
    let iters = 300;
    let r = (|| {
        let exact = ctx.engine_config(&n.inst, SolverVariant::AdmmFirstI, iters)?;
        let zero = exact.clone().with_inexact(ErrorPolicy::zero());
        let (a, b) = (
            trajectory(&n.inst, &exact, iters)?,
            trajectory(&n.inst, &zero, iters)?,
        );
        let dev = a
            .iter()
            .zip(&b)
            .map(|(p, q)| p.0.dist(&q.0).max(p.1.dist(&q.1)).max(p.2.dist(&q.2)))
            .fold(0.0, f64::max);
        if dev <= 1e-10 {
            Ok(format!("max deviation {dev:.1e}"))
        } else {
            Err(format!("max deviation {dev:e}"))
        }
    })();
    out.push(check(format!("inexact/zero_policy/{}", n.name), r));

    for n in &ctx.instances {
        let r = (|| {
            let c = ctx
                .engine_config(&n.inst, SolverVariant::AdmmFirstI, iters)?
                .with_inexact(cubic.clone());
            let rep = run(
                &n.inst,
                &c,
                &StartPoint::zeros(&n.inst),
                &Stopping::iterations(iters),
                Some(&n.reference),
            )
            .map_err(|e| e.to_string())?;
            if !rep.status.binding {
                return Err(format!("not binding: {}", rep.status.notes.join("; ")));
            }
            match rep.violations.first() {
                None => Ok(format!("k⁻³ errors, {iters} iterations, bounds hold")),
                Some(v) => Err(format!(
                    "{} violations; first {} at k = {}",
                    rep.violations.len(),
                    v.metric.name(),
                    v.k
                )),
            }
        })();
        out.push(check(format!("inexact/bounds/{}", n.name), r));
    }
    out
}

#[derive(Serialize)]
pub struct VerifySummary {
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<String>,
    pub checks: Vec<CheckResult>,
}

pub struct VerifyOptions<'a> {
    pub config: Option<&'a Path>,
    pub filter: Option<&'a str>,
    pub seed: Option<u64>,
    pub out: Option<&'a Path>,
    pub fault: Option<Fault>,
}

pub fn cmd_verify(opts: &VerifyOptions) -> Result<u8> {
    let mut instances = vec![Named {
        name: "p0".into(),
        inst: scalar_p0(),
        reference: p0_reference(),
    }];
    match opts.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(seed) = opts.seed {
                cfg.problem.with_seed(seed);
            }
            let loaded = cfg.problem.load()?;
            let reference = loaded
                .reference
                .ok_or_else(|| anyhow::anyhow!("the configured problem has no saddle reference"))?;
            instances.push(Named {
                name: "configured".into(),
                inst: loaded.instance,
                reference,
            });
        }
        None => {
            let seed = opts.seed.unwrap_or(1);
            let (inst, reference) =
                generate(&GeneratorSpec::new(ProblemKind::Quadratic, 20, 20, 8, seed))?;
            instances.push(Named {
                name: format!("quadratic_{seed}"),
                inst,
                reference,
            });
        }
    }
    let ctx = Ctx {
        instances,
        fault: opts.fault,
        certified: OnceLock::new(),
    };

    let selected: Vec<&Group> = GROUPS
        .iter()
        .filter(|g| {
            opts.filter
                .is_none_or(|f| g.name.contains(f) || f.starts_with(g.name))
        })
        .collect();
    ensure!(!selected.is_empty(), "--filter matched no property group");
    let mut checks: Vec<CheckResult> = selected.iter().flat_map(|g| (g.run)(&ctx)).collect();
    if let Some(f) = opts.filter {
        if !selected.iter().any(|g| g.name.contains(f)) {
            checks.retain(|c| c.name.contains(f));
        }
    }
    ensure!(!checks.is_empty(), "--filter matched no property");

    for c in &checks {
        log::info!(
            "{} {}: {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    let summary = VerifySummary {
        passed: checks.len() - failures.len(),
        failed: failures.len(),
        failures,
        checks,
    };
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    if let Some(dir) = opts.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verify.json"), &text)?;
    }
    print!("{text}");
    Ok(if summary.failed == 0 { 0 } else { 2 })
}
