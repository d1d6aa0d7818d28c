//! One PASS/FAIL line per acceptance criterion.

#![allow(clippy::approx_constant)]

use accel_admm::engine::*;
use accel_admm::linalg::{Matrix, Vector};
use accel_admm::metrics::{fit_rate, lambda_recovery, Metric};
use accel_admm::model::{CompositeBlock, ProblemInstance, ProxTerm, SaddleReference, SmoothTerm};
use accel_admm::problems::{generate, p0_reference, scalar_p0, GeneratorSpec, ProblemKind};
use accel_admm::schedule::{growth_b, ScheduleRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

mod common;
use common::{oracle_first_step, Scalar1};

const K: usize = 10_000;

type Inst = (String, ProblemInstance<f64>, SaddleReference<f64>);

fn instances() -> Vec<Inst> {
    let mut out = vec![("p0".to_string(), scalar_p0(), p0_reference())];
    for seed in 1..=3 {
        let (i, r) = generate(&GeneratorSpec::new(
            ProblemKind::Quadratic,
            50,
            50,
            20,
            seed,
        ))
        .unwrap();
        out.push((format!("quadratic_{seed}"), i, r));
    }
    out
}

fn certified_run(
    inst: &ProblemInstance<f64>,
    r: &SaddleReference<f64>,
    cfg: &SolverConfig<f64>,
) -> RunReport<f64> {
    run(
        inst,
        cfg,
        &StartPoint::zeros(inst),
        &Stopping::iterations(cfg.max_outer),
        Some(r),
    )
    .unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, title: &str, o: &Outcome, failures: &mut Vec<usize>) {
    println!(
        "criterion {id:>2} {}: {title} ({})",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    if !o.pass {
        failures.push(id);
    }
}

/// Runs with clean bounds, no violations and no Lyapunov increase.
fn certified_clean(label: &str, rep: &RunReport<f64>, bad: &mut Vec<String>) {
    if !rep.status.binding {
        bad.push(format!("{label}: not binding {:?}", rep.status.notes));
    }
    if let Some(v) = rep.violations.first() {
        bad.push(format!(
            "{label}: {} violations, first {v:?}",
            rep.violations.len()
        ));
    }
}

#[test]
fn acceptance() {
    let insts = instances();
    let mut failures = Vec::new();
    let mut lyapunov = Vec::new();

    // 1
    let clock = Instant::now();
    let mut bad = Vec::new();
    for (name, inst, r) in &insts {
        let cfg = certified_config(inst, SolverVariant::AdmmFirstI, K).unwrap();
        let rep = certified_run(inst, r, &cfg);
        certified_clean(name, &rep, &mut bad);
        lyapunov.push((format!("{name}/admm_first_i"), rep.lyapunov_increase));
    }
    let secs = clock.elapsed().as_secs_f64();
    if secs >= 60.0 {
        bad.push(format!("runtime {secs:.1}s"));
    }
    let o = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("4 instances, k ≤ {K}, {secs:.1}s")
        } else {
            bad.join("; ")
        },
    };
    report(
        1,
        "first scheme (I) feasibility, Lagrangian and objective bounds",
        &o,
        &mut failures,
    );

    // 2
    let mut bad = Vec::new();
    for (name, inst, r) in &insts {
        for v in [SolverVariant::AdmmFirstII, SolverVariant::AdmmSecondII] {
            let cfg = certified_config(inst, v, K).unwrap();
            let rep = certified_run(inst, r, &cfg);
            let label = format!("{name}/{}", v.name());
            certified_clean(&label, &rep, &mut bad);
            if rep.certificates.as_ref().and_then(|c| c.c2).is_none() {
                bad.push(format!("{label}: no C2"));
            }
            lyapunov.push((label, rep.lyapunov_increase));
        }
    }
    let o = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "8 runs clean".into()
        } else {
            bad.join("; ")
        },
    };
    report(2, "scheme (II) E1 and C2 bounds", &o, &mut failures);

    // 9 (runs feed criterion 3 as well)
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (name, inst, r) in &insts {
        for v in [
            SolverVariant::HybridI(1),
            SolverVariant::HybridI(2),
            SolverVariant::HybridII(1),
            SolverVariant::HybridII(2),
        ] {
            let cfg = certified_config(inst, v, K).unwrap();
            let rep = certified_run(inst, r, &cfg);
            let label = format!("{name}/{}", v.name());
            let c = rep.certificates.as_ref().unwrap().feasibility;
            if !rep.status.binding {
                bad.push(format!("{label}: not binding"));
            }
            for rec in &rep.records {
                let scaled = rec.t_k * rec.t_k * rec.feasibility;
                worst = worst.max(scaled / c);
                if scaled > c + 1e-8 * (1.0 + c) {
                    bad.push(format!("{label}: k {} t²·feas {scaled:e} > {c:e}", rec.k));
                    break;
                }
            }
            lyapunov.push((label, rep.lyapunov_increase));
        }
    }
    let hybrid = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("16 runs, max t²·feas/C = {worst:.3}")
        } else {
            bad.join("; ")
        },
    };

    // 3
    let mut bad: Vec<String> = lyapunov
        .iter()
        .filter_map(|(l, inc)| inc.map(|k| format!("{l}: increase at k {k}")))
        .collect();
    let mut detected = Vec::new();
    for (name, inst, r) in &insts {
        let mut cfg = certified_config(inst, SolverVariant::AdmmFirstI, K).unwrap();
        cfg.alpha = 10.0 / inst.l_f2();
        match run(
            inst,
            &cfg,
            &StartPoint::zeros(inst),
            &Stopping::iterations(K),
            Some(r),
        ) {
            Ok(rep) => {
                if let Some(k) = rep.lyapunov_increase {
                    detected.push(format!("{name} at k {k}"));
                }
            }
            Err(e) => {
                let e = e.to_string();
                let head = e.split(" (record").next().unwrap_or(&e);
                detected.push(format!("{name} diverged ({head})"));
            }
        }
    }
    if detected.is_empty() {
        bad.push("negative control not detected".into());
    }
    let o = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!(
                "{} certified runs monotone; α = 10/L flagged: {}",
                lyapunov.len(),
                detected.join(", ")
            )
        } else {
            bad.join("; ")
        },
    };
    report(
        3,
        "Lyapunov monotonicity and negative control",
        &o,
        &mut failures,
    );

    // 4
    let mut slopes = Vec::new();
    let mut bad = Vec::new();
    for (name, inst, r) in &insts {
        let mut cfg = certified_config(inst, SolverVariant::AdmmFirstI, K).unwrap();
        cfg.schedule = ScheduleRule::recurrence_exact(cfg.schedule.t1);
        let rep = certified_run(inst, r, &cfg);
        match fit_rate(&rep, Metric::Feasibility, 100..=K) {
            Ok(s) if s <= -1.9 => slopes.push(format!("{name} {s:.3}")),
            Ok(s) => bad.push(format!("{name} slope {s:.3}")),
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    let o = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            slopes.join(", ")
        } else {
            bad.join("; ")
        },
    };
    report(
        4,
        "O(1/k²) feasibility slope with the recurrence schedule",
        &o,
        &mut failures,
    );

    // 5
    let o = reductions();
    report(
        5,
        "ALM and Nesterov reduction equivalences",
        &o,
        &mut failures,
    );

    // 6
    let mut bad = Vec::new();
    let mut devs = Vec::new();
    for (name, inst, r) in insts.iter().take(2) {
        let base = certified_config(inst, SolverVariant::AdmmFirstI, 1000)
            .unwrap()
            .with_iterates();
        let cap = theorem_cap(inst, &base).unwrap().unwrap();
        let t1 = base.schedule.t1;
        for (label, schedule, start) in [
            (
                "min_cap",
                ScheduleRule::min_cap(cap, t1),
                StartPoint::zeros(inst),
            ),
            (
                "min_cap_tight",
                ScheduleRule::min_cap(0.25 * cap, t1),
                StartPoint::zeros(inst),
            ),
            (
                "recurrence",
                ScheduleRule::recurrence_exact(t1),
                StartPoint::zeros(inst),
            ),
            (
                "penalty",
                ScheduleRule::recurrence_exact(t1),
                StartPoint::penalty_consistent(inst),
            ),
        ] {
            let cfg = SolverConfig {
                schedule,
                ..base.clone()
            };
            let rep = run(inst, &cfg, &start, &Stopping::iterations(1000), Some(r)).unwrap();
            let lmax = rep
                .records
                .iter()
                .map(|x| x.iterate.as_ref().unwrap().lambda.norm())
                .fold(0.0, f64::max);
            let tol = 1e-8 * (1.0 + lmax);
            let dev = if label == "penalty" {
                rep.records
                    .iter()
                    .map(|x| {
                        let it = x.iterate.as_ref().unwrap();
                        let h = inst
                            .residual(&it.x, &it.y)
                            .unwrap()
                            .scale(cfg.gamma * x.t_k * x.t_k);
                        it.lambda.dist(&h)
                    })
                    .fold(0.0, f64::max)
            } else {
                lambda_recovery(inst, &rep, cfg.gamma).unwrap()
            };
            devs.push(format!("{name}/{label} {:.1e}", dev / tol));
            if dev > tol {
                bad.push(format!("{name}/{label}: {dev:e} > {tol:e}"));
            }
        }
    }
    let o = Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("deviation/tolerance: {}", devs.join(", "))
        } else {
            bad.join("; ")
        },
    };
    report(6, "λ-recovery identity", &o, &mut failures);

    // 7
    let o = inexact(&insts);
    report(7, "inexact preservation with ε_k = k⁻³", &o, &mut failures);

    // 8
    let o = schedule_lemmas();
    report(
        8,
        "schedule growth lemmas and recurrence saturation",
        &o,
        &mut failures,
    );

    report(
        9,
        "hybrid variants keep t²·feasibility bounded",
        &hybrid,
        &mut failures,
    );

    // 10
    let o = golden();
    report(10, "golden one-step values", &o, &mut failures);

    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

fn states(
    inst: &ProblemInstance<f64>,
    cfg: &SolverConfig<f64>,
    iters: usize,
) -> Vec<SolverState<f64>> {
    let eng = Engine::new(inst, cfg).unwrap();
    let mut s = eng.init_state(&StartPoint::zeros(inst)).unwrap();
    let mut out = vec![s.clone()];
    for _ in 0..iters {
        s = eng.step(&s).unwrap().0;
        out.push(s.clone());
    }
    out
}

fn max_dev(a: impl Iterator<Item = Vector<f64>>, b: impl Iterator<Item = Vector<f64>>) -> f64 {
    a.zip(b).map(|(x, y)| x.dist(&y)).fold(0.0, f64::max)
}

fn reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mat = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    let ls = |c: Matrix<f64>| {
        let d = Vector::from_fn(c.rows(), |i| (i as f64 * 0.37).sin());
        SmoothTerm::least_squares(c, d).unwrap()
    };
    let xb = CompositeBlock::new(6, ProxTerm::l1(0.1).unwrap(), ls(mat(8, 6))).unwrap();
    let yb =
        CompositeBlock::new(5, ProxTerm::elastic_net(0.05, 0.9).unwrap(), ls(mat(7, 5))).unwrap();
    let empty = CompositeBlock::new(0, ProxTerm::zero(), SmoothTerm::zero()).unwrap();
    let (a, bm) = (mat(4, 6), mat(4, 5));
    let rhs = Vector::from_f64(&[0.5, -1.0, 2.0, 0.1]).unwrap();
    let mut parts = Vec::new();

    // (a) B = 0
    let with_y = ProblemInstance::new(
        xb.clone(),
        yb.clone(),
        a.clone(),
        Matrix::zeros(4, 5),
        rhs.clone(),
    )
    .unwrap();
    let no_y = ProblemInstance::new(
        xb.clone(),
        empty.clone(),
        a,
        Matrix::zeros(4, 0),
        rhs.clone(),
    )
    .unwrap();
    let admm = certified_config(&with_y, SolverVariant::AdmmFirstI, 100).unwrap();
    let alm = reduce_alm(&with_y, &admm).unwrap();
    let (s1, s2) = (states(&with_y, &alm, 100), states(&no_y, &admm, 100));
    let da = max_dev(
        s1.iter().map(|s| s.x.clone()),
        s2.iter().map(|s| s.x.clone()),
    )
    .max(max_dev(
        s1.iter().map(|s| s.lambda.clone()),
        s2.iter().map(|s| s.lambda.clone()),
    ));
    parts.push(("a", da));

    // (b) A = 0
    let with_x = ProblemInstance::new(
        xb.clone(),
        yb.clone(),
        Matrix::zeros(4, 6),
        bm.clone(),
        rhs.clone(),
    )
    .unwrap();
    let no_x = ProblemInstance::new(empty, yb.clone(), Matrix::zeros(4, 0), bm, rhs).unwrap();
    let admm = certified_config(&with_x, SolverVariant::AdmmSecondII, 100).unwrap();
    let alm = reduce_alm(&with_x, &admm).unwrap();
    let (s1, s2) = (states(&with_x, &alm, 100), states(&no_x, &admm, 100));
    let db = max_dev(
        s1.iter().map(|s| s.y.clone()),
        s2.iter().map(|s| s.y.clone()),
    )
    .max(max_dev(
        s1.iter().map(|s| s.lambda.clone()),
        s2.iter().map(|s| s.lambda.clone()),
    ));
    parts.push(("b", db));

    // (c) A = 0, B = 0, b = 0
    let free = ProblemInstance::new(
        xb.clone(),
        yb,
        Matrix::zeros(4, 6),
        Matrix::zeros(4, 5),
        Vector::zeros(4),
    )
    .unwrap();
    let step = 1.0 / free.l_f2();
    let rule = ScheduleRule::recurrence_exact(1.0);
    let cfg = SolverConfig::new(SolverVariant::AlmSecondI, step, 1.0, 1.0, rule, 100);
    let engine = states(&free, &cfg, 100);
    let fista = nesterov_reference(
        free.x_block(),
        NesterovScheme::Second,
        &rule,
        step,
        &Vector::zeros(6),
        100,
    )
    .unwrap();
    parts.push((
        "c",
        max_dev(engine.into_iter().map(|s| s.x), fista.into_iter()),
    ));

    // (d) g ≡ 0
    let smooth = CompositeBlock::new(6, ProxTerm::zero(), xb.smooth_term.clone()).unwrap();
    let x0 = Vector::from_fn(6, |i| 1.0 - 0.3 * i as f64);
    let s1 = nesterov_reference(&smooth, NesterovScheme::First, &rule, step, &x0, 100).unwrap();
    let s2 = nesterov_reference(&smooth, NesterovScheme::Second, &rule, step, &x0, 100).unwrap();
    parts.push(("d", max_dev(s1.into_iter(), s2.into_iter())));

    Outcome {
        pass: parts.iter().all(|(_, d)| *d <= 1e-10),
        detail: parts
            .iter()
            .map(|(l, d)| format!("({l}) {d:.1e}"))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn inexact(insts: &[Inst]) -> Outcome {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for (name, inst, r) in insts.iter().take(2) {
        let exact = certified_config(inst, SolverVariant::AdmmFirstI, K).unwrap();
        let cfg = exact
            .clone()
            .with_inexact(ErrorPolicy::power(1.0, 3.0).unwrap());
        let rep = match run(
            inst,
            &cfg,
            &StartPoint::zeros(inst),
            &Stopping::iterations(K),
            Some(r),
        ) {
            Ok(rep) => rep,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        let c = rep.certificates.as_ref().unwrap();
        if !rep.status.binding || c.c3.is_none() || c.c4.is_none() {
            bad.push(format!(
                "{name}: certificates unavailable {:?}",
                rep.status.notes
            ));
        }
        if let Some(v) = rep.violations.first() {
            bad.push(format!(
                "{name}: {} violations, first {v:?}",
                rep.violations.len()
            ));
        }
        let floor = rep
            .records
            .iter()
            .filter(|x| x.eps_achieved.0 > x.eps_used.0 || x.eps_achieved.1 > x.eps_used.1)
            .count();
        notes.push(format!(
            "{name}: C3 {:.1}, C4 {:.1}, {floor} steps at round-off floor",
            c.c3.unwrap_or(f64::NAN),
            c.c4.unwrap_or(f64::NAN)
        ));

        let zero = exact.clone().with_inexact(ErrorPolicy::zero());
        let a = run(
            inst,
            &exact,
            &StartPoint::zeros(inst),
            &Stopping::iterations(1000),
            None,
        )
        .unwrap();
        let b = run(
            inst,
            &zero,
            &StartPoint::zeros(inst),
            &Stopping::iterations(1000),
            None,
        )
        .unwrap();
        let d = a
            .final_state
            .x
            .dist(&b.final_state.x)
            .max(a.final_state.y.dist(&b.final_state.y));
        let dr = a
            .records
            .iter()
            .zip(&b.records)
            .map(|(p, q)| (p.feasibility - q.feasibility).abs())
            .fold(d, f64::max);
        if dr > 1e-10 {
            bad.push(format!("{name}: ε ≡ 0 deviates by {dr:e}"));
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            notes.join("; ")
        } else {
            bad.join("; ")
        },
    }
}

fn schedule_lemmas() -> Outcome {
    let mut bad = Vec::new();
    for t1 in [1.0, 2.0, 5.0] {
        let re = ScheduleRule::recurrence_exact(t1);
        for (i, &t) in re.sequence(100_000).iter().enumerate() {
            if t < t1 + i as f64 / 2.0 {
                bad.push(format!("recurrence t1={t1} k={}", i + 1));
                break;
            }
        }
        for a in [0.1, 1.0, 10.0] {
            let b = growth_b(a, t1);
            for (i, &t) in ScheduleRule::sqrt_cap(a, t1)
                .sequence(100_000)
                .iter()
                .enumerate()
            {
                if t < t1 + b * i as f64 {
                    bad.push(format!("sqrt_cap a={a} t1={t1} k={}", i + 1));
                    break;
                }
            }
        }
    }
    let seq: Vec<f64> = ScheduleRule::recurrence_exact(1.0).sequence(10_001);
    // Stored t_k carry an error of ulp(t_k)/2, which moves the residual by about t_k·ulp(t_k),
    // so the residual is measured in units of t_{k+1}.
    let (mut abs, mut rel) = (0.0f64, 0.0f64);
    for w in seq.windows(2) {
        let r = ((w[1] - w[0]) * (w[1] + w[0]) - w[1]).abs();
        abs = abs.max(r);
        rel = rel.max(r / w[1].max(1.0));
    }
    if rel > 1e-10 {
        bad.push(format!("saturation residual {rel:e} · t_(k+1)"));
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("k ≤ 100000; saturation residual ≤ {rel:.1e} · t_(k+1) (absolute {abs:.1e}) for k ≤ 10000")
        } else {
            bad.join("; ")
        },
    }
}

fn golden() -> Outcome {
    let p = Scalar1 {
        a: 1.0,
        b: 1.0,
        r: 2.0,
        c: 1.0,
        mu: 1.0,
    };
    let inst = p.instance();
    let cfg = SolverConfig::new(
        SolverVariant::AdmmFirstII,
        1.0,
        1.0,
        0.5,
        ScheduleRule::min_cap(1.0, 1.0),
        1,
    );
    let s = init_state(&inst, &cfg, &StartPoint::zeros(&inst)).unwrap();
    let (s2, _) = step_first(&inst, &cfg, &s).unwrap();
    let o = oracle_first_step(p, true, 1.0, 1.0, 0.5, 1.0, 2f64.sqrt(), [0.0; 7]);
    let golden = [1.0, 0.2928932, 0.7071068, 0.2071068, -0.5];
    let engine = [s2.u[0], s2.v[0], s2.x[0], s2.y[0], s2.lambda[0]];
    let oracle = [o[4], o[5], o[0], o[2], o[6]];
    let worst = (0..5)
        .map(|i| {
            (engine[i] - golden[i])
                .abs()
                .max((oracle[i] - golden[i]).abs())
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-6,
        detail: format!(
            "u₂={:.7} v₂={:.7} x₂={:.7} y₂={:.7} λ₂={:.7}, max deviation {worst:.1e}",
            engine[0], engine[1], engine[2], engine[3], engine[4]
        ),
    }
}
