//! Energy sequence, certificate constants, Lyapunov checks, the multiplier
//! recovery identity and empirical rate fits.

use crate::engine::{Engine, ErrorSum, RunReport, SolverConfig, SolverState, SolverVariant};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::model::{ProblemInstance, SaddleReference};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

/// Convergence theorem a run is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremGroup {
    /// Two-block variants whose y-update keeps the augmented term (`C₁` bounds).
    FirstSchemeI,
    /// Two-block variants whose y-update uses the predicted multiplier (`C₂` bounds).
    FirstSchemeII,
    /// One-block x-only variants (convex).
    AlmConvex,
    /// One-block y-only variants (strongly convex).
    AlmStrong,
    /// Inexact first-scheme ADMM with summable errors (`C₃`, `C₄`).
    Inexact,
}

impl TheoremGroup {
    /// Whether the Lyapunov function carries `(γt²_{k+1}/2)‖B(v_k − y*)‖²`.
    pub fn uses_augmented(&self) -> bool {
        matches!(self, TheoremGroup::FirstSchemeI | TheoremGroup::Inexact)
    }
}

/// Components of `E_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct EnergyBreakdown<S> {
    /// `t_k²(L(x_k, y_k, λ*) − L(x*, y*, λ*))`.
    pub i1: S,
    /// `‖u_k − x*‖²/(2α)`.
    pub i2: S,
    /// `t²_{k+1}‖v_k − y*‖²/(2β)`.
    pub i3: S,
    /// `‖λ_k − λ*‖²/(2γ)`.
    pub i4: S,
    /// `(γt²_{k+1}/2)‖B(v_k − y*)‖²`.
    pub augmented: S,
}

impl<S: Scalar> EnergyBreakdown<S> {
    pub fn total(&self) -> S {
        self.i1 + self.i2 + self.i3 + self.i4
    }

    /// Lyapunov value for `theorem`.
    pub fn lyapunov(&self, theorem: TheoremGroup) -> S {
        if theorem.uses_augmented() {
            self.total() + self.augmented
        } else {
            self.total()
        }
    }
}

/// Rate-bound constants computed from initial data.
///
/// `c3` and `c4` are keyed by theorem: for [`TheoremGroup::AlmConvex`] `c3` is the
/// one-block `3t₁²‖Ax₁ − b‖ + …` constant, for [`TheoremGroup::AlmStrong`] `c4` uses
/// `‖By₁ − b‖`, and for [`TheoremGroup::Inexact`] both hold the summable-error constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct CertificateBounds<S> {
    pub theorem: TheoremGroup,
    pub e1: S,
    /// `(γt₂²/2)‖B(y₁ − y*)‖²`.
    pub aug1: S,
    pub c1: Option<S>,
    pub c2: Option<S>,
    pub c3: Option<S>,
    pub c4: Option<S>,
    /// Numerator of the Lagrangian-gap bound (the one-block theorems state none).
    pub lagrangian: Option<S>,
    /// Numerator of the feasibility bound.
    pub feasibility: S,
    /// Numerator of the objective-gap bound.
    pub objective: S,
    pub lambda_star_norm: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_sum: Option<ErrorSum<S>>,
}

/// Whether the certificates are binding for the run's parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateStatus {
    pub binding: bool,
    pub notes: Vec<String>,
}

impl CertificateStatus {
    pub fn disabled(note: impl Into<String>) -> Self {
        Self {
            binding: false,
            notes: vec![note.into()],
        }
    }
}

/// Recorded metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Feasibility,
    ObjectiveGap,
    LagrangianGap,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Feasibility => "feasibility",
            Metric::ObjectiveGap => "objective_gap",
            Metric::LagrangianGap => "lagrangian_gap",
        }
    }
}

/// A recorded value above its certified bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub metric: Metric,
    pub value: f64,
    pub bound: f64,
}

/// Point at which metrics are evaluated: one-block variants use the reference for
/// the block they do not update.
pub fn evaluation_point<'s, S: Scalar>(
    variant: SolverVariant,
    state: &'s SolverState<S>,
    reference: Option<&'s SaddleReference<S>>,
) -> (&'s Vector<S>, &'s Vector<S>) {
    let (xr, yr) = variant.rules();
    let x = match (xr, reference) {
        (None, Some(r)) => &r.x_star,
        _ => &state.x,
    };
    let y = match (yr, reference) {
        (None, Some(r)) => &r.y_star,
        _ => &state.y,
    };
    (x, y)
}

/// Energy components at `state`.
pub fn energy<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
    reference: &SaddleReference<S>,
) -> Result<EnergyBreakdown<S>> {
    reference.check_dims(inst)?;
    let two = S::of(2.0);
    let (xr, yr) = cfg.variant.rules();
    let (xe, ye) = evaluation_point(cfg.variant, state, Some(reference));
    let t = state.t_k();
    let tn = state.t_next();
    let gap =
        inst.lagrangian(xe, ye, &reference.lambda_star)? - reference.lagrangian_value(inst)?;
    let i2 = if xr.is_some() {
        state.u.dist(&reference.x_star).powi(2) / (two * cfg.alpha)
    } else {
        S::zero()
    };
    let (i3, augmented) = if yr.is_some() {
        let dv = Vector::from_fn(inst.n(), |i| state.v[i] - reference.y_star[i]);
        (
            tn * tn * dv.norm_sq() / (two * cfg.beta),
            cfg.gamma * tn * tn * inst.b().mul_vec(&dv).norm_sq() / two,
        )
    } else {
        (S::zero(), S::zero())
    };
    Ok(EnergyBreakdown {
        i1: t * t * gap,
        i2,
        i3,
        i4: state.lambda.dist(&reference.lambda_star).powi(2) / (two * cfg.gamma),
        augmented,
    })
}

fn slack_le<S: Scalar>(value: S, limit: S) -> bool {
    value <= limit * (S::one() + S::of(1e-12))
}

/// Checks the parameter conditions of the theorem behind `cfg` over `horizon` indices.
fn theorem_conditions<S: Scalar>(eng: &Engine<'_, S>, horizon: usize) -> CertificateStatus {
    let inst = eng.instance();
    let cfg = eng.config();
    let theorem = cfg.theorem();
    let mut notes = Vec::new();
    let (alpha, beta, gamma) = (cfg.alpha, cfg.beta, cfg.gamma);
    let (l_f2, l_g2, mu) = (inst.l_f2(), inst.l_g2(), inst.mu_g());
    let b_sq = eng.b_norm_sq();
    let rule = &cfg.schedule;
    let t1 = rule.first_t();
    let (x_rule, y_rule) = cfg.variant.rules();

    if x_rule.is_some() && !slack_le(alpha * l_f2, S::one()) {
        notes.push(format!(
            "alpha = {alpha} exceeds 1/L_f2 = {}",
            S::one() / l_f2
        ));
    }
    let cap = match theorem {
        TheoremGroup::FirstSchemeI | TheoremGroup::Inexact => {
            if !slack_le(beta * l_g2, t1 * t1) {
                notes.push(format!("beta = {beta} exceeds t1²/L_g2"));
            }
            Some(beta * mu / (S::one() + beta * gamma * b_sq))
        }
        TheoremGroup::FirstSchemeII | TheoremGroup::AlmStrong => {
            if !slack_le(beta * (l_g2 + t1 * t1 * gamma * b_sq), t1 * t1) {
                notes.push(format!("beta = {beta} exceeds t1²/(L_g2 + t1²γ‖B‖²)"));
            }
            Some(beta * mu)
        }
        TheoremGroup::AlmConvex => None,
    };
    if y_rule.is_some() && !(mu > S::zero()) {
        notes.push("g1 is not strongly convex".into());
    }

    let mut s = rule.initial_state();
    while s.k < horizon {
        if s.t_k < S::one() || s.t_next < s.t_k {
            notes.push(format!(
                "schedule is not nondecreasing in [1, ∞) at k = {}",
                s.k
            ));
            break;
        }
        s = rule.next_t(&s);
    }
    let basic = rule.admissible_basic(horizon);
    if let Some(k) = basic.first_violation {
        notes.push(format!("t_(k+1)² ≤ t_k² + t_(k+1) fails at k = {k}"));
    }
    if let Some(a) = cap {
        if let Some(k) = rule.admissible_strong(a, horizon).first_violation {
            notes.push(format!("t_(k+1)² ≤ t_k² + {a}·t_k fails at k = {k}"));
        }
    }
    if theorem == TheoremGroup::Inexact {
        if let Some(p) = &cfg.inexact {
            if let ErrorSum::NonSummable { reason } = p.series(rule) {
                notes.push(format!("error series is not summable ({reason:?})"));
            }
        }
    }
    CertificateStatus {
        binding: notes.is_empty(),
        notes,
    }
}

/// Certificate constants for a run starting from `init`, plus whether the theorem's
/// parameter conditions hold for the first `horizon` indices.
pub fn certificates<S: Scalar>(
    eng: &Engine<'_, S>,
    init: &SolverState<S>,
    reference: &SaddleReference<S>,
    horizon: usize,
) -> Result<(CertificateBounds<S>, CertificateStatus)> {
    let inst = eng.instance();
    let cfg = eng.config();
    let theorem = cfg.theorem();
    let two = S::of(2.0);
    let three = S::of(3.0);
    let gamma = cfg.gamma;
    let en = energy(inst, cfg, init, reference)?;
    let e1 = en.total();
    let t1 = init.t_k();
    let t2 = init.t_next();
    let aug1 = if theorem.uses_augmented() {
        en.augmented
    } else {
        S::zero()
    };
    let (xe, ye) = evaluation_point(cfg.variant, init, Some(reference));
    let r1 = inst.residual(xe, ye)?.norm();
    let dl = init.lambda.dist(&reference.lambda_star);
    let ls = reference.lambda_star.norm();
    // 3t₁²‖r₁‖ + (2‖λ₁ − λ*‖ + 2√inner)/γ
    let c_of =
        |inner: S| three * t1 * t1 * r1 + (two * dl + two * inner.max(S::zero()).sqrt()) / gamma;

    let mut b = CertificateBounds {
        theorem,
        e1,
        aug1,
        c1: None,
        c2: None,
        c3: None,
        c4: None,
        lagrangian: None,
        feasibility: S::zero(),
        objective: S::zero(),
        lambda_star_norm: ls,
        error_sum: None,
    };
    let mut status = theorem_conditions(eng, horizon);
    match theorem {
        TheoremGroup::FirstSchemeI => {
            let c1 = c_of(
                two * gamma * e1
                    + gamma * gamma * t2 * t2 * {
                        let dy = Vector::from_fn(inst.n(), |i| init.y[i] - reference.y_star[i]);
                        inst.b().mul_vec(&dy).norm_sq()
                    },
            );
            b.c1 = Some(c1);
            b.lagrangian = Some(e1 + aug1);
            b.feasibility = c1;
            b.objective = e1 + aug1 + c1 * ls;
        }
        TheoremGroup::FirstSchemeII => {
            let c2 = c_of(two * gamma * e1);
            b.c2 = Some(c2);
            b.lagrangian = Some(e1);
            b.feasibility = c2;
            b.objective = e1 + c2 * ls;
        }
        TheoremGroup::AlmConvex | TheoremGroup::AlmStrong => {
            let c = c_of(two * gamma * e1);
            if theorem == TheoremGroup::AlmConvex {
                b.c3 = Some(c);
            } else {
                b.c4 = Some(c);
            }
            b.feasibility = c;
            b.objective = e1 + c * ls;
        }
        TheoremGroup::Inexact => {
            let policy = cfg
                .inexact
                .as_ref()
                .ok_or_else(|| Error::domain("inexact certificates need an error policy"))?;
            let sum = policy.series(&cfg.schedule);
            b.error_sum = Some(sum);
            match sum {
                ErrorSum::Summable { bound: s, .. } => {
                    let base = e1 + aug1;
                    let four_m = S::of(4.0) * cfg.alpha.max(cfg.beta);
                    let c3 = base + s * ((four_m * base).sqrt() + four_m * s);
                    let c4 = c_of(two * gamma * c3);
                    b.c3 = Some(c3);
                    b.c4 = Some(c4);
                    b.lagrangian = Some(c3);
                    b.feasibility = c4;
                    b.objective = c3 + c4 * ls;
                }
                ErrorSum::NonSummable { .. } => {
                    b.feasibility = S::infinity();
                    b.objective = S::infinity();
                    status.binding = false;
                }
            }
        }
    }
    if matches!(
        cfg.variant,
        SolverVariant::HybridI(_) | SolverVariant::HybridII(_)
    ) {
        status.notes.push(
            "hybrid variants are checked against the constants of the matching option".into(),
        );
    }
    Ok((b, status))
}

/// Every record where a certified inequality fails by more than `1e-8·(1 + bound)`.
pub fn check_rate_bounds<S: Scalar>(
    report: &RunReport<S>,
    certs: &CertificateBounds<S>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |k: usize, metric: Metric, value: S, num: S, t: S| {
        let bound = num / (t * t);
        if value > bound + S::of(1e-8) * (S::one() + bound) {
            out.push(Violation {
                k,
                metric,
                value: value.as_f64(),
                bound: bound.as_f64(),
            });
        }
    };
    for r in &report.records {
        check(
            r.k,
            Metric::Feasibility,
            r.feasibility,
            certs.feasibility,
            r.t_k,
        );
        if let Some(g) = r.objective_gap {
            check(r.k, Metric::ObjectiveGap, g.abs(), certs.objective, r.t_k);
        }
        if let (Some(g), Some(num)) = (r.lagrangian_gap, certs.lagrangian) {
            check(r.k, Metric::LagrangianGap, g, num, r.t_k);
        }
    }
    out
}

/// Position of the first increase of the Lyapunov sequence beyond `1e-8·(1 + E₁)`.
///
/// Inexact runs have no monotone Lyapunov function in observable quantities (the
/// decreasing one involves the unknown subgradient errors), so they return `None`.
pub fn lyapunov_monotone<S: Scalar>(
    energies: &[EnergyBreakdown<S>],
    theorem: TheoremGroup,
    e1: S,
) -> Option<usize> {
    if theorem == TheoremGroup::Inexact {
        return None;
    }
    let tol = S::of(1e-8) * (S::one() + e1.abs());
    energies
        .windows(2)
        .position(|w| w[1].lyapunov(theorem) > w[0].lyapunov(theorem) + tol)
        .map(|i| i + 1)
}

/// `h_k = t_k²(Ax_k + By_k − b)` and `a_k = (t_k² − t_{k+1}(t_{k+1} − 1))/t_k²` for a
/// report that stores iterates at every index.
pub fn recovery_sequences<S: Scalar>(
    inst: &ProblemInstance<S>,
    report: &RunReport<S>,
) -> Result<(Vec<Vector<S>>, Vec<S>, Vec<Vector<S>>)> {
    let mut h = Vec::with_capacity(report.records.len());
    let mut a = Vec::with_capacity(report.records.len());
    let mut lambdas = Vec::with_capacity(report.records.len());
    for (i, r) in report.records.iter().enumerate() {
        if r.k != i + 1 {
            return Err(Error::Capability(format!(
                "records are subsampled (record {i} has k = {})",
                r.k
            )));
        }
        let it = r
            .iterate
            .as_ref()
            .ok_or_else(|| Error::Capability("report does not store iterates".into()))?;
        let t2 = r.t_k * r.t_k;
        h.push(inst.residual(&it.x, &it.y)?.scale(t2));
        a.push((t2 - r.t_next * (r.t_next - S::one())) / t2);
        lambdas.push(it.lambda.clone());
    }
    Ok((h, a, lambdas))
}

/// `max_k ‖λ_{k+1} − λ₁ − γ(h_{k+1} − h₁) − γΣ_{i≤k} a_i h_i‖`.
pub fn lambda_recovery<S: Scalar>(
    inst: &ProblemInstance<S>,
    report: &RunReport<S>,
    gamma: S,
) -> Result<S> {
    let (h, a, lambdas) = recovery_sequences(inst, report)?;
    let mut acc = Vector::zeros(inst.p());
    let mut worst = S::zero();
    for k in 1..h.len() {
        acc = acc.axpy(a[k - 1], &h[k - 1]);
        let dev = Vector::from_fn(inst.p(), |j| {
            lambdas[k][j] - lambdas[0][j] - gamma * (h[k][j] - h[0][j]) - gamma * acc[j]
        });
        worst = worst.max(dev.norm());
    }
    Ok(worst)
}

/// Outcome of a numeric check of an inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct InequalityCheck<S> {
    /// Whether the lemma's hypothesis holds on the data.
    pub hypothesis: bool,
    pub lhs: S,
    pub rhs: S,
}

impl<S: Scalar> InequalityCheck<S> {
    /// Conclusion holds up to `1e-10·(1 + rhs)`.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + S::of(1e-10) * (S::one() + self.rhs.abs())
    }
}

/// Given `a_k ∈ [0, 1)` and `C = max_k ‖h_{k+1} + Σ_{i≤k} a_i h_i‖`, compares
/// `sup‖h_k‖` with `‖h₁‖ + 2C`.
pub fn bounded_sum_check<S: Scalar>(h: &[Vector<S>], a: &[S]) -> Result<InequalityCheck<S>> {
    if h.is_empty() || a.len() + 1 < h.len() {
        return Err(Error::domain("need a_k for every h_k except the last"));
    }
    let dim = h[0].len();
    let mut acc = Vector::zeros(dim);
    let mut c = S::zero();
    for k in 1..h.len() {
        acc = acc.axpy(a[k - 1], &h[k - 1]);
        c = c.max(h[k].axpy(S::one(), &acc).norm());
    }
    let sup = h.iter().map(Vector::norm).fold(S::zero(), S::max);
    let hypothesis = a[..h.len() - 1]
        .iter()
        .all(|&x| x >= S::zero() && x < S::one());
    Ok(InequalityCheck {
        hypothesis,
        lhs: sup,
        rhs: h[0].norm() + S::of(2.0) * c,
    })
}

/// For nonnegative `a_k`, `b_k` with `a_k² ≤ c² + Σ_{j≤k} b_j a_j`, compares
/// `max_k a_k` with `c + Σ b_j`.
pub fn quadratic_recursion_check<S: Scalar>(a: &[S], b: &[S], c: S) -> Result<InequalityCheck<S>> {
    if a.len() != b.len() {
        return Err(Error::domain("a and b must have equal length"));
    }
    if a.iter().chain(b).any(|&x| x < S::zero()) || c < S::zero() {
        return Err(Error::domain("sequences and c must be nonnegative"));
    }
    let mut partial = S::zero();
    let mut hypothesis = true;
    for (&ak, &bk) in a.iter().zip(b) {
        partial += bk * ak;
        if ak * ak > (c * c + partial) * (S::one() + S::of(1e-12)) {
            hypothesis = false;
        }
    }
    Ok(InequalityCheck {
        hypothesis,
        lhs: a.iter().copied().fold(S::zero(), S::max),
        rhs: c + b.iter().copied().fold(S::zero(), |x, y| x + y),
    })
}

/// Least-squares slope of `log(value)` against `log(k)`.
pub fn fit_loglog<S: Scalar>(points: &[(usize, S)]) -> Result<S> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two points to fit a rate"));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(k, v) in points {
        if !(v > S::zero()) || k == 0 {
            return Err(Error::domain(format!("nonpositive value {v} at k = {k}")));
        }
        xs.push(S::of_usize(k).ln());
        ys.push(v.ln());
    }
    let n = S::of_usize(xs.len());
    let mx = xs.iter().copied().fold(S::zero(), |a, b| a + b) / n;
    let my = ys.iter().copied().fold(S::zero(), |a, b| a + b) / n;
    let (mut sxy, mut sxx) = (S::zero(), S::zero());
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (*x - mx) * (*y - my);
        sxx += (*x - mx) * (*x - mx);
    }
    if sxx == S::zero() {
        return Err(Error::domain("all points share one index"));
    }
    Ok(sxy / sxx)
}

/// Log-log slope of `metric` over the records whose index lies in `window`.
pub fn fit_rate<S: Scalar>(
    report: &RunReport<S>,
    metric: Metric,
    window: RangeInclusive<usize>,
) -> Result<S> {
    let mut pts = Vec::new();
    for r in report.records.iter().filter(|r| window.contains(&r.k)) {
        let v = match metric {
            Metric::Feasibility => Some(r.feasibility),
            Metric::ObjectiveGap => r.objective_gap.map(|g| g.abs()),
            Metric::LagrangianGap => r.lagrangian_gap,
        }
        .ok_or_else(|| Error::Capability(format!("{} needs a saddle reference", metric.name())))?;
        pts.push((r.k, v));
    }
    fit_loglog(&pts)
}
