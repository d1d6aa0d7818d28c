//! Iteration engines for the accelerated linearized ADMM family.
//!
//! Every variant shares one skeleton: extrapolate, update the x-block, update the
//! y-block, average, and take a dual step. Variants differ only in the two block rules
//! (see [`SolverVariant::rules`]); one-block variants skip the absent block.

mod blocks;
mod nesterov;
mod params;
mod policy;

pub use nesterov::{nesterov_reference, NesterovScheme};
pub use params::{certified_config, certified_params, theorem_cap};
pub use policy::{ErrorPolicy, ErrorSequence, ErrorSum, SumFailure};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::metrics::{
    self, CertificateBounds, CertificateStatus, EnergyBreakdown, TheoremGroup, Violation,
};
use crate::model::{ProblemInstance, SaddleReference};
use crate::scalar::Scalar;
use crate::schedule::{ScheduleRule, ScheduleState};
use crate::subprob::OperatorInfo;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Algorithm selector.
///
/// Serialized as its [`name`](SolverVariant::name), e.g. `"admm_first_ii"` or `"hybrid_i_2"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolverVariant {
    AdmmFirstI,
    AdmmFirstII,
    AdmmSecondI,
    AdmmSecondII,
    /// First-scheme x-update with a second-scheme y-update (option 1 or 2).
    HybridI(u8),
    /// Second-scheme x-update with a first-scheme y-update (option 1 or 2).
    HybridII(u8),
    AlmFirstI,
    AlmFirstII,
    AlmSecondI,
    AlmSecondII,
    NesterovFirst,
    NesterovSecond,
}

/// x-block update rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XRule {
    /// Implicit update of `u` with proximal center `u_k`.
    First,
    /// Implicit update of `x` with proximal center `x̄_k`.
    Second,
}

/// y-block update rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YRule {
    /// Implicit update of `v` with the augmented term.
    FirstI,
    /// Prox step on `v` using the predicted multiplier `λ̄_{k+1}`.
    FirstII,
    /// Implicit update of `y` with the strong-convexity correction.
    SecondI,
    /// Prox step on `y` using `λ̄_{k+1}` and the strong-convexity correction.
    SecondII,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 14] = [
        SolverVariant::AdmmFirstI,
        SolverVariant::AdmmFirstII,
        SolverVariant::AdmmSecondI,
        SolverVariant::AdmmSecondII,
        SolverVariant::HybridI(1),
        SolverVariant::HybridI(2),
        SolverVariant::HybridII(1),
        SolverVariant::HybridII(2),
        SolverVariant::AlmFirstI,
        SolverVariant::AlmFirstII,
        SolverVariant::AlmSecondI,
        SolverVariant::AlmSecondII,
        SolverVariant::NesterovFirst,
        SolverVariant::NesterovSecond,
    ];

    /// `(x-rule, y-rule)`; `None` marks a block the variant does not update.
    pub fn rules(&self) -> (Option<XRule>, Option<YRule>) {
        use SolverVariant::*;
        match *self {
            AdmmFirstI => (Some(XRule::First), Some(YRule::FirstI)),
            AdmmFirstII => (Some(XRule::First), Some(YRule::FirstII)),
            AdmmSecondI => (Some(XRule::Second), Some(YRule::SecondI)),
            AdmmSecondII => (Some(XRule::Second), Some(YRule::SecondII)),
            HybridI(1) => (Some(XRule::First), Some(YRule::SecondI)),
            HybridI(_) => (Some(XRule::First), Some(YRule::SecondII)),
            HybridII(1) => (Some(XRule::Second), Some(YRule::FirstI)),
            HybridII(_) => (Some(XRule::Second), Some(YRule::FirstII)),
            AlmFirstI | NesterovFirst => (Some(XRule::First), None),
            AlmSecondI | NesterovSecond => (Some(XRule::Second), None),
            AlmFirstII => (None, Some(YRule::FirstII)),
            AlmSecondII => (None, Some(YRule::SecondII)),
        }
    }

    /// Theorem whose certificates apply to this variant.
    pub fn theorem(&self, inexact: bool) -> TheoremGroup {
        use SolverVariant::*;
        if inexact {
            return TheoremGroup::Inexact;
        }
        match *self {
            AdmmFirstI | AdmmSecondI | HybridI(1) | HybridII(1) => TheoremGroup::FirstSchemeI,
            AdmmFirstII | AdmmSecondII | HybridI(_) | HybridII(_) => TheoremGroup::FirstSchemeII,
            AlmFirstI | AlmSecondI | NesterovFirst | NesterovSecond => TheoremGroup::AlmConvex,
            AlmFirstII | AlmSecondII => TheoremGroup::AlmStrong,
        }
    }

    pub fn is_one_block(&self) -> bool {
        let (x, y) = self.rules();
        x.is_none() || y.is_none()
    }

    pub fn name(&self) -> String {
        use SolverVariant::*;
        let fixed = match *self {
            AdmmFirstI => "admm_first_i",
            AdmmFirstII => "admm_first_ii",
            AdmmSecondI => "admm_second_i",
            AdmmSecondII => "admm_second_ii",
            HybridI(o) => return format!("hybrid_i_{o}"),
            HybridII(o) => return format!("hybrid_ii_{o}"),
            AlmFirstI => "alm_first_i",
            AlmFirstII => "alm_first_ii",
            AlmSecondI => "alm_second_i",
            AlmSecondII => "alm_second_ii",
            NesterovFirst => "nesterov_first",
            NesterovSecond => "nesterov_second",
        };
        fixed.to_string()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SolverVariant::HybridI(o) | SolverVariant::HybridII(o) if o != 1 && o != 2 => Err(
                Error::domain(format!("hybrid option must be 1 or 2, got {o}")),
            ),
            _ => Ok(()),
        }
    }

    /// Checks the degenerate constraint blocks a one-block variant needs.
    pub fn check_instance<S: Scalar>(&self, inst: &ProblemInstance<S>) -> Result<()> {
        use SolverVariant::*;
        let need_b_zero = matches!(
            self,
            AlmFirstI | AlmSecondI | NesterovFirst | NesterovSecond
        );
        let need_a_zero = matches!(
            self,
            AlmFirstII | AlmSecondII | NesterovFirst | NesterovSecond
        );
        if need_b_zero && !inst.b().is_zero() {
            return Err(Error::domain(format!("{} requires B = 0", self.name())));
        }
        if need_a_zero && !inst.a().is_zero() {
            return Err(Error::domain(format!("{} requires A = 0", self.name())));
        }
        if matches!(self, NesterovFirst | NesterovSecond) && inst.rhs().max_abs() != S::zero() {
            return Err(Error::domain(format!("{} requires b = 0", self.name())));
        }
        Ok(())
    }
}

impl std::str::FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverVariant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<String> =
                    SolverVariant::ALL.iter().map(SolverVariant::name).collect();
                Error::Parse(format!(
                    "unknown solver variant `{s}`, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl From<SolverVariant> for String {
    fn from(v: SolverVariant) -> String {
        v.name()
    }
}

impl TryFrom<String> for SolverVariant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Initial multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub enum DualInit<S> {
    Given(Vector<S>),
    /// `λ₁ = γt₁²(Ax₁ + By₁ − b)`.
    PenaltyConsistent,
}

/// Deliberate defects used to check that the verification suite notices them.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Uses `t_k` instead of `t_{k+1}` in the dual step.
    DualStepLagsIndex,
}

/// Run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct SolverConfig<S> {
    pub variant: SolverVariant,
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub schedule: ScheduleRule<S>,
    pub max_outer: usize,
    /// Present for the inexact algorithm.
    #[serde(default)]
    pub inexact: Option<ErrorPolicy<S>>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Keep `(x_k, y_k, λ_k)` in every record.
    #[serde(default)]
    pub store_iterates: bool,
    #[serde(default = "default_inner_max_iters")]
    pub inner_max_iters: usize,
    /// Stationarity target when an exact block solve is unavailable.
    #[serde(default = "default_fallback_tol")]
    pub fallback_inner_tol: S,
    #[doc(hidden)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

fn default_record_every() -> usize {
    1
}

fn default_inner_max_iters() -> usize {
    100_000
}

fn default_fallback_tol<S: Scalar>() -> S {
    S::of(1e-10)
}

impl<S: Scalar> SolverConfig<S> {
    pub fn new(
        variant: SolverVariant,
        alpha: S,
        beta: S,
        gamma: S,
        schedule: ScheduleRule<S>,
        max_outer: usize,
    ) -> Self {
        Self {
            variant,
            alpha,
            beta,
            gamma,
            schedule,
            max_outer,
            inexact: None,
            record_every: 1,
            store_iterates: false,
            inner_max_iters: default_inner_max_iters(),
            fallback_inner_tol: default_fallback_tol(),
            fault: None,
        }
    }

    pub fn with_inexact(mut self, policy: ErrorPolicy<S>) -> Self {
        self.inexact = Some(policy);
        self
    }

    pub fn with_iterates(mut self) -> Self {
        self.store_iterates = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.record_every == 0 {
            return Err(Error::domain("record_every must be at least 1"));
        }
        if !(self.fallback_inner_tol > S::zero()) {
            return Err(Error::domain("fallback_inner_tol must be positive"));
        }
        self.schedule.validate()?;
        self.schedule.initial_state_checked()?;
        Ok(())
    }

    pub fn theorem(&self) -> TheoremGroup {
        self.variant.theorem(self.inexact.is_some())
    }
}

/// Iterates at index `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct SolverState<S> {
    pub k: usize,
    pub x: Vector<S>,
    pub x_prev: Vector<S>,
    pub y: Vector<S>,
    pub y_prev: Vector<S>,
    pub u: Vector<S>,
    pub v: Vector<S>,
    pub lambda: Vector<S>,
    pub schedule: ScheduleState<S>,
}

impl<S: Scalar> SolverState<S> {
    pub fn t_k(&self) -> S {
        self.schedule.t_k
    }

    pub fn t_next(&self) -> S {
        self.schedule.t_next
    }

    fn is_finite(&self) -> bool {
        [&self.x, &self.y, &self.u, &self.v, &self.lambda]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Primal-dual iterate kept when `store_iterates` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct IterateSnapshot<S> {
    pub x: Vector<S>,
    pub y: Vector<S>,
    pub lambda: Vector<S>,
    pub u: Vector<S>,
    pub v: Vector<S>,
}

/// Metrics at one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct IterationRecord<S> {
    pub k: usize,
    pub t_k: S,
    pub t_next: S,
    pub feasibility: S,
    pub objective: S,
    /// `f(x_k) + g(y_k) − f(x*) − g(y*)` (signed).
    pub objective_gap: Option<S>,
    /// `L(x_k, y_k, λ*) − L(x*, y*, λ*)`.
    pub lagrangian_gap: Option<S>,
    pub energy: Option<EnergyBreakdown<S>>,
    /// Inner iterations spent on the step that produced this index.
    pub inner_iters: usize,
    /// Targets `(ε^a, ε^b)` of that step.
    pub eps_used: (S, S),
    /// Certified stationarity bounds reached by that step.
    pub eps_achieved: (S, S),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate: Option<IterateSnapshot<S>>,
}

/// Stopping rule for [`run`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct Stopping<S> {
    pub max_outer: usize,
    #[serde(default)]
    pub feasibility_tol: Option<S>,
    /// Applied to `|objective_gap|` when a reference is available.
    #[serde(default)]
    pub gap_tol: Option<S>,
}

impl<S: Scalar> Stopping<S> {
    pub fn iterations(max_outer: usize) -> Self {
        Self {
            max_outer,
            feasibility_tol: None,
            gap_tol: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxOuter,
    Tolerance,
}

/// Starting point `(x₀, y₀, λ₁)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StartPoint<S> {
    pub x0: Vector<S>,
    pub y0: Vector<S>,
    pub dual: DualInit<S>,
}

impl<S: Scalar> StartPoint<S> {
    pub fn zeros(inst: &ProblemInstance<S>) -> Self {
        Self {
            x0: Vector::zeros(inst.m()),
            y0: Vector::zeros(inst.n()),
            dual: DualInit::Given(Vector::zeros(inst.p())),
        }
    }

    pub fn penalty_consistent(inst: &ProblemInstance<S>) -> Self {
        Self {
            dual: DualInit::PenaltyConsistent,
            ..Self::zeros(inst)
        }
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct RunReport<S> {
    pub config: SolverConfig<S>,
    pub records: Vec<IterationRecord<S>>,
    pub certificates: Option<CertificateBounds<S>>,
    pub status: CertificateStatus,
    pub violations: Vec<Violation>,
    /// First recorded index `k` where the Lyapunov sequence increased.
    pub lyapunov_increase: Option<usize>,
    pub final_state: SolverState<S>,
    pub stop_reason: StopReason,
    pub elapsed_secs: f64,
}

impl<S: Scalar> RunReport<S> {
    pub fn last(&self) -> &IterationRecord<S> {
        self.records
            .last()
            .expect("a report holds at least the initial record")
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo<S> {
    pub inner_iters: usize,
    pub eps_used: (S, S),
    pub eps_achieved: (S, S),
}

/// Validated instance and configuration with cached operator data.
#[derive(Debug)]
pub struct Engine<'a, S> {
    inst: &'a ProblemInstance<S>,
    cfg: &'a SolverConfig<S>,
    a_info: OperatorInfo<S>,
    b_info: OperatorInfo<S>,
}

impl<'a, S: Scalar> Engine<'a, S> {
    pub fn new(inst: &'a ProblemInstance<S>, cfg: &'a SolverConfig<S>) -> Result<Self> {
        cfg.validate()?;
        cfg.variant.check_instance(inst)?;
        Ok(Self {
            inst,
            cfg,
            a_info: OperatorInfo::new(inst.a())?,
            b_info: OperatorInfo::new(inst.b())?,
        })
    }

    pub fn instance(&self) -> &ProblemInstance<S> {
        self.inst
    }

    pub fn config(&self) -> &SolverConfig<S> {
        self.cfg
    }

    /// Cached `‖A‖²`.
    pub fn a_norm_sq(&self) -> S {
        self.a_info.norm_sq()
    }

    /// Cached `‖B‖²`.
    pub fn b_norm_sq(&self) -> S {
        self.b_info.norm_sq()
    }

    /// State at `k = 1`: `x₁ = x_prev = u₁ = x₀`, `y₁ = y_prev = v₁ = y₀`.
    pub fn init_state(&self, start: &StartPoint<S>) -> Result<SolverState<S>> {
        let inst = self.inst;
        check_dim("x0", inst.m(), start.x0.len())?;
        check_dim("y0", inst.n(), start.y0.len())?;
        if !start.x0.is_finite() || !start.y0.is_finite() {
            return Err(Error::NonFinite("starting point".into()));
        }
        let schedule = self.cfg.schedule.initial_state_checked()?;
        let lambda = match &start.dual {
            DualInit::Given(l) => {
                check_dim("lambda0", inst.p(), l.len())?;
                l.clone()
            }
            DualInit::PenaltyConsistent => {
                let r = inst.residual_unchecked(&start.x0, &start.y0);
                r.scale(self.cfg.gamma * schedule.t_k * schedule.t_k)
            }
        };
        Ok(SolverState {
            k: 1,
            x: start.x0.clone(),
            x_prev: start.x0.clone(),
            y: start.y0.clone(),
            y_prev: start.y0.clone(),
            u: start.x0.clone(),
            v: start.y0.clone(),
            lambda,
            schedule,
        })
    }

    /// One iteration `k → k + 1`.
    pub fn step(&self, state: &SolverState<S>) -> Result<(SolverState<S>, StepInfo<S>)> {
        blocks::step(self, state).map_err(|e| e.at(state.k))
    }

    fn record(
        &self,
        state: &SolverState<S>,
        info: &StepInfo<S>,
        reference: Option<&SaddleReference<S>>,
    ) -> Result<IterationRecord<S>> {
        let inst = self.inst;
        let (xe, ye) = metrics::evaluation_point(self.cfg.variant, state, reference);
        let feasibility = inst.residual_unchecked(xe, ye).norm();
        let objective = inst.x_block().value(xe) + inst.y_block().value(ye);
        let (objective_gap, lagrangian_gap, energy) = match reference {
            Some(r) => {
                let l_star = r.lagrangian_value(inst)?;
                let obj_star = inst.objective(&r.x_star, &r.y_star)?;
                let lag = inst.lagrangian(xe, ye, &r.lambda_star)? - l_star;
                let energy = metrics::energy(inst, self.cfg, state, r)?;
                (Some(objective - obj_star), Some(lag), Some(energy))
            }
            None => (None, None, None),
        };
        let iterate = self.cfg.store_iterates.then(|| IterateSnapshot {
            x: state.x.clone(),
            y: state.y.clone(),
            lambda: state.lambda.clone(),
            u: state.u.clone(),
            v: state.v.clone(),
        });
        Ok(IterationRecord {
            k: state.k,
            t_k: state.t_k(),
            t_next: state.t_next(),
            feasibility,
            objective,
            objective_gap,
            lagrangian_gap,
            energy,
            inner_iters: info.inner_iters,
            eps_used: info.eps_used,
            eps_achieved: info.eps_achieved,
            iterate,
        })
    }

    /// Iterates from `start` until `stopping` triggers.
    pub fn run(
        &self,
        start: &StartPoint<S>,
        stopping: &Stopping<S>,
        reference: Option<&SaddleReference<S>>,
    ) -> Result<RunReport<S>> {
        let clock = Instant::now();
        if let Some(r) = reference {
            r.check_dims(self.inst)?;
        }
        let mut state = self.init_state(start)?;
        let (certificates, status) = match reference {
            Some(r) => {
                let (c, s) = metrics::certificates(self, &state, r, stopping.max_outer + 1)?;
                (Some(c), s)
            }
            None => (
                None,
                CertificateStatus::disabled("no saddle reference supplied"),
            ),
        };
        for note in &status.notes {
            log::info!("{}: {note}", self.cfg.variant.name());
        }
        let first = self.record(&state, &StepInfo::default(), reference)?;
        let mut records = vec![first];
        let mut stop_reason = StopReason::MaxOuter;
        let tolerance_met =
            |rec: &IterationRecord<S>| match (stopping.feasibility_tol, stopping.gap_tol) {
                (None, None) => false,
                (ft, gt) => {
                    ft.is_none_or(|t| rec.feasibility <= t)
                        && gt.is_none_or(|t| rec.objective_gap.is_some_and(|g| g.abs() <= t))
                }
            };
        if tolerance_met(&records[0]) {
            stop_reason = StopReason::Tolerance;
        }
        let mut iter = 0;
        while stop_reason != StopReason::Tolerance && iter < stopping.max_outer {
            let (next, info) = self.step(&state)?;
            iter += 1;
            state = next;
            let last = iter == stopping.max_outer;
            let due = (state.k - 1) % self.cfg.record_every == 0;
            let needs_check = stopping.feasibility_tol.is_some() || stopping.gap_tol.is_some();
            if due || last || needs_check || !state.is_finite() {
                let rec = self.record(&state, &info, reference)?;
                if !state.is_finite() || !rec.feasibility.is_finite() || !rec.objective.is_finite()
                {
                    let dump = serde_json::to_string(&rec).unwrap_or_default();
                    return Err(Error::NonFinite(format!("iterate (record {dump})")).at(state.k));
                }
                if tolerance_met(&rec) {
                    stop_reason = StopReason::Tolerance;
                }
                if due || last || stop_reason == StopReason::Tolerance {
                    records.push(rec);
                }
            }
        }
        let mut report = RunReport {
            config: self.cfg.clone(),
            records,
            certificates,
            status,
            violations: Vec::new(),
            lyapunov_increase: None,
            final_state: state,
            stop_reason,
            elapsed_secs: 0.0,
        };
        if let Some(c) = &report.certificates {
            if report.status.binding {
                report.violations = metrics::check_rate_bounds(&report, c);
            }
            let (ks, energies): (Vec<usize>, Vec<_>) = report
                .records
                .iter()
                .filter_map(|r| r.energy.map(|e| (r.k, e)))
                .unzip();
            report.lyapunov_increase =
                metrics::lyapunov_monotone(&energies, c.theorem, c.e1).map(|i| ks[i]);
        }
        report.elapsed_secs = clock.elapsed().as_secs_f64();
        Ok(report)
    }
}

/// Builds the `k = 1` state.
pub fn init_state<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    start: &StartPoint<S>,
) -> Result<SolverState<S>> {
    Engine::new(inst, cfg)?.init_state(start)
}

fn step_checked<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
    allowed: &[SolverVariant],
    what: &str,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    if !allowed.contains(&cfg.variant) {
        return Err(Error::domain(format!(
            "{what} does not apply to {}",
            cfg.variant.name()
        )));
    }
    Engine::new(inst, cfg)?.step(state)
}

/// One step of a first-scheme ADMM variant.
pub fn step_first<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    use SolverVariant::*;
    step_checked(inst, cfg, state, &[AdmmFirstI, AdmmFirstII], "step_first")
}

/// One step of a second-scheme ADMM variant.
pub fn step_second<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    use SolverVariant::*;
    step_checked(
        inst,
        cfg,
        state,
        &[AdmmSecondI, AdmmSecondII],
        "step_second",
    )
}

/// One step of a hybrid variant.
pub fn step_hybrid<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    use SolverVariant::*;
    step_checked(
        inst,
        cfg,
        state,
        &[HybridI(1), HybridI(2), HybridII(1), HybridII(2)],
        "step_hybrid",
    )
}

/// One step of the inexact algorithm (first scheme with implicit block updates).
pub fn step_inexact<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    state: &SolverState<S>,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    if cfg.inexact.is_none() {
        return Err(Error::domain("step_inexact needs an error policy"));
    }
    step_checked(
        inst,
        cfg,
        state,
        &[SolverVariant::AdmmFirstI],
        "step_inexact",
    )
}

/// Runs `cfg` on `inst` from `start`.
pub fn run<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
    start: &StartPoint<S>,
    stopping: &Stopping<S>,
    reference: Option<&SaddleReference<S>>,
) -> Result<RunReport<S>> {
    Engine::new(inst, cfg)?.run(start, stopping, reference)
}

/// Maps a two-block variant to its one-block counterpart on a degenerate instance.
///
/// `AdmmFirstI → AlmFirstI` and `AdmmSecondI → AlmSecondI` need `B = 0`;
/// `AdmmFirstII → AlmFirstII` and `AdmmSecondII → AlmSecondII` need `A = 0`.
pub fn reduce_alm<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolverConfig<S>> {
    use SolverVariant::*;
    let b_zero = inst.b().is_zero();
    let a_zero = inst.a().is_zero();
    if !a_zero && !b_zero {
        return Err(Error::domain("reduction needs A = 0 or B = 0"));
    }
    let variant = match (cfg.variant, a_zero, b_zero) {
        (AdmmFirstI, _, true) => AlmFirstI,
        (AdmmSecondI, _, true) => AlmSecondI,
        (AdmmFirstII, true, _) => AlmFirstII,
        (AdmmSecondII, true, _) => AlmSecondII,
        (v, _, _) => {
            return Err(Error::domain(format!(
                "no one-block reduction of {} for this instance (A = 0: {a_zero}, B = 0: {b_zero})",
                v.name()
            )))
        }
    };
    Ok(SolverConfig {
        variant,
        ..cfg.clone()
    })
}
