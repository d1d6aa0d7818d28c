//! Extrapolation sequences `t_k`, their admissibility checks and growth bounds.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Update rule for `t_k`.
///
/// Recursive rules start from `t1`; closed-form rules evaluate their formula at
/// `k + offset` and ignore `t1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub enum ScheduleVariant<S> {
    /// `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
    RecurrenceExact,
    /// `t_{k+1} = √(t_k² + a·t_k)`.
    SqrtCap { a: S },
    /// Minimum of the two rules above.
    MinCap { a: S },
    /// `t_k = 1 + (k − 2)/(α − 1)`.
    LinearShift { alpha: S },
    /// `t_k = k/2`.
    HalfK,
    /// `t_k = (k + 1)/2`.
    TsengShift,
    /// `t_k = 1 + (k − 1)/(α − 1)`.
    ChambolleDossal { alpha: S },
    /// `t_k = (k − 1)/(α − 1)`.
    AttouchCabot { alpha: S },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ScheduleRule<S> {
    #[serde(flatten)]
    pub variant: ScheduleVariant<S>,
    #[serde(default = "one")]
    pub t1: S,
    /// Index shift applied to closed-form rules.
    #[serde(default)]
    pub offset: usize,
}

fn one<S: Scalar>() -> S {
    S::one()
}

/// Position in the sequence: `t_k` and `t_{k+1}` at index `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ScheduleState<S> {
    pub k: usize,
    pub t_k: S,
    pub t_next: S,
}

/// Outcome of a finite-horizon admissibility check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub first_violation: Option<usize>,
}

/// Parameters satisfying the corollary conditions for the first scheme (I).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct CorollaryParams<S> {
    pub t1: S,
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
}

fn recurrence<S: Scalar>(t: S) -> S {
    (S::one() + (S::one() + S::of(4.0) * t * t).sqrt()) / S::of(2.0)
}

fn sqrt_cap<S: Scalar>(t: S, a: S) -> S {
    (t * t + a * t).sqrt()
}

impl<S: Scalar> ScheduleRule<S> {
    pub fn new(variant: ScheduleVariant<S>, t1: S) -> Result<Self> {
        let rule = Self {
            variant,
            t1,
            offset: 0,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn recurrence_exact(t1: S) -> Self {
        Self {
            variant: ScheduleVariant::RecurrenceExact,
            t1,
            offset: 0,
        }
    }

    pub fn min_cap(a: S, t1: S) -> Self {
        Self {
            variant: ScheduleVariant::MinCap { a },
            t1,
            offset: 0,
        }
    }

    pub fn sqrt_cap(a: S, t1: S) -> Self {
        Self {
            variant: ScheduleVariant::SqrtCap { a },
            t1,
            offset: 0,
        }
    }

    pub fn closed_form(variant: ScheduleVariant<S>) -> Self {
        Self {
            variant,
            t1: S::one(),
            offset: 0,
        }
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    pub fn is_recursive(&self) -> bool {
        matches!(
            self.variant,
            ScheduleVariant::RecurrenceExact
                | ScheduleVariant::SqrtCap { .. }
                | ScheduleVariant::MinCap { .. }
        )
    }

    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let alpha_ok = |alpha: S| {
            if alpha >= S::of(3.0) && alpha.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "schedule parameter alpha must be >= 3, got {alpha}"
                )))
            }
        };
        match self.variant {
            ScheduleVariant::SqrtCap { a } | ScheduleVariant::MinCap { a }
                if !(a > S::zero() && a.is_finite()) =>
            {
                return Err(Error::domain(format!(
                    "schedule cap a must be positive, got {a}"
                )));
            }
            ScheduleVariant::LinearShift { alpha }
            | ScheduleVariant::ChambolleDossal { alpha }
            | ScheduleVariant::AttouchCabot { alpha } => alpha_ok(alpha)?,
            _ => {}
        }
        if self.is_recursive() && !(self.t1 >= S::one() && self.t1.is_finite()) {
            return Err(Error::domain(format!("t1 must be >= 1, got {}", self.t1)));
        }
        Ok(())
    }

    /// Closed-form value at index `k` (recursive rules return `None`).
    fn closed_value(&self, k: usize) -> Option<S> {
        let kk = S::of_usize(k + self.offset);
        let one = S::one();
        let two = S::of(2.0);
        match self.variant {
            ScheduleVariant::LinearShift { alpha } => Some(one + (kk - two) / (alpha - one)),
            ScheduleVariant::HalfK => Some(kk / two),
            ScheduleVariant::TsengShift => Some((kk + one) / two),
            ScheduleVariant::ChambolleDossal { alpha } => Some(one + (kk - one) / (alpha - one)),
            ScheduleVariant::AttouchCabot { alpha } => Some((kk - one) / (alpha - one)),
            _ => None,
        }
    }

    /// `t_{k+1}` given `t_k`.
    fn successor(&self, k: usize, t_k: S) -> S {
        match self.variant {
            ScheduleVariant::RecurrenceExact => recurrence(t_k),
            ScheduleVariant::SqrtCap { a } => sqrt_cap(t_k, a),
            ScheduleVariant::MinCap { a } => recurrence(t_k).min(sqrt_cap(t_k, a)),
            _ => self.closed_value(k + 1).expect("closed-form variant"),
        }
    }

    pub fn first_t(&self) -> S {
        self.closed_value(1).unwrap_or(self.t1)
    }

    /// State at `k = 1`.
    pub fn initial_state(&self) -> ScheduleState<S> {
        let t1 = self.first_t();
        ScheduleState {
            k: 1,
            t_k: t1,
            t_next: self.successor(1, t1),
        }
    }

    /// Advances one index.
    pub fn next_t(&self, state: &ScheduleState<S>) -> ScheduleState<S> {
        ScheduleState {
            k: state.k + 1,
            t_k: state.t_next,
            t_next: self.successor(state.k + 1, state.t_next),
        }
    }

    /// Like [`Self::initial_state`], rejecting `t < 1` for consumers that need `t_k ≥ 1`.
    pub fn initial_state_checked(&self) -> Result<ScheduleState<S>> {
        let s = self.initial_state();
        check_ge_one(&s)?;
        Ok(s)
    }

    /// Like [`Self::next_t`], rejecting `t < 1` for consumers that need `t_k ≥ 1`.
    pub fn next_t_checked(&self, state: &ScheduleState<S>) -> Result<ScheduleState<S>> {
        let s = self.next_t(state);
        check_ge_one(&s)?;
        Ok(s)
    }

    /// `t_1, …, t_n`.
    pub fn sequence(&self, n: usize) -> Vec<S> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut s = self.initial_state();
        out.push(s.t_k);
        while out.len() < n {
            out.push(s.t_next);
            s = self.next_t(&s);
        }
        out
    }

    /// Checks `t_{k+1}² ≤ t_k² + t_{k+1}` for `k < horizon`.
    ///
    /// The slack is `1e-12·max(1, t_{k+1}²)`, which keeps the check meaningful for
    /// large `t` where absolute rounding of `t²` exceeds `1e-12`.
    pub fn admissible_basic(&self, horizon: usize) -> Admissibility {
        self.scan(horizon, |t, tn| tn * tn - t * t - tn)
    }

    /// Checks `t_{k+1}² ≤ t_k² + a_cap·t_k` for `k < horizon` with the same slack.
    pub fn admissible_strong(&self, a_cap: S, horizon: usize) -> Admissibility {
        self.scan(horizon, |t, tn| tn * tn - t * t - a_cap * t)
    }

    fn scan(&self, horizon: usize, margin: impl Fn(S, S) -> S) -> Admissibility {
        let mut s = self.initial_state();
        while s.k < horizon {
            let slack = S::of(1e-12) * (s.t_next * s.t_next).max(S::one());
            if !(margin(s.t_k, s.t_next) <= slack) {
                return Admissibility {
                    admissible: false,
                    first_violation: Some(s.k),
                };
            }
            s = self.next_t(&s);
        }
        Admissibility {
            admissible: true,
            first_violation: None,
        }
    }

    /// Lower bound on `t_k` for the recursive rules.
    pub fn growth_lower_bound(&self, k: usize) -> Result<S> {
        if k == 0 {
            return Err(Error::domain("schedule index starts at 1"));
        }
        let t1 = self.t1;
        let km1 = S::of_usize(k - 1);
        match self.variant {
            ScheduleVariant::RecurrenceExact => Ok(t1 + km1 / S::of(2.0)),
            ScheduleVariant::SqrtCap { a } => Ok(t1 + growth_b(a, t1) * km1),
            ScheduleVariant::MinCap { a } => {
                let b = growth_b(a, t1);
                Ok(t1 + S::one().min(S::of(2.0) * b) * km1 / S::of(2.0))
            }
            _ => Err(Error::domain(format!(
                "no growth bound for closed-form rule {:?}",
                self.variant
            ))),
        }
    }
}

fn check_ge_one<S: Scalar>(s: &ScheduleState<S>) -> Result<()> {
    if s.t_k >= S::one() && s.t_next >= S::one() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "schedule produces t < 1 at index {} (t_k = {}, t_next = {})",
            s.k, s.t_k, s.t_next
        )))
    }
}

/// Growth constant `b = 2a·t₁/(a + 4t₁)` of the square-root cap.
pub fn growth_b<S: Scalar>(a: S, t1: S) -> S {
    S::of(2.0) * a * t1 / (a + S::of(4.0) * t1)
}

/// Parameters `(t₁, α, β, γ)` satisfying the corollary conditions
/// `t₁ > max{1, √(2L_g2/μ_g)}`, `α ≤ 1/L_f2`, `β ∈ ((1 + 1/t₁)/μ_g, t₁²/L_g2]`,
/// `γ < (t₁(βμ_g − 1) − 1)/((t₁ + 1)β‖B‖²)`.
///
/// `t₁` exceeds the lower bound by one, `β` is the midpoint of its interval (upper end
/// `t₁²·10⁶` when `L_g2 = 0`), and `γ` is 90% of its bound (`1` when `‖B‖² = 0`).
pub fn corollary_params<S: Scalar>(
    l_f2: S,
    l_g2: S,
    mu_g: S,
    b_norm_sq: S,
) -> Result<CorollaryParams<S>> {
    if !(mu_g > S::zero()) || !mu_g.is_finite() {
        return Err(Error::domain(format!(
            "strong convexity modulus must be positive, got {mu_g}"
        )));
    }
    for (name, v) in [("L_f2", l_f2), ("L_g2", l_g2), ("‖B‖²", b_norm_sq)] {
        if !(v >= S::zero()) || !v.is_finite() {
            return Err(Error::domain(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    let one = S::one();
    let t1 = one.max((S::of(2.0) * l_g2 / mu_g).sqrt()) + one;
    let alpha = if l_f2 > S::zero() { one / l_f2 } else { one };
    let lo = (one + one / t1) / mu_g;
    let hi = if l_g2 > S::zero() {
        t1 * t1 / l_g2
    } else {
        t1 * t1 * S::of(1e6)
    };
    if !(hi > lo) {
        return Err(Error::domain(format!("empty beta interval ({lo}, {hi}]")));
    }
    let beta = (lo + hi) / S::of(2.0);
    let gamma = if b_norm_sq > S::zero() {
        S::of(0.9) * (t1 * (beta * mu_g - one) - one) / ((t1 + one) * beta * b_norm_sq)
    } else {
        one
    };
    Ok(CorollaryParams {
        t1,
        alpha,
        beta,
        gamma,
    })
}
