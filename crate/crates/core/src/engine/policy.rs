use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedule::ScheduleRule;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// One error sequence `ε_k`, `k ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub enum ErrorSequence<S> {
    Zero,
    Constant {
        value: S,
    },
    /// `scale · k^(−exponent)`.
    Power {
        scale: S,
        exponent: S,
    },
}

impl<S: Scalar> ErrorSequence<S> {
    pub fn at(&self, k: usize) -> S {
        match *self {
            ErrorSequence::Zero => S::zero(),
            ErrorSequence::Constant { value } => value,
            ErrorSequence::Power { scale, exponent } => scale * S::of_usize(k).powf(-exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ErrorSequence::Zero => true,
            ErrorSequence::Constant { value } => value >= S::zero() && value.is_finite(),
            ErrorSequence::Power { scale, exponent } => {
                scale >= S::zero() && scale.is_finite() && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid error sequence {self:?}")))
        }
    }

    /// Smallest exponent `q` with `ε_k ≤ scale·k^(−q)`, or `None` when the sequence is
    /// not eventually zero and does not decay.
    fn decay(&self) -> Option<(S, S)> {
        match *self {
            ErrorSequence::Zero => Some((S::zero(), S::infinity())),
            ErrorSequence::Constant { value } if value == S::zero() => {
                Some((S::zero(), S::infinity()))
            }
            ErrorSequence::Constant { .. } => None,
            ErrorSequence::Power { scale, .. } if scale == S::zero() => {
                Some((S::zero(), S::infinity()))
            }
            ErrorSequence::Power { scale, exponent } => Some((scale, exponent)),
        }
    }
}

type CustomFn<S> = dyn Fn(usize) -> (S, S) + Send + Sync;

/// Tolerances `(ε^a_k, ε^b_k)` for the inexact block solves.
#[derive(Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ErrorPolicy<S> {
    pub a: ErrorSequence<S>,
    pub b: ErrorSequence<S>,
    #[serde(skip)]
    custom: Option<Arc<CustomFn<S>>>,
}

impl<S: fmt::Debug> fmt::Debug for ErrorPolicy<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.custom.is_some() {
            write!(f, "ErrorPolicy(custom)")
        } else {
            write!(f, "ErrorPolicy(a: {:?}, b: {:?})", self.a, self.b)
        }
    }
}

impl<S: PartialEq> PartialEq for ErrorPolicy<S> {
    fn eq(&self, other: &Self) -> bool {
        match (&self.custom, &other.custom) {
            (None, None) => self.a == other.a && self.b == other.b,
            (Some(x), Some(y)) => Arc::ptr_eq(x, y),
            _ => false,
        }
    }
}

/// Sum of `max{t_{k+1}ε^a_k, ε^b_k}` over `k ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub enum ErrorSum<S> {
    /// Upper bound on the series (partial sum plus a tail bound where available).
    Summable {
        bound: S,
        terms: usize,
    },
    NonSummable {
        reason: SumFailure,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumFailure {
    /// `ε^a_k` must decay faster than `k⁻²` and `ε^b_k` faster than `k⁻¹`.
    SlowDecay,
    /// Partial sums did not settle within the term budget.
    NoConvergence,
}

const MAX_TERMS: usize = 50_000_000;

impl<S: Scalar> ErrorPolicy<S> {
    pub fn new(a: ErrorSequence<S>, b: ErrorSequence<S>) -> Result<Self> {
        a.validate()?;
        b.validate()?;
        Ok(Self { a, b, custom: None })
    }

    pub fn zero() -> Self {
        Self {
            a: ErrorSequence::Zero,
            b: ErrorSequence::Zero,
            custom: None,
        }
    }

    /// `ε^a_k = ε^b_k = scale·k^(−exponent)`.
    pub fn power(scale: S, exponent: S) -> Result<Self> {
        let s = ErrorSequence::Power { scale, exponent };
        Self::new(s, s)
    }

    /// Arbitrary sequences; summability is then judged from numeric partial sums.
    pub fn custom(f: impl Fn(usize) -> (S, S) + Send + Sync + 'static) -> Self {
        Self {
            a: ErrorSequence::Zero,
            b: ErrorSequence::Zero,
            custom: Some(Arc::new(f)),
        }
    }

    pub fn is_custom(&self) -> bool {
        self.custom.is_some()
    }

    /// `(ε^a_k, ε^b_k)`.
    pub fn at(&self, k: usize) -> (S, S) {
        match &self.custom {
            Some(f) => f(k),
            None => (self.a.at(k), self.b.at(k)),
        }
    }

    /// Evaluates the error series along the schedule `rule`.
    ///
    /// Partial sums run until the increment drops below `1e-14`. For power-law
    /// sequences an integral tail bound using `t_{k+1} ≤ t₁ + k` is added, which
    /// makes the result an upper bound; custom sequences report the partial sum.
    pub fn series(&self, rule: &ScheduleRule<S>) -> ErrorSum<S> {
        let tail = if self.custom.is_none() {
            match (self.a.decay(), self.b.decay()) {
                (Some((sa, pa)), Some((sb, pb)))
                    if (sa == S::zero() || pa > S::of(2.0))
                        && (sb == S::zero() || pb > S::one()) =>
                {
                    Some((sa, pa, sb, pb))
                }
                _ => {
                    return ErrorSum::NonSummable {
                        reason: SumFailure::SlowDecay,
                    }
                }
            }
        } else {
            None
        };
        let cutoff = S::of(1e-14);
        let mut state = rule.initial_state();
        let mut sum = S::zero();
        let mut k = 1;
        loop {
            let (ea, eb) = self.at(k);
            let term = (state.t_next * ea).max(eb);
            sum += term;
            if term < cutoff && k > 1 {
                break;
            }
            if k >= MAX_TERMS || !sum.is_finite() {
                return ErrorSum::NonSummable {
                    reason: SumFailure::NoConvergence,
                };
            }
            state = rule.next_t(&state);
            k += 1;
        }
        let mut bound = sum;
        if let Some((sa, pa, sb, pb)) = tail {
            // Σ_{j>k} j^(−q) ≤ k^(1−q)/(q − 1).
            let kk = S::of_usize(k);
            let one = S::one();
            let tail_sum = |q: S| kk.powf(one - q) / (q - one);
            let t1 = rule.first_t().max(one);
            if sa > S::zero() {
                bound += sa * (t1 * tail_sum(pa) + tail_sum(pa - one));
            }
            if sb > S::zero() {
                bound += sb * tail_sum(pb);
            }
        }
        ErrorSum::Summable { bound, terms: k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_policy_is_summable() {
        let p = ErrorPolicy::<f64>::power(1.0, 3.0).unwrap();
        let rule = ScheduleRule::min_cap(1.0, 1.0);
        match p.series(&rule) {
            ErrorSum::Summable { bound, .. } => {
                // t_{k+1} ≤ 1 + k, so the series is below Σ (1 + k)/k³ = ζ(3) + ζ(2).
                assert!(bound > 1.0 && bound < 1.202_06 + 1.644_94 + 1e-6, "{bound}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_policy_is_rejected() {
        let p =
            ErrorPolicy::new(ErrorSequence::Constant { value: 0.1 }, ErrorSequence::Zero).unwrap();
        assert_eq!(
            p.series(&ScheduleRule::<f64>::recurrence_exact(1.0)),
            ErrorSum::NonSummable {
                reason: SumFailure::SlowDecay
            }
        );
        let slow = ErrorPolicy::<f64>::power(1.0, 2.0).unwrap();
        assert!(matches!(
            slow.series(&ScheduleRule::recurrence_exact(1.0)),
            ErrorSum::NonSummable { .. }
        ));
    }

    #[test]
    fn zero_policy_sums_to_zero() {
        let p = ErrorPolicy::<f64>::zero();
        assert_eq!(
            p.series(&ScheduleRule::recurrence_exact(1.0)),
            ErrorSum::Summable {
                bound: 0.0,
                terms: 2
            }
        );
    }

    #[test]
    fn custom_policy_uses_partial_sums() {
        let p = ErrorPolicy::<f64>::custom(|k| (0.0, 0.5f64.powi(k as i32)));
        match p.series(&ScheduleRule::recurrence_exact(1.0)) {
            ErrorSum::Summable { bound, .. } => assert!((bound - 1.0).abs() < 1e-13),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn policy_round_trips_through_json() {
        let p = ErrorPolicy::<f64>::power(2.0, 3.0).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: ErrorPolicy<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
    }
}
