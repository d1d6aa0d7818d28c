use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Closed-form prox-friendly terms shipped with the crate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub enum ProxCatalog<S> {
    /// The zero function (identity prox).
    Zero,
    /// `τ‖x‖₁`.
    L1 { tau: S },
    /// `(μ/2)‖x‖²`.
    SquaredNorm { mu: S },
    /// `τ‖x‖₁ + (μ/2)‖x‖²`.
    ElasticNet { tau: S, mu: S },
    /// Indicator of the box `[lower, upper]` applied to every coordinate.
    Box { lower: S, upper: S },
}

type ValueFn<S> = dyn Fn(&Vector<S>) -> S + Send + Sync;
type ProxFn<S> = dyn Fn(S, &Vector<S>) -> Vector<S> + Send + Sync;

struct CustomProx<S> {
    name: String,
    value: Box<ValueFn<S>>,
    prox: Box<ProxFn<S>>,
    strong_convexity: S,
}

#[derive(Clone)]
enum Repr<S> {
    Catalog(ProxCatalog<S>),
    Custom(Arc<CustomProx<S>>),
}

/// A closed convex term accessed through its value and proximal map.
///
/// User-supplied oracles must be pure functions.
#[derive(Clone)]
pub struct ProxTerm<S> {
    repr: Repr<S>,
}

impl<S: fmt::Debug> fmt::Debug for ProxTerm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Catalog(c) => write!(f, "ProxTerm({c:?})"),
            Repr::Custom(c) => write!(f, "ProxTerm(custom {:?})", c.name),
        }
    }
}

fn soft<S: Scalar>(v: S, k: S) -> S {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        S::zero()
    }
}

impl<S: Scalar> ProxCatalog<S> {
    fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: S| {
            if v >= S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )))
            }
        };
        match *self {
            ProxCatalog::Zero => Ok(()),
            ProxCatalog::L1 { tau } => nonneg("tau", tau),
            ProxCatalog::SquaredNorm { mu } => nonneg("mu", mu),
            ProxCatalog::ElasticNet { tau, mu } => nonneg("tau", tau).and(nonneg("mu", mu)),
            ProxCatalog::Box { lower, upper } => {
                if lower <= upper && !lower.is_nan() && !upper.is_nan() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("empty box [{lower}, {upper}]")))
                }
            }
        }
    }

    fn prox_scalar(&self, s: S, y: S) -> S {
        match *self {
            ProxCatalog::Zero => y,
            ProxCatalog::L1 { tau } => soft(y, s * tau),
            ProxCatalog::SquaredNorm { mu } => y / (S::one() + s * mu),
            ProxCatalog::ElasticNet { tau, mu } => soft(y, s * tau) / (S::one() + s * mu),
            ProxCatalog::Box { lower, upper } => y.max(lower).min(upper),
        }
    }

    fn value(&self, x: &Vector<S>) -> S {
        let half = S::of(0.5);
        match *self {
            ProxCatalog::Zero => S::zero(),
            ProxCatalog::L1 { tau } => tau * x.iter().map(|v| v.abs()).sum::<S>(),
            ProxCatalog::SquaredNorm { mu } => half * mu * x.norm_sq(),
            ProxCatalog::ElasticNet { tau, mu } => {
                tau * x.iter().map(|v| v.abs()).sum::<S>() + half * mu * x.norm_sq()
            }
            ProxCatalog::Box { lower, upper } => {
                let slack = S::of(1e-12);
                let inside = x.iter().all(|&v| {
                    v >= lower - slack * (S::one() + lower.abs())
                        && v <= upper + slack * (S::one() + upper.abs())
                });
                if inside {
                    S::zero()
                } else {
                    S::infinity()
                }
            }
        }
    }
}

impl<S: Scalar> ProxTerm<S> {
    pub fn from_catalog(c: ProxCatalog<S>) -> Result<Self> {
        c.validate()?;
        Ok(Self {
            repr: Repr::Catalog(c),
        })
    }

    pub fn zero() -> Self {
        Self {
            repr: Repr::Catalog(ProxCatalog::Zero),
        }
    }

    pub fn l1(tau: S) -> Result<Self> {
        Self::from_catalog(ProxCatalog::L1 { tau })
    }

    pub fn squared_norm(mu: S) -> Result<Self> {
        Self::from_catalog(ProxCatalog::SquaredNorm { mu })
    }

    pub fn elastic_net(tau: S, mu: S) -> Result<Self> {
        Self::from_catalog(ProxCatalog::ElasticNet { tau, mu })
    }

    pub fn box_indicator(lower: S, upper: S) -> Result<Self> {
        Self::from_catalog(ProxCatalog::Box { lower, upper })
    }

    /// Wraps user-supplied value and prox maps. `prox(s, y)` must return the minimizer
    /// of `value(x) + ‖x − y‖²/(2s)`, and `strong_convexity` must be a valid modulus.
    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(&Vector<S>) -> S + Send + Sync + 'static,
        prox: impl Fn(S, &Vector<S>) -> Vector<S> + Send + Sync + 'static,
        strong_convexity: S,
    ) -> Result<Self> {
        if !(strong_convexity >= S::zero()) {
            return Err(Error::domain(
                "strong convexity modulus must be nonnegative",
            ));
        }
        Ok(Self {
            repr: Repr::Custom(Arc::new(CustomProx {
                name: name.into(),
                value: Box::new(value),
                prox: Box::new(prox),
                strong_convexity,
            })),
        })
    }

    pub fn catalog(&self) -> Option<&ProxCatalog<S>> {
        match &self.repr {
            Repr::Catalog(c) => Some(c),
            Repr::Custom(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Catalog(ProxCatalog::Zero))
    }

    pub fn value(&self, x: &Vector<S>) -> S {
        match &self.repr {
            Repr::Catalog(c) => c.value(x),
            Repr::Custom(c) => (c.value)(x),
        }
    }

    /// `argmin_x value(x) + ‖x − y‖²/(2s)`.
    pub fn prox(&self, s: S, y: &Vector<S>) -> Vector<S> {
        match &self.repr {
            Repr::Catalog(c) => y.map(|v| c.prox_scalar(s, v)),
            Repr::Custom(c) => (c.prox)(s, y),
        }
    }

    /// Coordinate-wise prox with per-coordinate steps, available for separable terms.
    pub fn separable_prox(&self, steps: &[S], y: &Vector<S>) -> Option<Vector<S>> {
        match &self.repr {
            Repr::Catalog(c) => {
                assert_eq!(steps.len(), y.len(), "separable_prox: dimension mismatch");
                Some(Vector::from_fn(y.len(), |i| c.prox_scalar(steps[i], y[i])))
            }
            Repr::Custom(_) => None,
        }
    }

    pub fn strong_convexity(&self) -> S {
        match &self.repr {
            Repr::Catalog(c) => match *c {
                ProxCatalog::SquaredNorm { mu } | ProxCatalog::ElasticNet { mu, .. } => mu,
                _ => S::zero(),
            },
            Repr::Custom(c) => c.strong_convexity,
        }
    }

    /// `Some(μ)` when the term is exactly `(μ/2)‖x‖²` (the zero function gives `μ = 0`).
    pub fn quadratic_modulus(&self) -> Option<S> {
        match &self.repr {
            Repr::Catalog(ProxCatalog::Zero) => Some(S::zero()),
            Repr::Catalog(ProxCatalog::SquaredNorm { mu }) => Some(*mu),
            _ => None,
        }
    }
}
