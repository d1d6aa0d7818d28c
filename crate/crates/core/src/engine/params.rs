use super::{SolverConfig, SolverVariant};
use crate::error::Result;
use crate::metrics::TheoremGroup;
use crate::model::ProblemInstance;
use crate::scalar::Scalar;
use crate::schedule::{corollary_params, CorollaryParams, ScheduleRule};
use crate::subprob::OperatorInfo;

/// Parameters `(t₁, α, β, γ)` inside the admissible range of `variant`'s theorem.
///
/// * Scheme-I variants use [`corollary_params`].
/// * Scheme-II variants keep its `t₁` and `α`, cap `β` at `2(1 + 1/t₁)/μ_g` and set
///   `γ = 0.9(1/β − L_g2/t₁²)/‖B‖²` so that `β ≤ t₁²/(L_g2 + t₁²γ‖B‖²)`.
/// * x-only one-block variants use `t₁ = 1`, `α = 1/L_f2`, `γ = 1`.
/// * y-only one-block variants use `t₁ = 2`, `γ = 1`, `β = 0.9t₁²/(L_g2 + t₁²‖B‖²)`.
pub fn certified_params<S: Scalar>(
    inst: &ProblemInstance<S>,
    variant: SolverVariant,
) -> Result<CorollaryParams<S>> {
    let one = S::one();
    let alpha = if inst.l_f2() > S::zero() {
        one / inst.l_f2()
    } else {
        one
    };
    let b_sq = OperatorInfo::new(inst.b())?.norm_sq();
    let (l_g2, mu) = (inst.l_g2(), inst.mu_g());
    match variant.theorem(false) {
        TheoremGroup::FirstSchemeI | TheoremGroup::Inexact => {
            corollary_params(inst.l_f2(), l_g2, mu, b_sq)
        }
        TheoremGroup::FirstSchemeII => {
            let base = corollary_params(inst.l_f2(), l_g2, mu, b_sq)?;
            let t1 = base.t1;
            let beta = base.beta.min(S::of(2.0) * (one + one / t1) / mu);
            let gamma = if b_sq > S::zero() {
                S::of(0.9) * (one / beta - l_g2 / (t1 * t1)) / b_sq
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
        TheoremGroup::AlmConvex => Ok(CorollaryParams {
            t1: one,
            alpha,
            beta: one,
            gamma: one,
        }),
        TheoremGroup::AlmStrong => {
            let t1 = S::of(2.0);
            let denom = l_g2 + t1 * t1 * b_sq;
            let beta = if denom > S::zero() {
                S::of(0.9) * t1 * t1 / denom
            } else {
                one
            };
            Ok(CorollaryParams {
                t1,
                alpha,
                beta,
                gamma: one,
            })
        }
    }
}

/// Strong-convexity cap `a` in `t²_{k+1} ≤ t_k² + a·t_k` required by `cfg`'s theorem,
/// or `None` when only the basic condition applies.
pub fn theorem_cap<S: Scalar>(
    inst: &ProblemInstance<S>,
    cfg: &SolverConfig<S>,
) -> Result<Option<S>> {
    let mu = inst.mu_g();
    Ok(match cfg.theorem() {
        TheoremGroup::FirstSchemeI | TheoremGroup::Inexact => {
            let b_sq = OperatorInfo::new(inst.b())?.norm_sq();
            Some(cfg.beta * mu / (S::one() + cfg.beta * cfg.gamma * b_sq))
        }
        TheoremGroup::FirstSchemeII | TheoremGroup::AlmStrong => Some(cfg.beta * mu),
        TheoremGroup::AlmConvex => None,
    })
}

/// Configuration with [`certified_params`] and a `MinCap` schedule at the theorem's cap
/// (the plain recurrence when no cap applies).
pub fn certified_config<S: Scalar>(
    inst: &ProblemInstance<S>,
    variant: SolverVariant,
    max_outer: usize,
) -> Result<SolverConfig<S>> {
    let p = certified_params(inst, variant)?;
    let mut cfg = SolverConfig::new(
        variant,
        p.alpha,
        p.beta,
        p.gamma,
        ScheduleRule::recurrence_exact(p.t1),
        max_outer,
    );
    if let Some(a) = theorem_cap(inst, &cfg)? {
        cfg.schedule = ScheduleRule::min_cap(a, p.t1);
    }
    Ok(cfg)
}
