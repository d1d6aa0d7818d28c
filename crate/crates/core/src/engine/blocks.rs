use super::{Engine, Fault, SolverState, StepInfo, XRule, YRule};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Scalar;
use crate::subprob::{
    eta_second, solve_exact, solve_inner_from, solve_v_prox_first, solve_y_prox_second,
    QuadraticProxSubproblem,
};

struct BlockSolve<S> {
    point: Vector<S>,
    inner_iters: usize,
    achieved: S,
}

/// Exact solve unless a positive tolerance is requested; falls back to the inner
/// solver when no closed form exists.
fn solve_block<S: Scalar>(
    eng: &Engine<'_, S>,
    sub: &QuadraticProxSubproblem<'_, S>,
    eps: S,
    warm: &Vector<S>,
) -> Result<BlockSolve<S>> {
    let cfg = eng.cfg;
    let inner = |tol: S| -> Result<BlockSolve<S>> {
        let r = solve_inner_from(sub, warm, tol, cfg.inner_max_iters)?;
        Ok(BlockSolve {
            point: r.point,
            inner_iters: r.inner_iters,
            achieved: r.epsilon_bound,
        })
    };
    if cfg.inexact.is_some() && eps > S::zero() {
        return inner(eps);
    }
    match solve_exact(sub) {
        Ok(point) => Ok(BlockSolve {
            point,
            inner_iters: 0,
            achieved: S::zero(),
        }),
        Err(Error::Capability(_)) => inner(if cfg.inexact.is_some() {
            eps
        } else {
            cfg.fallback_inner_tol
        }),
        Err(e) => Err(e),
    }
}

/// `x_new/s + (s − 1)/s · x_old`.
fn average<S: Scalar>(new: &Vector<S>, old: &Vector<S>, s: S) -> Vector<S> {
    new.lincomb(S::one() / s, (s - S::one()) / s, old)
}

/// `x_new + (s − 1)(x_new − x_old)`.
fn extrapolate_back<S: Scalar>(new: &Vector<S>, old: &Vector<S>, s: S) -> Vector<S> {
    new.lincomb(s, S::one() - s, old)
}

pub(super) fn step<S: Scalar>(
    eng: &Engine<'_, S>,
    st: &SolverState<S>,
) -> Result<(SolverState<S>, StepInfo<S>)> {
    let inst = eng.inst;
    let cfg = eng.cfg;
    let (x_rule, y_rule) = cfg.variant.rules();
    let one = S::one();
    let t = st.t_k();
    let s = st.t_next();
    let theta = (t - one) / s;
    let (alpha, beta, gamma) = (cfg.alpha, cfg.beta, cfg.gamma);
    let rhs = inst.rhs();
    let a = inst.a();
    let b = inst.b();

    let (eps_a, eps_b) = cfg
        .inexact
        .as_ref()
        .map_or((S::zero(), S::zero()), |p| p.at(st.k));
    let mut info = StepInfo {
        inner_iters: 0,
        eps_used: (eps_a, eps_b),
        eps_achieved: (S::zero(), S::zero()),
    };

    let x_bar = st.x.lincomb(one + theta, -theta, &st.x_prev);
    let y_bar = st.y.lincomb(one + theta, -theta, &st.y_prev);

    let (u_new, x_new) = match x_rule {
        None => (st.u.clone(), st.x.clone()),
        Some(rule) => {
            let xb = inst.x_block();
            let grad = xb.smooth_term.gradient(&x_bar);
            let at_lambda = a.tr_mul_vec(&st.lambda);
            let linear = Vector::from_fn(inst.m(), |i| at_lambda[i] + grad[i]);
            let bv = b.mul_vec(&st.v);
            match rule {
                XRule::First => {
                    let sub = QuadraticProxSubproblem {
                        prox_term: &xb.prox_term,
                        linear,
                        sigma: gamma * s,
                        op: a,
                        op_info: &eng.a_info,
                        residual_offset: Vector::from_fn(inst.p(), |i| rhs[i] - bv[i]),
                        rho: one / (alpha * s),
                        center: st.u.clone(),
                    };
                    let r = solve_block(eng, &sub, eps_a, &st.u)?;
                    info.inner_iters += r.inner_iters;
                    info.eps_achieved.0 = r.achieved;
                    let x_new = average(&r.point, &st.x, s);
                    (r.point, x_new)
                }
                XRule::Second => {
                    let ax = a.mul_vec(&st.x);
                    let sub = QuadraticProxSubproblem {
                        prox_term: &xb.prox_term,
                        linear,
                        sigma: gamma * s * s,
                        op: a,
                        op_info: &eng.a_info,
                        residual_offset: Vector::from_fn(inst.p(), |i| {
                            ax[i] - (ax[i] + bv[i] - rhs[i]) / s
                        }),
                        rho: one / alpha,
                        center: x_bar.clone(),
                    };
                    let r = solve_block(eng, &sub, eps_a, &st.x)?;
                    info.inner_iters += r.inner_iters;
                    info.eps_achieved.0 = r.achieved;
                    let u_new = extrapolate_back(&r.point, &st.x, s);
                    (u_new, r.point)
                }
            }
        }
    };

    let au = a.mul_vec(&u_new);
    let (v_new, y_new) = match y_rule {
        None => (st.v.clone(), st.y.clone()),
        Some(rule) => {
            let yb = inst.y_block();
            let grad = yb.smooth_term.gradient(&y_bar);
            let mu = inst.mu_g();
            let bv = b.mul_vec(&st.v);
            // λ̄_{k+1} = λ_k + γs(Au_{k+1} + Bv_k − b)
            let lambda_bar = || {
                Vector::from_fn(inst.p(), |i| {
                    st.lambda[i] + gamma * s * (au[i] + bv[i] - rhs[i])
                })
            };
            let drift_with = |lam: &Vector<S>| {
                let btl = b.tr_mul_vec(lam);
                Vector::from_fn(inst.n(), |i| btl[i] + grad[i])
            };
            match rule {
                YRule::FirstI => {
                    let sub = QuadraticProxSubproblem {
                        prox_term: &yb.prox_term,
                        linear: drift_with(&st.lambda),
                        sigma: gamma * s,
                        op: b,
                        op_info: &eng.b_info,
                        residual_offset: Vector::from_fn(inst.p(), |i| rhs[i] - au[i]),
                        rho: s / beta,
                        center: st.v.clone(),
                    };
                    let r = solve_block(eng, &sub, eps_b, &st.v)?;
                    info.inner_iters += r.inner_iters;
                    info.eps_achieved.1 = r.achieved;
                    let y_new = average(&r.point, &st.y, s);
                    (r.point, y_new)
                }
                YRule::FirstII => {
                    let drift = drift_with(&lambda_bar());
                    let v_new = solve_v_prox_first(&yb.prox_term, beta, s, &st.v, &drift)?;
                    let y_new = average(&v_new, &st.y, s);
                    (v_new, y_new)
                }
                YRule::SecondI => {
                    let eta = eta_second(beta, mu, s);
                    let shift = eta * mu * (s - one);
                    let by = b.mul_vec(&st.y);
                    let sub = QuadraticProxSubproblem {
                        prox_term: &yb.prox_term,
                        linear: drift_with(&st.lambda),
                        sigma: gamma * s * s,
                        op: b,
                        op_info: &eng.b_info,
                        residual_offset: Vector::from_fn(inst.p(), |i| {
                            by[i] - (au[i] + by[i] - rhs[i]) / s
                        }),
                        rho: one / eta,
                        center: Vector::from_fn(inst.n(), |i| {
                            y_bar[i] - shift * (y_bar[i] - st.y[i])
                        }),
                    };
                    let r = solve_block(eng, &sub, eps_b, &st.y)?;
                    info.inner_iters += r.inner_iters;
                    info.eps_achieved.1 = r.achieved;
                    let v_new = extrapolate_back(&r.point, &st.y, s);
                    (v_new, r.point)
                }
                YRule::SecondII => {
                    let eta = eta_second(beta, mu, s);
                    let drift = drift_with(&lambda_bar());
                    let corr_scale = mu * (s - one);
                    let correction =
                        Vector::from_fn(inst.n(), |i| corr_scale * (y_bar[i] - st.y[i]) + drift[i]);
                    let y_new = solve_y_prox_second(&yb.prox_term, eta, &y_bar, &correction)?;
                    let v_new = extrapolate_back(&y_new, &st.y, s);
                    (v_new, y_new)
                }
            }
        }
    };

    let dual_t = match cfg.fault {
        Some(Fault::DualStepLagsIndex) => t,
        None => s,
    };
    let bv_new = b.mul_vec(&v_new);
    let lambda = Vector::from_fn(inst.p(), |i| {
        st.lambda[i] + gamma * dual_t * (au[i] + bv_new[i] - rhs[i])
    });
    let schedule = cfg.schedule.next_t_checked(&st.schedule)?;

    Ok((
        SolverState {
            k: st.k + 1,
            x: x_new,
            x_prev: st.x.clone(),
            y: y_new,
            y_prev: st.y.clone(),
            u: u_new,
            v: v_new,
            lambda,
            schedule,
        },
        info,
    ))
}
