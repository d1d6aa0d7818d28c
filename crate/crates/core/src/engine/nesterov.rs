use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::model::CompositeBlock;
use crate::scalar::Scalar;
use crate::schedule::ScheduleRule;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NesterovScheme {
    /// `u_{k+1} = Prox_{s·t_{k+1}}(u_k − s·t_{k+1}∇f(y_k))`, `x_{k+1} = ((t_{k+1} − 1)x_k + u_{k+1})/t_{k+1}`.
    First,
    /// `x_{k+1} = Prox_s(y_k − s∇f(y_k))` (FISTA for the recurrence schedule).
    Second,
}

/// Standalone accelerated proximal gradient on `h = h₁ + h₂` with step `step`.
///
/// Both schemes extrapolate `y_k = x_k + ((t_k − 1)/t_{k+1})(x_k − x_{k−1})`.
/// Returns `x₁, …, x_{iters+1}` with `x₁ = x₀`.
pub fn nesterov_reference<S: Scalar>(
    block: &CompositeBlock<S>,
    scheme: NesterovScheme,
    rule: &ScheduleRule<S>,
    step: S,
    x0: &Vector<S>,
    iters: usize,
) -> Result<Vec<Vector<S>>> {
    check_dim("x0", block.dim, x0.len())?;
    if !(step > S::zero()) {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    let mut traj = Vec::with_capacity(iters + 1);
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut u = x0.clone();
    let mut ts = rule.initial_state();
    traj.push(x.clone());
    for _ in 0..iters {
        let (t, tn) = (ts.t_k, ts.t_next);
        let c = (t - S::one()) / tn;
        let y = Vector::from_fn(x.len(), |i| x[i] + c * (x[i] - x_prev[i]));
        let g = block.smooth_term.gradient(&y);
        let x_next = match scheme {
            NesterovScheme::Second => {
                let arg = Vector::from_fn(y.len(), |i| y[i] - step * g[i]);
                block.prox_term.prox(step, &arg)
            }
            NesterovScheme::First => {
                let h = step * tn;
                let arg = Vector::from_fn(u.len(), |i| u[i] - h * g[i]);
                u = block.prox_term.prox(h, &arg);
                Vector::from_fn(x.len(), |i| ((tn - S::one()) * x[i] + u[i]) / tn)
            }
        };
        x_prev = std::mem::replace(&mut x, x_next);
        traj.push(x.clone());
        ts = rule.next_t(&ts);
    }
    Ok(traj)
}
