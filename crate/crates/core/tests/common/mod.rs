//! Test-side oracles shared by the integration tests.

use accel_admm::linalg::{Matrix, Vector};
use accel_admm::model::{CompositeBlock, ProblemInstance, ProxTerm, SmoothTerm};

/// Scalar instance `min (c/2)x² + (μ/2)y²` s.t. `a·x + b·y = r`.
#[derive(Clone, Copy)]
pub struct Scalar1 {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub c: f64,
    pub mu: f64,
}

impl Scalar1 {
    pub fn instance(&self) -> ProblemInstance<f64> {
        let v = |x: f64| Vector::from_f64(&[x]).unwrap();
        let m = |x: f64| Matrix::from_f64_rows(&[&[x]]).unwrap();
        let xb = CompositeBlock::new(
            1,
            ProxTerm::zero(),
            SmoothTerm::least_squares(m(self.c.sqrt()), v(0.0)).unwrap(),
        )
        .unwrap();
        let yb = CompositeBlock::new(
            1,
            ProxTerm::squared_norm(self.mu).unwrap(),
            SmoothTerm::zero(),
        )
        .unwrap();
        ProblemInstance::new(xb, yb, m(self.a), m(self.b), v(self.r)).unwrap()
    }
}

/// Scalar iterate `(x, x_prev, y, y_prev, u, v, λ)`.
pub type Iterate = [f64; 7];

/// Independent step of the first scheme on [`Scalar1`], written from the implicit
/// update equations and solved by hand for the scalar unknowns.
#[allow(clippy::too_many_arguments)]
pub fn oracle_first_step(
    p: Scalar1,
    second: bool,
    alpha: f64,
    beta: f64,
    gamma: f64,
    tk: f64,
    tn: f64,
    z: Iterate,
) -> Iterate {
    let [x, xp, y, _yp, u, v, l] = z;
    let xbar = x + (tk - 1.0) / tn * (x - xp);
    // u − u_k = −α t (c x̄ + a(λ + γ t (a u + b v − r)))
    let u1 = (u - alpha * tn * (p.c * xbar + p.a * l + p.a * gamma * tn * (p.b * v - p.r)))
        / (1.0 + alpha * tn * tn * gamma * p.a * p.a);
    let v1 = if second {
        // v − v_k = −(β/t)(μ v + b λ̄), λ̄ = λ + γ t (a u₁ + b v − r)
        let lbar = l + gamma * tn * (p.a * u1 + p.b * v - p.r);
        (v - beta / tn * p.b * lbar) / (1.0 + beta * p.mu / tn)
    } else {
        // v − v_k = −(β/t)(μ v + b(λ + γ t(a u₁ + b v − r)))
        (v - beta / tn * p.b * (l + gamma * tn * (p.a * u1 - p.r)))
            / (1.0 + beta * p.mu / tn + beta * gamma * p.b * p.b)
    };
    let x1 = u1 / tn + (tn - 1.0) / tn * x;
    let y1 = v1 / tn + (tn - 1.0) / tn * y;
    let l1 = l + gamma * tn * (p.a * u1 + p.b * v1 - p.r);
    [x1, x, y1, y, u1, v1, l1]
}
