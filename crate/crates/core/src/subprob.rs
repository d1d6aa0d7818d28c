//! Block subproblems of the form
//!
//! `min_u h(u) + ⟨c, u⟩ + (σ/2)‖Mu − r‖² + (ρ/2)‖u − center‖²`
//!
//! solved either in closed form or by an accelerated proximal-gradient inner loop with
//! a certified bound on `dist(0, ∂F(u))`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{solve_spd, Matrix, Vector};
use crate::model::ProxTerm;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Structural facts about an operator `M` reused across iterations.
#[derive(Clone, Debug)]
pub struct OperatorInfo<S> {
    gram: Matrix<S>,
    gram_diagonal: bool,
    norm_sq: S,
}

impl<S: Scalar> OperatorInfo<S> {
    pub fn new(op: &Matrix<S>) -> Result<Self> {
        let gram = op.gram();
        let gram_diagonal = gram.is_diagonal();
        let norm_sq = if gram_diagonal {
            gram.diagonal().into_iter().fold(S::zero(), S::max)
        } else if op.rows() == 0 || op.cols() == 0 {
            S::zero()
        } else {
            op.spectral_norm_sq(S::of(1e-12), 100_000)?
        };
        Ok(Self {
            gram,
            gram_diagonal,
            norm_sq,
        })
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn norm_sq(&self) -> S {
        self.norm_sq
    }

    pub fn gram_is_diagonal(&self) -> bool {
        self.gram_diagonal
    }
}

/// One block subproblem. `op` and `op_info` describe `M`.
#[derive(Clone, Debug)]
pub struct QuadraticProxSubproblem<'a, S> {
    pub prox_term: &'a ProxTerm<S>,
    pub linear: Vector<S>,
    pub sigma: S,
    pub op: &'a Matrix<S>,
    pub op_info: &'a OperatorInfo<S>,
    pub residual_offset: Vector<S>,
    pub rho: S,
    pub center: Vector<S>,
}

/// Approximate minimizer with a certified stationarity bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct StationarityReport<S> {
    pub point: Vector<S>,
    pub epsilon_bound: S,
    pub inner_iters: usize,
    /// `eps` was below the round-off floor and the iteration stalled; `point` is the best
    /// image seen and `epsilon_bound` may exceed the requested tolerance.
    #[serde(default)]
    pub precision_limited: bool,
}

impl<'a, S: Scalar> QuadraticProxSubproblem<'a, S> {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        check_dim("subproblem linear term", d, self.linear.len())?;
        check_dim("subproblem operator columns", d, self.op.cols())?;
        check_dim(
            "subproblem residual offset",
            self.op.rows(),
            self.residual_offset.len(),
        )?;
        check_dim("subproblem operator gram", d, self.op_info.gram.rows())?;
        if !(self.rho > S::zero()) || !self.rho.is_finite() {
            return Err(Error::domain(format!(
                "proximal weight rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.sigma >= S::zero()) || !self.sigma.is_finite() {
            return Err(Error::domain(format!(
                "augmented weight sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// `ρ·center + σMᵀr − c`.
    fn rhs(&self) -> Vector<S> {
        let mtr = self.op.tr_mul_vec(&self.residual_offset);
        Vector::from_fn(self.dim(), |i| {
            self.rho * self.center[i] + self.sigma * mtr[i] - self.linear[i]
        })
    }

    /// Gradient of the smooth part `⟨c, u⟩ + (σ/2)‖Mu − r‖² + (ρ/2)‖u − center‖²`.
    pub fn smooth_gradient(&self, u: &Vector<S>) -> Vector<S> {
        let mu = self.op.mul_vec(u);
        let res = Vector::from_fn(mu.len(), |i| mu[i] - self.residual_offset[i]);
        let mtres = self.op.tr_mul_vec(&res);
        Vector::from_fn(u.len(), |i| {
            self.linear[i] + self.sigma * mtres[i] + self.rho * (u[i] - self.center[i])
        })
    }

    /// Full objective value.
    pub fn objective(&self, u: &Vector<S>) -> S {
        let mu = self.op.mul_vec(u);
        let res = Vector::from_fn(mu.len(), |i| mu[i] - self.residual_offset[i]);
        let half = S::of(0.5);
        self.prox_term.value(u)
            + self.linear.dot(u)
            + half * self.sigma * res.norm_sq()
            + half * self.rho * u.dist(&self.center).powi(2)
    }

    fn smooth_lipschitz(&self) -> S {
        self.sigma * self.op_info.norm_sq + self.rho
    }
}

/// Exact minimizer for the supported structures:
/// `MᵀM` diagonal (one prox after completing the square), or `h = (μ/2)‖·‖²`
/// (including `h = 0`) with a Cholesky solve of `(σMᵀM + (ρ + μ)I)u = ρ·center + σMᵀr − c`.
pub fn solve_exact<S: Scalar>(sub: &QuadraticProxSubproblem<'_, S>) -> Result<Vector<S>> {
    sub.validate()?;
    let n = sub.dim();
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    let q = sub.rhs();
    if sub.op_info.gram_diagonal {
        let g = sub.op_info.gram.diagonal();
        let d: Vec<S> = g.iter().map(|&gi| sub.sigma * gi + sub.rho).collect();
        let point = Vector::from_fn(n, |i| q[i] / d[i]);
        if d.iter().all(|&di| di == d[0]) {
            return Ok(sub.prox_term.prox(S::one() / d[0], &point));
        }
        let steps: Vec<S> = d.iter().map(|&di| S::one() / di).collect();
        if let Some(u) = sub.prox_term.separable_prox(&steps, &point) {
            return Ok(u);
        }
    }
    if let Some(mu) = sub.prox_term.quadratic_modulus() {
        let h = sub.op_info.gram.scale(sub.sigma).add_diagonal(sub.rho + mu);
        return solve_spd(&h, &q);
    }
    Err(Error::Capability(format!(
        "no closed form for {:?} with a non-diagonal operator; use solve_inner",
        sub.prox_term
    )))
}

/// Inner solve started at the subproblem center.
pub fn solve_inner<S: Scalar>(
    sub: &QuadraticProxSubproblem<'_, S>,
    eps: S,
    max_iters: usize,
) -> Result<StationarityReport<S>> {
    solve_inner_from(sub, &sub.center.clone(), eps, max_iters)
}

/// Accelerated proximal gradient on the subproblem with step `s = 1/(σ‖M‖² + ρ)`.
///
/// Each prox-gradient image `p = T(z)` is certified through
/// `dist(0, ∂F(p)) ≤ ‖(z − p)/s‖·(1 + s·L)`; the loop stops at the first image whose
/// bound is at most `eps`. `inner_iters` counts the steps taken after the first image,
/// so a start that already meets `eps` returns `T(start)` with zero iterations.
///
/// When `eps > 0` is below the round-off floor `64·u·√d·(1 + sL)/s·max(1, ‖p‖_∞)` (with `u` the
/// unit round-off) and the best bound has not improved by 1% for `100 + ⌈√(L/μ)⌉` steps,
/// the best image is returned with `precision_limited` set.
pub fn solve_inner_from<S: Scalar>(
    sub: &QuadraticProxSubproblem<'_, S>,
    start: &Vector<S>,
    eps: S,
    max_iters: usize,
) -> Result<StationarityReport<S>> {
    sub.validate()?;
    check_dim("inner start", sub.dim(), start.len())?;
    if !(eps >= S::zero()) {
        return Err(Error::domain(format!(
            "inner tolerance must be nonnegative, got {eps}"
        )));
    }
    if sub.dim() == 0 {
        return Ok(StationarityReport {
            point: Vector::zeros(0),
            epsilon_bound: S::zero(),
            inner_iters: 0,
            precision_limited: false,
        });
    }
    let lip = sub.smooth_lipschitz();
    let step = S::one() / lip;
    let factor = S::one() + step * lip;
    let mu = sub.rho + sub.prox_term.strong_convexity();
    let momentum = (lip.sqrt() - mu.sqrt()).max(S::zero()) / (lip.sqrt() + mu.sqrt());

    let image = |z: &Vector<S>| -> (Vector<S>, S) {
        let g = sub.smooth_gradient(z);
        let p = sub.prox_term.prox(step, &z.axpy(-step, &g));
        let bound = z.dist(&p) / step * factor;
        (p, bound)
    };

    let window = 100
        + (lip / mu)
            .sqrt()
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX - 100);
    let unit = S::epsilon() * S::of(64.0) * S::of_usize(sub.dim()).sqrt() * factor / step;
    let floor = |p: &Vector<S>| unit * S::one().max(p.max_abs());

    let (mut x, mut bound) = image(start);
    let mut x_prev = x.clone();
    let mut best = (x.clone(), bound);
    let mut last_gain = 0;
    for iter in 0..=max_iters {
        if !bound.is_finite() {
            return Err(Error::NonFinite("inner solver iterate".into()));
        }
        if bound < best.1 {
            if bound < S::of(0.99) * best.1 {
                last_gain = iter;
            }
            best = (x.clone(), bound);
        }
        if bound <= eps {
            return Ok(StationarityReport {
                point: x,
                epsilon_bound: bound,
                inner_iters: iter,
                precision_limited: false,
            });
        }
        if eps > S::zero() && iter - last_gain >= window && best.1 <= floor(&best.0) {
            return Ok(StationarityReport {
                point: best.0,
                epsilon_bound: best.1,
                inner_iters: iter,
                precision_limited: true,
            });
        }
        if iter == max_iters {
            break;
        }
        let z = x.lincomb(S::one() + momentum, -momentum, &x_prev);
        let (next, next_bound) = image(&z);
        x_prev = std::mem::replace(&mut x, next);
        bound = next_bound;
    }
    Err(Error::InnerExhausted {
        iters: max_iters,
        bound: best.1.as_f64(),
        target: eps.as_f64(),
        best: best.0.to_f64_vec(),
    })
}

/// `Prox_{β/t, g₁}(v_k − (β/t)·drift)`.
pub fn solve_v_prox_first<S: Scalar>(
    g1: &ProxTerm<S>,
    beta: S,
    t_next: S,
    v_k: &Vector<S>,
    drift: &Vector<S>,
) -> Result<Vector<S>> {
    check_dim("drift", v_k.len(), drift.len())?;
    if !(beta > S::zero()) || !(t_next >= S::one()) {
        return Err(Error::domain(format!(
            "need beta > 0 and t >= 1, got {beta}, {t_next}"
        )));
    }
    let step = beta / t_next;
    Ok(g1.prox(step, &v_k.axpy(-step, drift)))
}

/// `η = β/(t² + βμ(t − 1))`.
pub fn eta_second<S: Scalar>(beta: S, mu_g: S, t_next: S) -> S {
    beta / (t_next * t_next + beta * mu_g * (t_next - S::one()))
}

/// `Prox_{η, g₁}(ȳ − η·correction)`.
pub fn solve_y_prox_second<S: Scalar>(
    g1: &ProxTerm<S>,
    eta: S,
    y_bar: &Vector<S>,
    correction: &Vector<S>,
) -> Result<Vector<S>> {
    check_dim("correction", y_bar.len(), correction.len())?;
    if !(eta > S::zero()) {
        return Err(Error::domain(format!("eta must be positive, got {eta}")));
    }
    Ok(g1.prox(eta, &y_bar.axpy(-eta, correction)))
}

/// Input of the linearized-augmented-term update for `v`.
#[derive(Clone, Copy, Debug)]
pub struct QLinearizedInput<'a, S> {
    pub g1: &'a ProxTerm<S>,
    pub t_next: S,
    pub eta_q: S,
    pub gamma: S,
    pub b: &'a Matrix<S>,
    /// Certified `‖B‖²`.
    pub b_norm_sq: S,
    pub v_k: &'a Vector<S>,
    /// `Au_{k+1} − b`.
    pub au_minus_rhs: &'a Vector<S>,
    /// `Bᵀλ_k + ∇g₂(ȳ_k)`.
    pub drift: &'a Vector<S>,
}

/// Update of `v` with the augmented term replaced by the metric `Q = β(ηI − γBᵀB)`:
/// `Prox_{1/(ηt), g₁}((1/η)((1/β)Qv_k − γBᵀ(Au_{k+1} − b) − (1/t)·drift))`.
pub fn solve_v_q_linearized<S: Scalar>(input: QLinearizedInput<'_, S>) -> Result<Vector<S>> {
    let QLinearizedInput {
        g1,
        t_next,
        eta_q,
        gamma,
        b,
        b_norm_sq,
        v_k,
        au_minus_rhs,
        drift,
    } = input;
    let n = v_k.len();
    check_dim("drift", n, drift.len())?;
    check_dim("columns of B", n, b.cols())?;
    check_dim("Au - b", b.rows(), au_minus_rhs.len())?;
    let floor = gamma * b_norm_sq;
    if !(eta_q >= floor * (S::one() - S::of(1e-12))) || !(eta_q > S::zero()) {
        return Err(Error::domain(format!(
            "eta = {eta_q} is below the certified bound gamma*|B|^2 = {floor}"
        )));
    }
    if !(t_next >= S::one()) {
        return Err(Error::domain(format!("need t >= 1, got {t_next}")));
    }
    let bv = b.mul_vec(v_k);
    let coupled = b.tr_mul_vec(&Vector::from_fn(bv.len(), |i| bv[i] + au_minus_rhs[i]));
    let inv_eta = S::one() / eta_q;
    let arg = Vector::from_fn(n, |i| {
        v_k[i] - inv_eta * (gamma * coupled[i] + drift[i] / t_next)
    });
    Ok(g1.prox(inv_eta / t_next, &arg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_f64(x).unwrap()
    }

    #[test]
    fn p0_first_u_update() {
        let zero = ProxTerm::zero();
        let a = Matrix::identity(1);
        let info = OperatorInfo::new(&a).unwrap();
        let s2 = 2f64.sqrt();
        let sub = QuadraticProxSubproblem {
            prox_term: &zero,
            linear: v(&[0.0]),
            sigma: 0.5 * s2,
            op: &a,
            op_info: &info,
            residual_offset: v(&[2.0]),
            rho: 1.0 / s2,
            center: v(&[0.0]),
        };
        assert!((solve_exact(&sub).unwrap()[0] - 1.0).abs() < 1e-14);
        let r = solve_inner(&sub, 1e-10, 10_000).unwrap();
        assert!((r.point[0] - 1.0).abs() < 1e-8);
        assert!(r.epsilon_bound <= 1e-10);
    }

    #[test]
    fn zero_augmented_weight_returns_center() {
        let zero = ProxTerm::zero();
        let a = Matrix::identity(2);
        let info = OperatorInfo::new(&a).unwrap();
        let sub = QuadraticProxSubproblem {
            prox_term: &zero,
            linear: v(&[0.0, 0.0]),
            sigma: 0.0,
            op: &a,
            op_info: &info,
            residual_offset: v(&[5.0, 5.0]),
            rho: 3.0,
            center: v(&[1.5, -2.0]),
        };
        assert_eq!(solve_exact(&sub).unwrap(), v(&[1.5, -2.0]));
    }

    #[test]
    fn soft_threshold_with_identity_operator() {
        let l1 = ProxTerm::l1(1.0).unwrap();
        let a = Matrix::identity(1);
        let info = OperatorInfo::new(&a).unwrap();
        let sub = QuadraticProxSubproblem {
            prox_term: &l1,
            linear: v(&[0.0]),
            sigma: 1.0,
            op: &a,
            op_info: &info,
            residual_offset: v(&[0.0]),
            rho: 1.0,
            center: v(&[2.0]),
        };
        assert!((solve_exact(&sub).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unsupported_structure_is_a_capability_error() {
        let l1 = ProxTerm::l1(0.25).unwrap();
        let a = Matrix::from_f64_rows(&[&[1.0, 1.0]]).unwrap();
        let info = OperatorInfo::new(&a).unwrap();
        let sub = QuadraticProxSubproblem {
            prox_term: &l1,
            linear: v(&[0.0, 0.0]),
            sigma: 1.0,
            op: &a,
            op_info: &info,
            residual_offset: v(&[1.0]),
            rho: 1.0,
            center: v(&[0.0, 0.0]),
        };
        assert!(matches!(solve_exact(&sub), Err(Error::Capability(_))));
        let skewed = QuadraticProxSubproblem {
            linear: v(&[0.1, -0.05]),
            ..sub.clone()
        };
        assert!(matches!(
            solve_inner(&skewed, 0.0, 5),
            Err(Error::InnerExhausted { iters: 5, .. })
        ));
        let r = solve_inner(&sub, 1e-12, 100_000).unwrap();
        // Both coordinates equal at the minimizer: 0.25 + (2u − 1) + u = 0 gives u = 0.25.
        assert!((r.point[0] - 0.25).abs() < 1e-10, "{:?}", r.point);
    }

    #[test]
    fn optimal_start_returns_immediately() {
        let zero = ProxTerm::zero();
        let a = Matrix::identity(1);
        let info = OperatorInfo::new(&a).unwrap();
        let sub = QuadraticProxSubproblem {
            prox_term: &zero,
            linear: v(&[0.0]),
            sigma: 0.0,
            op: &a,
            op_info: &info,
            residual_offset: v(&[0.0]),
            rho: 1.0,
            center: v(&[4.0]),
        };
        let r = solve_inner(&sub, 1.0, 10).unwrap();
        assert_eq!(r.inner_iters, 0);
        assert_eq!(r.point, v(&[4.0]));
    }

    #[test]
    fn prox_first_examples() {
        let zero = ProxTerm::zero();
        assert_eq!(
            solve_v_prox_first(&zero, 1.0, 2.0, &v(&[3.0]), &v(&[0.0])).unwrap(),
            v(&[3.0])
        );
        let sq = ProxTerm::squared_norm(1.0).unwrap();
        let r = solve_v_prox_first(&sq, 1.0, 2.0, &v(&[1.0]), &v(&[1.0])).unwrap();
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-15);
        let l1 = ProxTerm::l1(1.0).unwrap();
        assert_eq!(
            solve_v_prox_first(&l1, 2.0, 2.0, &v(&[3.0]), &v(&[0.0])).unwrap(),
            v(&[2.0])
        );
    }

    #[test]
    fn prox_second_examples() {
        let eta = eta_second(1.0, 1.0, 2f64.sqrt());
        assert!((eta - 0.414_213_562_4).abs() < 1e-10);
        let zero = ProxTerm::zero();
        assert_eq!(
            solve_y_prox_second(&zero, eta, &v(&[0.7]), &v(&[0.0])).unwrap(),
            v(&[0.7])
        );
        let sq = ProxTerm::squared_norm(2.0).unwrap();
        let drift = v(&[0.4]);
        let a = solve_y_prox_second(&sq, eta_second(1.5, 2.0, 1.0), &v(&[1.0]), &drift).unwrap();
        let b = solve_v_prox_first(&sq, 1.5, 1.0, &v(&[1.0]), &drift).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-15);
    }

    #[test]
    fn q_linearized_degenerations() {
        let sq = ProxTerm::squared_norm(1.0).unwrap();
        let b0 = Matrix::zeros(1, 2);
        let vk = v(&[1.0, -2.0]);
        let drift = v(&[0.3, 0.1]);
        let beta = 2.0;
        let out = solve_v_q_linearized(QLinearizedInput {
            g1: &sq,
            t_next: 1.5,
            eta_q: 1.0 / beta,
            gamma: 0.7,
            b: &b0,
            b_norm_sq: 0.0,
            v_k: &vk,
            au_minus_rhs: &v(&[4.0]),
            drift: &drift,
        })
        .unwrap();
        let plain = solve_v_prox_first(&sq, beta, 1.5, &vk, &drift).unwrap();
        assert!(out.dist(&plain) < 1e-15);

        let one = Matrix::identity(1);
        let input = QLinearizedInput {
            g1: &sq,
            t_next: 2.0,
            eta_q: 0.5,
            gamma: 0.5,
            b: &one,
            b_norm_sq: 1.0,
            v_k: &v(&[0.0]),
            au_minus_rhs: &v(&[-2.0]),
            drift: &v(&[0.0]),
        };
        assert!(solve_v_q_linearized(input).is_ok());
        let low = QLinearizedInput {
            eta_q: 0.49,
            ..input
        };
        assert!(matches!(solve_v_q_linearized(low), Err(Error::Domain(_))));

        // γ = 0: prox of v_k − drift/(ηt).
        let g0 = QLinearizedInput {
            gamma: 0.0,
            eta_q: 2.0,
            drift: &v(&[1.0]),
            v_k: &v(&[3.0]),
            ..input
        };
        let r = solve_v_q_linearized(g0).unwrap();
        let expect = sq.prox(0.25, &v(&[3.0 - 0.25]));
        assert!(r.dist(&expect) < 1e-15);
    }

    #[test]
    fn q_linearized_is_the_argmin() {
        // Brute-force minimization of the linearized objective in one dimension.
        let sq = ProxTerm::squared_norm(1.0).unwrap();
        let bm = Matrix::from_f64_rows(&[&[2.0]]).unwrap();
        let (t, eta, gamma, beta, vk, amb, c) = (1.7, 5.0, 0.8, 0.9, 0.4, -1.2, 0.3);
        let r = solve_v_q_linearized(QLinearizedInput {
            g1: &sq,
            t_next: t,
            eta_q: eta,
            gamma,
            b: &bm,
            b_norm_sq: 4.0,
            v_k: &v(&[vk]),
            au_minus_rhs: &v(&[amb]),
            drift: &v(&[c]),
        })
        .unwrap()[0];
        let q = beta * (eta - gamma * 4.0);
        let obj = |x: f64| {
            0.5 * x * x
                + c * x
                + gamma * t / 2.0 * (amb + 2.0 * x).powi(2)
                + t / (2.0 * beta) * q * (x - vk).powi(2)
        };
        let h = 1e-5;
        let slope = (obj(r + h) - obj(r - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6, "{slope}");
    }

    #[test]
    fn works_in_single_precision() {
        let zero = ProxTerm::<f32>::zero();
        let a = Matrix::<f32>::identity(1);
        let info = OperatorInfo::new(&a).unwrap();
        let sub = QuadraticProxSubproblem {
            prox_term: &zero,
            linear: Vector::from_f64(&[0.0]).unwrap(),
            sigma: 1.0,
            op: &a,
            op_info: &info,
            residual_offset: Vector::from_f64(&[2.0]).unwrap(),
            rho: 1.0,
            center: Vector::from_f64(&[0.0]).unwrap(),
        };
        assert!((solve_exact(&sub).unwrap()[0] - 1.0).abs() < 1e-6);
    }
}
