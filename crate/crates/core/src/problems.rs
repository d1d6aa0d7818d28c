//! Seeded test problems with ground-truth saddle points.

use crate::engine::{certified_config, DualInit, Engine, SolverVariant, StartPoint};
use crate::error::{Error, Result};
use crate::linalg::{solve_lu, Cholesky, Matrix, Vector};
use crate::model::{CompositeBlock, ProblemInstance, ProxTerm, SaddleReference, SmoothTerm};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `f₂ = ½‖Cx − d‖²`, `g = (μ/2)‖y‖² + ½‖Dy − e‖²`, Gaussian `A`, `B`.
    Quadratic,
    /// `f = τ‖x‖₁ + ½‖Cx − d‖²`, `g` as above; `A` selects `p` coordinates of `x`.
    LassoConstrained,
    /// `f = τ‖x‖₁ + (ν/2)‖x‖² + ½‖Cx − d‖²` with the sharing constraint `x_S − y_S = b`.
    ElasticNetSharing,
    /// `min ½x² + ½y²` s.t. `x + y = 2`.
    ScalarP0,
}

/// Recipe for a seeded instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: ProblemKind,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::p")]
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::one")]
    pub mu_g: f64,
    #[serde(default = "defaults::one")]
    pub l_f2: f64,
    #[serde(default = "defaults::one")]
    pub l_g2: f64,
    /// Ratio of the largest to the smallest eigenvalue of the quadratic Hessians.
    #[serde(default = "defaults::conditioning")]
    pub conditioning: f64,
    /// Weight of the `ℓ₁` term.
    #[serde(default = "defaults::tau")]
    pub tau: f64,
}

mod defaults {
    pub fn m() -> usize {
        50
    }
    pub fn n() -> usize {
        50
    }
    pub fn p() -> usize {
        20
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn conditioning() -> f64 {
        10.0
    }
    pub fn tau() -> f64 {
        0.1
    }
}

impl GeneratorSpec {
    pub fn new(kind: ProblemKind, m: usize, n: usize, p: usize, seed: u64) -> Self {
        Self {
            kind,
            m,
            n,
            p,
            seed,
            mu_g: 1.0,
            l_f2: 1.0,
            l_g2: 1.0,
            conditioning: 10.0,
            tau: 0.1,
        }
    }

    pub fn scalar_p0() -> Self {
        Self::new(ProblemKind::ScalarP0, 1, 1, 1, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ProblemKind::ScalarP0 {
            return Ok(());
        }
        if self.m == 0 || self.n == 0 || self.p == 0 {
            return Err(Error::domain("dimensions must be positive"));
        }
        if self.p > self.m + self.n {
            return Err(Error::domain(format!(
                "p = {} exceeds m + n = {}; constraints would be rank deficient",
                self.p,
                self.m + self.n
            )));
        }
        if matches!(
            self.kind,
            ProblemKind::LassoConstrained | ProblemKind::ElasticNetSharing
        ) && self.p > self.m
        {
            return Err(Error::domain("selection constraints need p ≤ m"));
        }
        if self.kind == ProblemKind::ElasticNetSharing && self.p > self.n {
            return Err(Error::domain("sharing constraints need p ≤ n"));
        }
        let positive = [self.mu_g, self.l_f2, self.l_g2, self.tau];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("mu_g, l_f2, l_g2 and tau must be positive"));
        }
        if !(self.conditioning >= 1.0) || !self.conditioning.is_finite() {
            return Err(Error::domain("conditioning must be at least 1"));
        }
        Ok(())
    }
}

fn gaussian<S: Scalar>(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix<S> {
    Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        S::of(scale * z)
    })
}

fn gaussian_vec<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vector<S> {
    Vector::from_fn(n, |_| S::of(StandardNormal.sample(rng)))
}

/// Orthonormal columns by modified Gram-Schmidt on a Gaussian draw.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return Err(Error::domain("degenerate Gaussian draw"));
        }
        v.iter_mut().for_each(|a| *a /= norm);
        q.push(v);
    }
    Ok(q)
}

/// `U·diag(σ)·Vᵀ` with `σ_i² = L·cond^(−i/(n−1))`, so the Gram matrix has spectral
/// norm exactly `L` and condition number `cond`.
fn conditioned<S: Scalar>(
    n: usize,
    lipschitz: f64,
    cond: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix<S>> {
    let u = random_orthogonal(n, rng)?;
    let v = random_orthogonal(n, rng)?;
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let frac = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            (lipschitz * cond.powf(-frac)).sqrt()
        })
        .collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        S::of((0..n).map(|k| u[k][i] * sigma[k] * v[k][j]).sum::<f64>())
    }))
}

fn selection<S: Scalar>(rows: usize, cols: usize, sign: S) -> Matrix<S> {
    Matrix::from_fn(rows, cols, |i, j| if i == j { sign } else { S::zero() })
}

/// Draws an instance and its saddle point.
///
/// Quadratic instances are solved by [`kkt_solve`]; `ℓ₁` instances by
/// [`reference_solve`] at `1e-11`. Rank-deficient draws are re-sampled up to ten times.
pub fn generate<S: Scalar>(
    spec: &GeneratorSpec,
) -> Result<(ProblemInstance<S>, SaddleReference<S>)> {
    spec.validate()?;
    if spec.kind == ProblemKind::ScalarP0 {
        return Ok((scalar_p0(), p0_reference()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last = None;
    for _ in 0..10 {
        match draw(spec, &mut rng) {
            Ok(pair) => return Ok(pair),
            Err(e @ (Error::Singular { .. } | Error::NotPositiveDefinite { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::domain("generator failed")))
}

fn draw<S: Scalar>(
    spec: &GeneratorSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(ProblemInstance<S>, SaddleReference<S>)> {
    let (m, n, p) = (spec.m, spec.n, spec.p);
    let c = conditioned::<S>(m, spec.l_f2, spec.conditioning, rng)?;
    let d = conditioned::<S>(n, spec.l_g2, spec.conditioning, rng)?;
    let f2 = SmoothTerm::least_squares_with_lipschitz(c, gaussian_vec(m, rng), S::of(spec.l_f2))?;
    let g2 = SmoothTerm::least_squares_with_lipschitz(d, gaussian_vec(n, rng), S::of(spec.l_g2))?;
    let g1 = ProxTerm::squared_norm(S::of(spec.mu_g))?;
    let rhs = gaussian_vec(p, rng);
    let y_block = CompositeBlock::new(n, g1, g2)?;
    match spec.kind {
        ProblemKind::Quadratic => {
            let a = gaussian(p, m, 1.0 / (m as f64).sqrt(), rng);
            let b = gaussian(p, n, 1.0 / (n as f64).sqrt(), rng);
            let inst = ProblemInstance::new(
                CompositeBlock::new(m, ProxTerm::zero(), f2)?,
                y_block,
                a,
                b,
                rhs,
            )?;
            let r = kkt_solve(&inst)?;
            Ok((inst, r))
        }
        ProblemKind::LassoConstrained | ProblemKind::ElasticNetSharing => {
            let tau = S::of(spec.tau);
            let (f1, b) = if spec.kind == ProblemKind::LassoConstrained {
                (
                    ProxTerm::l1(tau)?,
                    gaussian(p, n, 1.0 / (n as f64).sqrt(), rng),
                )
            } else {
                (
                    ProxTerm::elastic_net(tau, S::of(0.1))?,
                    selection(p, n, -S::one()),
                )
            };
            let a = selection(p, m, S::one());
            // [A B] must have full row rank.
            let at = a.transpose();
            let bt = b.transpose();
            let outer = a.matmul(&at);
            let outer_b = b.matmul(&bt);
            Cholesky::factor(&Matrix::from_fn(p, p, |i, j| {
                outer.get(i, j) + outer_b.get(i, j)
            }))?;
            let inst = ProblemInstance::new(CompositeBlock::new(m, f1, f2)?, y_block, a, b, rhs)?;
            let r = reference_solve(&inst, S::of(1e-11))?;
            Ok((inst, r))
        }
        ProblemKind::ScalarP0 => unreachable!("handled by generate"),
    }
}

/// The scalar golden instance: `f₁ = 0`, `f₂ = ½x²`, `g₁ = ½y²`, `g₂ = 0`, `x + y = 2`.
pub fn scalar_p0<S: Scalar>() -> ProblemInstance<S> {
    let one = Matrix::identity(1);
    let x = CompositeBlock::new(
        1,
        ProxTerm::zero(),
        SmoothTerm::least_squares_with_lipschitz(one.clone(), Vector::zeros(1), S::one())
            .expect("valid"),
    )
    .expect("valid");
    let y = CompositeBlock::new(
        1,
        ProxTerm::squared_norm(S::one()).expect("valid"),
        SmoothTerm::zero(),
    )
    .expect("valid");
    ProblemInstance::new(x, y, one.clone(), one, Vector::filled(1, S::of(2.0))).expect("valid")
}

/// `(x*, y*, λ*) = (1, 1, −1)`.
pub fn p0_reference<S: Scalar>() -> SaddleReference<S> {
    SaddleReference {
        x_star: Vector::filled(1, S::one()),
        y_star: Vector::filled(1, S::one()),
        lambda_star: Vector::filled(1, -S::one()),
    }
}

fn block_quadratic<S: Scalar>(
    block: &CompositeBlock<S>,
    what: &str,
) -> Result<(Matrix<S>, Vector<S>)> {
    let mu = block
        .prox_term
        .quadratic_modulus()
        .ok_or_else(|| Error::Capability(format!("{what}: prox term is not quadratic")))?;
    let (h, c) = block
        .smooth_term
        .quadratic_form(block.dim)
        .ok_or_else(|| Error::Capability(format!("{what}: smooth term is not quadratic")))?;
    Ok((h.add_diagonal(mu), c))
}

/// Solves the KKT system of a fully quadratic instance.
///
/// `[H_f 0 Aᵀ; 0 H_g Bᵀ; A B 0]·(x, y, λ) = (−c_f, −c_g, b)` by pivoted LU; the
/// stationarity and feasibility residuals must come out below `1e-10·(1 + ‖rhs‖)`.
pub fn kkt_solve<S: Scalar>(inst: &ProblemInstance<S>) -> Result<SaddleReference<S>> {
    let (hf, cf) = block_quadratic(inst.x_block(), "x block")?;
    let (hg, cg) = block_quadratic(inst.y_block(), "y block")?;
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let (a, b) = (inst.a(), inst.b());
    let size = m + n + p;
    let kkt = Matrix::from_fn(size, size, |i, j| match (i, j) {
        (i, j) if i < m && j < m => hf.get(i, j),
        (i, j) if i < m && j >= m + n => a.get(j - m - n, i),
        (i, j) if i >= m && i < m + n && j >= m && j < m + n => hg.get(i - m, j - m),
        (i, j) if i >= m && i < m + n && j >= m + n => b.get(j - m - n, i - m),
        (i, j) if i >= m + n && j < m => a.get(i - m - n, j),
        (i, j) if i >= m + n && j >= m && j < m + n => b.get(i - m - n, j - m),
        _ => S::zero(),
    });
    let rhs = Vector::from_fn(size, |i| {
        if i < m {
            -cf[i]
        } else if i < m + n {
            -cg[i - m]
        } else {
            inst.rhs()[i - m - n]
        }
    });
    let z = solve_lu(&kkt, &rhs)?;
    let s = z.as_slice();
    let r = SaddleReference {
        x_star: Vector::from_raw(s[..m].to_vec()),
        y_star: Vector::from_raw(s[m..m + n].to_vec()),
        lambda_star: Vector::from_raw(s[m + n..].to_vec()),
    };
    let res = kkt_residual(inst, &r.x_star, &r.y_star, &r.lambda_star)?;
    let limit = S::of(1e-10) * (S::one() + rhs.norm());
    if res > limit {
        return Err(Error::domain(format!(
            "KKT residual {:e} above {:e}",
            res.as_f64(),
            limit.as_f64()
        )));
    }
    Ok(r)
}

/// `max{‖Ax + By − b‖, ‖x − prox_{f₁}(x − ∇f₂(x) − Aᵀλ)‖, ‖y − prox_{g₁}(y − ∇g₂(y) − Bᵀλ)‖}`.
pub fn kkt_residual<S: Scalar>(
    inst: &ProblemInstance<S>,
    x: &Vector<S>,
    y: &Vector<S>,
    lambda: &Vector<S>,
) -> Result<S> {
    let feas = inst.feasibility(x, y)?;
    let stat = |block: &CompositeBlock<S>, z: &Vector<S>, op: &Matrix<S>| {
        let g = block.smooth_term.gradient(z);
        let adj = op.tr_mul_vec(lambda);
        let arg = Vector::from_fn(z.len(), |i| z[i] - g[i] - adj[i]);
        block.prox_term.prox(S::one(), &arg).dist(z)
    };
    Ok(feas
        .max(stat(inst.x_block(), x, inst.a()))
        .max(stat(inst.y_block(), y, inst.b())))
}

/// Iteration budget of [`reference_solve`].
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// High-accuracy saddle point from a long certified run of the first scheme (II).
///
/// Every ten steps [`kkt_residual`] is evaluated at `(x_k, y_k, λ_k)` and at the
/// unaveraged pair `(u_k, v_k, λ_k)`, which typically converges much faster. When the
/// smaller of the two increases, the extrapolation restarts from the better point.
/// Stops once a residual is at most `tol`.
pub fn reference_solve<S: Scalar>(inst: &ProblemInstance<S>, tol: S) -> Result<SaddleReference<S>> {
    if !(tol > S::zero()) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let cfg = certified_config(inst, SolverVariant::AdmmFirstII, REFERENCE_MAX_ITERS)?;
    let eng = Engine::new(inst, &cfg)?;
    let mut st = eng.init_state(&StartPoint::zeros(inst))?;
    let mut best: (S, Option<SaddleReference<S>>) = (S::infinity(), None);
    let mut prev = S::infinity();
    for it in 1..=REFERENCE_MAX_ITERS {
        st = eng.step(&st)?.0;
        if it % 10 != 0 && it != REFERENCE_MAX_ITERS {
            continue;
        }
        let averaged = kkt_residual(inst, &st.x, &st.y, &st.lambda)?;
        let raw = kkt_residual(inst, &st.u, &st.v, &st.lambda)?;
        if !averaged.is_finite() || !raw.is_finite() {
            return Err(Error::NonFinite("reference iterate".into()));
        }
        let (res, cand) = if raw < averaged {
            (raw, (&st.u, &st.v))
        } else {
            (averaged, (&st.x, &st.y))
        };
        let cand = SaddleReference {
            x_star: cand.0.clone(),
            y_star: cand.1.clone(),
            lambda_star: st.lambda.clone(),
        };
        if res <= tol {
            return Ok(cand);
        }
        if res < best.0 {
            best = (res, Some(cand.clone()));
        }
        if res > prev {
            st = eng.init_state(&StartPoint {
                x0: cand.x_star,
                y0: cand.y_star,
                dual: DualInit::Given(cand.lambda_star),
            })?;
            prev = S::infinity();
        } else {
            prev = res;
        }
    }
    let flat = best
        .1
        .map(|b| {
            [
                b.x_star.to_f64_vec(),
                b.y_star.to_f64_vec(),
                b.lambda_star.to_f64_vec(),
            ]
            .concat()
        })
        .unwrap_or_default();
    Err(Error::NotConverged {
        iters: REFERENCE_MAX_ITERS,
        achieved: best.0.as_f64(),
        target: tol.as_f64(),
        best: flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_saddle;

    #[test]
    fn p0_kkt_matches_hand_solution() {
        let r = kkt_solve(&scalar_p0::<f64>()).unwrap();
        assert!((r.x_star[0] - 1.0).abs() < 1e-14);
        assert!((r.y_star[0] - 1.0).abs() < 1e-14);
        assert!((r.lambda_star[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_constraints_split_rhs() {
        let k = 3;
        let xb = CompositeBlock::new(k, ProxTerm::squared_norm(1.0).unwrap(), SmoothTerm::zero())
            .unwrap();
        let yb = xb.clone();
        let b = Vector::<f64>::from_f64(&[2.0, -4.0, 1.0]).unwrap();
        let inst =
            ProblemInstance::new(xb, yb, Matrix::identity(k), Matrix::identity(k), b.clone())
                .unwrap();
        let r = kkt_solve(&inst).unwrap();
        for i in 0..k {
            assert!((r.x_star[i] - b[i] / 2.0).abs() < 1e-14);
            assert!((r.lambda_star[i] + b[i] / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficient_constraints_are_singular() {
        let xb = CompositeBlock::new(2, ProxTerm::squared_norm(1.0).unwrap(), SmoothTerm::zero())
            .unwrap();
        let yb = CompositeBlock::new(1, ProxTerm::squared_norm(1.0).unwrap(), SmoothTerm::zero())
            .unwrap();
        let a = Matrix::from_f64_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let inst = ProblemInstance::new(
            xb,
            yb,
            a,
            Matrix::zeros(2, 1),
            Vector::from_f64(&[1.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(kkt_solve(&inst), Err(Error::Singular { .. })));
    }

    #[test]
    fn quadratic_generator_passes_saddle_check() {
        let spec = GeneratorSpec::new(ProblemKind::Quadratic, 8, 6, 4, 3);
        let (inst, r) = generate::<f64>(&spec).unwrap();
        assert!(check_saddle(&inst, &r, 1000, 1).unwrap().is_clean());
        assert!((inst.l_f2() - 1.0).abs() < 1e-12);
        let again = generate::<f64>(&spec).unwrap().1;
        assert_eq!(r, again);
    }

    #[test]
    fn oversized_constraint_count_is_rejected() {
        let spec = GeneratorSpec::new(ProblemKind::Quadratic, 2, 2, 5, 0);
        assert!(generate::<f64>(&spec).is_err());
    }

    #[test]
    fn reference_solve_rejects_nonpositive_tolerance() {
        assert!(reference_solve(&scalar_p0::<f64>(), 0.0).is_err());
        let r = reference_solve(&scalar_p0::<f64>(), 1e-11).unwrap();
        assert!(r.x_star.dist(&Vector::filled(1, 1.0)) < 1e-10);
    }
}
