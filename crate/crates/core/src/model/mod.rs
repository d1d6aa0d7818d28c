//! Two-block composite problems `min f(x) + g(y)` subject to `Ax + By = b`.

mod io;
mod prox;
mod smooth;

pub use io::{problem_from_json, problem_to_json};
pub use prox::{ProxCatalog, ProxTerm};
pub use smooth::SmoothTerm;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// One block `h = h₁ + h₂` of the objective: a prox term plus a smooth term.
#[derive(Clone, Debug)]
pub struct CompositeBlock<S> {
    pub dim: usize,
    pub prox_term: ProxTerm<S>,
    pub smooth_term: SmoothTerm<S>,
}

impl<S: Scalar> CompositeBlock<S> {
    pub fn new(dim: usize, prox_term: ProxTerm<S>, smooth_term: SmoothTerm<S>) -> Result<Self> {
        if let Some(d) = smooth_term.input_dim() {
            check_dim("smooth term input", dim, d)?;
        }
        Ok(Self {
            dim,
            prox_term,
            smooth_term,
        })
    }

    pub fn value(&self, x: &Vector<S>) -> S {
        self.prox_term.value(x) + self.smooth_term.value(x)
    }
}

/// Constraint data and objective blocks of a two-block problem.
#[derive(Clone, Debug)]
pub struct ProblemInstance<S> {
    x_block: CompositeBlock<S>,
    y_block: CompositeBlock<S>,
    a: Matrix<S>,
    b: Matrix<S>,
    rhs: Vector<S>,
}

impl<S: Scalar> ProblemInstance<S> {
    /// Builds `min f(x) + g(y)` subject to `a·x + b·y = rhs`.
    pub fn new(
        x_block: CompositeBlock<S>,
        y_block: CompositeBlock<S>,
        a: Matrix<S>,
        b: Matrix<S>,
        rhs: Vector<S>,
    ) -> Result<Self> {
        check_dim("rows of A", rhs.len(), a.rows())?;
        check_dim("rows of B", rhs.len(), b.rows())?;
        check_dim("columns of A", x_block.dim, a.cols())?;
        check_dim("columns of B", y_block.dim, b.cols())?;
        Ok(Self {
            x_block,
            y_block,
            a,
            b,
            rhs,
        })
    }

    pub fn x_block(&self) -> &CompositeBlock<S> {
        &self.x_block
    }

    pub fn y_block(&self) -> &CompositeBlock<S> {
        &self.y_block
    }

    pub fn a(&self) -> &Matrix<S> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<S> {
        &self.b
    }

    pub fn rhs(&self) -> &Vector<S> {
        &self.rhs
    }

    pub fn m(&self) -> usize {
        self.x_block.dim
    }

    pub fn n(&self) -> usize {
        self.y_block.dim
    }

    pub fn p(&self) -> usize {
        self.rhs.len()
    }

    /// Declared strong convexity modulus `μ_g` of the y-block prox term.
    pub fn mu_g(&self) -> S {
        self.y_block.prox_term.strong_convexity()
    }

    pub fn l_f2(&self) -> S {
        self.x_block.smooth_term.lipschitz()
    }

    pub fn l_g2(&self) -> S {
        self.y_block.smooth_term.lipschitz()
    }

    fn check_primal(&self, x: &Vector<S>, y: &Vector<S>) -> Result<()> {
        check_dim("x", self.m(), x.len())?;
        check_dim("y", self.n(), y.len())
    }

    /// `Ax + By − b` (assumes matching dimensions).
    pub(crate) fn residual_unchecked(&self, x: &Vector<S>, y: &Vector<S>) -> Vector<S> {
        let ax = self.a.mul_vec(x);
        let by = self.b.mul_vec(y);
        Vector::from_fn(self.p(), |i| ax[i] + by[i] - self.rhs[i])
    }

    pub fn residual(&self, x: &Vector<S>, y: &Vector<S>) -> Result<Vector<S>> {
        self.check_primal(x, y)?;
        Ok(self.residual_unchecked(x, y))
    }

    /// Feasibility violation `‖Ax + By − b‖`.
    pub fn feasibility(&self, x: &Vector<S>, y: &Vector<S>) -> Result<S> {
        Ok(self.residual(x, y)?.norm())
    }

    /// `f(x) + g(y)`.
    pub fn objective(&self, x: &Vector<S>, y: &Vector<S>) -> Result<S> {
        self.check_primal(x, y)?;
        Ok(self.x_block.value(x) + self.y_block.value(y))
    }

    /// `L(x, y, λ) = f(x) + g(y) + ⟨λ, Ax + By − b⟩`.
    pub fn lagrangian(&self, x: &Vector<S>, y: &Vector<S>, lambda: &Vector<S>) -> Result<S> {
        self.check_primal(x, y)?;
        check_dim("lambda", self.p(), lambda.len())?;
        Ok(self.x_block.value(x)
            + self.y_block.value(y)
            + lambda.dot(&self.residual_unchecked(x, y)))
    }

    /// Copy of this instance with different constraint data.
    pub fn with_constraints(&self, a: Matrix<S>, b: Matrix<S>, rhs: Vector<S>) -> Result<Self> {
        Self::new(self.x_block.clone(), self.y_block.clone(), a, b, rhs)
    }
}

/// A saddle point `(x*, y*, λ*)` of the Lagrangian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct SaddleReference<S> {
    pub x_star: Vector<S>,
    pub y_star: Vector<S>,
    pub lambda_star: Vector<S>,
}

impl<S: Scalar> SaddleReference<S> {
    pub fn check_dims(&self, inst: &ProblemInstance<S>) -> Result<()> {
        check_dim("x*", inst.m(), self.x_star.len())?;
        check_dim("y*", inst.n(), self.y_star.len())?;
        check_dim("λ*", inst.p(), self.lambda_star.len())
    }

    /// `L(x*, y*, λ*)`.
    pub fn lagrangian_value(&self, inst: &ProblemInstance<S>) -> Result<S> {
        inst.lagrangian(&self.x_star, &self.y_star, &self.lambda_star)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleSide {
    /// `L(x*, y*, λ) ≤ L(x*, y*, λ*)` failed.
    Dual,
    /// `L(x*, y*, λ*) ≤ L(x, y, λ*)` failed.
    Primal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleViolation {
    pub sample: usize,
    pub side: SaddleSide,
    pub excess: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub samples: usize,
    pub violations: Vec<SaddleViolation>,
}

impl SaddleReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples both saddle inequalities at seeded random points around the reference.
///
/// Sample radii cycle through `1e-3 … 10`; a violation is an excess above
/// `1e-8·(1 + |L*|)`.
pub fn check_saddle<S: Scalar>(
    inst: &ProblemInstance<S>,
    reference: &SaddleReference<S>,
    samples: usize,
    seed: u64,
) -> Result<SaddleReport> {
    reference.check_dims(inst)?;
    let l_star = reference.lagrangian_value(inst)?;
    if !l_star.is_finite() {
        return Err(Error::domain(
            "Lagrangian is not finite at the reference point",
        ));
    }
    let tol = S::of(1e-8) * (S::one() + l_star.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radii = [1e-3, 1e-2, 1e-1, 1.0, 10.0];
    let perturb = |base: &Vector<S>, r: f64, rng: &mut ChaCha8Rng| {
        Vector::from_fn(base.len(), |i| {
            let z: f64 = StandardNormal.sample(rng);
            base[i] + S::of(r * z)
        })
    };
    let mut report = SaddleReport {
        samples,
        violations: Vec::new(),
    };
    for i in 0..samples {
        let r = radii[i % radii.len()];
        let lam = perturb(&reference.lambda_star, r, &mut rng);
        let x = perturb(&reference.x_star, r, &mut rng);
        let y = perturb(&reference.y_star, r, &mut rng);
        let dual = inst.lagrangian(&reference.x_star, &reference.y_star, &lam)? - l_star;
        if dual > tol {
            report.violations.push(SaddleViolation {
                sample: i,
                side: SaddleSide::Dual,
                excess: dual.as_f64(),
            });
        }
        let primal = l_star - inst.lagrangian(&x, &y, &reference.lambda_star)?;
        if primal > tol {
            report.violations.push(SaddleViolation {
                sample: i,
                side: SaddleSide::Primal,
                excess: primal.as_f64(),
            });
        }
    }
    Ok(report)
}
