use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;
use std::fmt;
use std::sync::Arc;

type ValueFn<S> = dyn Fn(&Vector<S>) -> S + Send + Sync;
type GradFn<S> = dyn Fn(&Vector<S>) -> Vector<S> + Send + Sync;

struct CustomSmooth<S> {
    name: String,
    value: Box<ValueFn<S>>,
    gradient: Box<GradFn<S>>,
}

#[derive(Clone)]
enum Repr<S> {
    Zero,
    LeastSquares {
        matrix: Matrix<S>,
        target: Vector<S>,
    },
    Custom(Arc<CustomSmooth<S>>),
}

/// A convex term with Lipschitz-continuous gradient.
#[derive(Clone)]
pub struct SmoothTerm<S> {
    repr: Repr<S>,
    lipschitz: S,
}

impl<S: fmt::Debug> fmt::Debug for SmoothTerm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero => write!(f, "SmoothTerm(zero)"),
            Repr::LeastSquares { matrix, .. } => write!(
                f,
                "SmoothTerm(least squares {}x{}, L = {:?})",
                matrix.rows(),
                matrix.cols(),
                self.lipschitz
            ),
            Repr::Custom(c) => write!(
                f,
                "SmoothTerm(custom {:?}, L = {:?})",
                c.name, self.lipschitz
            ),
        }
    }
}

impl<S: Scalar> SmoothTerm<S> {
    pub fn zero() -> Self {
        Self {
            repr: Repr::Zero,
            lipschitz: S::zero(),
        }
    }

    /// `½‖Cx − d‖²` with the Lipschitz constant estimated as `‖C‖²`.
    pub fn least_squares(matrix: Matrix<S>, target: Vector<S>) -> Result<Self> {
        let l = if matrix.rows() == 0 || matrix.cols() == 0 {
            S::zero()
        } else {
            matrix.spectral_norm_sq(S::of(1e-12), 100_000)?
        };
        Self::least_squares_with_lipschitz(matrix, target, l)
    }

    /// `½‖Cx − d‖²` with a caller-declared Lipschitz constant (must bound `‖C‖²`).
    pub fn least_squares_with_lipschitz(
        matrix: Matrix<S>,
        target: Vector<S>,
        lipschitz: S,
    ) -> Result<Self> {
        check_dim("least-squares target", matrix.rows(), target.len())?;
        if !(lipschitz >= S::zero()) || !lipschitz.is_finite() {
            return Err(Error::domain(
                "Lipschitz constant must be finite and nonnegative",
            ));
        }
        Ok(Self {
            repr: Repr::LeastSquares { matrix, target },
            lipschitz,
        })
    }

    /// Wraps user-supplied value and gradient maps with a declared Lipschitz constant.
    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(&Vector<S>) -> S + Send + Sync + 'static,
        gradient: impl Fn(&Vector<S>) -> Vector<S> + Send + Sync + 'static,
        lipschitz: S,
    ) -> Result<Self> {
        if !(lipschitz >= S::zero()) || !lipschitz.is_finite() {
            return Err(Error::domain(
                "Lipschitz constant must be finite and nonnegative",
            ));
        }
        Ok(Self {
            repr: Repr::Custom(Arc::new(CustomSmooth {
                name: name.into(),
                value: Box::new(value),
                gradient: Box::new(gradient),
            })),
            lipschitz,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn lipschitz(&self) -> S {
        self.lipschitz
    }

    /// The `(C, d)` pair of a least-squares term.
    pub fn least_squares_data(&self) -> Option<(&Matrix<S>, &Vector<S>)> {
        match &self.repr {
            Repr::LeastSquares { matrix, target } => Some((matrix, target)),
            _ => None,
        }
    }

    /// Input dimension required by the term, when it is fixed by its data.
    pub fn input_dim(&self) -> Option<usize> {
        self.least_squares_data().map(|(c, _)| c.cols())
    }

    pub fn value(&self, x: &Vector<S>) -> S {
        match &self.repr {
            Repr::Zero => S::zero(),
            Repr::LeastSquares { matrix, target } => {
                S::of(0.5) * (&matrix.mul_vec(x) - target).norm_sq()
            }
            Repr::Custom(c) => (c.value)(x),
        }
    }

    pub fn gradient(&self, x: &Vector<S>) -> Vector<S> {
        match &self.repr {
            Repr::Zero => Vector::zeros(x.len()),
            Repr::LeastSquares { matrix, target } => {
                matrix.tr_mul_vec(&(&matrix.mul_vec(x) - target))
            }
            Repr::Custom(c) => (c.gradient)(x),
        }
    }

    /// Hessian and linear coefficient `(H, c)` with `value(x) = ½xᵀHx + cᵀx + const`,
    /// for terms that are exactly quadratic.
    pub fn quadratic_form(&self, dim: usize) -> Option<(Matrix<S>, Vector<S>)> {
        match &self.repr {
            Repr::Zero => Some((Matrix::zeros(dim, dim), Vector::zeros(dim))),
            Repr::LeastSquares { matrix, target } => {
                Some((matrix.gram(), -&matrix.tr_mul_vec(target)))
            }
            Repr::Custom(_) => None,
        }
    }
}
