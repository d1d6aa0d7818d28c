//! Dense vectors and matrices, direct solvers and spectral-norm estimation.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Dense real vector. Public constructors reject NaN and infinite entries.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct Vector<S> {
    data: Vec<S>,
}

impl<S: Scalar> TryFrom<Vec<S>> for Vector<S> {
    type Error = Error;
    fn try_from(v: Vec<S>) -> Result<Self> {
        Vector::new(v)
    }
}

impl<S: Scalar> From<Vector<S>> for Vec<S> {
    fn from(v: Vector<S>) -> Vec<S> {
        v.data
    }
}

impl<S: Scalar> Vector<S> {
    pub fn new(data: Vec<S>) -> Result<Self> {
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("vector entry {i}")));
        }
        Ok(Self { data })
    }

    /// Builds a vector from `f64` values, converting to the scalar type.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| S::of(v)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![S::zero(); n],
        }
    }

    pub fn filled(n: usize, value: S) -> Self {
        Self {
            data: vec![value; n],
        }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> S) -> Self {
        Self {
            data: (0..n).map(f).collect(),
        }
    }

    pub(crate) fn from_raw(data: Vec<S>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.data.iter()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.as_f64()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Self) -> S {
        assert_eq!(self.len(), other.len(), "dot: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    pub fn norm(&self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.len(), other.len(), "zip_map: dimension mismatch");
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|v| v * s)
    }

    /// Returns `self + a·x`.
    pub fn axpy(&self, a: S, x: &Self) -> Self {
        self.zip_map(x, |u, v| u + a * v)
    }

    /// Returns `a·self + b·x`.
    pub fn lincomb(&self, a: S, b: S, x: &Self) -> Self {
        self.zip_map(x, |u, v| a * u + b * v)
    }

    pub fn dist(&self, other: &Self) -> S {
        (self - other).norm()
    }

    /// Concatenates two vectors.
    pub fn concat(&self, other: &Self) -> Self {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self { data }
    }

    /// Serializes as CSV, one entry per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.data {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses CSV text holding either a single column or a single row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let m = Matrix::<S>::from_csv(text)?;
        if m.cols() <= 1 || m.rows() <= 1 {
            Self::new(m.data)
        } else {
            Err(Error::Parse(format!(
                "expected a single CSV row or column, found {}x{}",
                m.rows(),
                m.cols()
            )))
        }
    }
}

impl<S> Index<usize> for Vector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.data[i]
    }
}

impl<S> IndexMut<usize> for Vector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.data[i]
    }
}

impl<'a, S: Scalar> Add<&'a Vector<S>> for &'a Vector<S> {
    type Output = Vector<S>;
    fn add(self, rhs: &'a Vector<S>) -> Vector<S> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a, S: Scalar> Sub<&'a Vector<S>> for &'a Vector<S> {
    type Output = Vector<S>;
    fn sub(self, rhs: &'a Vector<S>) -> Vector<S> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<S: Scalar> Mul<S> for &Vector<S> {
    type Output = Vector<S>;
    fn mul(self, rhs: S) -> Vector<S> {
        self.scale(rhs)
    }
}

impl<S: Scalar> Neg for &Vector<S> {
    type Output = Vector<S>;
    fn neg(self) -> Vector<S> {
        self.map(|v| -v)
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S> Matrix<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        check_dim("matrix entries", rows * cols, data.len())?;
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {})",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim("matrix row length", c, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<S>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| S::of(v)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![S::one(); n])
    }

    pub fn diag(d: &[S]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Returns `self + s·I` for a square matrix.
    pub fn add_diagonal(&self, s: S) -> Self {
        assert!(self.is_square(), "add_diagonal on non-square matrix");
        let mut m = self.clone();
        for i in 0..self.rows {
            m.data[i * self.cols + i] += s;
        }
        m
    }

    pub fn mul_vec(&self, v: &Vector<S>) -> Vector<S> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        Vector::from_fn(self.rows, |i| {
            self.row(i)
                .iter()
                .zip(v.iter())
                .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
        })
    }

    /// Computes `Mᵀv` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &Vector<S>) -> Vector<S> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec: dimension mismatch");
        let mut out = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            if vi.is_zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Vector::from_raw(out)
    }

    pub fn try_mul_vec(&self, v: &Vector<S>) -> Result<Vector<S>> {
        check_dim("matrix-vector product", self.cols, v.len())?;
        Ok(self.mul_vec(v))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Gram matrix `MᵀM`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a.is_zero() {
                    continue;
                }
                for j in i..n {
                    out.data[i * n + j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        out
    }

    pub fn frobenius(&self) -> S {
        self.data.iter().fold(S::zero(), |a, &v| a + v * v).sqrt()
    }

    /// Estimates `λ_max(MᵀM) = ‖M‖²` by power iteration on `MᵀM`.
    ///
    /// The iteration starts from the normalized all-ones vector and stops once the
    /// Rayleigh quotient changes by less than `1e-3·tol` relative. When an iterate is
    /// annihilated (the start lies in the null space) it is perturbed by `1e-6` and
    /// the iteration resumes.
    pub fn spectral_norm_sq(&self, tol: S, max_iters: usize) -> Result<S> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::domain("spectral norm of a dimension-zero matrix"));
        }
        if !(tol > S::zero()) {
            return Err(Error::domain("spectral norm tolerance must be positive"));
        }
        if self.is_zero() {
            return Ok(S::zero());
        }
        let n = self.cols;
        let mut v = Vector::filled(n, S::one() / S::of_usize(n).sqrt());
        let mut theta = S::zero();
        let stop = tol * S::of(1e-3);
        let mut perturb_round = 0usize;
        for _ in 0..max_iters.max(1) {
            let w = self.tr_mul_vec(&self.mul_vec(&v));
            let wn = w.norm();
            if wn <= S::epsilon() * S::epsilon() {
                perturb_round += 1;
                let eps = S::of(1e-6);
                v = Vector::from_fn(n, |i| {
                    let sign = if (i + perturb_round).is_multiple_of(2) {
                        S::one()
                    } else {
                        -S::one()
                    };
                    v[i] + eps * sign * S::of_usize(i + 1)
                });
                let vn = v.norm();
                v = v.scale(S::one() / vn);
                continue;
            }
            let next = v.dot(&w);
            v = w.scale(S::one() / wn);
            if (next - theta).abs() <= stop * next {
                theta = next;
                break;
            }
            theta = next;
        }
        // Final Rayleigh quotient at the normalized iterate.
        let last = self.mul_vec(&v).norm_sq();
        Ok(theta.max(last))
    }

    /// Serializes as CSV text: one row per line, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses CSV text with one row per line and no header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<S>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("CSV line {}: {e}", line + 1)))?;
            let row = record
                .iter()
                .enumerate()
                .map(|(col, field)| {
                    field.parse::<S>().map_err(|_| {
                        Error::Parse(format!(
                            "CSV line {}, column {}: invalid number {field:?}",
                            line + 1,
                            col + 1
                        ))
                    })
                })
                .collect::<Result<Vec<S>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Cholesky factor `L` with `M = LLᵀ`, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct Cholesky<S> {
    n: usize,
    l: Vec<S>,
}

impl<S: Scalar> Cholesky<S> {
    pub fn factor(m: &Matrix<S>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::domain(format!(
                "Cholesky of non-square {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut l = vec![S::zero(); n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > S::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    value: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, rhs: &Vector<S>) -> Result<Vector<S>> {
        check_dim("Cholesky solve", self.n, rhs.len())?;
        let n = self.n;
        let mut z = rhs.as_slice().to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        Ok(Vector::from_raw(z))
    }
}

fn residual_ok<S: Scalar>(m: &Matrix<S>, z: &Vector<S>, rhs: &Vector<S>) -> (bool, Vector<S>) {
    let r = rhs - &m.mul_vec(z);
    let scale = S::one() + rhs.norm();
    (r.norm() <= S::of(1e-10) * scale, r)
}

/// Solves `Mz = rhs` for symmetric positive definite `M` by Cholesky factorization,
/// with one step of iterative refinement when the residual check fails.
pub fn solve_spd<S: Scalar>(m: &Matrix<S>, rhs: &Vector<S>) -> Result<Vector<S>> {
    check_dim("solve_spd right-hand side", m.rows(), rhs.len())?;
    let chol = Cholesky::factor(m)?;
    let mut z = chol.solve(rhs)?;
    let (ok, r) = residual_ok(m, &z, rhs);
    if ok {
        return Ok(z);
    }
    z = &z + &chol.solve(&r)?;
    let (ok, r) = residual_ok(m, &z, rhs);
    if ok {
        Ok(z)
    } else {
        Err(Error::domain(format!(
            "solve_spd residual {:e} exceeds tolerance (ill-conditioned system)",
            r.norm().as_f64()
        )))
    }
}

/// Solves a general square system by LU with partial pivoting plus one refinement step.
///
/// A pivot below `n·ε·max|M_ij|` is reported as singular.
pub fn solve_lu<S: Scalar>(m: &Matrix<S>, rhs: &Vector<S>) -> Result<Vector<S>> {
    if !m.is_square() {
        return Err(Error::domain("LU solve of non-square matrix"));
    }
    check_dim("LU right-hand side", m.rows(), rhs.len())?;
    let n = m.rows();
    let scale = m.as_slice().iter().fold(S::zero(), |a, v| a.max(v.abs()));
    let threshold = S::of_usize(n.max(1)) * S::epsilon() * scale * S::of(16.0);
    let mut lu = m.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..n {
        let (piv, pval) =
            (j..n)
                .map(|i| (i, lu[i * n + j].abs()))
                .fold(
                    (j, S::zero()),
                    |best, c| if c.1 > best.1 { c } else { best },
                );
        if pval <= threshold {
            return Err(Error::Singular { index: j });
        }
        if piv != j {
            for c in 0..n {
                lu.swap(j * n + c, piv * n + c);
            }
            perm.swap(j, piv);
        }
        let d = lu[j * n + j];
        for i in (j + 1)..n {
            let f = lu[i * n + j] / d;
            lu[i * n + j] = f;
            if f.is_zero() {
                continue;
            }
            for c in (j + 1)..n {
                let u = lu[j * n + c];
                lu[i * n + c] -= f * u;
            }
        }
    }
    let apply = |b: &Vector<S>| -> Vector<S> {
        let mut z: Vec<S> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = lu[i * n + k];
                z[i] = z[i] - l * z[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = lu[i * n + k];
                z[i] = z[i] - u * z[k];
            }
            z[i] /= lu[i * n + i];
        }
        Vector::from_raw(z)
    };
    let z = apply(rhs);
    let r = rhs - &m.mul_vec(&z);
    let z = &z + &apply(&r);
    if !z.is_finite() {
        return Err(Error::Singular {
            index: n.saturating_sub(1),
        });
    }
    Ok(z)
}
