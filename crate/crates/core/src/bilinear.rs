//! Inertia algebra for symmetric bilinear forms on finite-dimensional spaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative threshold for eigenvalue sign decisions.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Symmetric bilinear form with a characteristic magnitude used to scale
/// rank tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SymForm {
    entries: DMatrix<f64>,
    scale: f64,
}

impl SymForm {
    /// Symmetrizes `m`; the scale is the largest absolute entry (1 for the zero form).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!("form must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let entries = linalg::symmetrize(&m);
        let s = linalg::max_abs(&entries);
        let scale = if s > 0.0 && s.is_finite() { s } else { 1.0 };
        Ok(Self { entries, scale })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        if scale > 0.0 && scale.is_finite() {
            self.scale = scale;
        }
        self
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d))).expect("diagonal is square")
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is square")
    }

    pub fn zero(n: usize) -> Self {
        Self::new(DMatrix::zeros(n, n)).expect("zero is square")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.entries * v))
    }

    pub fn negated(&self) -> SymForm {
        SymForm { entries: -&self.entries, scale: self.scale }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

/// `(n₋, n₊, dgn)` of a symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_plus: usize,
    pub degeneracy: usize,
}

impl Inertia {
    pub fn signature(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }

    pub fn dim(&self) -> usize {
        self.n_minus + self.n_plus + self.degeneracy
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.degeneracy == 0
    }
}

/// Counts eigenvalues below `-tol·scale`, above `tol·scale`, and in between.
pub fn inertia(form: &SymForm, tol: f64) -> Inertia {
    inertia_of_eigenvalues(&form.eigenvalues(), tol * form.scale)
}

pub fn inertia_of_eigenvalues(eigenvalues: &[f64], threshold: f64) -> Inertia {
    let mut out = Inertia { n_minus: 0, n_plus: 0, degeneracy: 0 };
    for &l in eigenvalues {
        if l < -threshold {
            out.n_minus += 1;
        } else if l > threshold {
            out.n_plus += 1;
        } else {
            out.degeneracy += 1;
        }
    }
    out
}

/// Subspace of ℝⁿ stored through a Euclidean-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Span of the columns of `spanning`; dependent columns are dropped.
    pub fn span(spanning: &DMatrix<f64>) -> Self {
        let basis = linalg::column_space(spanning, 1e-12);
        Self { ambient_dim: spanning.nrows(), basis }
    }

    /// Wraps a basis already known to be orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn from_vectors(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!("subspace vectors must have length {ambient_dim}")));
        }
        let m = DMatrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
        let s = Self::span(&m);
        if s.dim() != vectors.len() {
            return Err(Error::InvalidInput("subspace vectors are linearly dependent".into()));
        }
        Ok(s)
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: DMatrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: DMatrix::identity(ambient_dim, ambient_dim) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthonormal basis of the Euclidean orthogonal complement.
    pub fn euclidean_complement(&self) -> Subspace {
        let (z, _) = linalg::nullspace(&self.basis.transpose(), 1e-12);
        Subspace { ambient_dim: self.ambient_dim, basis: z }
    }

    /// Euclidean distance of `v` from the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let proj = &self.basis * (self.basis.transpose() * v);
        (v - proj).norm()
    }
}

/// Matrix of `form` pulled back to the basis of `sub`. The scale is inherited
/// so that lightlike restrictions read as degenerate.
pub fn restrict(form: &SymForm, sub: &Subspace) -> Result<SymForm> {
    if sub.ambient_dim() != form.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace lives in R^{} but form is on R^{}",
            sub.ambient_dim(),
            form.dim()
        )));
    }
    let b = sub.basis();
    let m = b.transpose() * form.matrix() * b;
    Ok(SymForm::new(m)?.with_scale(form.scale()))
}

/// `{w : form(w, v) = 0 for all v in sub}` for a nondegenerate `form`.
///
/// When the restriction of `form` to `sub` is degenerate the result may
/// intersect `sub`.
pub fn orth_complement(form: &SymForm, sub: &Subspace, tol: f64) -> Result<Subspace> {
    if sub.ambient_dim() != form.dim() {
        return Err(Error::DimensionMismatch("subspace and form dimensions differ".into()));
    }
    let inr = inertia(form, tol);
    if inr.degeneracy != 0 {
        return Err(Error::DegenerateForm(format!("ambient form has degeneracy {}", inr.degeneracy)));
    }
    if sub.dim() == 0 {
        return Ok(Subspace::full(form.dim()));
    }
    let g = sub.basis().transpose() * form.matrix();
    let (z, _) = linalg::nullspace(&g, tol);
    Ok(Subspace::from_orthonormal(z))
}

/// Signature of `form` on the `form`-orthogonal complement of `image`, and
/// whether that restriction is nondegenerate.
pub fn signature_on_complement(form: &SymForm, image: &Subspace, tol: f64) -> Result<(i64, bool)> {
    let comp = orth_complement(form, image, tol)?;
    let restricted = restrict(form, &comp)?;
    let inr = inertia(&restricted, tol);
    Ok((inr.signature(), inr.is_nondegenerate()))
}
