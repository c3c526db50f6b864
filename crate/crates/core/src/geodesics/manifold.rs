//! Model semi-Riemannian manifolds with closed-form connection and curvature.
//!
//! Points and tangent vectors live in an ambient coordinate space. Embedded
//! factors (round spheres) use the ambient Euclidean product restricted to the
//! tangent space; coordinate manifolds use their coordinates as the ambient
//! space.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bilinear::{self, Inertia, SymForm};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::matfn::ExprMatrix;

pub trait Manifold: Send + Sync + fmt::Debug {
    fn ambient_dim(&self) -> usize;

    fn dim(&self) -> usize;

    /// Ambient matrix of `𝔤` at `x`; only its restriction to `T_x M` is meaningful.
    fn metric(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Columns spanning `T_x M`.
    fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// `Γ_x(u, w)`: the covariant derivative of `W` along a curve with
    /// velocity `u` is `W′ + Γ_x(u, W)`.
    fn connection(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;

    /// `ℛ(u, v)w = ∇_u∇_v w − ∇_v∇_u w − ∇_[u,v] w`.
    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;

    /// Distance of `(x, v)` from the tangent bundle, zero for coordinate manifolds.
    fn constraint_residual(&self, _x: &DVector<f64>, _v: &DVector<f64>) -> f64 {
        0.0
    }

    /// Nearest point of the manifold to an ambient point near it.
    fn retract(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn inner(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (u.transpose() * self.metric(x) * w)[0]
    }

    /// Inertia of `𝔤` on `T_x M`.
    fn inertia_at(&self, x: &DVector<f64>) -> Result<Inertia> {
        let t = self.tangent_basis(x);
        let form = SymForm::new(t.transpose() * self.metric(x) * &t)?;
        Ok(bilinear::inertia(&form, bilinear::DEFAULT_TOL))
    }
}

/// Factor of a product manifold.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// Round sphere `{|x| = radius}` in Euclidean `ℝ^{dim+1}`.
    Sphere { dim: usize, radius: f64 },
    /// `ℝᵏ` with metric `diag(signs)`.
    Flat { signs: Vec<f64> },
}

impl Factor {
    fn ambient_dim(&self) -> usize {
        match self {
            Factor::Sphere { dim, .. } => dim + 1,
            Factor::Flat { signs } => signs.len(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Factor::Sphere { dim, .. } => *dim,
            Factor::Flat { signs } => signs.len(),
        }
    }
}

/// Riemannian product of spheres and flat pieces, used for the stationary models.
#[derive(Debug, Clone, Serialize)]
pub struct ProductManifold {
    factors: Vec<Factor>,
    offsets: Vec<usize>,
    ambient: usize,
}

impl ProductManifold {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("product needs at least one factor".into()));
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let mut ambient = 0;
        for f in &factors {
            match f {
                Factor::Sphere { dim, radius } if *dim == 0 || !(*radius > 0.0) => {
                    return Err(Error::InvalidInput("sphere factor needs dim >= 1 and radius > 0".into()));
                }
                Factor::Flat { signs } if signs.iter().any(|s| s.abs() != 1.0) => {
                    return Err(Error::InvalidInput("flat factor signs must be +1 or -1".into()));
                }
                _ => {}
            }
            offsets.push(ambient);
            ambient += f.ambient_dim();
        }
        Ok(Self { factors, offsets, ambient })
    }

    /// `S^dim(radius) × (ℝ^k, −Σ dt²)`.
    pub fn stationary_sphere(dim: usize, radius: f64, time_dims: usize) -> Result<Self> {
        Self::new(vec![Factor::Sphere { dim, radius }, Factor::Flat { signs: vec![-1.0; time_dims] }])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// First ambient coordinate of factor `i`.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }
}

/// Orthonormal basis of `x⊥` obtained from the coordinate axes, skipping the
/// axis most aligned with `x`.
fn sphere_tangent_basis(x: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let skip = (0..m).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for i in (0..m).filter(|&i| i != skip) {
        let mut e = DVector::zeros(m);
        e[i] = 1.0;
        let mut w = e.clone() - DVector::from_column_slice(x) * (x[i] / (norm * norm));
        for c in &cols {
            let d = c.dot(&w);
            w -= c * d;
        }
        let n = w.norm();
        cols.push(w / n);
    }
    DMatrix::from_columns(&cols)
}

impl Manifold for ProductManifold {
    fn ambient_dim(&self) -> usize {
        self.ambient
    }

    fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).sum()
    }

    fn metric(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ambient, self.ambient);
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            match f {
                Factor::Sphere { dim, .. } => {
                    for i in 0..=*dim {
                        g[(o + i, o + i)] = 1.0;
                    }
                }
                Factor::Flat { signs } => {
                    for (i, s) in signs.iter().enumerate() {
                        g[(o + i, o + i)] = *s;
                    }
                }
            }
        }
        g
    }

    fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.ambient, self.dim());
        let mut col = 0;
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            match f {
                Factor::Sphere { dim, .. } => {
                    let b = sphere_tangent_basis(&x.as_slice()[o..o + dim + 1]);
                    t.view_mut((o, col), (dim + 1, *dim)).copy_from(&b);
                    col += dim;
                }
                Factor::Flat { signs } => {
                    for i in 0..signs.len() {
                        t[(o + i, col + i)] = 1.0;
                    }
                    col += signs.len();
                }
            }
        }
        t
    }

    fn connection(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.ambient);
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            if let Factor::Sphere { dim, radius } = f {
                let k = dim + 1;
                let uw = u.rows(o, k).dot(&w.rows(o, k));
                out.rows_mut(o, k).copy_from(&(x.rows(o, k) * (uw / (radius * radius))));
            }
        }
        out
    }

    fn curvature(&self, _x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.ambient);
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            if let Factor::Sphere { dim, radius } = f {
                let k = dim + 1;
                let (uu, vv, ww) = (u.rows(o, k), v.rows(o, k), w.rows(o, k));
                let r = (uu * vv.dot(&ww) - vv * uu.dot(&ww)) / (radius * radius);
                out.rows_mut(o, k).copy_from(&r);
            }
        }
        out
    }

    fn retract(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            if let Factor::Sphere { dim, radius } = f {
                let k = dim + 1;
                let n = x.rows(o, k).norm();
                y.rows_mut(o, k).copy_from(&(x.rows(o, k) * (radius / n)));
            }
        }
        y
    }

    fn constraint_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let mut r: f64 = 0.0;
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            if let Factor::Sphere { dim, radius } = f {
                let k = dim + 1;
                let xs = x.rows(o, k);
                r = r.max((xs.norm() - radius).abs() / radius);
                let vn = v.rows(o, k).norm().max(1e-300);
                r = r.max(xs.dot(&v.rows(o, k)).abs() / (radius * vn));
            }
        }
        r
    }
}

/// Manifold given by a metric matrix in global coordinates `x0, x1, …`.
/// Christoffel symbols and curvature are assembled from exact first and
/// second derivatives of the metric entries.
#[derive(Debug, Clone)]
pub struct CoordinateManifold {
    n: usize,
    metric: ExprMatrix,
    d1: Vec<ExprMatrix>,
    d2: Vec<Vec<ExprMatrix>>,
}

impl CoordinateManifold {
    pub fn new(metric: ExprMatrix) -> Result<Self> {
        let n = metric.rows();
        if metric.cols() != n || n == 0 {
            return Err(Error::DimensionMismatch("metric must be a nonempty square matrix".into()));
        }
        if !metric.is_constant_in(Var::T) {
            return Err(Error::Unsupported("time-dependent metrics have no curvature registry entry".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if let Some(k) = metric.entry(i, j).max_coordinate() {
                    if k >= n {
                        return Err(Error::InvalidInput(format!("metric entry ({i},{j}) uses x{k} on a {n}-manifold")));
                    }
                }
                let d = Expr::Sub(metric.entry(i, j).clone().into(), metric.entry(j, i).clone().into());
                let probe: Vec<f64> = (0..n).map(|k| 0.37 + 0.11 * k as f64).collect();
                if d.eval(0.0, &probe).abs() > 1e-12 {
                    return Err(Error::Asymmetric { t: 0.0, what: "metric expression".into() });
                }
            }
        }
        let d1: Vec<ExprMatrix> = (0..n).map(|k| metric.derivative(Var::X(k))).collect();
        let d2 = d1.iter().map(|dk| (0..n).map(|l| dk.derivative(Var::X(l))).collect()).collect();
        Ok(Self { n, metric, d1, d2 })
    }

    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        Self::new(ExprMatrix::parse(rows)?)
    }

    pub fn metric_exprs(&self) -> &ExprMatrix {
        &self.metric
    }

    fn pieces(&self, x: &DVector<f64>) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let xs = x.as_slice();
        let g = self.metric.eval(0.0, xs);
        let ginv = g.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(self.n, self.n, f64::NAN));
        (ginv, self.d1.iter().map(|d| d.eval(0.0, xs)).collect())
    }

    /// `Γ_{l,ij} = ½(∂_i g_lj + ∂_j g_li − ∂_l g_ij)` contracted with `u, w`.
    fn first_kind(dg: &[DMatrix<f64>], u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = u.len();
        let mut du = DMatrix::zeros(n, n);
        let mut dw = DMatrix::zeros(n, n);
        for k in 0..n {
            du += &dg[k] * u[k];
            dw += &dg[k] * w[k];
        }
        let mut out = &du * w + &dw * u;
        for l in 0..n {
            out[l] -= (u.transpose() * &dg[l] * w)[0];
        }
        out * 0.5
    }

    /// Christoffel symbols `Γᵏ_ij` as one matrix per `k`.
    pub fn christoffel(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let (ginv, dg) = self.pieces(x);
        let n = self.n;
        let mut out = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in 0..n {
                let (ei, ej) = (unit(n, i), unit(n, j));
                let c = &ginv * Self::first_kind(&dg, &ei, &ej);
                for k in 0..n {
                    out[k][(i, j)] = c[k];
                }
            }
        }
        out
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

impl Manifold for CoordinateManifold {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.metric.eval(0.0, x.as_slice())
    }

    fn tangent_basis(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    fn connection(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let (ginv, dg) = self.pieces(x);
        ginv * Self::first_kind(&dg, u, w)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let xs = x.as_slice();
        let (ginv, dg) = self.pieces(x);
        let gamma = |a: &DVector<f64>, b: &DVector<f64>| &ginv * Self::first_kind(&dg, a, b);
        // (D_d Γ)(a, b) from D_d g⁻¹ = −g⁻¹ (D_d g) g⁻¹ and D_d ∂g.
        let dgamma = |d: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
            let mut dgd = DMatrix::zeros(n, n);
            for k in 0..n {
                dgd += &dg[k] * d[k];
            }
            let dd: Vec<DMatrix<f64>> = (0..n)
                .map(|k| {
                    let mut m = DMatrix::zeros(n, n);
                    for l in 0..n {
                        if d[l] != 0.0 {
                            m += self.d2[k][l].eval(0.0, xs) * d[l];
                        }
                    }
                    m
                })
                .collect();
            let dginv = -(&ginv * dgd * &ginv);
            dginv * Self::first_kind(&dg, a, b) + &ginv * Self::first_kind(&dd, a, b)
        };
        dgamma(u, v, w) - dgamma(v, u, w) + gamma(u, &gamma(v, w)) - gamma(v, &gamma(u, w))
    }
}

/// Gödel-type product `M₀ × ℝʳ` with metric `𝔤⁰(x) ⊕ ρ(x)`. Base coordinates
/// are `x0 … x_{m−1}`, fiber coordinates follow.
#[derive(Debug, Clone)]
pub struct GodelManifold {
    base_dim: usize,
    rank: usize,
    base_metric: ExprMatrix,
    rho: ExprMatrix,
    coords: CoordinateManifold,
}

impl GodelManifold {
    pub fn new(base_metric: ExprMatrix, rho: ExprMatrix) -> Result<Self> {
        let m = base_metric.rows();
        let r = rho.rows();
        if base_metric.cols() != m || rho.cols() != r || m == 0 || r == 0 {
            return Err(Error::DimensionMismatch("base metric and fiber form must be nonempty square matrices".into()));
        }
        for e in (0..m * m).map(|k| base_metric.entry(k / m, k % m)).chain((0..r * r).map(|k| rho.entry(k / r, k % r))) {
            if e.max_coordinate().is_some_and(|k| k >= m) {
                return Err(Error::InvalidInput("base metric and fiber form may depend only on base coordinates".into()));
            }
        }
        let n = m + r;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i < m && j < m {
                    base_metric.entry(i, j).clone()
                } else if i >= m && j >= m {
                    rho.entry(i - m, j - m).clone()
                } else {
                    Expr::Const(0.0)
                });
            }
        }
        let coords = CoordinateManifold::new(ExprMatrix::new(n, n, entries)?)?;
        Ok(Self { base_dim: m, rank: r, base_metric, rho, coords })
    }

    /// Euclidean base `ℝᵐ` with a constant fiber form.
    pub fn flat(base_dim: usize, rho: &DMatrix<f64>) -> Result<Self> {
        Self::new(ExprMatrix::from_matrix(&DMatrix::identity(base_dim, base_dim)), ExprMatrix::from_matrix(rho))
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rho(&self, x: &[f64]) -> DMatrix<f64> {
        self.rho.eval(0.0, x)
    }

    pub fn base_metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.base_metric.eval(0.0, x)
    }

    pub fn rho_exprs(&self) -> &ExprMatrix {
        &self.rho
    }

    pub fn base_metric_exprs(&self) -> &ExprMatrix {
        &self.base_metric
    }

    pub fn coordinates(&self) -> &CoordinateManifold {
        &self.coords
    }

    /// Point `(x, u)` of the total space.
    pub fn point(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.base_dim + self.rank, x.iter().chain(u.iter()).copied())
    }

    /// The commuting Killing fields `(0, ∂/∂u_i)`.
    pub fn fiber_fields(&self) -> Vec<AffineField> {
        (0..self.rank).map(|i| AffineField::coordinate(self.base_dim + self.rank, self.base_dim + i)).collect()
    }
}

impl Manifold for GodelManifold {
    fn ambient_dim(&self) -> usize {
        self.coords.ambient_dim()
    }

    fn dim(&self) -> usize {
        self.coords.dim()
    }

    fn metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.coords.metric(x)
    }

    fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.coords.tangent_basis(x)
    }

    fn connection(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.coords.connection(x, u, w)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.coords.curvature(x, u, v, w)
    }
}

/// Registry of supported model manifolds.
#[derive(Debug, Clone)]
pub enum ModelManifold {
    Product(ProductManifold),
    Godel(GodelManifold),
    Explicit(CoordinateManifold),
}

impl ModelManifold {
    fn inner_ref(&self) -> &dyn Manifold {
        match self {
            ModelManifold::Product(m) => m,
            ModelManifold::Godel(m) => m,
            ModelManifold::Explicit(m) => m,
        }
    }
}

impl Manifold for ModelManifold {
    fn ambient_dim(&self) -> usize {
        self.inner_ref().ambient_dim()
    }

    fn dim(&self) -> usize {
        self.inner_ref().dim()
    }

    fn metric(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner_ref().metric(x)
    }

    fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner_ref().tangent_basis(x)
    }

    fn connection(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.inner_ref().connection(x, u, w)
    }

    fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.inner_ref().curvature(x, u, v, w)
    }

    fn constraint_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.inner_ref().constraint_residual(x, v)
    }

    fn retract(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner_ref().retract(x)
    }
}

/// Ambient affine vector field `x ↦ Lx + c`; covers coordinate translations
/// and rotations of embedded spheres.
#[derive(Debug, Clone, Serialize)]
pub struct AffineField {
    #[serde(skip)]
    pub linear: DMatrix<f64>,
    #[serde(skip)]
    pub offset: DVector<f64>,
}

impl AffineField {
    pub fn new(linear: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if linear.nrows() != linear.ncols() || linear.nrows() != offset.len() {
            return Err(Error::DimensionMismatch("affine field parts must match".into()));
        }
        Ok(Self { linear, offset })
    }

    /// `∂/∂x_i`.
    pub fn coordinate(ambient_dim: usize, i: usize) -> Self {
        Self { linear: DMatrix::zeros(ambient_dim, ambient_dim), offset: unit(ambient_dim, i) }
    }

    /// `x_i ∂/∂x_j − x_j ∂/∂x_i`.
    pub fn rotation(ambient_dim: usize, i: usize, j: usize) -> Self {
        let mut l = DMatrix::zeros(ambient_dim, ambient_dim);
        l[(j, i)] = 1.0;
        l[(i, j)] = -1.0;
        Self { linear: l, offset: DVector::zeros(ambient_dim) }
    }

    pub fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.offset
    }

    /// `∇_w Y` at `x`.
    pub fn covariant(&self, m: &dyn Manifold, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.linear * w + m.connection(x, w, &self.value(x))
    }

    /// Lie bracket `[self, other]` at `x`.
    pub fn bracket(&self, other: &AffineField, x: &DVector<f64>) -> DVector<f64> {
        &other.linear * self.value(x) - &self.linear * other.value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn sphere_tangent_basis_is_orthonormal_and_normal_to_x() {
        let x = v(&[0.3, -0.5, 0.8]);
        let b = sphere_tangent_basis(x.as_slice());
        assert!((b.transpose() * &b - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        assert!((b.transpose() * &x).abs().max() < 1e-14);
    }

    #[test]
    fn unit_sphere_curvature_matches_constant_curvature() {
        let m = ProductManifold::new(vec![Factor::Sphere { dim: 2, radius: 1.0 }]).unwrap();
        let x = v(&[1.0, 0.0, 0.0]);
        let (e1, e2) = (v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0]));
        // ℛ(e1, e2)e2 = e1 for sectional curvature 1.
        let r = m.curvature(&x, &e1, &e2, &e2);
        assert!((r - &e1).norm() < 1e-15);
        assert!(m.curvature(&x, &e1, &e2, &e1).dot(&e2) + 1.0 < 1e-15);
    }

    #[test]
    fn coordinate_round_sphere_has_curvature_one() {
        // Polar coordinates (θ, φ) with 𝔤 = dθ² + sin²θ dφ².
        let m = CoordinateManifold::parse(&[vec!["1", "0"], vec!["0", "sin(x0)^2"]]).unwrap();
        let x = v(&[0.9, 0.2]);
        let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let r = m.curvature(&x, &e1, &e2, &e2);
        let g = m.metric(&x);
        let sectional = (e1.transpose() * &g * &r)[0] / (g[(0, 0)] * g[(1, 1)]);
        assert!((sectional - 1.0).abs() < 1e-12, "K = {sectional}");
        let gam = m.christoffel(&x);
        // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = cotθ.
        assert!((gam[0][(1, 1)] + 0.9f64.sin() * 0.9f64.cos()).abs() < 1e-14);
        assert!((gam[1][(0, 1)] - 0.9f64.cos() / 0.9f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_plane_has_curvature_minus_one() {
        let m = CoordinateManifold::parse(&[vec!["1/x1^2", "0"], vec!["0", "1/x1^2"]]).unwrap();
        let x = v(&[0.3, 1.7]);
        let (e1, e2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let g = m.metric(&x);
        let r = m.curvature(&x, &e1, &e2, &e2);
        let k = (e1.transpose() * &g * r)[0] / (g[(0, 0)] * g[(1, 1)]);
        assert!((k + 1.0).abs() < 1e-12, "K = {k}");
    }

    #[test]
    fn time_dependent_metric_is_unsupported() {
        let e = CoordinateManifold::parse(&[vec!["1+t"]]).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
    }

    #[test]
    fn godel_metric_is_block_diagonal() {
        let base = ExprMatrix::parse(&[vec!["1", "0"], vec!["0", "1"]]).unwrap();
        let rho = ExprMatrix::parse(&[vec!["1+x0^2", "x0*x1"], vec!["x0*x1", "-(1+x1^2)"]]).unwrap();
        let g = GodelManifold::new(base, rho).unwrap();
        let p = g.point(&[0.5, -0.25], &[3.0, 4.0]);
        let m = g.metric(&p);
        assert_eq!(m[(0, 2)], 0.0);
        assert!((m[(2, 2)] - 1.25).abs() < 1e-15);
        assert!((m[(2, 3)] + 0.125).abs() < 1e-15);
        assert_eq!(g.inertia_at(&p).unwrap().n_minus, 1);
        assert!(GodelManifold::new(ExprMatrix::parse(&[vec!["1"]]).unwrap(), ExprMatrix::parse(&[vec!["x1"]]).unwrap()).is_err());
    }

    #[test]
    fn rotation_field_is_tangent_and_commutes_with_time_translation() {
        let m = ProductManifold::stationary_sphere(2, 1.0, 1).unwrap();
        let rot = AffineField::rotation(4, 0, 1);
        let time = AffineField::coordinate(4, 3);
        let x = v(&[0.6, 0.0, 0.8, 2.0]);
        assert!(rot.value(&x).rows(0, 3).dot(&x.rows(0, 3)).abs() < 1e-15);
        assert!(rot.bracket(&time, &x).norm() < 1e-15);
        assert!(time.covariant(&m, &x, &rot.value(&x)).norm() < 1e-15);
    }
}
