//! Gödel-type products: reconstruction of the fiber path from the base curve,
//! the reduced action `E₀` and the index of its discretized Hessian.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::curve::{integrate_geodesic, GeodesicCurve};
use super::manifold::{GodelManifold, Manifold};
use crate::bilinear::{self, Inertia};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matfn::MatrixFn;
use crate::reduction::{self, BIntegralPath};
use crate::sds::VERIFICATION_POINTS;

type CurveFn = Arc<dyn Fn(f64) -> (DVector<f64>, DVector<f64>) + Send + Sync>;

/// Curve `γ₀` in the base, given with its velocity.
#[derive(Clone)]
pub struct BaseCurve {
    interval: (f64, f64),
    dim: usize,
    f: CurveFn,
}

impl std::fmt::Debug for BaseCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BaseCurve(dim = {}, interval = {:?})", self.dim, self.interval)
    }
}

impl BaseCurve {
    pub fn new(
        dim: usize,
        interval: (f64, f64),
        f: impl Fn(f64) -> (DVector<f64>, DVector<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self { interval, dim, f: Arc::new(f) }
    }

    /// Constant-speed segment from `p` to `q`.
    pub fn linear(p: &[f64], q: &[f64], interval: (f64, f64)) -> Self {
        Self::perturbed_line(p, q, interval, Vec::new())
    }

    /// `p + s(q − p) + Σ_k modes[k]·sin((k+1)πs)` with `s = (t − a)/(b − a)`.
    pub fn perturbed_line(p: &[f64], q: &[f64], interval: (f64, f64), modes: Vec<Vec<f64>>) -> Self {
        let (a, b) = interval;
        let len = b - a;
        let p = DVector::from_column_slice(p);
        let d = DVector::from_column_slice(q) - &p;
        let modes: Vec<DVector<f64>> = modes.into_iter().map(DVector::from_vec).collect();
        let dim = p.len();
        Self::new(dim, interval, move |t| {
            let s = (t - a) / len;
            let mut x = &p + &d * s;
            let mut dx = &d / len;
            for (k, m) in modes.iter().enumerate() {
                let w = (k + 1) as f64 * std::f64::consts::PI;
                x += m * (w * s).sin();
                dx += m * (w * (w * s).cos() / len);
            }
            (x, dx)
        })
    }

    /// Base projection of a geodesic of the total space.
    pub fn from_geodesic(curve: Arc<GeodesicCurve>, base_dim: usize) -> Self {
        let interval = curve.interval();
        Self::new(base_dim, interval, move |t| {
            let (x, v, _) = curve.state(t);
            (x.rows(0, base_dim).into_owned(), v.rows(0, base_dim).into_owned())
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        (self.f)(t)
    }
}

fn rho_inverse_along(m: &GodelManifold, base: &BaseCurve) -> MatrixFn {
    let r = m.rank();
    let m = m.clone();
    let base = base.clone();
    MatrixFn::from_fn(r, r, move |t| {
        let (x, _) = base.eval(t);
        m.rho(x.as_slice()).try_inverse().unwrap_or_else(|| DMatrix::from_element(r, r, f64::NAN))
    })
}

fn check_dims(m: &GodelManifold, base: &BaseCurve, u0: &[f64], u1: &[f64]) -> Result<()> {
    if base.dim() != m.base_dim() || u0.len() != m.rank() || u1.len() != m.rank() {
        return Err(Error::DimensionMismatch("base curve or fiber endpoints do not match the manifold".into()));
    }
    Ok(())
}

/// `B^∫_{γ₀}(t) = ∫ₐᵗ ρ(γ₀(s))⁻¹ ds`.
pub fn rho_integral(m: &GodelManifold, base: &BaseCurve, intervals: usize) -> Result<BIntegralPath> {
    reduction::b_integral_of(&rho_inverse_along(m, base), base.interval(), intervals, bilinear::DEFAULT_TOL)
}

/// Fiber path `u(t) = u₀ + B^∫(t)·p` with momentum `p = B^∫(b)⁻¹(u₁ − u₀)`.
#[derive(Debug, Clone)]
pub struct FiberPath {
    pub u0: DVector<f64>,
    /// `ρ(γ₀(t))u′(t)`, constant along the path.
    pub momentum: DVector<f64>,
    pub b_integral: BIntegralPath,
    /// Max relative deviation of `ρ(γ₀)u′` from the momentum, with `u′` by finite differences.
    pub conservation_residual: f64,
}

impl FiberPath {
    pub fn value(&self, t: f64) -> DVector<f64> {
        &self.u0 + self.b_integral.value(t) * &self.momentum
    }

    /// Fourth-order central difference of `value`.
    pub fn velocity_fd(&self, t: f64, h: f64) -> DVector<f64> {
        (self.value(t - 2.0 * h) - self.value(t - h) * 8.0 + self.value(t + h) * 8.0 - self.value(t + 2.0 * h))
            / (12.0 * h)
    }
}

pub fn godel_reconstruct_u(
    m: &GodelManifold,
    base: &BaseCurve,
    u0: &[f64],
    u1: &[f64],
    intervals: usize,
) -> Result<FiberPath> {
    check_dims(m, base, u0, u1)?;
    let bint = rho_integral(m, base, intervals)?;
    let (a, b) = base.interval();
    if bint.endpoint_degenerate {
        return Err(Error::EndpointConjugate(b));
    }
    let du = DVector::from_column_slice(u1) - DVector::from_column_slice(u0);
    let bend = bint.at_end().clone();
    let momentum = bend.lu().solve(&du).ok_or_else(|| Error::Singular { t: b, what: "B^∫(b)".into() })?;
    let mut path = FiberPath { u0: DVector::from_column_slice(u0), momentum, b_integral: bint, conservation_residual: 0.0 };
    let h = 1e-3 * (b - a);
    let pscale = path.momentum.norm();
    let mut res: f64 = 0.0;
    for t in linalg::uniform_mesh(a + 2.0 * h, b - 2.0 * h, VERIFICATION_POINTS - 1) {
        let (x, _) = base.eval(t);
        let q = m.rho(x.as_slice()) * path.velocity_fd(t, h);
        let d = (&q - &path.momentum).norm();
        res = res.max(if pscale > 0.0 { d / pscale } else { d });
    }
    path.conservation_residual = res;
    Ok(path)
}

fn kinetic(m: &GodelManifold, base: &BaseCurve, panels: usize) -> f64 {
    let (a, b) = base.interval();
    let (xs, ws) = linalg::gauss_legendre(5);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in xs.iter().zip(&ws) {
            let t = lo + 0.5 * h * (xi + 1.0);
            let (x, dx) = base.eval(t);
            s += 0.5 * h * wi * (dx.transpose() * m.base_metric(x.as_slice()) * &dx)[0];
        }
    }
    0.5 * s
}

/// `E₀(γ₀) = ½∫𝔤⁰(γ₀′, γ₀′) + ½B^∫_{γ₀}(b)⁻¹(u₁ − u₀, u₁ − u₀)`.
pub fn godel_e0(m: &GodelManifold, base: &BaseCurve, u0: &[f64], u1: &[f64], intervals: usize) -> Result<f64> {
    let fiber = godel_reconstruct_u(m, base, u0, u1, intervals)?;
    let du = DVector::from_column_slice(u1) - DVector::from_column_slice(u0);
    Ok(kinetic(m, base, intervals) + 0.5 * du.dot(&fiber.momentum))
}

/// `½∫𝔤(z′, z′)` of the lifted curve `z = (γ₀, u)` with `u′` differentiated numerically.
pub fn lifted_action(m: &GodelManifold, base: &BaseCurve, fiber: &FiberPath, panels: usize) -> f64 {
    let (a, b) = base.interval();
    let (xs, ws) = linalg::gauss_legendre(5);
    let h = (b - a) / panels as f64;
    let hd = 1e-2 * h;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in xs.iter().zip(&ws) {
            let t = lo + 0.5 * h * (xi + 1.0);
            let (x, dx) = base.eval(t);
            let du = fiber.velocity_fd(t, hd);
            let e = (dx.transpose() * m.base_metric(x.as_slice()) * &dx)[0] + (du.transpose() * m.rho(x.as_slice()) * &du)[0];
            s += 0.5 * h * wi * e;
        }
    }
    0.5 * s
}

/// Geodesic of the total space lifting `base` through the reconstructed fiber
/// path; fails when the lift is not a geodesic ending at `(γ₀(b), u₁)`.
pub fn godel_geodesic(
    m: &Arc<GodelManifold>,
    base: &BaseCurve,
    u0: &[f64],
    u1: &[f64],
    steps: usize,
    tol: f64,
) -> Result<GeodesicCurve> {
    let fiber = godel_reconstruct_u(m, base, u0, u1, steps)?;
    let (a, b) = base.interval();
    let (x0, dx0) = base.eval(a);
    let du0 = m.rho(x0.as_slice()).lu().solve(&fiber.momentum).ok_or_else(|| Error::Singular { t: a, what: "ρ".into() })?;
    let p = m.point(x0.as_slice(), u0);
    let v = DVector::from_iterator(p.len(), dx0.iter().chain(du0.iter()).copied());
    let manifold: Arc<dyn Manifold> = m.clone();
    let curve = integrate_geodesic(manifold, &p, &v, base.interval(), steps, tol)?;
    let (xb, _) = base.eval(b);
    let target = m.point(xb.as_slice(), u1);
    let miss = (curve.end() - &target).norm() / target.norm().max(1.0);
    if miss > 1e-6 {
        return Err(Error::Precondition(format!("lifted curve is not a geodesic to the endpoint (miss {miss:.3e})")));
    }
    Ok(curve)
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianOptions {
    pub meshes: Vec<usize>,
    /// Finite-difference step; Richardson extrapolation uses `step` and `step/2`.
    pub step: f64,
    pub quad_order: usize,
    pub tol: f64,
    pub agreeing_meshes: usize,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self { meshes: vec![16, 32, 64], step: 1e-4, quad_order: 3, tol: 1e-8, agreeing_meshes: 2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianMesh {
    pub intervals: usize,
    pub inertia: Inertia,
    /// Max `|∂E₀/∂c|` over the nodal coefficients; small at a critical point.
    pub gradient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianIndexReport {
    pub meshes: Vec<HessianMesh>,
    pub stabilized_at: Option<usize>,
    pub index: Option<usize>,
    pub degeneracy: Option<usize>,
}

/// `E₀` on perturbations `γ₀ + Σ c_{k,i} φ_k e_i` by nodal hat functions,
/// evaluated incrementally from per-element contributions.
struct E0Discretization<'a> {
    m: &'a GodelManifold,
    base: &'a BaseCurve,
    du: DVector<f64>,
    nodes: Vec<f64>,
    h: f64,
    qx: Vec<f64>,
    qw: Vec<f64>,
    k0: Vec<f64>,
    b0: Vec<DMatrix<f64>>,
    b_total: DMatrix<f64>,
    b_total_inv_du: DVector<f64>,
}

impl<'a> E0Discretization<'a> {
    fn new(m: &'a GodelManifold, base: &'a BaseCurve, du: DVector<f64>, intervals: usize, quad: usize) -> Result<Self> {
        let (a, b) = base.interval();
        let nodes = linalg::uniform_mesh(a, b, intervals);
        let (qx, qw) = linalg::gauss_legendre(quad);
        let mut d = Self {
            m,
            base,
            du,
            h: (b - a) / intervals as f64,
            nodes,
            qx,
            qw,
            k0: Vec::new(),
            b0: Vec::new(),
            b_total: DMatrix::zeros(0, 0),
            b_total_inv_du: DVector::zeros(0),
        };
        let zero = DVector::zeros(m.base_dim());
        let (k0, b0): (Vec<f64>, Vec<DMatrix<f64>>) = (0..intervals).map(|e| d.element(e, &zero, &zero)).unzip();
        let mut bt = DMatrix::zeros(m.rank(), m.rank());
        for be in &b0 {
            bt += be;
        }
        d.b_total_inv_du = bt.clone().lu().solve(&d.du).ok_or_else(|| Error::EndpointConjugate(b))?;
        d.k0 = k0;
        d.b0 = b0;
        d.b_total = bt;
        Ok(d)
    }

    fn dofs(&self) -> usize {
        (self.nodes.len() - 2) * self.m.base_dim()
    }

    /// Kinetic integral and `∫ρ⁻¹` over element `e` with nodal offsets at its ends.
    fn element(&self, e: usize, left: &DVector<f64>, right: &DVector<f64>) -> (f64, DMatrix<f64>) {
        let t0 = self.nodes[e];
        let mut k = 0.0;
        let mut bi = DMatrix::zeros(self.m.rank(), self.m.rank());
        let slope = (right - left) / self.h;
        for (xi, wi) in self.qx.iter().zip(&self.qw) {
            let lam = 0.5 * (xi + 1.0);
            let t = t0 + lam * self.h;
            let (x, dx) = self.base.eval(t);
            let x = x + left * (1.0 - lam) + right * lam;
            let dx = dx + &slope;
            let w = 0.5 * self.h * wi;
            k += w * (dx.transpose() * self.m.base_metric(x.as_slice()) * &dx)[0];
            let rinv = self.m.rho(x.as_slice()).try_inverse().unwrap_or_else(|| DMatrix::from_element(bi.nrows(), bi.ncols(), f64::NAN));
            bi += rinv * w;
        }
        (k, bi)
    }

    /// `E₀(c) − E₀(0)` for a sparse perturbation `(dof, value)`.
    fn delta(&self, pert: &[(usize, f64)]) -> f64 {
        let md = self.m.base_dim();
        let node_offset = |node: usize| {
            let mut o = DVector::zeros(md);
            if node == 0 || node == self.nodes.len() - 1 {
                return o;
            }
            for &(dof, val) in pert {
                if dof / md + 1 == node {
                    o[dof % md] += val;
                }
            }
            o
        };
        let mut elems = BTreeSet::new();
        for &(dof, _) in pert {
            let node = dof / md + 1;
            elems.insert(node - 1);
            elems.insert(node);
        }
        let mut dk = 0.0;
        let mut db = DMatrix::zeros(self.m.rank(), self.m.rank());
        for &e in &elems {
            let (k, b) = self.element(e, &node_offset(e), &node_offset(e + 1));
            dk += k - self.k0[e];
            db += b - &self.b0[e];
        }
        // ½Δu·[(B + ΔB)⁻¹ − B⁻¹]Δu = −½ ((B + ΔB)⁻¹Δu)·ΔB·(B⁻¹Δu).
        let y = (&self.b_total + &db).lu().solve(&self.du).unwrap_or_else(|| DVector::from_element(self.du.len(), f64::NAN));
        0.5 * dk - 0.5 * (y.transpose() * db * &self.b_total_inv_du)[0]
    }

    fn hessian(&self, h: f64) -> DMatrix<f64> {
        let n = self.dofs();
        let mut hm = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (self.delta(&[(i, h), (j, h)]) - self.delta(&[(i, h), (j, -h)]) - self.delta(&[(i, -h), (j, h)])
                    + self.delta(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h);
                hm[(i, j)] = v;
                hm[(j, i)] = v;
            }
        }
        hm
    }

    fn gradient(&self, h: f64) -> f64 {
        (0..self.dofs()).map(|i| ((self.delta(&[(i, h)]) - self.delta(&[(i, -h)])) / (2.0 * h)).abs()).fold(0.0, f64::max)
    }
}

/// Morse index of `E₀` at a critical base curve from finite-difference
/// Hessians on successively refined hat-function spaces.
pub fn e0_hessian_index(
    m: &GodelManifold,
    base: &BaseCurve,
    u0: &[f64],
    u1: &[f64],
    opts: &HessianOptions,
) -> Result<HessianIndexReport> {
    check_dims(m, base, u0, u1)?;
    if opts.meshes.is_empty() {
        return Err(Error::InvalidInput("at least one mesh is required".into()));
    }
    let du = DVector::from_column_slice(u1) - DVector::from_column_slice(u0);
    let need = opts.agreeing_meshes.max(1);
    let mut meshes: Vec<HessianMesh> = Vec::new();
    let mut stabilized_at = None;
    for &n in &opts.meshes {
        if n < 2 {
            return Err(Error::InvalidInput("meshes need at least two intervals".into()));
        }
        let d = E0Discretization::new(m, base, du.clone(), n, opts.quad_order)?;
        let h = opts.step;
        let hess = (d.hessian(0.5 * h) * 4.0 - d.hessian(h)) / 3.0;
        let ev = hess.symmetric_eigen().eigenvalues;
        let scale = ev.abs().max();
        let inertia = bilinear::inertia_of_eigenvalues(ev.as_slice(), opts.tol * scale);
        meshes.push(HessianMesh { intervals: n, inertia, gradient: d.gradient(h) });
        if meshes.len() >= need {
            let tail = &meshes[meshes.len() - need..];
            if tail.iter().all(|r| r.inertia.n_minus == tail[0].inertia.n_minus) {
                stabilized_at = Some(n);
                break;
            }
        }
    }
    let last = meshes.last().expect("nonempty");
    Ok(HessianIndexReport {
        stabilized_at,
        index: stabilized_at.map(|_| last.inertia.n_minus),
        degeneracy: stabilized_at.map(|_| last.inertia.degeneracy),
        meshes,
    })
}
