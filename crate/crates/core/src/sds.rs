//! Symplectic differential systems `(v, α)′ = X(t)(v, α)` with
//! `X = [[A, B], [C, −Aᵀ]]`, Lagrangian initial data and fundamental matrices.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bilinear::{self, Inertia, SymForm, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matfn::MatrixFn;

/// Number of sample points used to check coefficient invariants.
pub const VERIFICATION_POINTS: usize = 65;

/// Relative asymmetry tolerated in `B(t)` and `C(t)` before rejection.
const SYMMETRY_TOL: f64 = 1e-9;

/// Coefficients `(A, B, C)` of a symplectic system on `[a, b]`.
#[derive(Debug, Clone)]
pub struct CoefficientPath {
    n: usize,
    a: f64,
    b: f64,
    a_fn: MatrixFn,
    b_fn: MatrixFn,
    c_fn: MatrixFn,
    b_index: usize,
}

impl CoefficientPath {
    /// Validates shapes, symmetry of `B` and `C`, invertibility of `B` and
    /// constancy of `n₋(B)` on a verification mesh.
    pub fn new(a_fn: MatrixFn, b_fn: MatrixFn, c_fn: MatrixFn, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        let n = a_fn.shape().0;
        for (name, f) in [("A", &a_fn), ("B", &b_fn), ("C", &c_fn)] {
            if f.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("{name} has shape {:?}, expected {n}x{n}", f.shape())));
            }
        }
        if n == 0 {
            return Err(Error::InvalidInput("system dimension must be positive".into()));
        }
        let mut b_index = None;
        for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
            let bm = b_fn.eval(t);
            check_symmetric(&bm, t, "B")?;
            check_symmetric(&c_fn.eval(t), t, "C")?;
            let inr = bilinear::inertia(&SymForm::new(bm)?, 1e-12);
            if inr.degeneracy != 0 {
                return Err(Error::Singular { t, what: "B".into() });
            }
            match b_index {
                None => b_index = Some(inr.n_minus),
                Some(k) if k != inr.n_minus => {
                    return Err(Error::Precondition(format!("index of B changes from {k} to {} at t = {t}", inr.n_minus)));
                }
                _ => {}
            }
        }
        Ok(Self { n, a, b, a_fn, b_fn, c_fn, b_index: b_index.unwrap_or(0) })
    }

    /// Constant-coefficient system.
    pub fn constant(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, interval: (f64, f64)) -> Result<Self> {
        Self::new(MatrixFn::constant(a), MatrixFn::constant(b), MatrixFn::constant(c), interval)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    /// `n₋(B(t))`, constant along the path.
    pub fn b_index(&self) -> usize {
        self.b_index
    }

    pub fn a_fn(&self) -> &MatrixFn {
        &self.a_fn
    }

    pub fn b_fn(&self) -> &MatrixFn {
        &self.b_fn
    }

    pub fn c_fn(&self) -> &MatrixFn {
        &self.c_fn
    }

    pub fn a(&self, t: f64) -> DMatrix<f64> {
        self.a_fn.eval(t)
    }

    pub fn b(&self, t: f64) -> DMatrix<f64> {
        linalg::symmetrize(&self.b_fn.eval(t))
    }

    pub fn c(&self, t: f64) -> DMatrix<f64> {
        linalg::symmetrize(&self.c_fn.eval(t))
    }

    pub fn b_inv(&self, t: f64) -> DMatrix<f64> {
        let inv = self.b(t).try_inverse().unwrap_or_else(|| DMatrix::from_element(self.n, self.n, f64::NAN));
        linalg::symmetrize(&inv)
    }

    /// The `2n×2n` coefficient matrix.
    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.n;
        let a = self.a(t);
        let mut x = DMatrix::zeros(2 * n, 2 * n);
        x.view_mut((0, 0), (n, n)).copy_from(&a);
        x.view_mut((0, n), (n, n)).copy_from(&self.b(t));
        x.view_mut((n, 0), (n, n)).copy_from(&self.c(t));
        x.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
        x
    }

    /// Same coefficients on a different interval.
    pub fn with_interval(&self, interval: (f64, f64)) -> Result<Self> {
        Self::new(self.a_fn.clone(), self.b_fn.clone(), self.c_fn.clone(), interval)
    }

    /// `B(t)⁻¹(v′ − A v)`.
    pub fn alpha_at(&self, t: f64, v: &DVector<f64>, dv: &DVector<f64>) -> DVector<f64> {
        self.b_inv(t) * (dv - self.a(t) * v)
    }
}

fn check_symmetric(m: &DMatrix<f64>, t: f64, what: &str) -> Result<()> {
    let scale = linalg::max_abs(m).max(1.0);
    if linalg::max_abs(&(m - m.transpose())) > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric { t, what: what.into() });
    }
    Ok(())
}

/// Morse–Sturm system `A = 0, B = g⁻¹, C = gR`.
pub fn make_morse_sturm(g: &SymForm, r: &MatrixFn, interval: (f64, f64)) -> Result<CoefficientPath> {
    let n = g.dim();
    if r.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("R has shape {:?}, metric is {n}x{n}", r.shape())));
    }
    if bilinear::inertia(g, 1e-12).degeneracy != 0 {
        return Err(Error::DegenerateForm("metric g is degenerate".into()));
    }
    let g_inv = g.matrix().clone().try_inverse().ok_or_else(|| Error::DegenerateForm("metric g is singular".into()))?;
    let c = r.left_mul(g.matrix())?;
    for t in linalg::uniform_mesh(interval.0, interval.1, VERIFICATION_POINTS - 1) {
        check_symmetric(&c.eval(t), t, "gR")?;
    }
    CoefficientPath::new(MatrixFn::zeros(n, n), MatrixFn::constant(linalg::symmetrize(&g_inv)), c, interval)
}

/// `α_v` as a path, with `v` given as an `n×1` matrix function.
pub fn alpha_of(x: &CoefficientPath, v: &MatrixFn) -> MatrixFn {
    let x = x.clone();
    let v = v.clone();
    let dv = v.derivative();
    let cols = v.shape().1;
    MatrixFn::from_fn(x.n(), cols, move |t| x.b_inv(t) * (dv.eval(t) - x.a(t) * v.eval(t)))
}

/// Lagrangian initial subspace encoded by a subspace `P` and a symmetric form `S` on it.
#[derive(Debug, Clone)]
pub struct InitialData {
    p: Subspace,
    s: SymForm,
}

impl InitialData {
    pub fn new(p: Subspace, s: SymForm) -> Result<Self> {
        if s.dim() != p.dim() {
            return Err(Error::DimensionMismatch(format!("S is {}-dimensional but P has dimension {}", s.dim(), p.dim())));
        }
        Ok(Self { p, s })
    }

    /// `L₀ = {0} ⊕ ℝⁿ*`, i.e. `v(a) = 0`.
    pub fn l0(n: usize) -> Self {
        Self { p: Subspace::zero(n), s: SymForm::zero(0) }
    }

    pub fn p(&self) -> &Subspace {
        &self.p
    }

    pub fn s(&self) -> &SymForm {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.p.ambient_dim()
    }

    pub fn is_l0(&self) -> bool {
        self.p.dim() == 0
    }

    /// `2n×n` frame `[[P, 0], [−P·S, Q]]` with `Q` an orthonormal basis of `P⊥`.
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.n();
        let k = self.p.dim();
        let pb = self.p.basis();
        let q = self.p.euclidean_complement();
        let mut f = DMatrix::zeros(2 * n, n);
        if k > 0 {
            f.view_mut((0, 0), (n, k)).copy_from(pb);
            f.view_mut((n, 0), (n, k)).copy_from(&(-(pb * self.s.matrix())));
        }
        f.view_mut((n, k), (n, n - k)).copy_from(q.basis());
        f
    }

    /// Recovers `(P, S)` from any frame of a Lagrangian subspace.
    pub fn from_lagrangian_frame(frame: &DMatrix<f64>) -> Result<Self> {
        let n = frame.ncols();
        if frame.nrows() != 2 * n {
            return Err(Error::DimensionMismatch("Lagrangian frame must be 2n x n".into()));
        }
        let v = frame.rows(0, n).into_owned();
        let lam = frame.rows(n, n).into_owned();
        let p = Subspace::span(&v);
        let k = p.dim();
        if k == 0 {
            return Ok(Self::l0(n));
        }
        let pinv = v.clone().pseudo_inverse(1e-12 * linalg::max_abs(&v)).map_err(|e| Error::Integration(e.to_string()))?;
        let coeffs = &pinv * p.basis();
        let alphas = &lam * coeffs;
        let s = -(p.basis().transpose() * alphas);
        Ok(Self { p, s: SymForm::new(s)? })
    }
}

/// Time nodes, fundamental matrices and symplectic diagnostics of an RK4 integration.
#[derive(Debug, Clone)]
pub struct FundamentalPath {
    system: CoefficientPath,
    nodes: Vec<f64>,
    values: Vec<DMatrix<f64>>,
    slopes: Vec<DMatrix<f64>>,
    residuals: Vec<f64>,
    reprojections: Vec<ReprojectionEvent>,
    tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReprojectionEvent {
    pub node: usize,
    pub t: f64,
    pub residual_before: f64,
    pub residual_after: f64,
}

/// `‖ΦᵀJΦ − J‖∞` (maximum absolute row sum).
pub fn symplectic_residual(phi: &DMatrix<f64>) -> f64 {
    let j = linalg::canonical_j(phi.nrows() / 2);
    let d = phi.transpose() * &j * phi - j;
    d.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Iterated first-order correction `M ← M(I + ½Jδ)`, `δ = MᵀJM − J`.
pub fn reproject_symplectic(m: &DMatrix<f64>) -> DMatrix<f64> {
    let j = linalg::canonical_j(m.nrows() / 2);
    let id = DMatrix::identity(m.nrows(), m.nrows());
    let mut out = m.clone();
    for _ in 0..5 {
        let delta = out.transpose() * &j * &out - &j;
        if linalg::max_abs(&delta) < 1e-15 {
            break;
        }
        out = &out * (&id + &j * &delta * 0.5);
    }
    out
}

fn rk4_step(x: &CoefficientPath, t: f64, h: f64, m: &DMatrix<f64>) -> DMatrix<f64> {
    let x0 = x.matrix(t);
    let xm = x.matrix(t + 0.5 * h);
    let x1 = x.matrix(t + h);
    let k1 = &x0 * m;
    let k2 = &xm * (m + &k1 * (0.5 * h));
    let k3 = &xm * (m + &k2 * (0.5 * h));
    let k4 = &x1 * (m + &k3 * h);
    m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates `Φ′ = XΦ`, `Φ(a) = I` with `steps` uniform RK4 steps.
///
/// Nodes whose symplectic residual exceeds `tol` are re-projected.
pub fn integrate_fundamental(x: &CoefficientPath, steps: usize, tol: f64) -> Result<FundamentalPath> {
    if steps < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 steps, got {steps}")));
    }
    let (a, b) = x.interval();
    let nodes = linalg::uniform_mesh(a, b, steps);
    let h = (b - a) / steps as f64;
    let dim = 2 * x.n();
    let mut values = Vec::with_capacity(steps + 1);
    let mut residuals = Vec::with_capacity(steps + 1);
    let mut reprojections = Vec::new();
    let mut m = DMatrix::identity(dim, dim);
    values.push(m.clone());
    residuals.push(0.0);
    for k in 0..steps {
        m = rk4_step(x, nodes[k], h, &m);
        let mut res = symplectic_residual(&m);
        if !res.is_finite() {
            return Err(Error::Integration(format!("non-finite fundamental matrix at t = {}", nodes[k + 1])));
        }
        if res > tol {
            let fixed = reproject_symplectic(&m);
            let after = symplectic_residual(&fixed);
            reprojections.push(ReprojectionEvent { node: k + 1, t: nodes[k + 1], residual_before: res, residual_after: after });
            if after > tol {
                return Err(Error::Integration(format!(
                    "symplectic residual {after:.3e} above {tol:.1e} after re-projection at t = {}",
                    nodes[k + 1]
                )));
            }
            m = fixed;
            res = after;
        }
        values.push(m.clone());
        residuals.push(res);
    }
    let slopes = nodes.iter().zip(values.iter()).map(|(&t, v)| x.matrix(t) * v).collect();
    Ok(FundamentalPath { system: x.clone(), nodes, values, slopes, residuals, reprojections, tol })
}

impl FundamentalPath {
    pub fn system(&self) -> &CoefficientPath {
        &self.system
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn reprojections(&self) -> &[ReprojectionEvent] {
        &self.reprojections
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    fn locate(&self, t: f64) -> usize {
        let a = self.nodes[0];
        let k = ((t - a) / self.step()).floor();
        (k.max(0.0) as usize).min(self.nodes.len() - 2)
    }

    /// Cubic Hermite interpolant of the node values.
    pub fn interpolate(&self, t: f64) -> DMatrix<f64> {
        let k = self.locate(t);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        &self.values[k] * h00 + &self.slopes[k] * (h10 * h) + &self.values[k + 1] * h01 + &self.slopes[k + 1] * (h11 * h)
    }

    /// Derivative of the Hermite interpolant.
    pub fn interpolate_derivative(&self, t: f64) -> DMatrix<f64> {
        let k = self.locate(t);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let d00 = (6.0 * s * s - 6.0 * s) / h;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = (-6.0 * s * s + 6.0 * s) / h;
        let d11 = 3.0 * s * s - 2.0 * s;
        &self.values[k] * d00 + &self.slopes[k] * d10 + &self.values[k + 1] * d01 + &self.slopes[k + 1] * d11
    }

    /// `Φ(t)` by a fresh RK4 step from the nearest node at or before `t`.
    pub fn evaluate(&self, t: f64) -> DMatrix<f64> {
        let k = self.locate(t);
        let dt = t - self.nodes[k];
        if dt == 0.0 {
            return self.values[k].clone();
        }
        rk4_step(&self.system, self.nodes[k], dt, &self.values[k])
    }
}

/// `t ↦ Φ(t)·F₀` for a frame `F₀` of `ℓ₀`.
#[derive(Debug, Clone)]
pub struct LagrangianPath<'a> {
    phi: &'a FundamentalPath,
    frame0: DMatrix<f64>,
}

pub fn lagrangian_frame<'a>(phi: &'a FundamentalPath, l0: &InitialData) -> LagrangianPath<'a> {
    LagrangianPath { phi, frame0: l0.frame() }
}

impl<'a> LagrangianPath<'a> {
    pub fn fundamental(&self) -> &'a FundamentalPath {
        self.phi
    }

    pub fn initial_frame(&self) -> &DMatrix<f64> {
        &self.frame0
    }

    pub fn frame(&self, t: f64) -> DMatrix<f64> {
        self.phi.evaluate(t) * &self.frame0
    }

    pub fn frame_at_node(&self, k: usize) -> DMatrix<f64> {
        &self.phi.values[k] * &self.frame0
    }

    /// Top `n×n` block of the frame, whose columns span `𝕍[t]`.
    pub fn v_block(&self, t: f64) -> DMatrix<f64> {
        let n = self.frame0.ncols();
        self.frame(t).rows(0, n).into_owned()
    }

    /// `V`-block of the orthonormalized frame (QR with positive diagonal);
    /// `det` keeps the sign of `det V` and singular values lie in `[0, 1]`.
    pub fn normalized_v_block(&self, t: f64) -> DMatrix<f64> {
        normalized_v(&self.frame(t))
    }
}

pub(crate) fn normalized_v(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = frame.ncols();
    let qr = frame.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            let mut c = q.column_mut(i);
            c.neg_mut();
        }
    }
    q.rows(0, n).into_owned()
}

/// Symplectic change of variables `φ = [[Z, 0], [Z⁻ᵀW, Z⁻ᵀ]]`, which fixes `L₀`.
#[derive(Debug, Clone)]
pub struct Isomorphism {
    pub z: MatrixFn,
    pub w: MatrixFn,
}

impl Isomorphism {
    pub fn new(z: MatrixFn, w: MatrixFn) -> Result<Self> {
        let (r, c) = z.shape();
        if r != c || w.shape() != (r, r) {
            return Err(Error::DimensionMismatch("Z and W must be square of equal size".into()));
        }
        Ok(Self { z, w })
    }

    pub fn identity(n: usize) -> Self {
        Self { z: MatrixFn::identity(n), w: MatrixFn::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.z.shape().0
    }

    fn z_inv(&self, t: f64) -> Result<DMatrix<f64>> {
        let z = self.z.eval(t);
        let sv = linalg::singular_values(&z);
        if sv.is_empty() || sv[sv.len() - 1] <= 1e-13 * sv[0] {
            return Err(Error::Singular { t, what: "Z".into() });
        }
        z.try_inverse().ok_or(Error::Singular { t, what: "Z".into() })
    }

    /// `φ(t)` as a `2n×2n` matrix.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let zit = self.z_inv(t)?.transpose();
        let w = linalg::symmetrize(&self.w.eval(t));
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.z.eval(t));
        m.view_mut((n, 0), (n, n)).copy_from(&(&zit * w));
        m.view_mut((n, n), (n, n)).copy_from(&zit);
        Ok(m)
    }

    /// `φ′(t)`.
    pub fn derivative(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let zit = self.z_inv(t)?.transpose();
        let dz = self.z.derivative().eval(t);
        let dzit = -(&zit * dz.transpose() * &zit);
        let w = linalg::symmetrize(&self.w.eval(t));
        let dw = linalg::symmetrize(&self.w.derivative().eval(t));
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&dz);
        m.view_mut((n, 0), (n, n)).copy_from(&(&dzit * w + &zit * dw));
        m.view_mut((n, n), (n, n)).copy_from(&dzit);
        Ok(m)
    }

    pub fn inverse_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let zi = self.z_inv(t)?;
        let w = linalg::symmetrize(&self.w.eval(t));
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&zi);
        m.view_mut((n, 0), (n, n)).copy_from(&(-(w * &zi)));
        m.view_mut((n, n), (n, n)).copy_from(&self.z.eval(t).transpose());
        Ok(m)
    }

    /// `X̃ = φ′φ⁻¹ + φXφ⁻¹` at `t`.
    pub fn transformed_matrix(&self, x: &CoefficientPath, t: f64) -> Result<DMatrix<f64>> {
        let phi_inv = self.inverse_matrix(t)?;
        Ok(self.derivative(t)? * &phi_inv + self.matrix(t)? * x.matrix(t) * &phi_inv)
    }
}

/// Transports `(X, ℓ₀)` along `φ`: returns `X̃` and `ℓ̃₀ = φ(a)(ℓ₀)`.
pub fn apply_isomorphism(phi: &Isomorphism, x: &CoefficientPath, l0: &InitialData) -> Result<(CoefficientPath, InitialData)> {
    let n = x.n();
    if phi.n() != n || l0.n() != n {
        return Err(Error::DimensionMismatch("isomorphism, system and initial data dimensions differ".into()));
    }
    let (a, b) = x.interval();
    for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
        phi.z_inv(t)?;
    }
    let block = |r0: usize, c0: usize| {
        let phi = phi.clone();
        let x = x.clone();
        MatrixFn::from_fn(n, n, move |t| {
            phi.transformed_matrix(&x, t)
                .map(|m| m.view((r0, c0), (n, n)).into_owned())
                .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN))
        })
        .with_step(1e-5 * (b - a))
    };
    let xt = CoefficientPath::new(block(0, 0), block(0, n), block(n, 0), (a, b))?;
    let lt = InitialData::from_lagrangian_frame(&(phi.matrix(a)? * l0.frame()))?;
    Ok((xt, lt))
}

/// Inertia of `B(a)⁻¹` restricted to `P`, and whether it is nondegenerate.
pub fn initial_condition_index(x: &CoefficientPath, l0: &InitialData, tol: f64) -> Result<(usize, bool)> {
    let inr = initial_condition_inertia(x, l0, tol)?;
    Ok((inr.n_minus, inr.is_nondegenerate()))
}

pub fn initial_condition_inertia(x: &CoefficientPath, l0: &InitialData, tol: f64) -> Result<Inertia> {
    let form = SymForm::new(x.b_inv(x.start()))?;
    let r = bilinear::restrict(&form, l0.p())?;
    Ok(bilinear::inertia(&r, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfn::ExprMatrix;

    fn oscillator(omega: f64, interval: (f64, f64)) -> CoefficientPath {
        let r = MatrixFn::constant(DMatrix::from_element(1, 1, -omega * omega));
        make_morse_sturm(&SymForm::identity(1), &r, interval).unwrap()
    }

    #[test]
    fn morse_sturm_examples() {
        let x = oscillator(2.0, (0.0, 1.0));
        assert_eq!(x.a(0.3)[(0, 0)], 0.0);
        assert_eq!(x.b(0.3)[(0, 0)], 1.0);
        assert_eq!(x.c(0.3)[(0, 0)], -4.0);

        let g = SymForm::diagonal(&[1.0, -1.0]);
        let r = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, -9.0])));
        let x = make_morse_sturm(&g, &r, (0.0, 1.0)).unwrap();
        assert_eq!(x.c(0.5), DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, 9.0])));
        assert_eq!(x.b_index(), 1);

        let r = MatrixFn::constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(matches!(make_morse_sturm(&g, &r, (0.0, 1.0)), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn alpha_examples() {
        let x = oscillator(1.0, (0.0, 1.0));
        let v = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["t^2"]]).unwrap());
        let a = alpha_of(&x, &v);
        assert!((a.eval(0.5)[(0, 0)] - 1.0).abs() < 1e-12);

        let omega: f64 = 3.0;
        let g = SymForm::diagonal(&[1.0, -1.0]);
        let x = make_morse_sturm(&g, &MatrixFn::zeros(2, 2), (0.0, 1.0)).unwrap();
        let v = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["sin(3*t)"], vec!["0"]]).unwrap());
        let a = alpha_of(&x, &v).eval(0.4);
        assert!((a[(0, 0)] - omega * (omega * 0.4).cos()).abs() < 1e-12);
        assert_eq!(a[(1, 0)], 0.0);
    }

    #[test]
    fn alpha_product_rule() {
        let b = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["2+t", "0.5"], vec!["0.5", "-1-t^2"]]).unwrap());
        let a = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["t", "1"], vec!["0", "sin(t)"]]).unwrap());
        let x = CoefficientPath::new(a, b, MatrixFn::zeros(2, 2), (0.0, 1.0)).unwrap();
        let v = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["cos(t)"], vec!["exp(t)"]]).unwrap());
        let fv = MatrixFn::from_exprs(ExprMatrix::parse(&[vec!["t*cos(t)"], vec!["t*exp(t)"]]).unwrap());
        for &t in &[0.1, 0.5, 0.9] {
            let lhs = alpha_of(&x, &fv).eval(t);
            let rhs = alpha_of(&x, &v).eval(t) * t + x.b_inv(t) * v.eval(t);
            assert!((lhs - rhs).amax() < 1e-12);
        }
    }

    #[test]
    fn flat_system_fundamental_matrix() {
        let x = CoefficientPath::constant(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2), (0.0, 1.0)).unwrap();
        let phi = integrate_fundamental(&x, 16, 1e-10).unwrap();
        let t = 0.55;
        let mut expect = DMatrix::identity(4, 4);
        expect[(0, 2)] = t;
        expect[(1, 3)] = t;
        assert!((phi.evaluate(t) - expect).amax() < 1e-14);
        assert!(phi.reprojections().is_empty());
    }

    #[test]
    fn oscillator_matches_closed_form() {
        let omega = 3.0;
        let x = oscillator(omega, (0.0, 2.0));
        let phi = integrate_fundamental(&x, 2000, 1e-8).unwrap();
        for &t in &[0.37, 1.0, 1.99] {
            let m = phi.evaluate(t);
            let (c, s) = ((omega * t).cos(), (omega * t).sin());
            let expect = DMatrix::from_row_slice(2, 2, &[c, s / omega, -omega * s, c]);
            assert!((m - expect).amax() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn reprojection_restores_symplecticity() {
        let x = oscillator(2.0, (0.0, 1.0));
        let exact = integrate_fundamental(&x, 50, 1e-10).unwrap().evaluate(0.7);
        let mut m = exact.clone();
        m[(0, 1)] += 1e-6;
        m[(1, 0)] -= 2e-6;
        assert!(symplectic_residual(&m) > 1e-7);
        let fixed = reproject_symplectic(&m);
        assert!(symplectic_residual(&fixed) < 1e-13);
        assert!((fixed - exact).amax() < 1e-5);
    }

    #[test]
    fn l0_frame_and_recovery() {
        let l0 = InitialData::l0(2);
        let f = l0.frame();
        assert_eq!(f.rows(0, 2).amax(), 0.0);
        let p = Subspace::from_vectors(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let s = SymForm::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0])).unwrap();
        let d = InitialData::new(p.clone(), s.clone()).unwrap();
        let f = d.frame();
        let j = linalg::canonical_j(3);
        assert!((f.transpose() * &j * &f).amax() < 1e-14);
        let back = InitialData::from_lagrangian_frame(&(&f * DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]))).unwrap();
        // Same P; S agrees after expressing both in a common basis.
        let change = back.p().basis().transpose() * p.basis();
        let s_back = change.transpose() * back.s().matrix() * &change;
        assert!((s_back - s.matrix()).amax() < 1e-12);
    }

    #[test]
    fn initial_condition_index_examples() {
        let g = SymForm::diagonal(&[1.0, -1.0]);
        let x = make_morse_sturm(&g, &MatrixFn::zeros(2, 2), (0.0, 1.0)).unwrap();
        assert_eq!(initial_condition_index(&x, &InitialData::l0(2), 1e-8).unwrap(), (0, true));
        let p = Subspace::from_vectors(2, &[vec![0.0, 1.0]]).unwrap();
        let d = InitialData::new(p, SymForm::zero(1)).unwrap();
        assert_eq!(initial_condition_index(&x, &d, 1e-8).unwrap(), (1, true));
        let p = Subspace::from_vectors(2, &[vec![1.0, 1.0]]).unwrap();
        let d = InitialData::new(p, SymForm::zero(1)).unwrap();
        assert_eq!(initial_condition_index(&x, &d, 1e-8).unwrap(), (0, false));
    }

    #[test]
    fn identity_isomorphism_is_trivial() {
        let x = oscillator(2.0, (0.0, 1.0));
        let (xt, lt) = apply_isomorphism(&Isomorphism::identity(1), &x, &InitialData::l0(1)).unwrap();
        assert!((xt.matrix(0.4) - x.matrix(0.4)).amax() < 1e-12);
        assert!(lt.is_l0());
    }
}
