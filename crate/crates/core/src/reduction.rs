//! Reduced symplectic systems built from a frame of a nondegenerate family of
//! subspaces, and the `B^∫` shortcut for symmetric solution frames.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bilinear::{self, SymForm, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maslov::golden_min;
use crate::matfn::MatrixFn;
use crate::sds::{CoefficientPath, VERIFICATION_POINTS};

/// Frame `(Y₁, …, Y_r)` stored as the columns of an `n×r` matrix function.
#[derive(Debug, Clone)]
pub struct Frame {
    y: MatrixFn,
    dy: MatrixFn,
    ddy: MatrixFn,
    pub is_solution_frame: bool,
    pub is_symmetric_frame: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameCheck {
    pub is_solution_frame: bool,
    pub is_symmetric_frame: bool,
    /// Max of `‖α_Y′ − CY + Aᵀα_Y‖` over the verification mesh, relative.
    pub solution_residual: f64,
    /// Max asymmetry of `Yᵀα_Y`, relative.
    pub symmetry_residual: f64,
}

impl Frame {
    /// Derivatives are taken from `y` (exact for expression entries).
    pub fn new(y: MatrixFn) -> Self {
        let dy = y.derivative();
        let ddy = dy.derivative();
        Self::from_parts(y, dy, ddy)
    }

    pub fn from_parts(y: MatrixFn, dy: MatrixFn, ddy: MatrixFn) -> Self {
        Self { y, dy, ddy, is_solution_frame: false, is_symmetric_frame: false }
    }

    /// Constant frame spanned by the given columns.
    pub fn constant(y: DMatrix<f64>) -> Self {
        Self::new(MatrixFn::constant(y))
    }

    pub fn rank(&self) -> usize {
        self.y.shape().1
    }

    pub fn n(&self) -> usize {
        self.y.shape().0
    }

    pub fn y(&self, t: f64) -> DMatrix<f64> {
        self.y.eval(t)
    }

    pub fn dy(&self, t: f64) -> DMatrix<f64> {
        self.dy.eval(t)
    }

    pub fn ddy(&self, t: f64) -> DMatrix<f64> {
        self.ddy.eval(t)
    }

    pub fn y_fn(&self) -> &MatrixFn {
        &self.y
    }

    /// Right-multiplies the frame by an invertible `r×r` path `M(t)`.
    pub fn recombined(&self, m: &MatrixFn) -> Frame {
        let (y, dy, ddy) = (self.y.clone(), self.dy.clone(), self.ddy.clone());
        let (m0, m1, m2) = (m.clone(), m.derivative(), m.derivative().derivative());
        let (n, r) = (self.n(), self.rank());
        let yy = {
            let (y, m0) = (y.clone(), m0.clone());
            MatrixFn::from_fn(n, r, move |t| y.eval(t) * m0.eval(t))
        };
        let dyy = {
            let (y, dy, m0, m1) = (y.clone(), dy.clone(), m0.clone(), m1.clone());
            MatrixFn::from_fn(n, r, move |t| dy.eval(t) * m0.eval(t) + y.eval(t) * m1.eval(t))
        };
        let ddyy = MatrixFn::from_fn(n, r, move |t| {
            ddy.eval(t) * m0.eval(t) + dy.eval(t) * m1.eval(t) * 2.0 + y.eval(t) * m2.eval(t)
        });
        Frame::from_parts(yy, dyy, ddyy)
    }

    /// Checks the solution and symmetry conditions on a verification mesh and
    /// records the outcome in the flags.
    pub fn verify(&mut self, x: &CoefficientPath, tol: f64) -> FrameCheck {
        let (a, b) = x.interval();
        let mut sol: f64 = 0.0;
        let mut sym: f64 = 0.0;
        for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
            let y = self.y(t);
            let alpha = alpha_y(x, self, t);
            let dalpha = alpha_y_prime(x, self, t);
            let res = &dalpha - x.c(t) * &y + x.a(t).transpose() * &alpha;
            let scale = linalg::max_abs(&dalpha).max(linalg::max_abs(&(x.c(t) * &y))).max(1.0);
            sol = sol.max(linalg::max_abs(&res) / scale);
            let cal_a = y.transpose() * &alpha;
            let s = linalg::max_abs(&cal_a).max(1.0);
            sym = sym.max(linalg::max_abs(&(&cal_a - cal_a.transpose())) / s);
        }
        self.is_solution_frame = sol <= tol;
        self.is_symmetric_frame = sym <= tol;
        FrameCheck {
            is_solution_frame: self.is_solution_frame,
            is_symmetric_frame: self.is_symmetric_frame,
            solution_residual: sol,
            symmetry_residual: sym,
        }
    }
}

/// `α_{Y}(t) = B⁻¹(Y′ − AY)`, column by column.
pub fn alpha_y(x: &CoefficientPath, frame: &Frame, t: f64) -> DMatrix<f64> {
    x.b_inv(t) * (frame.dy(t) - x.a(t) * frame.y(t))
}

/// `α_Y′ = −B⁻¹B′B⁻¹(Y′ − AY) + B⁻¹(Y″ − A′Y − AY′)`.
pub fn alpha_y_prime(x: &CoefficientPath, frame: &Frame, t: f64) -> DMatrix<f64> {
    let binv = x.b_inv(t);
    let db = x.b_fn().derivative().eval(t);
    let a = x.a(t);
    let da = x.a_fn().derivative().eval(t);
    let (y, dy, ddy) = (frame.y(t), frame.dy(t), frame.ddy(t));
    -(&binv * db * &binv * (&dy - &a * &y)) + &binv * (ddy - da * &y - a * dy)
}

/// The matrices `𝒜`, `𝔅`, `ℭ` of a frame relative to a system.
#[derive(Debug, Clone)]
pub struct ReducedCoefficients {
    x: CoefficientPath,
    frame: Frame,
    index: usize,
}

impl ReducedCoefficients {
    pub fn system(&self) -> &CoefficientPath {
        &self.x
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// Index of the family with respect to the system: `n₋(𝔅)`.
    pub fn index(&self) -> usize {
        self.index
    }

    /// `𝒜_ij = α_{Y_j}(Y_i)`.
    pub fn cal_a(&self, t: f64) -> DMatrix<f64> {
        self.frame.y(t).transpose() * alpha_y(&self.x, &self.frame, t)
    }

    /// `𝔅_ij = B⁻¹(Y_i, Y_j)`.
    pub fn cal_b(&self, t: f64) -> DMatrix<f64> {
        let y = self.frame.y(t);
        linalg::symmetrize(&(y.transpose() * self.x.b_inv(t) * y))
    }

    /// `ℭ_ij = B(α_{Y_i}, α_{Y_j}) + C(Y_i, Y_j)`.
    pub fn cal_c(&self, t: f64) -> DMatrix<f64> {
        let y = self.frame.y(t);
        let al = alpha_y(&self.x, &self.frame, t);
        linalg::symmetrize(&(al.transpose() * self.x.b(t) * &al + y.transpose() * self.x.c(t) * y))
    }

    /// `𝒜′ = Y′ᵀα_Y + Yᵀα_Y′`.
    pub fn cal_a_prime(&self, t: f64) -> DMatrix<f64> {
        self.frame.dy(t).transpose() * alpha_y(&self.x, &self.frame, t)
            + self.frame.y(t).transpose() * alpha_y_prime(&self.x, &self.frame, t)
    }

    pub fn cal_a_sym(&self, t: f64) -> DMatrix<f64> {
        linalg::symmetrize(&self.cal_a(t))
    }

    pub fn cal_a_ant(&self, t: f64) -> DMatrix<f64> {
        let a = self.cal_a(t);
        (&a - a.transpose()) * 0.5
    }

    pub fn cal_b_inv(&self, t: f64) -> DMatrix<f64> {
        let inv = self.cal_b(t).try_inverse().unwrap_or_else(|| DMatrix::from_element(self.rank(), self.rank(), f64::NAN));
        linalg::symmetrize(&inv)
    }

    pub fn cal_b_fn(&self) -> MatrixFn {
        let me = self.clone();
        MatrixFn::from_fn(self.rank(), self.rank(), move |t| me.cal_b(t))
    }

    pub fn cal_b_inv_fn(&self) -> MatrixFn {
        let me = self.clone();
        MatrixFn::from_fn(self.rank(), self.rank(), move |t| me.cal_b_inv(t))
    }
}

/// Validates the frame (independent columns, `𝔅` nondegenerate with constant
/// inertia) and packages the reduced coefficients.
pub fn reduced_coefficients(x: &CoefficientPath, frame: &Frame) -> Result<ReducedCoefficients> {
    if frame.n() != x.n() {
        return Err(Error::DimensionMismatch(format!("frame lives in R^{} but system in R^{}", frame.n(), x.n())));
    }
    let r = frame.rank();
    if r == 0 || r > x.n() {
        return Err(Error::InvalidInput(format!("frame rank {r} must lie in 1..={}", x.n())));
    }
    let (a, b) = x.interval();
    let mut index = None;
    let rc = ReducedCoefficients { x: x.clone(), frame: frame.clone(), index: 0 };
    for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
        let y = frame.y(t);
        let sv = linalg::singular_values(&y);
        if sv[r - 1] <= 1e-12 * sv[0].max(1e-300) {
            return Err(Error::Singular { t, what: "frame".into() });
        }
        let inr = bilinear::inertia(&SymForm::new(rc.cal_b(t))?, 1e-10);
        if inr.degeneracy != 0 {
            return Err(Error::Singular { t, what: "reduced fundamental coefficient".into() });
        }
        match index {
            None => index = Some(inr.n_minus),
            Some(k) if k != inr.n_minus => {
                return Err(Error::Precondition(format!("index of the family changes at t = {t}")));
            }
            _ => {}
        }
    }
    Ok(ReducedCoefficients { index: index.unwrap_or(0), ..rc })
}

fn fn_of(rc: &ReducedCoefficients, f: impl Fn(&ReducedCoefficients, f64) -> DMatrix<f64> + Send + Sync + 'static) -> MatrixFn {
    let me = rc.clone();
    let (a, b) = rc.x.interval();
    let r = rc.rank();
    MatrixFn::from_fn(r, r, move |t| f(&me, t)).with_step(1e-5 * (b - a))
}

/// `A_red = −𝔅⁻¹𝒜`, `B_red = 𝔅⁻¹`, `C_red = ℭ − 𝒜ᵀ𝔅⁻¹𝒜`.
pub fn build_reduced(rc: &ReducedCoefficients) -> Result<CoefficientPath> {
    let a_red = fn_of(rc, |m, t| -(m.cal_b_inv(t) * m.cal_a(t)));
    let b_red = fn_of(rc, |m, t| m.cal_b_inv(t));
    let c_red = fn_of(rc, |m, t| {
        let a = m.cal_a(t);
        linalg::symmetrize(&(m.cal_c(t) - a.transpose() * m.cal_b_inv(t) * &a))
    });
    let out = CoefficientPath::new(a_red, b_red, c_red, rc.x.interval())?;
    if out.b_index() != rc.index() {
        return Err(Error::Precondition(format!(
            "reduced system index {} differs from the family index {}",
            out.b_index(),
            rc.index()
        )));
    }
    Ok(out)
}

/// `Ã = −𝔅⁻¹𝒜_ant`, `B̃ = 𝔅⁻¹`, `C̃ = ℭ − 𝒜′_sym + 𝒜_ant𝔅⁻¹𝒜_ant`.
///
/// For verified symmetric solution frames, checks that `Ã` and `C̃` vanish.
pub fn build_tilde_reduced(rc: &ReducedCoefficients) -> Result<CoefficientPath> {
    let a_t = fn_of(rc, |m, t| -(m.cal_b_inv(t) * m.cal_a_ant(t)));
    let b_t = fn_of(rc, |m, t| m.cal_b_inv(t));
    let c_t = fn_of(rc, |m, t| {
        let ant = m.cal_a_ant(t);
        linalg::symmetrize(&(m.cal_c(t) - linalg::symmetrize(&m.cal_a_prime(t)) + &ant * m.cal_b_inv(t) * &ant))
    });
    let out = CoefficientPath::new(a_t, b_t, c_t, rc.x.interval())?;
    if rc.frame.is_solution_frame && rc.frame.is_symmetric_frame {
        let (a, b) = rc.x.interval();
        for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
            let scale = linalg::max_abs(&rc.cal_c(t)).max(linalg::max_abs(&rc.cal_b_inv(t))).max(1.0);
            let dev = linalg::max_abs(&out.a(t)).max(linalg::max_abs(&out.c(t)));
            if dev > 1e-6 * scale {
                return Err(Error::Precondition(format!(
                    "symmetric solution frame but reduced coefficients do not vanish at t = {t} (deviation {dev:.3e})"
                )));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DegeneracyInstant {
    pub t: f64,
    pub multiplicity: usize,
}

/// Cumulative integral `B^∫(t) = ∫ₐᵗ 𝔅(s)⁻¹ ds` with its degeneracy instants.
#[derive(Debug, Clone)]
pub struct BIntegralPath {
    integrand: MatrixFn,
    nodes: Vec<f64>,
    values: Vec<DMatrix<f64>>,
    /// `max ‖𝔅⁻¹‖` over the nodes, used as the fixed rank scale.
    pub scale: f64,
    pub instants: Vec<DegeneracyInstant>,
    pub endpoint_degenerate: bool,
    pub tol: f64,
}

fn simpson(f: &MatrixFn, lo: f64, hi: f64, flo: &DMatrix<f64>, fhi: &DMatrix<f64>) -> DMatrix<f64> {
    (flo + f.eval(0.5 * (lo + hi)) * 4.0 + fhi) * ((hi - lo) / 6.0)
}

impl BIntegralPath {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn at_end(&self) -> &DMatrix<f64> {
        self.values.last().expect("nonempty")
    }

    /// `B^∫(t)` from the nearest node with two Simpson panels.
    pub fn value(&self, t: f64) -> DMatrix<f64> {
        let a = self.nodes[0];
        let h = self.nodes[1] - a;
        let k = (((t - a) / h).floor().max(0.0) as usize).min(self.nodes.len() - 2);
        let t0 = self.nodes[k];
        if t == t0 {
            return self.values[k].clone();
        }
        let mid = 0.5 * (t0 + t);
        let (f0, fm, f1) = (self.integrand.eval(t0), self.integrand.eval(mid), self.integrand.eval(t));
        &self.values[k] + simpson(&self.integrand, t0, mid, &f0, &fm) + simpson(&self.integrand, mid, t, &fm, &f1)
    }

    /// `B^∫(t)/(t − a)`, whose singular values are compared with `scale`.
    fn normalized(&self, t: f64) -> DMatrix<f64> {
        self.value(t) / (t - self.nodes[0])
    }

    fn multiplicity(&self, m: &DMatrix<f64>) -> usize {
        linalg::singular_values(m).iter().filter(|&&s| s <= self.tol * self.scale).count()
    }
}

/// Composite Simpson accumulation of `𝔅⁻¹` on a uniform mesh and location of
/// the instants where `B^∫` degenerates.
pub fn b_integral_of(b_inv: &MatrixFn, interval: (f64, f64), intervals: usize, tol: f64) -> Result<BIntegralPath> {
    let (a, b) = interval;
    let (r, c) = b_inv.shape();
    if r != c {
        return Err(Error::DimensionMismatch("integrand must be square".into()));
    }
    let intervals = intervals.max(8);
    let nodes = linalg::uniform_mesh(a, b, intervals);
    let fvals: Vec<DMatrix<f64>> = nodes.iter().map(|&t| b_inv.eval(t)).collect();
    let mut values = Vec::with_capacity(nodes.len());
    values.push(DMatrix::zeros(r, r));
    for k in 0..intervals {
        let inc = simpson(b_inv, nodes[k], nodes[k + 1], &fvals[k], &fvals[k + 1]);
        values.push(linalg::symmetrize(&(&values[k] + inc)));
    }
    let scale = fvals.iter().map(|f| linalg::singular_values(f)[0]).fold(0.0, f64::max).max(1e-300);
    let mut path = BIntegralPath {
        integrand: b_inv.clone(),
        nodes,
        values,
        scale,
        instants: Vec::new(),
        endpoint_degenerate: false,
        tol,
    };
    let norm: Vec<DMatrix<f64>> = (1..=intervals).map(|k| &path.values[k] / (path.nodes[k] - a)).collect();
    let dets: Vec<f64> = norm.iter().map(|m| m.determinant()).collect();
    let sig: Vec<f64> = norm.iter().map(linalg::sigma_min).collect();
    let ts = &path.nodes[1..];
    let thr = tol * scale;
    let root_tol = 1e-10 * (b - a);
    let end_deg = sig[intervals - 1] <= thr;
    let near_end = |t: f64| end_deg && b - t < 1e-8 * (b - a);
    let mut times = Vec::new();
    let mut sign_change = vec![false; intervals];
    for i in 0..intervals - 1 {
        if dets[i] != 0.0 && dets[i + 1] != 0.0 && (dets[i] > 0.0) != (dets[i + 1] > 0.0) {
            sign_change[i] = true;
            let (mut lo, mut hi) = (ts[i], ts[i + 1]);
            let flo = dets[i] > 0.0;
            while hi - lo > root_tol {
                let mid = 0.5 * (lo + hi);
                if (path.normalized(mid).determinant() > 0.0) == flo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            if !near_end(t) {
                times.push(t);
            }
        }
    }
    for i in 1..intervals - 1 {
        let dip = sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1] && sig[i] < 0.1 * scale;
        if !dip || sign_change[i - 1] || sign_change[i] {
            continue;
        }
        let (t, s) = golden_min(ts[i - 1], ts[i + 1], |t| linalg::sigma_min(&path.normalized(t)), 1e-13 * (b - a));
        if s <= thr && !near_end(t) {
            times.push(t);
        }
    }
    times.sort_by(|p, q| p.total_cmp(q));
    times.dedup_by(|p, q| (*p - *q).abs() <= 1e-8 * (b - a));
    path.instants = times
        .into_iter()
        .map(|t| DegeneracyInstant { t, multiplicity: path.multiplicity(&path.normalized(t)).max(1) })
        .collect();
    path.endpoint_degenerate = end_deg;
    Ok(path)
}

/// `b_integral_of` with `𝔅⁻¹` from reduced coefficients.
pub fn b_integral(rc: &ReducedCoefficients, intervals: usize, tol: f64) -> Result<BIntegralPath> {
    b_integral_of(&rc.cal_b_inv_fn(), rc.system().interval(), intervals, tol)
}

/// Sum over interior degeneracy instants of the signature of `𝔅(t)` on the
/// `𝔅(t)`-orthogonal complement of `Im B^∫(t)`.
pub fn reduced_maslov_shortcut(cal_b: &MatrixFn, bpath: &BIntegralPath) -> Result<i64> {
    if bpath.endpoint_degenerate {
        return Err(Error::EndpointConjugate(*bpath.nodes.last().expect("nonempty")));
    }
    let tol = bpath.tol;
    let mut total = 0;
    for inst in &bpath.instants {
        let bi = bpath.value(inst.t);
        let r = bi.nrows();
        let keep = r - inst.multiplicity.min(r);
        let img = linalg::column_space_abs(&bi, 0.0);
        let image = Subspace::from_orthonormal(img.columns(0, keep.min(img.ncols())).into_owned());
        let form = SymForm::new(cal_b.eval(inst.t))?;
        let on_image = bilinear::inertia(&bilinear::restrict(&form, &image)?, tol);
        if on_image.degeneracy != 0 {
            return Err(Error::Precondition(format!(
                "reduced fundamental coefficient is degenerate on the image of the integral at t = {}",
                inst.t
            )));
        }
        let (sig, _) = bilinear::signature_on_complement(&form, &image, tol)?;
        total += sig;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BIntegralTraceRow {
    pub t: f64,
    pub det: f64,
    pub sigma_min: f64,
}

/// `det B^∫(t)` and its smallest singular value at the integration nodes.
pub fn b_integral_trace(bpath: &BIntegralPath) -> Vec<BIntegralTraceRow> {
    bpath
        .nodes
        .iter()
        .zip(bpath.values.iter())
        .map(|(&t, v)| BIntegralTraceRow { t, det: v.determinant(), sigma_min: linalg::sigma_min(v) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maslov::{maslov_index, MaslovOptions};
    use crate::sds::{make_morse_sturm, InitialData};
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn lorentz(w1: f64, w2: f64, b: f64) -> CoefficientPath {
        let r = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_vec(vec![-w1 * w1, -w2 * w2])));
        make_morse_sturm(&SymForm::diagonal(&[1.0, -1.0]), &r, (0.0, b)).unwrap()
    }

    fn e2_frame() -> Frame {
        Frame::constant(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
    }

    #[test]
    fn coefficients_for_timelike_coordinate_frame() {
        let w2 = 1.5 * PI;
        let rc = reduced_coefficients(&lorentz(2.5 * PI, w2, 1.0), &e2_frame()).unwrap();
        assert_eq!(rc.cal_b(0.3)[(0, 0)], -1.0);
        assert_eq!(rc.cal_a(0.3)[(0, 0)], 0.0);
        assert!((rc.cal_c(0.3)[(0, 0)] - w2 * w2).abs() < 1e-12);
        assert_eq!(rc.index(), 1);
    }

    #[test]
    fn riemannian_flat_coefficients() {
        let x = make_morse_sturm(&SymForm::identity(2), &MatrixFn::zeros(2, 2), (0.0, 1.0)).unwrap();
        let rc = reduced_coefficients(&x, &Frame::constant(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))).unwrap();
        assert_eq!((rc.cal_b(0.5)[(0, 0)], rc.cal_a(0.5)[(0, 0)], rc.cal_c(0.5)[(0, 0)]), (1.0, 0.0, 0.0));
    }

    #[test]
    fn reduced_conjugate_instants() {
        let w2 = 1.5 * PI;
        let rc = reduced_coefficients(&lorentz(2.5 * PI, w2, 1.0), &e2_frame()).unwrap();
        let xr = build_reduced(&rc).unwrap();
        let rep = maslov_index(&xr, &InitialData::l0(1), &MaslovOptions::default()).unwrap();
        assert_eq!(rep.instants.len(), 1);
        assert!((rep.instants[0].t - PI / w2).abs() < 1e-8);
        assert_eq!(rep.instants[0].signature, -1);
        assert_eq!(rep.total, Some(-1));
    }

    #[test]
    fn frame_change_gives_isomorphic_reduction() {
        let x = lorentz(2.5 * PI, 1.5 * PI, 1.0);
        let base = e2_frame();
        let m = MatrixFn::from_exprs(crate::matfn::ExprMatrix::parse(&[vec!["2+sin(t)"]]).unwrap());
        let changed = base.recombined(&m);
        let opts = MaslovOptions::default();
        let l0 = InitialData::l0(1);
        let i1 = maslov_index(&build_reduced(&reduced_coefficients(&x, &base).unwrap()).unwrap(), &l0, &opts).unwrap();
        let i2 = maslov_index(&build_reduced(&reduced_coefficients(&x, &changed).unwrap()).unwrap(), &l0, &opts).unwrap();
        assert_eq!(i1.total, i2.total);
        assert_eq!(i1.instants.len(), i2.instants.len());
        for (p, q) in i1.instants.iter().zip(i2.instants.iter()) {
            assert!((p.t - q.t).abs() < 1e-6);
            assert_eq!(p.signature, q.signature);
        }
    }

    #[test]
    fn symmetric_solution_frame_has_trivial_tilde_system() {
        // Flat Lorentzian system: constant fields are solutions with 𝒜 = 0.
        let x = lorentz(0.0, 0.0, 1.0);
        let mut f = Frame::constant(DMatrix::identity(2, 2));
        let check = f.verify(&x, 1e-10);
        assert!(check.is_solution_frame && check.is_symmetric_frame);
        let rc = reduced_coefficients(&x, &f).unwrap();
        let xt = build_tilde_reduced(&rc).unwrap();
        assert!(xt.a(0.4).amax() < 1e-12 && xt.c(0.4).amax() < 1e-12);
    }

    #[test]
    fn b_integral_examples() {
        let binv = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])));
        let p = b_integral_of(&binv, (0.0, 1.0), 100, 1e-8).unwrap();
        assert!((p.value(0.37) - DMatrix::from_diagonal(&DVector::from_vec(vec![0.37, -0.37]))).amax() < 1e-14);
        assert!(p.instants.is_empty() && !p.endpoint_degenerate);
        assert_eq!(reduced_maslov_shortcut(&binv, &p).unwrap(), 0);

        let neg = MatrixFn::constant(DMatrix::from_row_slice(2, 2, &[-2.0, 0.5, 0.5, -1.0]));
        let p = b_integral_of(&neg, (0.0, 1.0), 100, 1e-8).unwrap();
        assert!(p.values()[1..].iter().all(|v| bilinear::inertia(&SymForm::new(v.clone()).unwrap(), 1e-12).n_minus == 2));
        assert!(p.instants.is_empty());
    }

    #[test]
    fn rotating_profile_degenerates_once() {
        let binv = MatrixFn::from_exprs(
            crate::matfn::ExprMatrix::parse(&[
                vec!["cos(2*pi*t)", "sin(2*pi*t)"],
                vec!["sin(2*pi*t)", "-cos(2*pi*t)"],
            ])
            .unwrap(),
        );
        let p = b_integral_of(&binv, (0.0, 1.25), 500, 1e-8).unwrap();
        // Oracle: closed-form integral (1/2π)[[sin 2πt, 1 − cos 2πt], [1 − cos 2πt, −sin 2πt]].
        let t: f64 = 0.8;
        let s = 1.0 / (2.0 * PI);
        let exact = DMatrix::from_row_slice(
            2,
            2,
            &[s * (2.0 * PI * t).sin(), s * (1.0 - (2.0 * PI * t).cos()), s * (1.0 - (2.0 * PI * t).cos()), -s * (2.0 * PI * t).sin()],
        );
        assert!((p.value(t) - exact).amax() < 1e-10);
        assert_eq!(p.instants.len(), 1);
        assert!((p.instants[0].t - 1.0).abs() < 1e-8);
        assert_eq!(p.instants[0].multiplicity, 2);
        let cal_b = MatrixFn::from_fn(2, 2, move |t| binv.eval(t).try_inverse().unwrap());
        assert_eq!(reduced_maslov_shortcut(&cal_b, &p).unwrap(), 0);
    }
}
