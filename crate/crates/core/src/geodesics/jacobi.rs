//! Morse–Sturm data of the Jacobi equation along a geodesic, initial data of
//! submanifolds, and frames built from Killing fields.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::curve::GeodesicCurve;
use super::manifold::AffineField;
use crate::bilinear::{SymForm, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maslov::{self, MaslovOptions};
use crate::matfn::MatrixFn;
use crate::reduction::{self, BIntegralPath, Frame};
use crate::sds::{self, CoefficientPath, InitialData, VERIFICATION_POINTS};

fn check_residual(curve: &GeodesicCurve, tol: f64) -> Result<()> {
    if curve.residual > tol {
        return Err(Error::Precondition(format!(
            "geodesic residual {:.3e} exceeds tolerance {tol:.1e}",
            curve.residual
        )));
    }
    Ok(())
}

/// `R(t)_ij = signs_i · 𝔤(E_i, ℛ(γ′, E_j)γ′)` in the parallel frame.
fn curvature_operator(curve: &GeodesicCurve, t: f64) -> DMatrix<f64> {
    let m = curve.manifold().as_ref();
    let (x, v, e) = curve.state(t);
    let n = e.ncols();
    let g = m.metric(&x);
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        let rj = m.curvature(&x, &v, &e.column(j).into_owned(), &v);
        let c = e.transpose() * &g * rj;
        for i in 0..n {
            r[(i, j)] = curve.signs()[i] * c[i];
        }
    }
    r
}

/// `(g, R)` of the Morse–Sturm system `g⁻¹(g v′)′ = R v` obtained from the
/// Jacobi equation through the parallel frame of `curve`.
pub fn jacobi_to_morse_sturm(curve: &Arc<GeodesicCurve>, tol: f64) -> Result<(SymForm, MatrixFn)> {
    check_residual(curve, tol)?;
    let n = curve.signs().len();
    let c = curve.clone();
    let r = MatrixFn::from_fn(n, n, move |t| curvature_operator(&c, t));
    Ok((curve.frame_metric(), r))
}

/// The Jacobi equation along `curve` as a coefficient path.
pub fn jacobi_system(curve: &Arc<GeodesicCurve>, tol: f64) -> Result<CoefficientPath> {
    let (g, r) = jacobi_to_morse_sturm(curve, tol)?;
    sds::make_morse_sturm(&g, &r, curve.interval())
}

type ChartMap = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
/// Tangent vectors `∂_iφ` as columns and second derivatives `∂_i∂_jφ`.
type ChartDerivatives = Arc<dyn Fn(&[f64]) -> (DMatrix<f64>, Vec<Vec<DVector<f64>>>) + Send + Sync>;

/// Local parametrization `φ` of an initial submanifold around `φ(params) = γ(a)`.
#[derive(Clone)]
pub struct Chart {
    pub params: Vec<f64>,
    map: ChartMap,
    derivatives: Option<ChartDerivatives>,
    step: f64,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Chart(params = {:?}, exact = {})", self.params, self.derivatives.is_some())
    }
}

impl Chart {
    /// Derivatives by central differences.
    pub fn new(params: Vec<f64>, map: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { params, map: Arc::new(map), derivatives: None, step: 1e-4 }
    }

    pub fn with_derivatives(
        mut self,
        d: impl Fn(&[f64]) -> (DMatrix<f64>, Vec<Vec<DVector<f64>>>) + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = Some(Arc::new(d));
        self
    }

    /// Circle of colatitude `colatitude` on the sphere of radius `radius`
    /// occupying ambient coordinates `offset..offset+3`, parametrized by
    /// longitude; the other coordinates are copied from `rest`.
    pub fn latitude_circle(rest: DVector<f64>, offset: usize, radius: f64, colatitude: f64, longitude: f64) -> Self {
        let (st, ct) = (colatitude.sin(), colatitude.cos());
        let base = rest.clone();
        let map = move |s: &[f64]| {
            let mut p = base.clone();
            p[offset] = radius * st * s[0].cos();
            p[offset + 1] = radius * st * s[0].sin();
            p[offset + 2] = radius * ct;
            p
        };
        let n = rest.len();
        let d = move |s: &[f64]| {
            let mut t = DMatrix::zeros(n, 1);
            t[(offset, 0)] = -radius * st * s[0].sin();
            t[(offset + 1, 0)] = radius * st * s[0].cos();
            let mut dd = DVector::zeros(n);
            dd[offset] = -radius * st * s[0].cos();
            dd[offset + 1] = -radius * st * s[0].sin();
            (t, vec![vec![dd]])
        };
        Chart::new(vec![longitude], map).with_derivatives(d)
    }

    pub fn point(&self) -> DVector<f64> {
        (self.map)(&self.params)
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// `(∂_iφ, ∂_i∂_jφ)` at `params`.
    pub fn derivatives(&self) -> (DMatrix<f64>, Vec<Vec<DVector<f64>>>) {
        if let Some(d) = &self.derivatives {
            return d(&self.params);
        }
        let k = self.dim();
        let h = self.step;
        let f = |s: &[f64]| (self.map)(s);
        let shifted = |i: usize, di: f64, j: usize, dj: f64| {
            let mut s = self.params.clone();
            s[i] += di;
            s[j] += dj;
            f(&s)
        };
        let p0 = self.point();
        let cols: Vec<DVector<f64>> =
            (0..k).map(|i| (shifted(i, h, i, 0.0) - shifted(i, -h, i, 0.0)) / (2.0 * h)).collect();
        let mut second = vec![vec![DVector::zeros(p0.len()); k]; k];
        for i in 0..k {
            for j in 0..k {
                second[i][j] = if i == j {
                    (shifted(i, h, i, 0.0) - &p0 * 2.0 + shifted(i, -h, i, 0.0)) / (h * h)
                } else {
                    (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) + shifted(i, -h, j, -h))
                        / (4.0 * h * h)
                };
            }
        }
        (DMatrix::from_columns(&cols), second)
    }
}

/// Initial submanifold `𝒫` through `γ(a)`.
#[derive(Debug, Clone)]
pub enum Submanifold {
    Point,
    Chart(Chart),
}

/// Tangent space and second fundamental form of `𝒫` at `γ(a)`, in ambient terms.
#[derive(Debug, Clone)]
pub struct SubmanifoldData {
    /// Ambient tangent vectors `∂_iφ`.
    pub tangent: DMatrix<f64>,
    /// `II_{γ′(a)}(∂_iφ, ∂_jφ) = 𝔤(∇_{∂_i}∂_jφ, γ′(a))`.
    pub second_fundamental: DMatrix<f64>,
    /// `max |𝔤(γ′(a), ∂_iφ)|`, relative.
    pub orthogonality_residual: f64,
}

pub fn submanifold_data(curve: &GeodesicCurve, chart: &Chart) -> Result<SubmanifoldData> {
    let m = curve.manifold().as_ref();
    let (x, v) = (curve.start(), &curve.velocities()[0]);
    let p = chart.point();
    if (&p - x).norm() > 1e-10 * x.norm().max(1.0) {
        return Err(Error::InvalidInput("submanifold chart does not pass through the initial point".into()));
    }
    let (t, dd) = chart.derivatives();
    let g = m.metric(x);
    let k = chart.dim();
    let vn = v.norm().max(1e-300);
    let mut orth: f64 = 0.0;
    for i in 0..k {
        let ti = t.column(i).into_owned();
        orth = orth.max((ti.transpose() * &g * v)[0].abs() / (ti.norm().max(1e-300) * vn));
    }
    let mut s = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let (ti, tj) = (t.column(i).into_owned(), t.column(j).into_owned());
            let cov = &dd[i][j] + m.connection(x, &ti, &tj);
            s[(i, j)] = (cov.transpose() * &g * v)[0];
        }
    }
    Ok(SubmanifoldData { tangent: t, second_fundamental: linalg::symmetrize(&s), orthogonality_residual: orth })
}

/// `(P, S)` of the Lagrangian `ℓ₀` describing `𝒫`-Jacobi fields in the parallel frame.
pub fn submanifold_initial_data(curve: &GeodesicCurve, sub: &Submanifold, tol: f64) -> Result<InitialData> {
    let n = curve.signs().len();
    let chart = match sub {
        Submanifold::Point => return Ok(InitialData::l0(n)),
        Submanifold::Chart(c) => c,
    };
    let data = submanifold_data(curve, chart)?;
    if data.orthogonality_residual > tol {
        return Err(Error::Precondition(format!(
            "initial velocity is not orthogonal to the submanifold (residual {:.3e})",
            data.orthogonality_residual
        )));
    }
    let (x, e) = (curve.start(), &curve.frames()[0]);
    let k = chart.dim();
    let mut coords = DMatrix::zeros(n, k);
    for i in 0..k {
        coords.set_column(i, &curve.frame_coords(x, e, &data.tangent.column(i).into_owned()));
    }
    let p = Subspace::span(&coords);
    if p.dim() != k {
        return Err(Error::InvalidInput("submanifold chart is not an immersion at the initial point".into()));
    }
    // coords = Q·M with Q the orthonormal basis of P; S in that basis is M⁻ᵀ II M⁻¹.
    let mm = p.basis().transpose() * &coords;
    let minv = mm.try_inverse().ok_or_else(|| Error::Singular { t: curve.interval().0, what: "chart differential".into() })?;
    let s = minv.transpose() * &data.second_fundamental * &minv;
    InitialData::new(p, SymForm::new(s)?)
}

/// Frame, `𝔅` and `B^∫` built from a family of Killing fields along a geodesic.
#[derive(Debug, Clone)]
pub struct KillingFrameData {
    pub frame: Frame,
    pub cal_b: MatrixFn,
    pub b_integral: BIntegralPath,
    pub checks: KillingChecks,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KillingChecks {
    /// Max relative variation of `𝔤(γ′, 𝒴_i)`.
    pub conservation_residual: f64,
    /// Max relative symmetric part of `𝔤(∇_· 𝒴_i, ·)` in the frame.
    pub killing_residual: f64,
    /// Max relative `[𝒴_i, 𝒴_j]`.
    pub commutator_residual: f64,
    pub min_gram_singular_value: f64,
}

fn field_matrix(curve: &GeodesicCurve, fields: &[AffineField], t: f64, covariant: bool) -> DMatrix<f64> {
    let m = curve.manifold().as_ref();
    let (x, v, e) = curve.state(t);
    let cols: Vec<DVector<f64>> = fields
        .iter()
        .map(|f| {
            let w = if covariant { f.covariant(m, &x, &v) } else { f.value(&x) };
            curve.frame_coords(&x, &e, &w)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// Gram matrix `𝔤(𝒴_i, 𝒴_j)` at `γ(t)`.
fn field_gram(curve: &GeodesicCurve, fields: &[AffineField], t: f64) -> DMatrix<f64> {
    let m = curve.manifold().as_ref();
    let (x, _, _) = curve.state(t);
    let vals: Vec<DVector<f64>> = fields.iter().map(|f| f.value(&x)).collect();
    let g = m.metric(&x);
    DMatrix::from_fn(fields.len(), fields.len(), |i, j| (vals[i].transpose() * &g * &vals[j])[0])
}

pub fn killing_checks(curve: &GeodesicCurve, fields: &[AffineField]) -> KillingChecks {
    let m = curve.manifold().as_ref();
    let (a, b) = curve.interval();
    let mut cons: f64 = 0.0;
    let mut kill: f64 = 0.0;
    let mut comm: f64 = 0.0;
    let mut gmin = f64::INFINITY;
    let (x0, v0) = (curve.start(), &curve.velocities()[0]);
    let p0: Vec<f64> = fields.iter().map(|f| m.inner(x0, v0, &f.value(x0))).collect();
    for t in linalg::uniform_mesh(a, b, VERIFICATION_POINTS - 1) {
        let (x, v, e) = curve.state(t);
        let g = m.metric(&x);
        let gram = field_gram(curve, fields, t);
        let gscale = linalg::max_abs(&gram).max(1e-300);
        gmin = gmin.min(linalg::sigma_min(&gram) / gscale);
        for (i, f) in fields.iter().enumerate() {
            let y = f.value(&x);
            let scale = (v.norm() * y.norm()).max(1e-300);
            cons = cons.max((m.inner(&x, &v, &y) - p0[i]).abs() / scale);
            let n = e.ncols();
            let k = DMatrix::from_fn(n, n, |p, q| {
                let w = f.covariant(m, &x, &e.column(p).into_owned());
                (w.transpose() * &g * e.column(q))[0]
            });
            let ks = linalg::max_abs(&k).max(y.norm()).max(1e-300);
            kill = kill.max(linalg::max_abs(&(&k + k.transpose())) / ks);
            for fj in fields.iter().skip(i + 1) {
                let s = (f.linear.norm() * fj.value(&x).norm() + fj.linear.norm() * y.norm()).max(y.norm()).max(1e-300);
                comm = comm.max(f.bracket(fj, &x).norm() / s);
            }
        }
    }
    KillingChecks { conservation_residual: cons, killing_residual: kill, commutator_residual: comm, min_gram_singular_value: gmin }
}

/// Frame `Y(t)` of the fields in the parallel trivialization, with `Y′` the
/// covariant derivative and `Y″ = R Y` once the fields pass the Killing checks.
pub fn killing_frame_data(
    curve: &Arc<GeodesicCurve>,
    fields: &[AffineField],
    intervals: usize,
    tol: f64,
) -> Result<KillingFrameData> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("at least one field is required".into()));
    }
    if fields.iter().any(|f| f.offset.len() != curve.manifold().ambient_dim()) {
        return Err(Error::DimensionMismatch("field dimension does not match the manifold".into()));
    }
    let checks = killing_checks(curve, fields);
    if checks.min_gram_singular_value <= tol {
        return Err(Error::Singular { t: curve.interval().0, what: "Gram matrix of the fields".into() });
    }
    if checks.conservation_residual > tol {
        return Err(Error::Precondition(format!(
            "g(γ', Y_i) is not conserved (residual {:.3e}); fields are not Killing along the geodesic",
            checks.conservation_residual
        )));
    }
    let killing = checks.killing_residual <= tol;
    let commuting = checks.commutator_residual <= tol;
    let (n, r) = (curve.signs().len(), fields.len());
    let y = {
        let (c, f) = (curve.clone(), fields.to_vec());
        MatrixFn::from_fn(n, r, move |t| field_matrix(&c, &f, t, false))
    };
    let dy = {
        let (c, f) = (curve.clone(), fields.to_vec());
        MatrixFn::from_fn(n, r, move |t| field_matrix(&c, &f, t, true))
    };
    let ddy = if killing {
        let (c, yy) = (curve.clone(), y.clone());
        MatrixFn::from_fn(n, r, move |t| curvature_operator(&c, t) * yy.eval(t))
    } else {
        dy.derivative()
    };
    let y = y.with_derivative(dy.clone());
    let dy = dy.with_derivative(ddy.clone());
    let mut frame = Frame::from_parts(y, dy, ddy);
    frame.is_solution_frame = killing;
    frame.is_symmetric_frame = killing && commuting;
    let cal_b = {
        let (c, f) = (curve.clone(), fields.to_vec());
        MatrixFn::from_fn(r, r, move |t| field_gram(&c, &f, t))
    };
    let cal_b_inv = {
        let b = cal_b.clone();
        MatrixFn::from_fn(r, r, move |t| {
            b.eval(t).try_inverse().unwrap_or_else(|| DMatrix::from_element(r, r, f64::NAN))
        })
    };
    let b_integral = reduction::b_integral_of(&cal_b_inv, curve.interval(), intervals, crate::bilinear::DEFAULT_TOL)?;
    Ok(KillingFrameData { frame, cal_b, b_integral, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub checks: KillingChecks,
    /// Max relative `‖ℰ + 𝒜ᵀ‖`.
    pub e_plus_a_transpose: f64,
    /// Max relative `‖ℭ + ℰ̄‖`.
    pub c_plus_e_bar: f64,
    /// Max relative `‖ℰ̄ − ℰ′‖`.
    pub e_bar_minus_e_prime: f64,
    /// Max relative deviation of the constrained system's coefficients from `X_red`.
    pub coefficient_mismatch: f64,
    /// Max relative `‖𝒜_ant‖`.
    pub a_antisymmetric: f64,
    /// `b` is not conjugate for the reduced system.
    pub admissible: bool,
    /// `σ_min(B^∫(b))` relative to its scale, when the shortcut applies.
    pub b_integral_end_sigma_min: Option<f64>,
}

struct Geometric {
    cal_a: DMatrix<f64>,
    cal_b: DMatrix<f64>,
    cal_c: DMatrix<f64>,
    e: DMatrix<f64>,
    e_bar: DMatrix<f64>,
}

/// `𝒜, 𝔅, ℭ, ℰ, ℰ̄` assembled from ambient geometry, independently of the frame.
fn geometric_terms(curve: &GeodesicCurve, fields: &[AffineField], t: f64, h: f64) -> Geometric {
    let m = curve.manifold().as_ref();
    let r = fields.len();
    // W_ij(x) = ∇_{𝒴_j}𝒴_i at x.
    let w_at = |x: &DVector<f64>| -> Vec<Vec<DVector<f64>>> {
        (0..r).map(|i| (0..r).map(|j| fields[i].covariant(m, x, &fields[j].value(x))).collect()).collect()
    };
    let (x, v, _) = curve.state(t);
    let g = m.metric(&x);
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g * b)[0];
    let ys: Vec<DVector<f64>> = fields.iter().map(|f| f.value(&x)).collect();
    let dys: Vec<DVector<f64>> = fields.iter().map(|f| f.covariant(m, &x, &v)).collect();
    let cal_a = DMatrix::from_fn(r, r, |i, j| ip(&dys[j], &ys[i]));
    let cal_b = DMatrix::from_fn(r, r, |i, j| ip(&ys[i], &ys[j]));
    let cal_c = DMatrix::from_fn(r, r, |i, j| ip(&dys[i], &dys[j]) + ip(&m.curvature(&x, &v, &ys[i], &v), &ys[j]));
    let w = w_at(&x);
    let e = DMatrix::from_fn(r, r, |i, j| ip(&w[i][j], &v));
    let (xp, _, _) = curve.state(t + h);
    let (xm, _, _) = curve.state(t - h);
    let (wp, wm) = (w_at(&xp), w_at(&xm));
    let e_bar = DMatrix::from_fn(r, r, |i, j| {
        let dw = (&wp[i][j] - &wm[i][j]) / (2.0 * h) + m.connection(&x, &v, &w[i][j]);
        ip(&dw, &v)
    });
    Geometric { cal_a, cal_b, cal_c, e, e_bar }
}

/// Checks that the constrained-variation system coincides with the reduced
/// symplectic system along a geodesic and decides whether `b` is conjugate for it.
pub fn constraint_system_check(
    curve: &Arc<GeodesicCurve>,
    fields: &[AffineField],
    opts: &MaslovOptions,
    tol: f64,
) -> Result<ConstraintReport> {
    check_residual(curve, tol)?;
    let x = jacobi_system(curve, tol)?;
    let kfd = killing_frame_data(curve, fields, opts.steps, tol)?;
    let rc = reduction::reduced_coefficients(&x, &kfd.frame)?;
    let xred = reduction::build_reduced(&rc)?;
    let (a, b) = curve.interval();
    let h = 1e-4 * (b - a);
    let pad = 2.0 * h;
    let rel = |m: &DMatrix<f64>, s: f64| linalg::max_abs(m) / s.max(1e-300);
    let (mut ea, mut ce, mut ee, mut mis, mut ant) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in linalg::uniform_mesh(a + pad, b - pad, VERIFICATION_POINTS - 1) {
        let gt = geometric_terms(curve, fields, t, h);
        let gp = geometric_terms(curve, fields, t + h, h);
        let gm = geometric_terms(curve, fields, t - h, h);
        let e_prime = (&gp.e - &gm.e) / (2.0 * h);
        let s_a = linalg::max_abs(&gt.cal_a).max(linalg::max_abs(&gt.e)).max(linalg::max_abs(&gt.cal_b));
        let s_c = linalg::max_abs(&gt.cal_c).max(linalg::max_abs(&gt.e_bar)).max(linalg::max_abs(&gt.cal_b));
        ea = ea.max(rel(&(&gt.e + gt.cal_a.transpose()), s_a));
        ce = ce.max(rel(&(&gt.cal_c + &gt.e_bar), s_c));
        ee = ee.max(rel(&(&gt.e_bar - &e_prime), s_c));
        ant = ant.max(rel(&((&gt.cal_a - gt.cal_a.transpose()) * 0.5), s_a));
        // Coefficients of the constrained system in (f, φ), with ℰ̄ and ℰ′ kept apart.
        let binv = gt.cal_b.clone().try_inverse().ok_or_else(|| Error::Singular { t, what: "𝔅".into() })?;
        let r = fields.len();
        let mut k = DMatrix::zeros(2 * r, 2 * r);
        k.view_mut((0, 0), (r, r)).copy_from(&(-(&binv * &gt.cal_a)));
        k.view_mut((0, r), (r, r)).copy_from(&binv);
        k.view_mut((r, 0), (r, r))
            .copy_from(&(&gt.cal_c + &gt.e_bar - &e_prime - gt.cal_a.transpose() * &binv * &gt.cal_a));
        k.view_mut((r, r), (r, r)).copy_from(&(gt.cal_a.transpose() * &binv));
        let xr = xred.matrix(t);
        mis = mis.max(rel(&(&k - &xr), linalg::max_abs(&xr)));
    }
    let (admissible, end_sigma) = if kfd.frame.is_symmetric_frame {
        let bi = kfd.b_integral.at_end();
        let s = linalg::sigma_min(bi) / ((b - a) * kfd.b_integral.scale);
        (!kfd.b_integral.endpoint_degenerate, Some(s))
    } else {
        match maslov::maslov_index(&xred, &InitialData::l0(fields.len()), opts) {
            Ok(_) => (true, None),
            Err(Error::EndpointFocal(_)) => (false, None),
            Err(e) => return Err(e),
        }
    };
    Ok(ConstraintReport {
        checks: kfd.checks,
        e_plus_a_transpose: ea,
        c_plus_e_bar: ce,
        e_bar_minus_e_prime: ee,
        coefficient_mismatch: mis,
        a_antisymmetric: ant,
        admissible,
        b_integral_end_sigma_min: end_sigma,
    })
}
