//! Geodesics integrated together with a parallel orthonormal frame.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::manifold::Manifold;
use crate::bilinear::SymForm;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameEvent {
    pub t: f64,
    pub drift_before: f64,
    pub drift_after: f64,
}

/// Sampled geodesic with a parallel frame `E(t)` satisfying `𝔤(E_i, E_j) = diag(signs)`.
#[derive(Debug, Clone)]
pub struct GeodesicCurve {
    manifold: Arc<dyn Manifold>,
    nodes: Vec<f64>,
    points: Vec<DVector<f64>>,
    velocities: Vec<DVector<f64>>,
    frames: Vec<DMatrix<f64>>,
    signs: Vec<f64>,
    /// Max relative drift of `𝔤(γ′, γ′)` and of the embedding constraints.
    pub residual: f64,
    pub reorthogonalizations: Vec<FrameEvent>,
}

/// Frame of `T_x M` in which the metric reads `diag(±1)`, positive directions first.
pub fn orthonormal_frame(m: &dyn Manifold, x: &DVector<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let t = m.tangent_basis(x);
    let gram = linalg::symmetrize(&(t.transpose() * m.metric(x) * &t));
    let n = gram.nrows();
    let diag_pm = (0..n).all(|i| (gram[(i, i)].abs() - 1.0).abs() < 1e-14)
        && (0..n).all(|i| (0..n).all(|j| i == j || gram[(i, j)].abs() < 1e-14));
    let (e, mut signs) = if diag_pm {
        (t, (0..n).map(|i| gram[(i, i)].signum()).collect::<Vec<_>>())
    } else {
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let scale = eig.eigenvalues.abs().max();
        let mut cols = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        for &k in &order {
            let lam = eig.eigenvalues[k];
            if lam.abs() <= 1e-12 * scale {
                return Err(Error::DegenerateForm(format!("metric is degenerate at x = {}", x.transpose())));
            }
            cols.push(&t * eig.eigenvectors.column(k) / lam.abs().sqrt());
            signs.push(lam.signum());
        }
        (DMatrix::from_columns(&cols), signs)
    };
    // Stable ordering: positive directions first.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| signs[j].total_cmp(&signs[i]));
    let e = DMatrix::from_columns(&idx.iter().map(|&i| e.column(i).into_owned()).collect::<Vec<_>>());
    signs = idx.iter().map(|&i| signs[i]).collect();
    Ok((e, signs))
}

struct State {
    x: DVector<f64>,
    v: DVector<f64>,
    e: Option<DMatrix<f64>>,
}

fn rhs(m: &dyn Manifold, s: &State) -> State {
    let dv = -m.connection(&s.x, &s.v, &s.v);
    let de = s.e.as_ref().map(|e| {
        let cols: Vec<DVector<f64>> = e.column_iter().map(|c| -m.connection(&s.x, &s.v, &c.into_owned())).collect();
        DMatrix::from_columns(&cols)
    });
    State { x: s.v.clone(), v: dv, e: de }
}

fn axpy(s: &State, h: f64, d: &State) -> State {
    State {
        x: &s.x + &d.x * h,
        v: &s.v + &d.v * h,
        e: s.e.as_ref().map(|e| e + d.e.as_ref().expect("frame slope") * h),
    }
}

fn rk4(m: &dyn Manifold, s: &State, h: f64) -> State {
    let k1 = rhs(m, s);
    let k2 = rhs(m, &axpy(s, 0.5 * h, &k1));
    let k3 = rhs(m, &axpy(s, 0.5 * h, &k2));
    let k4 = rhs(m, &axpy(s, h, &k3));
    let w = h / 6.0;
    State {
        x: &s.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * w,
        v: &s.v + (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * w,
        e: s.e.as_ref().map(|e| {
            let d = k1.e.expect("slope") + k2.e.expect("slope") * 2.0 + k3.e.expect("slope") * 2.0 + k4.e.expect("slope");
            e + d * w
        }),
    }
}

fn frame_drift(m: &dyn Manifold, x: &DVector<f64>, e: &DMatrix<f64>, signs: &[f64]) -> (DMatrix<f64>, f64) {
    let gram = e.transpose() * m.metric(x) * e;
    let diff = &gram - DMatrix::from_diagonal(&DVector::from_column_slice(signs));
    let d = linalg::max_abs(&diff);
    (diff, d)
}

/// Endpoint `(γ(b), γ′(b))` of the geodesic with initial data `(x0, v0)`.
pub fn geodesic_endpoint(
    m: &dyn Manifold,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    interval: (f64, f64),
    steps: usize,
) -> (DVector<f64>, DVector<f64>) {
    let h = (interval.1 - interval.0) / steps as f64;
    let mut s = State { x: x0.clone(), v: v0.clone(), e: None };
    for _ in 0..steps {
        s = rk4(m, &s, h);
    }
    (s.x, s.v)
}

/// Integrates `γ″ + Γ(γ′, γ′) = 0` with RK4 and transports an orthonormal
/// frame along it. Fails when the residual exceeds `tol`.
pub fn integrate_geodesic(
    manifold: Arc<dyn Manifold>,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    interval: (f64, f64),
    steps: usize,
    tol: f64,
) -> Result<GeodesicCurve> {
    let m = manifold.as_ref();
    let (a, b) = interval;
    if !(b > a) {
        return Err(Error::InvalidInput("geodesic interval must have b > a".into()));
    }
    if x0.len() != m.ambient_dim() || v0.len() != m.ambient_dim() {
        return Err(Error::DimensionMismatch(format!("points and velocities must have length {}", m.ambient_dim())));
    }
    if m.constraint_residual(x0, v0) > 1e-10 {
        return Err(Error::InvalidInput("initial point or velocity is off the manifold".into()));
    }
    let steps = steps.max(8);
    let (e0, signs) = orthonormal_frame(m, x0)?;
    let h = (b - a) / steps as f64;
    let energy0 = m.inner(x0, v0, v0);
    let escale = energy0.abs().max(v0.norm_squared()).max(1e-300);
    let mut nodes = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let mut frames = Vec::with_capacity(steps + 1);
    let mut events = Vec::new();
    let mut residual: f64 = 0.0;
    let mut s = State { x: x0.clone(), v: v0.clone(), e: Some(e0) };
    for k in 0..=steps {
        let t = if k == steps { b } else { a + k as f64 * h };
        if k > 0 {
            s = rk4(m, &s, h);
        }
        let e = s.e.as_mut().expect("frame");
        let (diff, drift) = frame_drift(m, &s.x, e, &signs);
        if drift > tol {
            // E ← E(I − ½ G·ΔGram), the first-order correction towards 𝔤-orthonormality.
            let g = DMatrix::from_diagonal(&DVector::from_column_slice(&signs));
            let corr = DMatrix::identity(signs.len(), signs.len()) - g * diff * 0.5;
            *e = &*e * corr;
            let (_, after) = frame_drift(m, &s.x, e, &signs);
            events.push(FrameEvent { t, drift_before: drift, drift_after: after });
        }
        let en = m.inner(&s.x, &s.v, &s.v);
        residual = residual.max((en - energy0).abs() / escale).max(m.constraint_residual(&s.x, &s.v));
        nodes.push(t);
        points.push(s.x.clone());
        velocities.push(s.v.clone());
        frames.push(s.e.clone().expect("frame"));
    }
    if !(residual <= tol) {
        return Err(Error::Integration(format!("geodesic residual {residual:.3e} exceeds tolerance {tol:.1e}")));
    }
    Ok(GeodesicCurve { manifold, nodes, points, velocities, frames, signs, residual, reorthogonalizations: events })
}

impl GeodesicCurve {
    pub fn manifold(&self) -> &Arc<dyn Manifold> {
        &self.manifold
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().expect("nonempty"))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn velocities(&self) -> &[DVector<f64>] {
        &self.velocities
    }

    pub fn frames(&self) -> &[DMatrix<f64>] {
        &self.frames
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// `𝔤` in the parallel frame.
    pub fn frame_metric(&self) -> SymForm {
        SymForm::diagonal(&self.signs)
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.points[0]
    }

    pub fn end(&self) -> &DVector<f64> {
        self.points.last().expect("nonempty")
    }

    /// `(γ(t), γ′(t), E(t))` by one RK4 step from the nearest node.
    pub fn state(&self, t: f64) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
        let a = self.nodes[0];
        let h = self.nodes[1] - a;
        let k = (((t - a) / h).round().max(0.0) as usize).min(self.nodes.len() - 1);
        let dt = t - self.nodes[k];
        if dt == 0.0 {
            return (self.points[k].clone(), self.velocities[k].clone(), self.frames[k].clone());
        }
        let s = State { x: self.points[k].clone(), v: self.velocities[k].clone(), e: Some(self.frames[k].clone()) };
        let s = rk4(self.manifold.as_ref(), &s, dt);
        (s.x, s.v, s.e.expect("frame"))
    }

    /// Coordinates of the tangent vector `w` at `x` in the frame `e`.
    pub fn frame_coords(&self, x: &DVector<f64>, e: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut c = e.transpose() * self.manifold.metric(x) * w;
        for (ci, s) in c.iter_mut().zip(&self.signs) {
            *ci *= s;
        }
        c
    }

    /// `½∫𝔤(γ′, γ′)` from the conserved energy.
    pub fn action(&self) -> f64 {
        let (a, b) = self.interval();
        0.5 * self.manifold.inner(&self.points[0], &self.velocities[0], &self.velocities[0]) * (b - a)
    }
}
