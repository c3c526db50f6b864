//! Geodesics between two points by multiple shooting over a grid of initial
//! velocities, and the Morse relations check on the resulting counts.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::curve::{geodesic_endpoint, integrate_geodesic, GeodesicCurve};
use super::jacobi::{jacobi_system, killing_frame_data};
use super::manifold::{AffineField, Manifold};
use crate::error::{Error, Result};
use crate::maslov::{self, MaslovOptions};
use crate::reduction;
use crate::sds::InitialData;

#[derive(Debug, Clone, Serialize)]
pub struct ShootingOptions {
    /// Cells per tangent coordinate.
    pub grid: Vec<usize>,
    /// Half-width of the velocity box in tangent coordinates; solutions outside are dropped.
    pub bound: f64,
    /// RK4 steps per unit of `‖v‖·(b − a)` during the search, at least `min_steps`.
    pub steps_per_unit: f64,
    pub min_steps: usize,
    /// Steps of the final integration, scaled the same way.
    pub final_steps_per_unit: f64,
    pub final_min_steps: usize,
    pub max_iter: usize,
    /// Relative endpoint residual accepted.
    pub tol: f64,
    pub dedup: f64,
    pub geodesic_tol: f64,
    pub maslov: MaslovOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            bound: 1.0,
            steps_per_unit: 16.0,
            min_steps: 64,
            final_steps_per_unit: 200.0,
            final_min_steps: 2000,
            max_iter: 40,
            tol: 1e-9,
            dedup: 1e-4,
            geodesic_tol: 1e-8,
            maslov: MaslovOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoundGeodesic {
    /// Initial velocity in the tangent basis at `p`.
    pub velocity: Vec<f64>,
    pub endpoint_residual: f64,
    pub maslov: i64,
    pub maslov_red: Option<i64>,
    #[serde(skip)]
    pub curve: Arc<GeodesicCurve>,
}

impl FoundGeodesic {
    /// `i_Maslov − i^red_Maslov`, the Morse index of the constrained action.
    pub fn morse_index(&self) -> i64 {
        self.maslov - self.maslov_red.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingReport {
    pub geodesics: Vec<FoundGeodesic>,
    pub cells: usize,
    pub unresolved_cells: usize,
    /// Geodesics discarded because `q` is focal along them.
    pub focal_rejected: usize,
}

impl ShootingReport {
    /// Number of geodesics per Morse index.
    pub fn counts(&self) -> BTreeMap<usize, usize> {
        let mut c = BTreeMap::new();
        for g in &self.geodesics {
            *c.entry(g.morse_index().max(0) as usize).or_insert(0) += 1;
        }
        c
    }
}

fn steps_for(v: &DVector<f64>, len: f64, per_unit: f64, min: usize) -> usize {
    ((v.norm() * len * per_unit).ceil() as usize).max(min)
}

fn cell_centers(grid: &[usize], bound: f64) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &g in grid {
        let g = g.max(1);
        let w = 2.0 * bound / g as f64;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..g).map(move |k| {
                    let mut p = prefix.clone();
                    p.push(-bound + (k as f64 + 0.5) * w);
                    p
                })
            })
            .collect();
    }
    out
}

/// Damped Gauss–Newton on `c ↦ exp_p(Tc)(b) − q`; returns the converged `c`
/// and its relative residual.
fn newton(
    m: &dyn Manifold,
    p: &DVector<f64>,
    q: &DVector<f64>,
    basis: &DMatrix<f64>,
    interval: (f64, f64),
    start: &[f64],
    per_unit: f64,
    min_steps: usize,
    opts: &ShootingOptions,
) -> Option<(DVector<f64>, f64)> {
    let len = interval.1 - interval.0;
    let qs = q.norm().max(1.0);
    let resid = |c: &DVector<f64>| {
        let v = basis * c;
        let (x, _) = geodesic_endpoint(m, p, &v, interval, steps_for(&v, len, per_unit, min_steps));
        m.retract(&x) - q
    };
    let n = basis.ncols();
    let mut c = DVector::from_column_slice(start);
    let mut f = resid(&c);
    for _ in 0..opts.max_iter {
        let fn0 = f.norm();
        if fn0 / qs <= opts.tol {
            return Some((c, fn0 / qs));
        }
        let mut jac = DMatrix::zeros(f.len(), n);
        for j in 0..n {
            let d = 1e-7 * c[j].abs().max(1.0);
            let mut cj = c.clone();
            cj[j] += d;
            jac.set_column(j, &((resid(&cj) - &f) / d));
        }
        let step = jac.svd(true, true).solve(&(-&f), 1e-12).ok()?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = &c + &step * lambda;
            let ft = resid(&trial);
            if ft.norm() < fn0 {
                c = trial;
                f = ft;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || c.amax() > 4.0 * opts.bound {
            return None;
        }
    }
    let r = f.norm() / qs;
    (r <= opts.tol).then_some((c, r))
}

/// Maslov index of the point-initial Jacobi system along `curve` and, when
/// fields are given, the Maslov index of the reduced system.
pub fn geodesic_maslov(
    curve: &Arc<GeodesicCurve>,
    fields: &[AffineField],
    opts: &MaslovOptions,
    tol: f64,
) -> Result<(i64, Option<i64>)> {
    let x = jacobi_system(curve, tol)?;
    let mi = maslov::maslov_index(&x, &InitialData::l0(x.n()), opts)?.index()?;
    if fields.is_empty() {
        return Ok((mi, None));
    }
    let kfd = killing_frame_data(curve, fields, opts.steps, tol)?;
    let rc = reduction::reduced_coefficients(&x, &kfd.frame)?;
    let xr = reduction::build_reduced(&rc)?;
    let mr = match maslov::maslov_index(&xr, &InitialData::l0(fields.len()), opts) {
        Err(Error::EndpointFocal(b)) => return Err(Error::EndpointConjugate(b)),
        other => other?.index()?,
    };
    Ok((mi, Some(mr)))
}

/// Shoots from every grid cell, deduplicates converged velocities and labels
/// each geodesic with its Maslov data. The count is a lower bound.
pub fn shoot_geodesics(
    manifold: Arc<dyn Manifold>,
    p: &DVector<f64>,
    q: &DVector<f64>,
    interval: (f64, f64),
    fields: &[AffineField],
    opts: &ShootingOptions,
) -> Result<ShootingReport> {
    let m = manifold.as_ref();
    if p.len() != m.ambient_dim() || q.len() != m.ambient_dim() {
        return Err(Error::DimensionMismatch("endpoints must be ambient points".into()));
    }
    let zero = DVector::zeros(p.len());
    if m.constraint_residual(p, &zero) > 1e-10 || m.constraint_residual(q, &zero) > 1e-10 {
        return Err(Error::InvalidInput("endpoints are not on the manifold".into()));
    }
    let basis = m.tangent_basis(p);
    let n = basis.ncols();
    if opts.grid.len() != n {
        return Err(Error::InvalidInput(format!("grid must have {n} entries, one per tangent direction")));
    }
    let centers = cell_centers(&opts.grid, opts.bound);
    let mut unresolved = 0;
    let mut hits: Vec<DVector<f64>> = Vec::new();
    for start in &centers {
        match newton(m, p, q, &basis, interval, start, opts.steps_per_unit, opts.min_steps, opts) {
            Some((c, _)) => hits.push(c),
            None => unresolved += 1,
        }
    }
    // Polish with the final resolution, then deduplicate in sorted order.
    let mut polished: Vec<(DVector<f64>, f64)> = hits
        .iter()
        .filter_map(|c| {
            newton(m, p, q, &basis, interval, c.as_slice(), opts.final_steps_per_unit, opts.final_min_steps, opts)
        })
        .filter(|(c, _)| c.amax() <= opts.bound * (1.0 + 1e-12))
        .collect();
    polished.sort_by(|a, b| {
        a.0.iter().zip(b.0.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut unique: Vec<(DVector<f64>, f64)> = Vec::new();
    for (c, r) in polished {
        if unique.iter().all(|(u, _)| (u - &c).norm() > opts.dedup) {
            unique.push((c, r));
        }
    }
    let len = interval.1 - interval.0;
    let mut geodesics = Vec::new();
    let mut focal_rejected = 0;
    for (c, r) in unique {
        let v = &basis * &c;
        let steps = steps_for(&v, len, opts.final_steps_per_unit, opts.final_min_steps);
        let curve = Arc::new(integrate_geodesic(manifold.clone(), p, &v, interval, steps, opts.geodesic_tol)?);
        match geodesic_maslov(&curve, fields, &opts.maslov, opts.geodesic_tol) {
            Ok((mi, mr)) => geodesics.push(FoundGeodesic {
                velocity: c.iter().copied().collect(),
                endpoint_residual: r,
                maslov: mi,
                maslov_red: mr,
                curve,
            }),
            Err(Error::EndpointFocal(_)) | Err(Error::EndpointConjugate(_)) => focal_rejected += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ShootingReport { geodesics, cells: centers.len(), unresolved_cells: unresolved, focal_rejected })
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseVerdict {
    pub holds: bool,
    pub degree_cap: usize,
    /// Coefficients `q_0 … q_{cap}` of `Q(λ)` when the check passes, the prefix up to the violation otherwise.
    pub q: Vec<i64>,
    pub violated_at: Option<usize>,
}

/// Decides whether `Σ n_i λⁱ = P(λ) + (1 + λ)Q(λ)` admits `Q ≥ 0` up to
/// `degree_cap`, with `q_i = n_i − p_i − q_{i−1}`.
pub fn morse_relations_check(counts: &BTreeMap<usize, usize>, poincare: &[u64], degree_cap: usize) -> MorseVerdict {
    let mut q = Vec::with_capacity(degree_cap + 1);
    let mut prev = 0i64;
    for i in 0..=degree_cap {
        let n = counts.get(&i).copied().unwrap_or(0) as i64;
        let p = poincare.get(i).copied().unwrap_or(0) as i64;
        let qi = n - p - prev;
        if qi < 0 {
            return MorseVerdict { holds: false, degree_cap, q, violated_at: Some(i) };
        }
        q.push(qi);
        prev = qi;
    }
    MorseVerdict { holds: true, degree_cap, q, violated_at: None }
}
