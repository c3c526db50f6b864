//! Focal instants and the Maslov index of `(X, ℓ₀)` as a signed crossing count.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bilinear::{self, SymForm, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matfn::MatrixFn;
use crate::sds::{self, CoefficientPath, FundamentalPath, InitialData, LagrangianPath};

#[derive(Debug, Clone, Serialize)]
pub struct MaslovOptions {
    /// RK4 steps for the fundamental matrix.
    pub steps: usize,
    /// Scan points per integration step.
    pub scan_factor: usize,
    /// Singular values of the normalized `V`-block at or below this count as kernel.
    pub rank_tol: f64,
    /// Relative tolerance for signature decisions.
    pub sig_tol: f64,
    /// Minimum distance between distinct instants, relative to `b − a`.
    pub min_separation: f64,
    pub symplectic_tol: f64,
}

impl Default for MaslovOptions {
    fn default() -> Self {
        Self { steps: 2000, scan_factor: 4, rank_tol: 1e-8, sig_tol: 1e-8, min_separation: 1e-6, symplectic_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocalInstant {
    pub t: f64,
    pub multiplicity: usize,
    pub signature: i64,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaslovReport {
    pub instants: Vec<FocalInstant>,
    pub epsilon: f64,
    /// Set when the `V`-block stays near-singular beyond the first scan offset.
    pub epsilon_warning: bool,
    pub total: Option<i64>,
    pub valid: bool,
    pub max_symplectic_residual: f64,
    pub reprojections: usize,
    pub options: MaslovOptions,
}

impl MaslovReport {
    /// The index, or an error naming the first degenerate instant.
    pub fn index(&self) -> Result<i64> {
        match self.total {
            Some(v) => Ok(v),
            None => {
                let t = self.instants.iter().find(|i| !i.nondegenerate).map(|i| i.t).unwrap_or(f64::NAN);
                Err(Error::Precondition(format!("degenerate focal instant at t = {t}")))
            }
        }
    }
}

struct Scan<'a> {
    path: LagrangianPath<'a>,
}

impl Scan<'_> {
    fn nv(&self, t: f64) -> DMatrix<f64> {
        self.path.normalized_v_block(t)
    }

    fn det(&self, t: f64) -> f64 {
        self.nv(t).determinant()
    }

    fn sigma_min(&self, t: f64) -> f64 {
        linalg::sigma_min(&self.nv(t))
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn scan_mesh(phi: &FundamentalPath, factor: usize) -> Vec<f64> {
    let nodes = phi.nodes();
    let mut out = Vec::with_capacity((nodes.len() - 1) * factor + 1);
    for w in nodes.windows(2) {
        for j in 0..factor {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
        }
    }
    out.push(*nodes.last().expect("nonempty mesh"));
    out
}

/// Focal data at a located instant: multiplicity from the kernel of the
/// normalized `V`-block, signature of `B(t)⁻¹` on the complement of its image.
fn classify(x: &CoefficientPath, v: &DMatrix<f64>, t: f64, opts: &MaslovOptions) -> Result<FocalInstant> {
    let n = v.ncols();
    let sv = linalg::singular_values(v);
    let multiplicity = sv.iter().filter(|&&s| s <= opts.rank_tol).count().max(1);
    let image = Subspace::from_orthonormal(linalg::column_space_abs(v, opts.rank_tol));
    let image = if image.dim() > n - multiplicity {
        // Keep the `n − multiplicity` dominant directions.
        Subspace::from_orthonormal(image.basis().columns(0, n - multiplicity).into_owned())
    } else {
        image
    };
    let form = SymForm::new(x.b_inv(t))?;
    let (signature, nondegenerate) = bilinear::signature_on_complement(&form, &image, opts.sig_tol)?;
    Ok(FocalInstant { t, multiplicity, signature, nondegenerate })
}

/// Focal instants in `]a, b]`, together with the start offset `ε` and
/// whether it had to be widened.
pub fn find_focal_instants_with_epsilon(
    phi: &FundamentalPath,
    l0: &InitialData,
    opts: &MaslovOptions,
) -> Result<(Vec<FocalInstant>, f64, bool)> {
    let x = phi.system();
    let (a, b) = x.interval();
    let scan = Scan { path: sds::lagrangian_frame(phi, l0) };
    let ts = scan_mesh(phi, opts.scan_factor.max(1));
    let m = ts.len() - 1;
    let nvs: Vec<DMatrix<f64>> = ts.iter().map(|&t| scan.nv(t)).collect();
    let dets: Vec<f64> = nvs.iter().map(|v| v.determinant()).collect();
    let sig: Vec<f64> = nvs.iter().map(linalg::sigma_min).collect();

    let mut start = 1;
    while start < m && sig[start] <= opts.rank_tol {
        start += 1;
    }
    let epsilon = ts[start] - a;
    let epsilon_warning = start > 1;

    let root_tol = 1e-13 * (b - a);
    let b_focal = sig[m] <= opts.rank_tol;
    let mut times: Vec<f64> = Vec::new();
    let mut sign_change = vec![false; m];
    for i in start..m {
        if dets[i] == 0.0 {
            continue;
        }
        if dets[i + 1] != 0.0 && (dets[i] > 0.0) != (dets[i + 1] > 0.0) {
            sign_change[i] = true;
            let t = bisect(ts[i], ts[i + 1], |t| scan.det(t), root_tol);
            if !(b_focal && b - t < 1e-9 * (b - a)) {
                times.push(t);
            }
        }
    }
    for i in start.max(1)..m {
        let is_dip = sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1] && sig[i] < 0.1;
        if !is_dip || sign_change[i - 1] || sign_change[i] {
            continue;
        }
        let (t, s) = golden_min(ts[i - 1], ts[i + 1], |t| scan.sigma_min(t), root_tol);
        if s <= opts.rank_tol && !(b_focal && b - t < 1e-9 * (b - a)) {
            times.push(t);
        }
    }
    times.sort_by(|p, q| p.total_cmp(q));
    times.dedup_by(|p, q| (*p - *q).abs() <= 1e-9 * (b - a));
    let min_sep = opts.min_separation * (b - a);
    for w in times.windows(2) {
        if w[1] - w[0] < min_sep {
            return Err(Error::UnresolvedCluster { t: w[0] });
        }
    }
    let mut instants = Vec::with_capacity(times.len() + 1);
    for t in times {
        instants.push(classify(x, &scan.nv(t), t, opts)?);
    }
    if b_focal {
        instants.push(classify(x, &nvs[m], b, opts)?);
    }
    Ok((instants, epsilon, epsilon_warning))
}

pub fn find_focal_instants(phi: &FundamentalPath, l0: &InitialData, opts: &MaslovOptions) -> Result<Vec<FocalInstant>> {
    Ok(find_focal_instants_with_epsilon(phi, l0, opts)?.0)
}

/// Maslov index from an already integrated fundamental path.
pub fn maslov_index_from(phi: &FundamentalPath, l0: &InitialData, opts: &MaslovOptions) -> Result<MaslovReport> {
    let x = phi.system();
    let (_, ok) = sds::initial_condition_index(x, l0, opts.sig_tol)?;
    if !ok {
        return Err(Error::Precondition("initial condition is degenerate: B(a)^-1 is degenerate on P".into()));
    }
    let (instants, epsilon, epsilon_warning) = find_focal_instants_with_epsilon(phi, l0, opts)?;
    let b = x.end();
    if instants.last().is_some_and(|i| i.t == b) {
        return Err(Error::EndpointFocal(b));
    }
    let valid = instants.iter().all(|i| i.nondegenerate);
    let total = valid.then(|| instants.iter().map(|i| i.signature).sum());
    Ok(MaslovReport {
        instants,
        epsilon,
        epsilon_warning,
        total,
        valid,
        max_symplectic_residual: phi.max_residual(),
        reprojections: phi.reprojections().len(),
        options: opts.clone(),
    })
}

pub fn maslov_index(x: &CoefficientPath, l0: &InitialData, opts: &MaslovOptions) -> Result<MaslovReport> {
    let phi = sds::integrate_fundamental(x, opts.steps, opts.symplectic_tol)?;
    maslov_index_from(&phi, l0, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationTrial {
    pub total: Option<i64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub base_total: i64,
    pub delta: f64,
    pub trials: Vec<PerturbationTrial>,
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, delta: f64, symmetric: bool) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-delta..=delta));
    if symmetric {
        linalg::symmetrize(&m)
    } else {
        m
    }
}

fn shifted(f: &MatrixFn, d: DMatrix<f64>) -> MatrixFn {
    let f = f.clone();
    let (r, c) = f.shape();
    MatrixFn::from_fn(r, c, move |t| f.eval(t) + &d)
}

/// Whether the Maslov index survives `trials` constant coefficient
/// perturbations with entries bounded by `delta`.
pub fn perturbation_stability(
    x: &CoefficientPath,
    l0: &InitialData,
    delta: f64,
    trials: usize,
    seed: u64,
    opts: &MaslovOptions,
) -> Result<StabilityReport> {
    let base_total = maslov_index(x, l0, opts)?.index()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.n();
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let da = random_matrix(&mut rng, n, delta, false);
        let db = random_matrix(&mut rng, n, delta, true);
        let dc = random_matrix(&mut rng, n, delta, true);
        let trial = CoefficientPath::new(shifted(x.a_fn(), da), shifted(x.b_fn(), db), shifted(x.c_fn(), dc), x.interval())
            .and_then(|xp| maslov_index(&xp, l0, opts))
            .and_then(|r| r.index());
        out.push(match trial {
            Ok(v) => PerturbationTrial { total: Some(v), error: None },
            Err(e) => PerturbationTrial { total: None, error: Some(e.to_string()) },
        });
    }
    let stable = out.iter().all(|t| t.total == Some(base_total));
    Ok(StabilityReport { stable, base_total, delta, trials: out })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FocalTraceRow {
    pub t: f64,
    pub det_v: f64,
    pub det_v_normalized: f64,
    pub sigma_min: f64,
}

/// `det V(t)`, `det` of the normalized block and its smallest singular value at `samples + 1` points.
pub fn focal_trace(phi: &FundamentalPath, l0: &InitialData, samples: usize) -> Vec<FocalTraceRow> {
    let (a, b) = phi.system().interval();
    let path = sds::lagrangian_frame(phi, l0);
    linalg::uniform_mesh(a, b, samples.max(1))
        .into_iter()
        .map(|t| {
            let v = path.v_block(t);
            let nv = path.normalized_v_block(t);
            FocalTraceRow { t, det_v: v.determinant(), det_v_normalized: nv.determinant(), sigma_min: linalg::sigma_min(&nv) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn diag_system(g: &[f64], r: &[f64], interval: (f64, f64)) -> CoefficientPath {
        let rm = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_column_slice(r)));
        sds::make_morse_sturm(&SymForm::diagonal(g), &rm, interval).unwrap()
    }

    #[test]
    fn oscillator_instants() {
        let w = 3.5 * PI;
        let x = diag_system(&[1.0], &[-w * w], (0.0, 1.0));
        let rep = maslov_index(&x, &InitialData::l0(1), &MaslovOptions::default()).unwrap();
        assert_eq!(rep.instants.len(), 3);
        for (k, inst) in rep.instants.iter().enumerate() {
            assert!((inst.t - (k + 1) as f64 / 3.5).abs() < 1e-8);
            assert_eq!((inst.multiplicity, inst.signature, inst.nondegenerate), (1, 1, true));
        }
        assert_eq!(rep.total, Some(3));
    }

    #[test]
    fn lorentzian_diagonal_instants() {
        let (w1, w2) = (2.5 * PI, 1.5 * PI);
        let x = diag_system(&[1.0, -1.0], &[-w1 * w1, -w2 * w2], (0.0, 1.0));
        let rep = maslov_index(&x, &InitialData::l0(2), &MaslovOptions::default()).unwrap();
        let mut expect: Vec<(f64, i64)> = vec![(1.0 / 2.5, 1), (2.0 / 2.5, 1), (1.0 / 1.5, -1)];
        expect.sort_by(|p, q| p.0.total_cmp(&q.0));
        assert_eq!(rep.instants.len(), 3);
        for (inst, (t, s)) in rep.instants.iter().zip(expect) {
            assert!((inst.t - t).abs() < 1e-8);
            assert_eq!(inst.signature, s);
        }
        assert_eq!(rep.total, Some(1));
    }

    #[test]
    fn double_crossing_found_without_sign_change() {
        let w = 1.5 * PI;
        let x = diag_system(&[1.0, 1.0], &[-w * w, -w * w], (0.0, 1.0));
        let rep = maslov_index(&x, &InitialData::l0(2), &MaslovOptions::default()).unwrap();
        assert_eq!(rep.instants.len(), 1);
        assert!((rep.instants[0].t - 1.0 / 1.5).abs() < 1e-8);
        assert_eq!((rep.instants[0].multiplicity, rep.instants[0].signature), (2, 2));
    }

    #[test]
    fn flat_system_has_no_instants() {
        let x = diag_system(&[1.0, -1.0], &[0.0, 0.0], (0.0, 1.0));
        let rep = maslov_index(&x, &InitialData::l0(2), &MaslovOptions::default()).unwrap();
        assert!(rep.instants.is_empty());
        assert_eq!(rep.total, Some(0));
    }

    #[test]
    fn endpoint_focal_is_an_error() {
        let x = diag_system(&[1.0], &[-PI * PI], (0.0, 1.0));
        assert!(matches!(maslov_index(&x, &InitialData::l0(1), &MaslovOptions::default()), Err(Error::EndpointFocal(_))));
        let phi = sds::integrate_fundamental(&x, 2000, 1e-8).unwrap();
        let inst = find_focal_instants(&phi, &InitialData::l0(1), &MaslovOptions::default()).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].t, 1.0);
    }

    #[test]
    fn stability_examples() {
        let w = 3.5 * PI;
        let x = diag_system(&[1.0], &[-w * w], (0.0, 1.0));
        let opts = MaslovOptions { steps: 500, ..Default::default() };
        assert!(perturbation_stability(&x, &InitialData::l0(1), 1e-6, 3, 7, &opts).unwrap().stable);
        let flat = diag_system(&[1.0], &[0.0], (0.0, 1.0));
        assert!(perturbation_stability(&flat, &InitialData::l0(1), 1e-3, 3, 7, &opts).unwrap().stable);
    }

    #[test]
    fn golden_section_finds_kink_minimum() {
        let (t, v) = golden_min(0.0, 1.0, |t| (t - 0.3141).abs(), 1e-13);
        assert!((t - 0.3141).abs() < 1e-12 && v < 1e-12);
    }
}
