//! Piecewise-linear finite-element discretization of the index form
//! `I(v, w) = ∫ B(α_v, α_w) + C(v, w) dt − S(v(a), w(a))` and the spaces
//! `K_D` (solutions along `D`) and `S_D` (sections of `D` vanishing at the ends).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::bilinear::{self, Inertia, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maslov::{self, MaslovOptions};
use crate::reduction::{self, Frame};
use crate::sds::{self, CoefficientPath, InitialData};

/// Default mesh sequence for stabilization runs.
pub const DEFAULT_MESHES: [usize; 4] = [100, 200, 400, 800];

/// Hat-function space on a uniform mesh with `v(a) ∈ P` and `v(b) = 0`.
///
/// DOF layout: the `dim P` coefficients of `v(a)` in the basis of `P`, then
/// the `n` components at each interior node.
#[derive(Debug, Clone)]
pub struct FeSpace {
    nodes: Vec<f64>,
    n: usize,
    p_basis: DMatrix<f64>,
    quad_order: usize,
}

impl FeSpace {
    pub fn new(interval: (f64, f64), intervals: usize, p: &Subspace, quad_order: usize) -> Result<Self> {
        if intervals < 8 {
            return Err(Error::InvalidInput(format!("mesh needs at least 8 intervals, got {intervals}")));
        }
        if !(1..=5).contains(&quad_order) {
            return Err(Error::InvalidInput(format!("quadrature order {quad_order} outside 1..=5")));
        }
        Ok(Self {
            nodes: linalg::uniform_mesh(interval.0, interval.1, intervals),
            n: p.ambient_dim(),
            p_basis: p.basis().clone(),
            quad_order,
        })
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn h(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_dofs(&self) -> usize {
        self.p_basis.ncols()
    }

    pub fn dofs(&self) -> usize {
        self.p_dofs() + self.n * (self.intervals() - 1)
    }

    /// DOF offset of node `m` and the `n×size` map from its DOFs to the nodal value.
    fn node_map(&self, m: usize) -> Option<(usize, DMatrix<f64>)> {
        let n_int = self.intervals();
        if m == 0 {
            (self.p_dofs() > 0).then(|| (0, self.p_basis.clone()))
        } else if m == n_int {
            None
        } else {
            Some((self.p_dofs() + (m - 1) * self.n, DMatrix::identity(self.n, self.n)))
        }
    }

    /// Quadrature points `(t, weight, local coordinate)` of element `e`.
    fn qpoints(&self, e: usize) -> Vec<(f64, f64, f64)> {
        let (xs, ws) = linalg::gauss_legendre(self.quad_order);
        let (t0, h) = (self.nodes[e], self.h());
        xs.iter().zip(ws.iter()).map(|(x, w)| {
            let s = 0.5 * (x + 1.0);
            (t0 + s * h, 0.5 * w * h, s)
        }).collect()
    }

    /// Value at `t` of the member with DOF vector `c`.
    pub fn eval(&self, c: &DVector<f64>, t: f64) -> DVector<f64> {
        let h = self.h();
        let e = (((t - self.nodes[0]) / h).floor().max(0.0) as usize).min(self.intervals() - 1);
        let s = (t - self.nodes[e]) / h;
        let mut out = DVector::zeros(self.n);
        for (m, shape) in [(e, 1.0 - s), (e + 1, s)] {
            if let Some((off, map)) = self.node_map(m) {
                out += &map * c.rows(off, map.ncols()) * shape;
            }
        }
        out
    }
}

/// Coefficients sampled at one quadrature point.
struct QSample {
    w: f64,
    s: f64,
    a: DMatrix<f64>,
    binv: DMatrix<f64>,
    c: DMatrix<f64>,
}

fn samples(x: &CoefficientPath, space: &FeSpace) -> Vec<Vec<QSample>> {
    (0..space.intervals())
        .map(|e| {
            space
                .qpoints(e)
                .into_iter()
                .map(|(t, w, s)| QSample { w, s, a: x.a(t), binv: x.b_inv(t), c: x.c(t) })
                .collect()
        })
        .collect()
}

/// Matrix of `I` on the DOFs of a space.
#[derive(Debug, Clone)]
pub struct AssembledForm {
    pub space: FeSpace,
    pub matrix: DMatrix<f64>,
    /// `S` in the basis of `P` (already subtracted from `matrix`).
    pub s_block: DMatrix<f64>,
    pub quad_order: usize,
}

fn add_block(target: &mut DMatrix<f64>, r0: usize, c0: usize, block: &DMatrix<f64>) {
    let mut v = target.view_mut((r0, c0), (block.nrows(), block.ncols()));
    v += block;
}

pub fn assemble_index_form(x: &CoefficientPath, l0: &InitialData, intervals: usize, quad_order: usize) -> Result<AssembledForm> {
    if l0.n() != x.n() {
        return Err(Error::DimensionMismatch("initial data and system dimensions differ".into()));
    }
    let space = FeSpace::new(x.interval(), intervals, l0.p(), quad_order)?;
    let n = x.n();
    let h = space.h();
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::zeros(space.dofs(), space.dofs());
    for (e, qs) in samples(x, &space).iter().enumerate() {
        let mut blocks = [[DMatrix::zeros(n, n), DMatrix::zeros(n, n)], [DMatrix::zeros(n, n), DMatrix::zeros(n, n)]];
        for q in qs {
            let shape = [1.0 - q.s, q.s];
            let dshape = [-1.0 / h, 1.0 / h];
            let l: Vec<DMatrix<f64>> = (0..2).map(|i| &id * dshape[i] - &q.a * shape[i]).collect();
            let bl: Vec<DMatrix<f64>> = l.iter().map(|li| &q.binv * li).collect();
            for i in 0..2 {
                for j in 0..2 {
                    blocks[i][j] += (l[i].transpose() * &bl[j] + &q.c * (shape[i] * shape[j])) * q.w;
                }
            }
        }
        for i in 0..2 {
            let Some((ri, mi)) = space.node_map(e + i) else { continue };
            for j in 0..2 {
                let Some((rj, mj)) = space.node_map(e + j) else { continue };
                add_block(&mut m, ri, rj, &(mi.transpose() * &blocks[i][j] * &mj));
            }
        }
    }
    let k = space.p_dofs();
    let s_block = l0.s().matrix().clone();
    if k > 0 {
        add_block(&mut m, 0, 0, &(-&s_block));
    }
    Ok(AssembledForm { space, matrix: linalg::symmetrize(&m), s_block, quad_order })
}

/// Values and derivatives of `φ_j·Y_i` at the quadrature points, where `φ_j`
/// are the interior hats of the reduced space.
#[derive(Debug, Clone)]
pub struct SdBasis {
    pub intervals: usize,
    pub rank: usize,
    /// `[element][qpoint] -> (Y, Y′)`.
    samples: Vec<Vec<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl SdBasis {
    pub fn len(&self) -> usize {
        self.rank * (self.intervals - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of `φ_j·Y_i` in the basis.
    pub fn index(&self, j: usize, i: usize) -> usize {
        (j - 1) * self.rank + i
    }
}

pub fn sd_basis(frame: &Frame, space: &FeSpace) -> SdBasis {
    let samples = (0..space.intervals())
        .map(|e| space.qpoints(e).into_iter().map(|(t, _, _)| (frame.y(t), frame.dy(t))).collect())
        .collect();
    SdBasis { intervals: space.intervals(), rank: frame.rank(), samples }
}

/// Interior hats active on element `e`: `(node, shape, dshape)`.
fn active_hats(e: usize, s: f64, h: f64, intervals: usize) -> impl Iterator<Item = (usize, f64, f64)> {
    [(e, 1.0 - s, -1.0 / h), (e + 1, s, 1.0 / h)].into_iter().filter(move |(j, _, _)| *j >= 1 && *j < intervals)
}

/// `I` restricted to `S_D`: the Gram matrix `I(φ_jY_i, φ_kY_l)`.
pub fn sd_gram(x: &CoefficientPath, frame: &Frame, space: &FeSpace) -> Result<DMatrix<f64>> {
    check_frame(x, frame)?;
    let basis = sd_basis(frame, space);
    let h = space.h();
    let mut g = DMatrix::zeros(basis.len(), basis.len());
    for (e, qs) in samples(x, space).iter().enumerate() {
        for (q, (y, dy)) in qs.iter().zip(basis.samples[e].iter()) {
            let hats: Vec<_> = active_hats(e, q.s, h, space.intervals()).collect();
            let vals: Vec<(usize, DMatrix<f64>, DMatrix<f64>)> = hats
                .iter()
                .map(|&(j, p, dp)| {
                    let w = y * p;
                    let u = (dy * p + y * dp) - &q.a * &w;
                    (j, w, u)
                })
                .collect();
            for (j1, w1, u1) in &vals {
                for (j2, w2, u2) in &vals {
                    let blk = (u1.transpose() * &q.binv * u2 + w1.transpose() * &q.c * w2) * q.w;
                    add_block(&mut g, basis.index(*j1, 0), basis.index(*j2, 0), &blk);
                }
            }
        }
    }
    Ok(linalg::symmetrize(&g))
}

/// Linear functionals whose joint kernel is the discrete `K_D`.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    /// Row `(j−1)r + i` is `v ↦ I(v, φ_jY_i)`.
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

fn check_frame(x: &CoefficientPath, frame: &Frame) -> Result<()> {
    if frame.n() != x.n() {
        return Err(Error::DimensionMismatch("frame and system dimensions differ".into()));
    }
    Ok(())
}

/// Galerkin form of `F(v) ∈ Const`: `I(v, φ_jY_i) = 0` for all interior
/// reduced hats `φ_j` and frame fields `Y_i`.
pub fn kd_constraints(x: &CoefficientPath, frame: &Frame, space: &FeSpace) -> Result<ConstraintSet> {
    check_frame(x, frame)?;
    let basis = sd_basis(frame, space);
    let n = x.n();
    let h = space.h();
    let id = DMatrix::<f64>::identity(n, n);
    let mut g = DMatrix::zeros(basis.len(), space.dofs());
    for (e, qs) in samples(x, space).iter().enumerate() {
        for (q, (y, dy)) in qs.iter().zip(basis.samples[e].iter()) {
            let shape = [1.0 - q.s, q.s];
            let dshape = [-1.0 / h, 1.0 / h];
            for (j, p, dp) in active_hats(e, q.s, h, space.intervals()) {
                let w = y * p;
                let u = (dy * p + y * dp) - &q.a * &w;
                let bu = &q.binv * &u;
                let cw = &q.c * &w;
                for i in 0..2 {
                    let Some((off, map)) = space.node_map(e + i) else { continue };
                    let l = &id * dshape[i] - &q.a * shape[i];
                    let blk = (l.transpose() * &bu + &cw * shape[i]) * q.w;
                    add_block(&mut g, basis.index(j, 0), off, &(blk.transpose() * map));
                }
            }
        }
    }
    let (_, rank) = linalg::nullspace(&g, 1e-12);
    Ok(ConstraintSet { matrix: g, rank })
}

/// What to restrict the assembled form to.
pub enum Restriction<'a> {
    Whole,
    Kernel(&'a ConstraintSet),
    Basis(&'a DMatrix<f64>),
}

/// Eigenvalues of `ZᵀMZ` (ascending) for an orthonormal `Z` spanning the restriction.
pub fn restricted_eigenvalues(form: &DMatrix<f64>, restriction: Restriction<'_>) -> Vec<f64> {
    let m = match restriction {
        Restriction::Whole => form.clone(),
        Restriction::Kernel(cs) => {
            let (z, _) = linalg::nullspace(&cs.matrix, 1e-12);
            z.transpose() * form * z
        }
        Restriction::Basis(b) => b.transpose() * form * b,
    };
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(linalg::symmetrize(&m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Inertia with eigenvalues `|λ| ≤ tol·max|λ|` counted as degenerate.
pub fn inertia_from_eigenvalues(ev: &[f64], tol: f64) -> Inertia {
    let norm = ev.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    bilinear::inertia_of_eigenvalues(ev, tol * norm)
}

pub fn restricted_inertia(form: &DMatrix<f64>, restriction: Restriction<'_>, tol: f64) -> Inertia {
    inertia_from_eigenvalues(&restricted_eigenvalues(form, restriction), tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexOptions {
    pub quad_order: usize,
    pub tol: f64,
    /// Number of consecutive meshes that must agree.
    pub agreeing_meshes: usize,
    pub maslov: MaslovOptions,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self { quad_order: 3, tol: 1e-8, agreeing_meshes: 3, maslov: MaslovOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshResult {
    pub intervals: usize,
    pub kd: Inertia,
    pub sd: Inertia,
    pub orthogonality_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhsTerms {
    pub maslov: i64,
    pub maslov_red: i64,
    pub correction: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    Mismatch,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexTheoremReport {
    pub lhs: Option<i64>,
    pub rhs: i64,
    pub rhs_terms: RhsTerms,
    pub meshes: Vec<MeshResult>,
    pub stabilized_at: Option<usize>,
    /// `n₋(I|K_D) − n₊(I|S_D) − correction` at the final mesh, for the maximal negative case.
    pub old_theorem_lhs: Option<i64>,
    pub family_is_maximal_negative: bool,
    pub verdict: Verdict,
}

/// Inertias of `I` on the discrete `K_D` and `S_D` for one mesh.
pub fn mesh_inertias(x: &CoefficientPath, l0: &InitialData, frame: &Frame, intervals: usize, opts: &IndexOptions) -> Result<MeshResult> {
    let form = assemble_index_form(x, l0, intervals, opts.quad_order)?;
    let cs = kd_constraints(x, frame, &form.space)?;
    let (z, _) = linalg::nullspace(&cs.matrix, 1e-12);
    let kd_ev = restricted_eigenvalues(&form.matrix, Restriction::Basis(&z));
    let kd = inertia_from_eigenvalues(&kd_ev, opts.tol);
    let gram = sd_gram(x, frame, &form.space)?;
    let sd = restricted_inertia(&gram, Restriction::Whole, opts.tol);
    let orthogonality_residual = linalg::max_abs(&(&cs.matrix * &z)) / linalg::max_abs(&cs.matrix).max(1e-300);
    Ok(MeshResult { intervals, kd, sd, orthogonality_residual })
}

fn maslov_red(x: &CoefficientPath, frame: &Frame, opts: &MaslovOptions) -> Result<i64> {
    let rc = reduction::reduced_coefficients(x, frame)?;
    let xr = reduction::build_reduced(&rc)?;
    match maslov::maslov_index(&xr, &InitialData::l0(frame.rank()), opts) {
        Err(Error::EndpointFocal(b)) => Err(Error::EndpointConjugate(b)),
        other => other?.index(),
    }
}

/// Computes both sides of `n₋(I|K_D) = i_Maslov(X, ℓ₀) − i_Maslov(X_red) + n₋(B(a)⁻¹|_P)`.
pub fn verify_index_theorem(
    x: &CoefficientPath,
    l0: &InitialData,
    frame: &Frame,
    meshes: &[usize],
    opts: &IndexOptions,
) -> Result<IndexTheoremReport> {
    let rc = reduction::reduced_coefficients(x, frame)?;
    if rc.index() != x.b_index() {
        return Err(Error::Precondition(format!(
            "family index {} differs from the system index {}",
            rc.index(),
            x.b_index()
        )));
    }
    let (correction, ok) = sds::initial_condition_index(x, l0, opts.tol)?;
    if !ok {
        return Err(Error::Precondition("initial condition is degenerate".into()));
    }
    let m = maslov::maslov_index(x, l0, &opts.maslov)?.index()?;
    let mr = maslov_red(x, frame, &opts.maslov)?;
    let rhs_terms = RhsTerms { maslov: m, maslov_red: mr, correction: correction as i64 };
    let rhs = m - mr + correction as i64;
    let need = opts.agreeing_meshes.max(1);
    let mut results: Vec<MeshResult> = Vec::new();
    let mut stabilized_at = None;
    for &n_int in meshes {
        results.push(mesh_inertias(x, l0, frame, n_int, opts)?);
        if results.len() >= need {
            let tail = &results[results.len() - need..];
            if tail.iter().all(|r| r.kd.n_minus == tail[0].kd.n_minus && r.sd.n_plus == tail[0].sd.n_plus) {
                stabilized_at = Some(n_int);
                break;
            }
        }
    }
    let lhs = stabilized_at.map(|_| results.last().expect("nonempty").kd.n_minus as i64);
    let maximal_negative = rc.index() == frame.rank();
    let old_theorem_lhs = stabilized_at.map(|_| {
        let last = results.last().expect("nonempty");
        last.kd.n_minus as i64 - last.sd.n_plus as i64 - correction as i64
    });
    let verdict = match lhs {
        None => Verdict::Inconclusive,
        Some(v) if v == rhs => Verdict::Equal,
        Some(_) => Verdict::Mismatch,
    };
    Ok(IndexTheoremReport {
        lhs,
        rhs,
        rhs_terms,
        meshes: results,
        stabilized_at,
        old_theorem_lhs,
        family_is_maximal_negative: maximal_negative,
        verdict,
    })
}

/// Max `|I(v, w)|` over an orthonormal basis of the discrete `K_D` and the
/// `S_D` basis, relative to the largest constraint entry.
pub fn verify_orthogonality(x: &CoefficientPath, l0: &InitialData, frame: &Frame, intervals: usize) -> Result<f64> {
    let space = FeSpace::new(x.interval(), intervals, l0.p(), 3)?;
    let cs = kd_constraints(x, frame, &space)?;
    let (z, _) = linalg::nullspace(&cs.matrix, 1e-12);
    Ok(linalg::max_abs(&(&cs.matrix * z)) / linalg::max_abs(&cs.matrix).max(1e-300))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub intervals: usize,
    pub sigma_min_relative: f64,
    pub condition: f64,
    pub invertible: bool,
    pub reduced_conjugate_at_b: bool,
}

/// Conditioning of the discretized `F∘λ` (the constraints applied to the `S_D` basis).
pub fn verify_decomposition(x: &CoefficientPath, l0: &InitialData, frame: &Frame, intervals: usize, tol: f64) -> Result<DecompositionReport> {
    let space = FeSpace::new(x.interval(), intervals, l0.p(), 3)?;
    let gram = sd_gram(x, frame, &space)?;
    let sv = linalg::singular_values(&gram);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let rel = if smax > 0.0 { smin / smax } else { 0.0 };
    let reduced_conjugate_at_b = match maslov_red(x, frame, &MaslovOptions::default()) {
        Err(Error::EndpointConjugate(_)) => true,
        Err(e) => return Err(e),
        Ok(_) => false,
    };
    Ok(DecompositionReport {
        intervals,
        sigma_min_relative: rel,
        condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        invertible: rel > tol,
        reduced_conjugate_at_b,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub focal_multiplicity_at_b: usize,
    pub degeneracy: usize,
    pub intervals: usize,
    pub matches: bool,
    pub tried: Vec<(usize, usize)>,
}

/// Compares the degeneracy of `I|K_D` with the multiplicity of `b` as a
/// focal instant, refining the mesh while they differ.
pub fn kernel_dimension_check(
    x: &CoefficientPath,
    l0: &InitialData,
    frame: &Frame,
    meshes: &[usize],
    opts: &IndexOptions,
) -> Result<KernelReport> {
    let phi = sds::integrate_fundamental(x, opts.maslov.steps, opts.maslov.symplectic_tol)?;
    let b = x.end();
    let inst = maslov::find_focal_instants(&phi, l0, &opts.maslov)?;
    let expected = inst.iter().find(|i| i.t == b).map(|i| i.multiplicity).unwrap_or(0);
    let mut tried = Vec::new();
    let mut last = (0, 0);
    for &n_int in meshes {
        let form = assemble_index_form(x, l0, n_int, opts.quad_order)?;
        let cs = kd_constraints(x, frame, &form.space)?;
        let inr = restricted_inertia(&form.matrix, Restriction::Kernel(&cs), opts.tol);
        tried.push((n_int, inr.degeneracy));
        last = (n_int, inr.degeneracy);
        if inr.degeneracy == expected {
            break;
        }
    }
    Ok(KernelReport { focal_multiplicity_at_b: expected, degeneracy: last.1, intervals: last.0, matches: last.1 == expected, tried })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenflowRow {
    pub intervals: usize,
    pub rank: usize,
    pub eigenvalue: f64,
}

/// The `count` smallest eigenvalues of `I|K_D` (orthonormal basis) on each mesh,
/// normalized by the largest eigenvalue magnitude.
pub fn eigenflow(x: &CoefficientPath, l0: &InitialData, frame: &Frame, meshes: &[usize], count: usize) -> Result<Vec<EigenflowRow>> {
    let mut rows = Vec::new();
    for &n_int in meshes {
        let form = assemble_index_form(x, l0, n_int, 3)?;
        let cs = kd_constraints(x, frame, &form.space)?;
        let ev = restricted_eigenvalues(&form.matrix, Restriction::Kernel(&cs));
        let norm = ev.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1e-300);
        for (k, l) in ev.iter().take(count).enumerate() {
            rows.push(EigenflowRow { intervals: n_int, rank: k, eigenvalue: l / norm });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::SymForm;
    use crate::matfn::MatrixFn;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn diag_ms(g: &[f64], r: &[f64], b: f64) -> CoefficientPath {
        let rm = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_column_slice(r)));
        sds::make_morse_sturm(&SymForm::diagonal(g), &rm, (0.0, b)).unwrap()
    }

    #[test]
    fn sturm_count() {
        for &w in &[2.0, 5.0, 9.5] {
            let x = diag_ms(&[1.0], &[-w * w], 1.0);
            let f = assemble_index_form(&x, &InitialData::l0(1), 200, 3).unwrap();
            let inr = restricted_inertia(&f.matrix, Restriction::Whole, 1e-8);
            assert_eq!(inr.n_minus, (w / PI).floor() as usize, "w={w}");
        }
    }

    #[test]
    fn flat_riemannian_form_is_positive_definite() {
        let x = diag_ms(&[1.0, 1.0], &[0.0, 0.0], 1.0);
        let f = assemble_index_form(&x, &InitialData::l0(2), 50, 3).unwrap();
        let inr = restricted_inertia(&f.matrix, Restriction::Whole, 1e-8);
        assert_eq!((inr.n_minus, inr.degeneracy), (0, 0));
        assert_eq!(f.space.p_dofs(), 0);
        assert_eq!(f.s_block.nrows(), 0);
    }

    #[test]
    fn zero_form_is_fully_degenerate() {
        let m = DMatrix::zeros(5, 5);
        assert_eq!(restricted_inertia(&m, Restriction::Whole, 1e-8), Inertia { n_minus: 0, n_plus: 0, degeneracy: 5 });
    }

    #[test]
    fn sd_basis_shape() {
        let p = Subspace::zero(2);
        let space = FeSpace::new((0.0, 1.0), 20, &p, 3).unwrap();
        let frame = Frame::constant(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
        let basis = sd_basis(&frame, &space);
        assert_eq!(basis.len(), 19);
        assert!(basis.samples.iter().flatten().all(|(y, _)| y[(0, 0)] == 0.0));
    }

    #[test]
    fn lorentzian_index_theorem() {
        let x = diag_ms(&[1.0, -1.0], &[-(2.5 * PI).powi(2), -(1.5 * PI).powi(2)], 1.0);
        let frame = Frame::constant(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
        let rep = verify_index_theorem(&x, &InitialData::l0(2), &frame, &DEFAULT_MESHES, &IndexOptions::default()).unwrap();
        assert_eq!(rep.rhs_terms.maslov, 1);
        assert_eq!(rep.rhs_terms.maslov_red, -1);
        assert_eq!(rep.lhs, Some(2));
        assert_eq!(rep.verdict, Verdict::Equal);
        assert_eq!(rep.old_theorem_lhs, Some(1));
    }
}
