//! Dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Matrix of the canonical symplectic form on `(v, α)` stacked columns:
/// `[[0, I], [-I, 0]]`.
pub fn canonical_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Singular values in descending order (empty for empty matrices).
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the column space of `m`, discarding directions with
/// singular value `<= rel_tol * σ_max`.
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    column_space_abs(m, rel_tol * singular_values(m).first().copied().unwrap_or(0.0))
}

/// Orthonormal basis of the column space keeping singular values `> abs_tol`.
pub fn column_space_abs(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > abs_tol).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis of `{x : G x = 0}` and the numerical rank of `G`.
///
/// Column-pivoted Householder QR of `Gᵀ`; pivots below `rel_tol · |R₀₀|` are
/// treated as dependent rows.
pub fn nullspace(g: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let n = g.ncols();
    let m = g.nrows();
    let mut a = g.transpose();
    let mut reflectors: Vec<DVector<f64>> = Vec::new();
    let mut r00 = 0.0;
    for k in 0..n.min(m) {
        let mut best = (k, -1.0);
        for j in k..m {
            let col = a.column(j);
            let norm = col.rows(k, n - k).norm();
            if norm > best.1 {
                best = (j, norm);
            }
        }
        if k == 0 {
            r00 = best.1;
        }
        if best.1 <= 0.0 || best.1 <= rel_tol * r00 {
            break;
        }
        a.swap_columns(k, best.0);
        let x = a.column(k).rows(k, n - k).into_owned();
        let alpha = if x[0] >= 0.0 { -x.norm() } else { x.norm() };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn == 0.0 {
            reflectors.push(DVector::zeros(n - k));
            continue;
        }
        v /= vn;
        for j in k..m {
            let mut col = a.column_mut(j);
            let mut seg = col.rows_mut(k, n - k);
            let s = 2.0 * v.dot(&seg);
            seg.axpy(-s, &v, 1.0);
        }
        reflectors.push(v);
    }
    let rank = reflectors.len();
    let mut q = DMatrix::zeros(n, n - rank);
    for j in 0..n - rank {
        q[(rank + j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..q.ncols() {
            let mut col = q.column_mut(j);
            let mut seg = col.rows_mut(k, n - k);
            let s = 2.0 * v.dot(&seg);
            seg.axpy(-s, v, 1.0);
        }
    }
    (q, rank)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` for 1 to 5 points.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    match points {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let x = 1.0 / 3f64.sqrt();
            (vec![-x, x], vec![1.0, 1.0])
        }
        3 => {
            let x = (3.0f64 / 5.0).sqrt();
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
    }
}

/// Integral of `f` over `[lo, hi]` with a single Gauss–Legendre panel.
pub fn gauss_integrate<F>(lo: f64, hi: f64, points: usize, mut f: F) -> DMatrix<f64>
where
    F: FnMut(f64) -> DMatrix<f64>,
{
    let (xs, ws) = gauss_legendre(points);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc: Option<DMatrix<f64>> = None;
    for (x, w) in xs.iter().zip(ws.iter()) {
        let v = f(mid + half * x) * (w * half);
        acc = Some(match acc {
            Some(a) => a + v,
            None => v,
        });
    }
    acc.unwrap_or_else(|| DMatrix::zeros(0, 0))
}

/// Uniform mesh with `intervals` cells.
pub fn uniform_mesh(a: f64, b: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| a + (b - a) * i as f64 / intervals as f64).collect()
}
