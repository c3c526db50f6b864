//! Matrix-valued functions of a real parameter.
//!
//! Coefficient paths, frames and curvature data are all `MatrixFn`s. Closed-form
//! entries differentiate exactly; tabulated data uses cubic Hermite interpolation
//! with fourth-order finite-difference slopes; opaque closures fall back to
//! central differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};

/// Dense matrix of expressions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Expr>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Parses a nested list of entry strings (one inner list per row).
    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {ncols}", row.len())));
            }
            for s in row {
                entries.push(Expr::parse(s.as_ref())?);
            }
        }
        Self::new(nrows, ncols, entries)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push(Expr::Const(m[(i, j)]));
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.cols + j]
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).eval(t, x))
    }

    pub fn derivative(&self, var: Var) -> ExprMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.derivative(var)).collect(),
        }
    }

    pub fn is_constant_in(&self, var: Var) -> bool {
        self.entries.iter().all(|e| e.independent_of(var))
    }

    /// `m * self` for a constant matrix `m`, kept symbolic.
    pub fn left_mul(&self, m: &DMatrix<f64>) -> Result<ExprMatrix> {
        if m.ncols() != self.rows {
            return Err(Error::DimensionMismatch("left factor does not match expression rows".into()));
        }
        let mut entries = Vec::with_capacity(m.nrows() * self.cols);
        for i in 0..m.nrows() {
            for j in 0..self.cols {
                let mut acc = Expr::Const(0.0);
                for k in 0..self.rows {
                    acc = expr::add(acc, expr::mul(Expr::Const(m[(i, k)]), self.entry(k, j).clone()));
                }
                entries.push(acc);
            }
        }
        Self::new(m.nrows(), self.cols, entries)
    }
}

type MatClosure = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Matrix function of `t`.
#[derive(Clone)]
pub enum MatrixFn {
    Constant(DMatrix<f64>),
    Expr(ExprMatrix),
    Closure {
        rows: usize,
        cols: usize,
        f: MatClosure,
        derivative: Option<Box<MatrixFn>>,
        step: f64,
    },
    Tabulated { table: Arc<Tabulated>, order: usize },
}

impl fmt::Debug for MatrixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFn::Constant(m) => write!(f, "Constant({}x{})", m.nrows(), m.ncols()),
            MatrixFn::Expr(e) => write!(f, "Expr({}x{})", e.rows, e.cols),
            MatrixFn::Closure { rows, cols, .. } => write!(f, "Closure({rows}x{cols})"),
            MatrixFn::Tabulated { table, order } => {
                write!(f, "Tabulated({} nodes, d^{order})", table.nodes.len())
            }
        }
    }
}

impl MatrixFn {
    pub fn constant(m: DMatrix<f64>) -> Self {
        MatrixFn::Constant(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixFn::Constant(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        MatrixFn::Constant(DMatrix::identity(n, n))
    }

    pub fn from_exprs(m: ExprMatrix) -> Self {
        if m.is_constant_in(Var::T) && m.entries.iter().all(|e| e.max_coordinate().is_none()) {
            return MatrixFn::Constant(m.eval(0.0, &[]));
        }
        MatrixFn::Expr(m)
    }

    /// Opaque closure; derivatives by central differences with step `1e-5`.
    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        MatrixFn::Closure { rows, cols, f: Arc::new(f), derivative: None, step: 1e-5 }
    }

    /// Attaches an exact derivative to a closure-backed function.
    pub fn with_derivative(self, d: MatrixFn) -> Self {
        match self {
            MatrixFn::Closure { rows, cols, f, step, .. } => {
                MatrixFn::Closure { rows, cols, f, derivative: Some(Box::new(d)), step }
            }
            other => other,
        }
    }

    pub fn with_step(self, h: f64) -> Self {
        match self {
            MatrixFn::Closure { rows, cols, f, derivative, .. } => {
                MatrixFn::Closure { rows, cols, f, derivative, step: h }
            }
            other => other,
        }
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        Ok(MatrixFn::Tabulated { table: Arc::new(Tabulated::new(nodes, values, None)?), order: 0 })
    }

    pub fn tabulated_with_slopes(
        nodes: Vec<f64>,
        values: Vec<DMatrix<f64>>,
        slopes: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        Ok(MatrixFn::Tabulated { table: Arc::new(Tabulated::new(nodes, values, Some(slopes))?), order: 0 })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixFn::Constant(m) => (m.nrows(), m.ncols()),
            MatrixFn::Expr(e) => (e.rows, e.cols),
            MatrixFn::Closure { rows, cols, .. } => (*rows, *cols),
            MatrixFn::Tabulated { table, .. } => {
                let v = &table.values[0];
                (v.nrows(), v.ncols())
            }
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match self {
            MatrixFn::Constant(m) => m.clone(),
            MatrixFn::Expr(e) => e.eval(t, &[]),
            MatrixFn::Closure { f, .. } => f(t),
            MatrixFn::Tabulated { table, order } => table.eval(t, *order),
        }
    }

    /// True when `derivative()` is exact rather than a difference quotient.
    pub fn has_exact_derivative(&self) -> bool {
        match self {
            MatrixFn::Constant(_) | MatrixFn::Expr(_) => true,
            MatrixFn::Closure { derivative, .. } => derivative.is_some(),
            MatrixFn::Tabulated { .. } => false,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixFn::Constant(_))
    }

    pub fn derivative(&self) -> MatrixFn {
        match self {
            MatrixFn::Constant(m) => MatrixFn::zeros(m.nrows(), m.ncols()),
            MatrixFn::Expr(e) => MatrixFn::from_exprs(e.derivative(Var::T)),
            MatrixFn::Closure { derivative: Some(d), .. } => (**d).clone(),
            MatrixFn::Closure { rows, cols, f, derivative: None, step } => {
                let f = f.clone();
                let h = *step;
                MatrixFn::Closure {
                    rows: *rows,
                    cols: *cols,
                    f: Arc::new(move |t| (f(t + h) - f(t - h)) / (2.0 * h)),
                    derivative: None,
                    step: h,
                }
            }
            MatrixFn::Tabulated { table, order } => {
                if *order >= 3 {
                    let (r, c) = self.shape();
                    MatrixFn::zeros(r, c)
                } else {
                    MatrixFn::Tabulated { table: table.clone(), order: order + 1 }
                }
            }
        }
    }

    /// `m * self(t)` for a constant `m`.
    pub fn left_mul(&self, m: &DMatrix<f64>) -> Result<MatrixFn> {
        let (r, c) = self.shape();
        if m.ncols() != r {
            return Err(Error::DimensionMismatch("left factor does not match rows".into()));
        }
        Ok(match self {
            MatrixFn::Constant(a) => MatrixFn::Constant(m * a),
            MatrixFn::Expr(e) => MatrixFn::from_exprs(e.left_mul(m)?),
            _ => {
                let inner = self.clone();
                let m = m.clone();
                let d = self.derivative();
                let m2 = m.clone();
                let rows = m.nrows();
                MatrixFn::from_fn(rows, c, move |t| &m * inner.eval(t))
                    .with_derivative(MatrixFn::from_fn(rows, c, move |t| &m2 * d.eval(t)))
            }
        })
    }
}

/// Samples with cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct Tabulated {
    nodes: Vec<f64>,
    values: Vec<DMatrix<f64>>,
    slopes: Vec<DMatrix<f64>>,
}

impl Tabulated {
    fn new(nodes: Vec<f64>, values: Vec<DMatrix<f64>>, slopes: Option<Vec<DMatrix<f64>>>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::InvalidInput("tabulated data needs >= 2 nodes with matching values".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("tabulation nodes must be strictly increasing".into()));
        }
        let slopes = match slopes {
            Some(s) if s.len() == nodes.len() => s,
            Some(_) => return Err(Error::InvalidInput("slope count does not match nodes".into())),
            None => finite_difference_slopes(&nodes, &values),
        };
        Ok(Self { nodes, values, slopes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn eval(&self, t: f64, order: usize) -> DMatrix<f64> {
        let n = self.nodes.len();
        let k = match self.nodes.partition_point(|&x| x <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        // Hermite basis and its derivatives with respect to s.
        let (h00, h10, h01, h11) = match order {
            0 => (
                2.0 * s * s * s - 3.0 * s * s + 1.0,
                s * s * s - 2.0 * s * s + s,
                -2.0 * s * s * s + 3.0 * s * s,
                s * s * s - s * s,
            ),
            1 => (6.0 * s * s - 6.0 * s, 3.0 * s * s - 4.0 * s + 1.0, -6.0 * s * s + 6.0 * s, 3.0 * s * s - 2.0 * s),
            2 => (12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0),
            _ => (12.0, 6.0, -12.0, 6.0),
        };
        let scale = h.powi(-(order as i32));
        (&self.values[k] * h00 + &self.slopes[k] * (h10 * h) + &self.values[k + 1] * h01 + &self.slopes[k + 1] * (h11 * h))
            * scale
    }
}

fn finite_difference_slopes(nodes: &[f64], values: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = nodes.len();
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let stencil = &nodes[start..start + width];
            let w = derivative_weights(nodes[i], stencil);
            let mut acc = DMatrix::zeros(values[0].nrows(), values[0].ncols());
            for (j, wj) in w.iter().enumerate() {
                acc += &values[start + j] * *wj;
            }
            acc
        })
        .collect()
}

/// First-derivative weights at `z` for the Lagrange interpolant through `xs`
/// (Fornberg's recursion).
pub fn derivative_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 1usize;
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}
