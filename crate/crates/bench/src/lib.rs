//! Fixtures shared by the benchmarks in `benches/`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sympidx::bilinear::SymForm;
use sympidx::geodesics::{AffineField, Manifold, ProductManifold};
use sympidx::matfn::MatrixFn;
use sympidx::reduction::Frame;
use sympidx::sds::{make_morse_sturm, CoefficientPath};

/// Lorentzian Morse–Sturm system `g = diag(1, −1)`, `R = −diag(ω₁², ω₂²)` on `[0, 1]`.
pub fn lorentz_system(w1: f64, w2: f64) -> CoefficientPath {
    let g = SymForm::diagonal(&[1.0, -1.0]);
    let r = MatrixFn::constant(DMatrix::from_diagonal(&DVector::from_column_slice(&[-w1 * w1, -w2 * w2])));
    make_morse_sturm(&g, &r, (0.0, 1.0)).expect("lorentz system")
}

/// The Lorentz system used throughout the benchmarks, with its timelike frame.
pub fn lorentz_case() -> (CoefficientPath, Frame) {
    let frame = Frame::constant(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
    (lorentz_system(2.5 * PI, 1.5 * PI), frame)
}

/// `S² × ℝ` with endpoints one radian apart and the time-translation field.
pub struct SphereCase {
    pub manifold: Arc<dyn Manifold>,
    pub p: DVector<f64>,
    pub q: DVector<f64>,
    pub fields: Vec<AffineField>,
}

pub fn sphere_case() -> SphereCase {
    SphereCase {
        manifold: Arc::new(ProductManifold::stationary_sphere(2, 1.0, 1).expect("sphere")),
        p: DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]),
        q: DVector::from_column_slice(&[1f64.cos(), 1f64.sin(), 0.0, 0.5]),
        fields: vec![AffineField::coordinate(4, 3)],
    }
}
