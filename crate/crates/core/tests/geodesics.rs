use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use sympidx::geodesics::{
    constraint_system_check, integrate_geodesic, jacobi_system, submanifold_data, submanifold_initial_data, AffineField,
    Chart, GodelManifold, Manifold, ProductManifold, Submanifold,
};
use sympidx::maslov::{maslov_index, MaslovOptions};

const COLATITUDE: f64 = 0.5;

/// Unit-speed meridian of `S² × ℝ` leaving the circle of colatitude `COLATITUDE` southwards.
fn meridian(length: f64) -> Arc<sympidx::geodesics::GeodesicCurve> {
    let m: Arc<dyn Manifold> = Arc::new(ProductManifold::stationary_sphere(2, 1.0, 1).unwrap());
    let (s, c) = COLATITUDE.sin_cos();
    let x0 = DVector::from_column_slice(&[s, 0.0, c, 0.0]);
    let v0 = DVector::from_column_slice(&[c, 0.0, -s, 0.0]);
    Arc::new(integrate_geodesic(m, &x0, &v0, (0.0, length), 2000, 1e-8).unwrap())
}

fn latitude_chart(exact: bool) -> Chart {
    let rest = DVector::zeros(4);
    let chart = Chart::latitude_circle(rest.clone(), 0, 1.0, COLATITUDE, 0.0);
    if exact {
        return chart;
    }
    let (s, c) = COLATITUDE.sin_cos();
    Chart::new(vec![0.0], move |p: &[f64]| {
        let mut x = rest.clone();
        x[0] = s * p[0].cos();
        x[1] = s * p[0].sin();
        x[2] = c;
        x
    })
}

#[test]
fn latitude_circle_second_fundamental_form() {
    let curve = meridian(1.0);
    let exact = submanifold_data(&curve, &latitude_chart(true)).unwrap();
    let approx = submanifold_data(&curve, &latitude_chart(false)).unwrap();
    assert!(exact.orthogonality_residual < 1e-14);
    // II(∂φ, ∂φ) = −sin θ₀ cos θ₀ along the southward meridian.
    let want = -COLATITUDE.sin() * COLATITUDE.cos();
    assert!((exact.second_fundamental[(0, 0)] - want).abs() < 1e-12);
    assert!((approx.second_fundamental[(0, 0)] - want).abs() < 1e-7);
    assert!((&exact.tangent - &approx.tangent).amax() < 1e-7);
}

#[test]
fn latitude_circle_initial_form_is_cotangent() {
    let curve = meridian(1.0);
    let data = submanifold_initial_data(&curve, &Submanifold::Chart(latitude_chart(true)), 1e-8).unwrap();
    assert_eq!(data.p().dim(), 1);
    // Normalizing ∂φ by its length sin θ₀ leaves |S| = cot θ₀.
    let s = data.s().matrix()[(0, 0)];
    assert!((s.abs() - 1.0 / COLATITUDE.tan()).abs() < 1e-10, "S = {s}");
}

#[test]
fn meridians_focus_at_the_pole() {
    let curve = meridian(3.0);
    let x = jacobi_system(&curve, 1e-8).unwrap();
    let l0 = submanifold_initial_data(&curve, &Submanifold::Chart(latitude_chart(true)), 1e-8).unwrap();
    let rep = maslov_index(&x, &l0, &MaslovOptions::default()).unwrap();
    assert_eq!(rep.instants.len(), 1, "{:?}", rep.instants);
    let inst = &rep.instants[0];
    assert_eq!(inst.multiplicity, 1);
    assert!((inst.t - (PI - COLATITUDE)).abs() < 1e-6, "focal instant at {}", inst.t);
    assert_eq!(rep.index().unwrap(), 1);
}

#[test]
fn chart_off_the_curve_is_rejected() {
    let curve = meridian(1.0);
    let chart = Chart::latitude_circle(DVector::zeros(4), 0, 1.0, COLATITUDE + 0.1, 0.0);
    assert!(submanifold_data(&curve, &chart).is_err());
}

#[test]
fn stationary_constraint_system_matches_reduction() {
    let m: Arc<dyn Manifold> = Arc::new(ProductManifold::stationary_sphere(2, 1.0, 1).unwrap());
    let x0 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
    let v0 = DVector::from_column_slice(&[0.0, 2.0, 0.0, 0.5]);
    let curve = Arc::new(integrate_geodesic(m, &x0, &v0, (0.0, 1.0), 2000, 1e-8).unwrap());
    let fields = vec![AffineField::coordinate(4, 3)];
    let rep = constraint_system_check(&curve, &fields, &MaslovOptions::default(), 1e-8).unwrap();
    assert!(rep.a_antisymmetric < 1e-8, "{rep:?}");
    assert!(rep.e_plus_a_transpose < 1e-6, "{rep:?}");
    assert!(rep.c_plus_e_bar < 1e-6, "{rep:?}");
    assert!(rep.coefficient_mismatch < 1e-5, "{rep:?}");
    assert!(rep.admissible);
}

#[test]
fn godel_constraint_system_matches_reduction() {
    let rho = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
    let m = Arc::new(GodelManifold::flat(2, &rho).unwrap());
    let fields = m.fiber_fields();
    let x0 = DVector::zeros(4);
    let v0 = DVector::from_column_slice(&[1.0, 0.5, 1.0, -0.5]);
    let curve = Arc::new(integrate_geodesic(m, &x0, &v0, (0.0, 1.0), 2000, 1e-8).unwrap());
    let rep = constraint_system_check(&curve, &fields, &MaslovOptions::default(), 1e-8).unwrap();
    assert!(rep.a_antisymmetric < 1e-8, "{rep:?}");
    assert!(rep.coefficient_mismatch < 1e-5, "{rep:?}");
    assert!(rep.admissible);
}
