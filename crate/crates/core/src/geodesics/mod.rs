//! Geometric front-end: Jacobi equations of model semi-Riemannian manifolds
//! as Morse–Sturm systems, stationary and Gödel-type constructions, shooting
//! for geodesics between two points and the Morse relations.

pub mod curve;
pub mod godel;
pub mod jacobi;
pub mod manifold;
pub mod shooting;

pub use curve::{geodesic_endpoint, integrate_geodesic, orthonormal_frame, GeodesicCurve};
pub use godel::{
    e0_hessian_index, godel_e0, godel_geodesic, godel_reconstruct_u, lifted_action, BaseCurve, FiberPath,
    HessianIndexReport, HessianOptions,
};
pub use jacobi::{
    constraint_system_check, jacobi_system, jacobi_to_morse_sturm, killing_frame_data, submanifold_data,
    submanifold_initial_data, Chart, ConstraintReport, KillingFrameData, Submanifold,
};
pub use manifold::{AffineField, CoordinateManifold, Factor, GodelManifold, Manifold, ModelManifold, ProductManifold};
pub use shooting::{geodesic_maslov, morse_relations_check, shoot_geodesics, FoundGeodesic, MorseVerdict, ShootingOptions, ShootingReport};
