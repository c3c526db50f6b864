//! Index theory for semi-Riemannian Morse–Sturm systems.

pub mod bilinear;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod indexform;
pub mod linalg;
pub mod maslov;
pub mod matfn;
pub mod reduction;
pub mod sds;

pub use error::{Error, Result};
