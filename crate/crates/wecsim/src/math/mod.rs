//! Numerical building blocks: complete elliptic integrals, adaptive
//! Gauss-Legendre quadrature, and monotone cubic interpolation.

mod elliptic;
mod interp;
mod quadrature;

pub use elliptic::{ellipe, ellipk};
pub use interp::MonotoneCubic;
pub use quadrature::integrate_adaptive;
