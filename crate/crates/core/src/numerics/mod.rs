//! One-dimensional quadrature, root finding and minimization.

mod quadrature;
mod roots;

pub use quadrature::{gauss_legendre, integrate_adaptive, Integral};
pub use roots::{brent_root, golden_section_min};
