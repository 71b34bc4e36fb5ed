//! Rasterized domains in `C^n`, grid functions, mollification and discrete
//! complex Hessians.

mod domain;
mod function;
mod hessian;
mod mollify;
mod shape;

pub use domain::{rasterize_domain, DomainDescriptor, DomainGrid, Line, LineRef, NodeClass, CLASSIFY_TOL, MIN_INRADIUS_STEPS};
pub use function::{abs2, GridFunction};
pub use hessian::{discrete_complex_hessian, discrete_laplacian, for_each_hessian, HessianStencil};
pub use mollify::{mollify, mollify_with, MollifierKernel};
pub use shape::Shape;

/// `eroded_domain(grid, ε)`.
pub fn eroded_domain(grid: &DomainGrid, epsilon: f64) -> crate::Result<DomainGrid> {
    grid.eroded(epsilon)
}
