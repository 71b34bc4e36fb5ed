//! Complex Hessian equations `F(Hu) = ψ(z, u)` with `F = f(λ(Hu))` on Gårding
//! cones: cone algebra, Bellman (inf-of-linear) representation, grid tools,
//! viscosity verifiers, and a monotone Dirichlet solver with Perron envelopes.

pub mod analytic;
pub mod axioms;
pub mod bellman;
pub mod cones;
pub mod error;
pub mod grid;
pub mod hermitian;
pub mod rhs;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use cones::{
    cone_contains, f_eval, f_gradient, f_limit_at_infinity, sigma_k, Closure, ConeSpec, EigenTuple, Family,
    OperatorSpec,
};
pub use error::{Error, Result};
pub use hermitian::{eigen_decompose, matrix_in_cone, operator_eval, trace_pair, ComplexMatrix, HermitianMatrix};
pub use scalar::Scalar;

pub type EigenTupleF64 = EigenTuple<f64>;
pub type EigenTupleF32 = EigenTuple<f32>;
pub type HermitianMatrixF64 = HermitianMatrix<f64>;
pub type HermitianMatrixF32 = HermitianMatrix<f32>;
pub type GridFunctionF64 = grid::GridFunction<f64>;
pub type GridFunctionF32 = grid::GridFunction<f32>;
