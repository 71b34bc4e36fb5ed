//! Monotone Bellman finite-difference scheme, Dirichlet solves, Perron
//! envelopes and decreasing approximation sequences.

mod config;
mod dirichlet;
mod linear;
mod perron;
mod sequence;
mod stencil;

pub use config::{SolverConfig, Tau, DEFAULT_NEWTON_STEPS, DEFAULT_SWEEPS};
pub use dirichlet::{scheme_residual, solve_dirichlet, HypothesisGuard, SolveReport};
pub use linear::{bicgstab, LinearOutcome};
pub use perron::perron_envelope;
pub use sequence::{
    approximate_subsolution_sequence, decreasing_solution_sequence, DecreasingAudit, DecreasingSequence, SequenceAudit,
    SequenceConfig, SequenceStage, SolutionStage, StageAudit, SubsolutionSequence,
};
pub use stencil::{discrete_bellman_operator, Direction, FrameStencil, NodeTable, SchemeStencil, StencilControl};
