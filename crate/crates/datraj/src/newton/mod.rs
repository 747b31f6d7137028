//! Feasibility polishing.
//!
//! After the augmented-Lagrangian solve leaves a nearly feasible iterate,
//! the active constraints (path constraints at or near their boundary, all
//! equality and continuity constraints) are stacked into one residual
//! vector over the free decision variables `Y = [u_0, x_1, u_1, ..., x_N]`.
//! Newton steps solve the normal equations `(Delta Delta') z = d` through a
//! block-tridiagonal Cholesky factorization assembled analytically from the
//! per-stage constraint gradients, and the constraint values are updated
//! through the polynomial expansions instead of re-integrating the
//! dynamics.

mod polish;
mod stack;
mod tridiag;

pub use polish::{newton_polish, violation_max, NewtonIter, NewtonOutcome, NewtonReport,
    NewtonResult, NewtonSettings};
pub use stack::{
    build_active_set, expand_gamma, ActiveConstraintStack, DeltaBlocks, GammaPolys,
    StageGradients,
};
pub use tridiag::{assemble_sigma, block_cholesky, tridiag_solve, BlockCholeskyFactor,
    BlockTriDiagonal, FactorizationError};
