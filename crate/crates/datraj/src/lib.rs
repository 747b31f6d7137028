//! Constrained, fuel-optimal low-thrust trajectory optimization built on
//! truncated multivariate Taylor polynomials.
//!
//! The toolkit couples three pieces:
//!
//! 1. a polynomial algebra ([`da`]) that performs automatic differentiation
//!    and doubles as a local surrogate of the stage dynamics,
//! 2. a family of DDP/iLQR solvers ([`ddp`]) wrapped in an augmented
//!    Lagrangian loop with a fuel-optimal homotopy ([`ocp`]), and
//! 3. a Newton feasibility polisher ([`newton`]) that drives constraint
//!    violations to tight tolerances through block-tridiagonal Cholesky
//!    solves of the normal equations.
//!
//! Dynamics models (Sun-centered two-body, Earth-Moon CR3BP, Earth-centered
//! equinoctial Gauss equations) live in [`dynamics`] and are generic over
//! plain floats and polynomials, so a single integrator code path produces
//! both trajectories and their Taylor expansions.

pub mod da;
pub mod ddp;
pub mod dynamics;
pub mod newton;
pub mod ocp;

pub use da::{DaContext, DaError, DaScalar, MultiIndex, PolyMap, TruncatedPoly};
pub use ddp::{
    aul_solve, ddp_solve, AulReport, AulSettings, ControlLaw, DdpSettings, SolveError,
    SolverVariant, StageProblem, SweepKind, Trajectory,
};
pub use dynamics::{ModelKind, ModelSpec, NormalizationUnits, Spacecraft, StageSpec};
pub use newton::{newton_polish, NewtonReport, NewtonSettings};
pub use ocp::{ConstraintSet, CostSpec, DualPenaltyState, HomotopySchedule, OcpProblem};
