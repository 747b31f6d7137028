//! Optimal-control problem assembly: stage and terminal costs, path and
//! terminal constraints, augmented-Lagrangian bookkeeping, and the
//! fuel-optimal homotopy schedule.

mod constraints;
mod costs;
mod duals;
mod problem;

pub use constraints::{
    eval_constraints, ConstraintEval, ConstraintKind, ConstraintSet, PathConstraint,
    TerminalConstraint,
};
pub use costs::{stage_cost, terminal_cost, CostSpec, HomotopySchedule, OcpError};
pub use duals::{augment_penalty, update_duals, AulParams, DualPenaltyState};
pub use problem::{profiling, OcpProblem};
