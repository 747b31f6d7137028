//! The DDP/iLQR solver family and the augmented-Lagrangian outer loop.
//!
//! Six variants come from crossing three backward sweeps (first-order
//! dynamics only, full second-order dynamics, direct cost-to-go expansion)
//! with two forward passes (always re-expanding the dynamics vs reusing the
//! stage polynomials by composition whenever the step stays inside their
//! convergence radius).

mod forward;
mod solve;
mod sweep;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::da::{DaContext, DaError, PolyMap, TruncatedPoly};
use crate::dynamics::{DynamicsError, NU, NX};
use crate::ocp::{eval_constraints, DualPenaltyState, OcpProblem};

pub use forward::{forward_pass, refresh_costs, rollout_initial, ApproxStats, PassError};
pub use solve::{aul_solve, ddp_solve, AulOutcome, AulReport, AulSettings, AulSolution, DdpRun,
    DncReason, IterRecord};
pub use sweep::{backward_sweep, backward_sweep_q, regularize, RegLadder};

/// A stage-indexed iterate: states, controls, the polynomial expansions of
/// the dynamics and (augmented) costs around them, and the cost value.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// N + 1 states, `states[0]` fixed to the scenario's initial state.
    pub states: Vec<[f64; NX]>,
    /// N controls.
    pub controls: Vec<[f64; NU]>,
    /// N dynamics expansions; after a from-scratch pass the constant part
    /// of `stage_polys[k]` equals `states[k + 1]`.
    pub stage_polys: Vec<PolyMap>,
    /// N augmented stage-cost expansions.
    pub cost_polys: Vec<TruncatedPoly>,
    /// Augmented terminal-cost expansion.
    pub terminal_poly: TruncatedPoly,
    /// Total augmented cost.
    pub cost: f64,
}

impl Trajectory {
    pub fn n_stages(&self) -> usize {
        self.controls.len()
    }
}

/// Feedforward terms and feedback gains from a backward sweep.
#[derive(Debug, Clone)]
pub struct ControlLaw {
    pub feedforward: Vec<DVector<f64>>,
    pub feedback: Vec<DMatrix<f64>>,
}

/// Which backward sweep to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// First-order dynamics information only.
    ILqr,
    /// Includes the second-order dynamics terms of the cost-to-go.
    Ddp,
    /// Builds the cost-to-go polynomial by composition and reads all
    /// derivatives from its coefficients.
    Q,
}

/// A named solver variant: sweep kind plus whether the forward pass may
/// update stage dynamics by polynomial composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverVariant {
    pub sweep: SweepKind,
    pub dyn_approx: bool,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 6] = [
        SolverVariant { sweep: SweepKind::ILqr, dyn_approx: false },
        SolverVariant { sweep: SweepKind::Ddp, dyn_approx: false },
        SolverVariant { sweep: SweepKind::Q, dyn_approx: false },
        SolverVariant { sweep: SweepKind::ILqr, dyn_approx: true },
        SolverVariant { sweep: SweepKind::Ddp, dyn_approx: true },
        SolverVariant { sweep: SweepKind::Q, dyn_approx: true },
    ];

    pub fn parse(name: &str) -> Option<SolverVariant> {
        let (sweep, dyn_approx) = match name {
            "iLQR" => (SweepKind::ILqr, false),
            "DDP" => (SweepKind::Ddp, false),
            "Q" => (SweepKind::Q, false),
            "iLQRDyn" => (SweepKind::ILqr, true),
            "DDPDyn" => (SweepKind::Ddp, true),
            "QDyn" => (SweepKind::Q, true),
            _ => return None,
        };
        Some(SolverVariant { sweep, dyn_approx })
    }

    pub fn name(&self) -> &'static str {
        match (self.sweep, self.dyn_approx) {
            (SweepKind::ILqr, false) => "iLQR",
            (SweepKind::Ddp, false) => "DDP",
            (SweepKind::Q, false) => "Q",
            (SweepKind::ILqr, true) => "iLQRDyn",
            (SweepKind::Ddp, true) => "DDPDyn",
            (SweepKind::Q, true) => "QDyn",
        }
    }
}

impl std::fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inner-loop solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpSettings {
    /// Cost-decrease convergence tolerance.
    pub eps_ddp: f64,
    /// Dynamics-approximation tolerance for the Dyn forward pass.
    pub eps_da: f64,
    /// First nonzero regularization weight.
    pub reg0: f64,
    /// Floor the weight decays back to.
    pub reg_min: f64,
    /// Ladder cap; exceeding it signals exhaustion.
    pub reg_max: f64,
    /// Ladder growth factor.
    pub reg_scale: f64,
    /// Line-search feedforward multipliers, tried in order.
    pub alpha_ladder: Vec<f64>,
    /// Iteration cap per DDP call.
    pub max_iters: usize,
}

impl Default for DdpSettings {
    fn default() -> Self {
        DdpSettings {
            eps_ddp: 1e-4,
            eps_da: 1e-6,
            reg0: 1e-6,
            reg_min: 0.0,
            reg_max: 1e8,
            reg_scale: 10.0,
            alpha_ladder: (0..=10).map(|k| 0.5f64.powi(k)).collect(),
            max_iters: 5000,
        }
    }
}

/// What the inner solver needs from a problem: dimensions, expansions of
/// the stage map and the (augmented) costs, and a feasibility measure for
/// reporting. Implemented by [`OcpProblem`] and by the toy problems used in
/// oracle tests.
pub trait StageProblem {
    fn n_stages(&self) -> usize;
    fn initial_state(&self) -> [f64; NX];
    fn context(&self) -> &Arc<DaContext>;
    fn expand_dynamics(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<PolyMap, DynamicsError>;
    fn expand_stage_cost(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> TruncatedPoly;
    fn expand_terminal_cost(&self, x: &[f64; NX], duals: &DualPenaltyState) -> TruncatedPoly;

    /// Plain-float stage propagation, bit-identical to the constant part of
    /// `expand_dynamics` so line-search candidates can be priced without
    /// building expansions.
    fn step(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<[f64; NX], DynamicsError>;
    fn stage_cost_value(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> f64;
    fn terminal_cost_value(&self, x: &[f64; NX], duals: &DualPenaltyState) -> f64;

    fn constraint_violation(&self, _states: &[[f64; NX]], _controls: &[[f64; NU]]) -> f64 {
        0.0
    }
}

impl StageProblem for OcpProblem {
    fn n_stages(&self) -> usize {
        self.n_stages
    }

    fn initial_state(&self) -> [f64; NX] {
        self.x0
    }

    fn context(&self) -> &Arc<DaContext> {
        &self.ctx
    }

    fn expand_dynamics(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<PolyMap, DynamicsError> {
        OcpProblem::expand_dynamics(self, x, u)
    }

    fn expand_stage_cost(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> TruncatedPoly {
        OcpProblem::expand_stage_cost(self, x, u, duals, k)
    }

    fn expand_terminal_cost(&self, x: &[f64; NX], duals: &DualPenaltyState) -> TruncatedPoly {
        OcpProblem::expand_terminal_cost(self, x, duals)
    }

    fn step(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<[f64; NX], DynamicsError> {
        OcpProblem::step(self, x, u)
    }

    fn stage_cost_value(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> f64 {
        OcpProblem::stage_cost_value(self, x, u, duals, k)
    }

    fn terminal_cost_value(&self, x: &[f64; NX], duals: &DualPenaltyState) -> f64 {
        OcpProblem::terminal_cost_value(self, x, duals)
    }

    fn constraint_violation(&self, states: &[[f64; NX]], controls: &[[f64; NU]]) -> f64 {
        eval_constraints(&self.constraints, states, controls, &self.x_target).g_max
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dynamics failure at stage {stage}: {source}")]
    Dynamics {
        stage: usize,
        source: DynamicsError,
    },

    #[error(transparent)]
    Da(#[from] DaError),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

const _: () = assert!(NX == 7 && NU == 3);
