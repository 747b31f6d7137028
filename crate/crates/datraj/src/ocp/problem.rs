use std::sync::Arc;

use crate::da::{DaContext, PolyMap, TruncatedPoly};
use crate::dynamics::{
    expand_stage, propagate_stage, DynamicsError, ModelSpec, StageSpec, NU, NX,
};

use super::constraints::ConstraintSet;
use super::costs::{stage_cost, terminal_cost, CostSpec};
use super::duals::{augment_penalty, DualPenaltyState};

/// A discrete optimal-control problem in normalized units: fixed initial
/// state, N stages of zero-order-hold dynamics, homotopy-blended stage
/// cost, quadratic terminal cost, and the constraint stack.
#[derive(Debug, Clone)]
pub struct OcpProblem {
    pub model: ModelSpec,
    pub stage: StageSpec,
    pub n_stages: usize,
    pub x0: [f64; NX],
    pub x_target: [f64; NX],
    pub cost: CostSpec,
    pub constraints: ConstraintSet,
    pub ctx: Arc<DaContext>,
}

impl OcpProblem {
    /// Propagates one stage on plain floats.
    pub fn step(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<[f64; NX], DynamicsError> {
        propagate_stage(&self.model, &self.stage, x, u)
    }

    /// Expands one stage map around `(x, u)`.
    pub fn expand_dynamics(&self, x: &[f64; NX], u: &[f64; NU]) -> Result<PolyMap, DynamicsError> {
        let t = std::time::Instant::now();
        let out = expand_stage(&self.model, &self.stage, x, u, &self.ctx);
        profiling::record_expand(t.elapsed().as_nanos() as u64);
        out
    }

    fn poly_state(&self, x: &[f64; NX]) -> [TruncatedPoly; NX] {
        std::array::from_fn(|i| self.ctx.variable(i, x[i]).expect("index in range"))
    }

    fn poly_control(&self, u: &[f64; NU]) -> [TruncatedPoly; NU] {
        std::array::from_fn(|j| self.ctx.variable(NX + j, u[j]).expect("index in range"))
    }

    /// Expansion of the augmented stage cost at `(x, u)` with the duals of
    /// stage `k`.
    pub fn expand_stage_cost(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> TruncatedPoly {
        let t = std::time::Instant::now();
        let xp = self.poly_state(x);
        let up = self.poly_control(u);
        let mut cost = stage_cost(&self.cost, &xp, &up);
        let g = self.constraints.eval_path(&xp, &up);
        if let Some(term) = augment_penalty(
            &g,
            &self.constraints.path_kinds(),
            &duals.lambdas[k],
            &duals.mus[k],
        ) {
            cost = cost.try_add(&term).expect("same context");
        }
        profiling::record_cost(t.elapsed().as_nanos() as u64);
        cost
    }

    /// Expansion of the augmented terminal cost at `x_n`.
    pub fn expand_terminal_cost(
        &self,
        x_n: &[f64; NX],
        duals: &DualPenaltyState,
    ) -> TruncatedPoly {
        let xp = self.poly_state(x_n);
        let mut cost = terminal_cost(&self.cost, &xp, &self.x_target);
        let g = self.constraints.eval_terminal(&xp, &self.x_target);
        let n = self.n_stages;
        if let Some(term) = augment_penalty(
            &g,
            &self.constraints.terminal_kinds(),
            &duals.lambdas[n],
            &duals.mus[n],
        ) {
            cost = cost.try_add(&term).expect("same context");
        }
        cost
    }

    /// Augmented stage cost on plain floats.
    pub fn stage_cost_value(
        &self,
        x: &[f64; NX],
        u: &[f64; NU],
        duals: &DualPenaltyState,
        k: usize,
    ) -> f64 {
        let mut cost = stage_cost(&self.cost, x, u);
        let g = self.constraints.eval_path(x, u);
        if let Some(term) = augment_penalty(
            &g,
            &self.constraints.path_kinds(),
            &duals.lambdas[k],
            &duals.mus[k],
        ) {
            cost += term;
        }
        cost
    }

    /// Augmented terminal cost on plain floats.
    pub fn terminal_cost_value(&self, x_n: &[f64; NX], duals: &DualPenaltyState) -> f64 {
        let mut cost = terminal_cost(&self.cost, x_n, &self.x_target);
        let g = self.constraints.eval_terminal(x_n, &self.x_target);
        let n = self.n_stages;
        if let Some(term) = augment_penalty(
            &g,
            &self.constraints.terminal_kinds(),
            &duals.lambdas[n],
            &duals.mus[n],
        ) {
            cost += term;
        }
        cost
    }

    /// Raw (unaugmented) running cost of a control sequence, used to check
    /// that polishing leaves optimality untouched.
    pub fn raw_running_cost(&self, states: &[[f64; NX]], controls: &[[f64; NU]]) -> f64 {
        let mut j = 0.0;
        for (k, u) in controls.iter().enumerate() {
            j += stage_cost(&self.cost, &states[k], u);
        }
        j + terminal_cost(&self.cost, states.last().expect("nonempty"), &self.x_target)
    }
}

/// Crude instrumentation for development profiling.
pub mod profiling {
    use std::sync::atomic::{AtomicU64, Ordering};

    pub static EXPAND_CALLS: AtomicU64 = AtomicU64::new(0);
    pub static EXPAND_NANOS: AtomicU64 = AtomicU64::new(0);
    pub static COST_CALLS: AtomicU64 = AtomicU64::new(0);
    pub static COST_NANOS: AtomicU64 = AtomicU64::new(0);

    pub fn record_expand(nanos: u64) {
        EXPAND_CALLS.fetch_add(1, Ordering::Relaxed);
        EXPAND_NANOS.fetch_add(nanos, Ordering::Relaxed);
    }

    pub fn record_cost(nanos: u64) {
        COST_CALLS.fetch_add(1, Ordering::Relaxed);
        COST_NANOS.fetch_add(nanos, Ordering::Relaxed);
    }

    pub fn report() -> String {
        format!(
            "expand: {} calls, {:.2} s; cost: {} calls, {:.2} s",
            EXPAND_CALLS.load(Ordering::Relaxed),
            EXPAND_NANOS.load(Ordering::Relaxed) as f64 * 1e-9,
            COST_CALLS.load(Ordering::Relaxed),
            COST_NANOS.load(Ordering::Relaxed) as f64 * 1e-9,
        )
    }
}
