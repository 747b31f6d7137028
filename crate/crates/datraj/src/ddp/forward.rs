use nalgebra::DVector;
use thiserror::Error;

use crate::dynamics::{DynamicsError, NU, NX};
use crate::ocp::DualPenaltyState;

use super::{ControlLaw, SolveError, StageProblem, Trajectory};

/// Stage-update bookkeeping for one forward pass: how many stage maps were
/// updated by polynomial composition vs recomputed from scratch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApproxStats {
    pub approximated: usize,
    pub recomputed: usize,
}

impl ApproxStats {
    pub fn share(&self) -> f64 {
        let total = self.approximated + self.recomputed;
        if total == 0 {
            0.0
        } else {
            self.approximated as f64 / total as f64
        }
    }
}

/// A failed forward pass. Dynamics domain errors abort the pass and are
/// treated by the caller as a line-search failure, not a fatal condition.
#[derive(Debug, Error)]
pub enum PassError {
    #[error("forward pass aborted at stage {stage}: {source}")]
    Dynamics {
        stage: usize,
        source: DynamicsError,
    },
}

/// From-scratch rollout of a control sequence, expanding dynamics and
/// augmented costs at every stage.
pub fn rollout_initial<P: StageProblem>(
    problem: &P,
    duals: &DualPenaltyState,
    u0: &[[f64; NU]],
) -> Result<Trajectory, SolveError> {
    let n = problem.n_stages();
    if u0.len() != n {
        return Err(SolveError::Dimension(format!(
            "initial guess has {} controls, problem has {n} stages",
            u0.len()
        )));
    }
    let mut states = Vec::with_capacity(n + 1);
    states.push(problem.initial_state());
    let mut stage_polys = Vec::with_capacity(n);
    let mut cost_polys = Vec::with_capacity(n);
    let mut cost = 0.0;
    for (k, u) in u0.iter().enumerate() {
        let pm = problem
            .expand_dynamics(&states[k], u)
            .map_err(|source| SolveError::Dynamics { stage: k, source })?;
        let mut next = [0.0; NX];
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = pm.component(i).constant_part();
        }
        let lc = problem.expand_stage_cost(&states[k], u, duals, k);
        cost += lc.constant_part();
        states.push(next);
        stage_polys.push(pm);
        cost_polys.push(lc);
    }
    let terminal_poly = problem.expand_terminal_cost(&states[n], duals);
    cost += terminal_poly.constant_part();
    Ok(Trajectory {
        states,
        controls: u0.to_vec(),
        stage_polys,
        cost_polys,
        terminal_poly,
        cost,
    })
}

/// A candidate iterate priced without building expansions: states come
/// from plain propagation (or polynomial evaluation on stages inside their
/// convergence radius), matching the constant parts the full pass would
/// produce.
#[derive(Debug, Clone)]
pub(crate) struct TrialPass {
    pub states: Vec<[f64; NX]>,
    pub controls: Vec<[f64; NU]>,
    pub cost: f64,
    /// Which stages the full pass will update by composition.
    pub approx: Vec<bool>,
}

impl TrialPass {
    pub fn stats(&self) -> ApproxStats {
        let approximated = self.approx.iter().filter(|&&a| a).count();
        ApproxStats {
            approximated,
            recomputed: self.approx.len() - approximated,
        }
    }
}

/// Rolls the control law forward on values only.
pub(crate) fn forward_trial<P: StageProblem>(
    problem: &P,
    duals: &DualPenaltyState,
    traj: &Trajectory,
    law: &ControlLaw,
    alpha: f64,
    dyn_approx: bool,
    eps_da: f64,
) -> Result<TrialPass, PassError> {
    let n = traj.n_stages();
    let mut states = Vec::with_capacity(n + 1);
    states.push(traj.states[0]);
    let mut controls = Vec::with_capacity(n);
    let mut approx = Vec::with_capacity(n);
    let mut cost = 0.0;
    let use_approx = dyn_approx && eps_da > 0.0;

    for k in 0..n {
        let dx = DVector::from_fn(NX, |i, _| states[k][i] - traj.states[k][i]);
        let du = law.feedforward[k].scale(alpha) + &law.feedback[k] * &dx;
        let mut u_new = traj.controls[k];
        for (j, slot) in u_new.iter_mut().enumerate() {
            *slot += du[j];
        }

        let mut approximated = false;
        let mut next = [0.0; NX];
        if use_approx {
            let radius = traj.stage_polys[k]
                .convergence_radius(eps_da)
                .expect("eps_da > 0");
            let disp = (dx.norm_squared() + du.norm_squared()).sqrt();
            if disp < radius {
                let mut offsets = [0.0; NX + NU];
                offsets[..NX].copy_from_slice(dx.as_slice());
                offsets[NX..].copy_from_slice(du.as_slice());
                let value = traj.stage_polys[k]
                    .evaluate(&offsets)
                    .expect("matching arity");
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot = value[i];
                }
                approximated = true;
            }
        }
        if !approximated {
            next = problem
                .step(&states[k], &u_new)
                .map_err(|source| PassError::Dynamics { stage: k, source })?;
        }
        cost += problem.stage_cost_value(&states[k], &u_new, duals, k);
        states.push(next);
        controls.push(u_new);
        approx.push(approximated);
    }
    cost += problem.terminal_cost_value(&states[n], duals);
    Ok(TrialPass {
        states,
        controls,
        cost,
        approx,
    })
}

/// Builds the full iterate for an accepted trial: stage expansions by
/// composition on the stages the trial approximated and from scratch
/// elsewhere, plus fresh cost expansions. States are re-derived from the
/// expansion constants, which reproduce the trial values.
pub(crate) fn materialize_pass<P: StageProblem>(
    problem: &P,
    duals: &DualPenaltyState,
    traj: &Trajectory,
    trial: &TrialPass,
) -> Result<Trajectory, PassError> {
    let n = traj.n_stages();
    let mut states = Vec::with_capacity(n + 1);
    states.push(traj.states[0]);
    let mut stage_polys = Vec::with_capacity(n);
    let mut cost_polys = Vec::with_capacity(n);
    let mut cost = 0.0;

    for k in 0..n {
        let u_new = trial.controls[k];
        if trial.approx[k] {
            let mut offsets = [0.0; NX + NU];
            for i in 0..NX {
                offsets[i] = states[k][i] - traj.states[k][i];
            }
            for j in 0..NU {
                offsets[NX + j] = u_new[j] - traj.controls[k][j];
            }
            let inner = problem
                .context()
                .shifted_variables(&offsets)
                .expect("matching arity");
            stage_polys.push(
                traj.stage_polys[k]
                    .compose(&inner)
                    .expect("matching contexts"),
            );
        } else {
            let pm = problem
                .expand_dynamics(&states[k], &u_new)
                .map_err(|source| PassError::Dynamics { stage: k, source })?;
            stage_polys.push(pm);
        }
        let mut next = [0.0; NX];
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = stage_polys[k].component(i).constant_part();
        }
        let lc = problem.expand_stage_cost(&states[k], &u_new, duals, k);
        cost += lc.constant_part();
        states.push(next);
        cost_polys.push(lc);
    }
    let terminal_poly = problem.expand_terminal_cost(&states[n], duals);
    cost += terminal_poly.constant_part();
    Ok(Trajectory {
        states,
        controls: trial.controls.clone(),
        stage_polys,
        cost_polys,
        terminal_poly,
        cost,
    })
}

/// Applies a control law with the feedforward scaled by `alpha` and rolls
/// the trajectory forward. With `dyn_approx` enabled, a stage whose joint
/// state/control displacement lies strictly inside the expansion's
/// convergence radius is updated by composing the stored polynomial with
/// the displacement instead of re-integrating the dynamics; stage costs
/// are always re-expanded.
pub fn forward_pass<P: StageProblem>(
    problem: &P,
    duals: &DualPenaltyState,
    traj: &Trajectory,
    law: &ControlLaw,
    alpha: f64,
    dyn_approx: bool,
    eps_da: f64,
) -> Result<(Trajectory, ApproxStats), PassError> {
    let trial = forward_trial(problem, duals, traj, law, alpha, dyn_approx, eps_da)?;
    let stats = trial.stats();
    let new_traj = materialize_pass(problem, duals, traj, &trial)?;
    Ok((new_traj, stats))
}

/// Re-expands the cost polynomials and total cost of an iterate in place
/// after the duals or the homotopy phase changed. Dynamics expansions stay.
pub fn refresh_costs<P: StageProblem>(problem: &P, duals: &DualPenaltyState, traj: &mut Trajectory) {
    let n = traj.n_stages();
    let mut cost = 0.0;
    for k in 0..n {
        let lc = problem.expand_stage_cost(&traj.states[k], &traj.controls[k], duals, k);
        cost += lc.constant_part();
        traj.cost_polys[k] = lc;
    }
    traj.terminal_poly = problem.expand_terminal_cost(&traj.states[n], duals);
    cost += traj.terminal_poly.constant_part();
    traj.cost = cost;
}
