use crate::dynamics::NU;
use crate::ocp::{eval_constraints, update_duals, AulParams, DualPenaltyState, HomotopySchedule,
    OcpProblem};

use super::forward::{forward_trial, materialize_pass, refresh_costs, rollout_initial, TrialPass};
use super::sweep::{backward_sweep, backward_sweep_q, RegLadder};
use super::{DdpSettings, SolveError, SolverVariant, StageProblem, SweepKind, Trajectory};

/// Why a solve stopped short of convergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DncReason {
    RegularizationExhausted,
    LineSearchStalled,
    MaxIterations,
    OuterIterationLimit,
}

impl std::fmt::Display for DncReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DncReason::RegularizationExhausted => "regularization exhausted",
            DncReason::LineSearchStalled => "line search stalled",
            DncReason::MaxIterations => "iteration limit reached",
            DncReason::OuterIterationLimit => "outer iteration limit reached",
        };
        f.write_str(s)
    }
}

/// One accepted DDP iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub cost: f64,
    pub g_max: f64,
    pub alpha: f64,
    pub rho: f64,
    pub approx_share: f64,
}

/// Result of one DDP call: the final iterate is carried even when the run
/// did not converge.
#[derive(Debug)]
pub struct DdpRun {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub converged: bool,
    pub dnc: Option<DncReason>,
    pub trace: Vec<IterRecord>,
}

/// Alternates backward sweeps and line-searched forward passes until an
/// accepted step improves the cost by no more than the tolerance. Line
/// search accepts the first strict cost decrease; a fully failed ladder
/// raises the regularization and re-sweeps.
pub fn ddp_solve<P: StageProblem>(
    problem: &P,
    duals: &DualPenaltyState,
    initial: Trajectory,
    variant: SolverVariant,
    settings: &DdpSettings,
) -> Result<DdpRun, SolveError> {
    let mut traj = initial;
    let mut j_prev = traj.cost;
    let mut ladder = RegLadder::new(settings);
    let mut iterations = 0usize;
    let mut full_steps = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut dnc = None;

    loop {
        if iterations >= settings.max_iters {
            dnc = Some(DncReason::MaxIterations);
            break;
        }

        let sweep = match variant.sweep {
            SweepKind::ILqr => backward_sweep(&traj, SweepKind::ILqr, &mut ladder),
            SweepKind::Ddp => backward_sweep(&traj, SweepKind::Ddp, &mut ladder),
            SweepKind::Q => backward_sweep_q(&traj, &mut ladder),
        };
        let law = match sweep {
            Ok(law) => law,
            Err(_) => {
                dnc = Some(DncReason::RegularizationExhausted);
                break;
            }
        };

        // Candidates are priced on values only; the expansions are built
        // once for the accepted step.
        let mut accepted: Option<(TrialPass, f64, f64)> = None;
        let mut best_candidate = f64::INFINITY;
        for &alpha in &settings.alpha_ladder {
            match forward_trial(
                problem,
                duals,
                &traj,
                &law,
                alpha,
                variant.dyn_approx,
                settings.eps_da,
            ) {
                Ok(trial) => {
                    if trial.cost < j_prev {
                        let share = trial.stats().share();
                        accepted = Some((trial, alpha, share));
                        break;
                    }
                    if trial.cost < best_candidate {
                        best_candidate = trial.cost;
                    }
                }
                Err(_) => {}
            }
        }

        match accepted {
            Some((trial, alpha, share)) => {
                let candidate = match materialize_pass(problem, duals, &traj, &trial) {
                    Ok(t) => t,
                    Err(_) => {
                        // The trial propagated cleanly, so a failure here is
                        // a singular re-expansion; treat like a failed
                        // ladder and stiffen.
                        if ladder.increase().is_err() {
                            dnc = Some(DncReason::LineSearchStalled);
                            break;
                        }
                        continue;
                    }
                };
                let dj = j_prev - candidate.cost;
                let strict = std::env::var_os("DATRAJ_STRICT").is_some();
                traj = candidate;
                j_prev = traj.cost;
                iterations += 1;
                if alpha == 1.0 {
                    full_steps += 1;
                } else {
                    full_steps = 0;
                }
                if full_steps >= 2 {
                    ladder.decrease();
                    full_steps = 0;
                }
                let g_max = problem.constraint_violation(&traj.states, &traj.controls);
                trace.push(IterRecord {
                    cost: traj.cost,
                    g_max,
                    alpha,
                    rho: ladder.rho,
                    approx_share: share,
                });
                if dj <= settings.eps_ddp && !(strict && alpha < 1.0) {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent anywhere on the ladder. If even the best
                // candidate moved the cost by less than the tolerance this
                // iterate is a fixed point; otherwise stiffen and re-sweep.
                if best_candidate.is_finite()
                    && (j_prev - best_candidate).abs() <= settings.eps_ddp
                {
                    if std::env::var_os("DATRAJ_DEBUG").is_some() {
                        let a_max = law
                            .feedforward
                            .iter()
                            .map(|a| a.amax())
                            .fold(0.0, f64::max);
                        eprintln!(
                            "    [ddp] gap-exit at iter {iterations}: |a| = {a_max:.3e}, rho = {:.1e}, gap = {:.3e}",
                            ladder.rho,
                            (j_prev - best_candidate).abs()
                        );
                    }
                    converged = true;
                    break;
                }
                if std::env::var_os("DATRAJ_DEBUG").is_some() {
                    eprintln!(
                        "    [ddp] ladder failed at iter {iterations}: J = {j_prev:.9e}, best candidate {best_candidate:.9e}, rho = {:.1e}",
                        ladder.rho
                    );
                }
                if ladder.increase().is_err() {
                    dnc = Some(DncReason::LineSearchStalled);
                    break;
                }
            }
        }
    }

    Ok(DdpRun {
        trajectory: traj,
        iterations,
        converged,
        dnc,
        trace,
    })
}

/// Outer-loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AulSettings {
    /// Target maximum constraint violation.
    pub eps_aul: f64,
    /// Dual/penalty update parameters.
    pub params: AulParams,
    /// Cap on outer iterations (dual updates plus homotopy advances).
    pub max_outer: usize,
}

impl Default for AulSettings {
    fn default() -> Self {
        AulSettings {
            eps_aul: 1e-6,
            params: AulParams::default(),
            max_outer: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AulOutcome {
    Converged,
    Dnc { phase: usize, reason: DncReason },
}

#[derive(Debug, Clone)]
pub struct AulReport {
    pub outcome: AulOutcome,
    /// Number of inner DDP solves.
    pub aul_iterations: usize,
    /// Accepted DDP iterations summed over the whole solve.
    pub ddp_iterations: usize,
    /// Final maximum constraint violation.
    pub g_max: f64,
    /// Per-iteration records across all phases.
    pub trace: Vec<IterRecord>,
    /// Mean polynomial-update share over all accepted forward passes.
    pub approx_share_avg: f64,
    /// Homotopy phases entered.
    pub phases: usize,
}

#[derive(Debug)]
pub struct AulSolution {
    pub trajectory: Trajectory,
    pub duals: DualPenaltyState,
    pub report: AulReport,
}

/// The constrained solve: an inner DDP loop on the augmented costs, dual
/// and penalty updates whenever the constraint violation still exceeds the
/// target, and homotopy advances once it does, until the schedule is
/// exhausted with a feasible-to-tolerance iterate.
pub fn aul_solve(
    problem: &mut OcpProblem,
    u0: &[[f64; NU]],
    variant: SolverVariant,
    ddp_settings: &DdpSettings,
    aul_settings: &AulSettings,
    schedule: &HomotopySchedule,
) -> Result<AulSolution, SolveError> {
    let mut duals = DualPenaltyState::zeros(
        &problem.constraints,
        problem.n_stages,
        &aul_settings.params,
    );
    let (eta0, sigma0) = schedule.pair(0);
    problem.cost.set_phase(eta0, sigma0);
    let mut traj = rollout_initial(problem, &duals, u0)?;

    let mut phase = 0usize;
    let mut outer = 0usize;
    let mut total_ddp = 0usize;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut outcome = AulOutcome::Converged;
    let mut g_max;

    loop {
        let run = ddp_solve(problem, &duals, traj, variant, ddp_settings)?;
        traj = run.trajectory;
        total_ddp += run.iterations;
        outer += 1;
        if std::env::var_os("DATRAJ_DEBUG").is_some() {
            eprintln!(
                "  [aul] outer {outer} phase {phase}: J = {:.9e}, {} ddp iters, dnc {:?}, g_max {:.3e}",
                traj.cost,
                run.iterations,
                run.dnc,
                problem.constraint_violation(&traj.states, &traj.controls),
            );
        }
        trace.extend(run.trace);

        if let Some(reason) = run.dnc {
            // An iteration-capped DDP call still produced a usable iterate;
            // let the outer loop try to rescue it. The other reasons mean
            // the sweep itself can no longer make progress.
            if reason != DncReason::MaxIterations {
                g_max = eval_constraints(
                    &problem.constraints,
                    &traj.states,
                    &traj.controls,
                    &problem.x_target,
                )
                .g_max;
                outcome = AulOutcome::Dnc { phase, reason };
                break;
            }
        }

        let eval = eval_constraints(
            &problem.constraints,
            &traj.states,
            &traj.controls,
            &problem.x_target,
        );
        g_max = eval.g_max;

        if g_max <= aul_settings.eps_aul {
            match schedule.advance(phase) {
                Some((eta, sigma)) => {
                    // Each homotopy phase runs a fresh constrained solve:
                    // multipliers and penalties restart so the new cost can
                    // reshape the trajectory before feasibility stiffens
                    // again.
                    phase += 1;
                    problem.cost.set_phase(eta, sigma);
                    duals = DualPenaltyState::zeros(
                        &problem.constraints,
                        problem.n_stages,
                        &aul_settings.params,
                    );
                    refresh_costs(problem, &duals, &mut traj);
                }
                None => break,
            }
        } else {
            update_duals(&problem.constraints, &eval, &mut duals, &aul_settings.params);
            refresh_costs(problem, &duals, &mut traj);
        }

        if outer >= aul_settings.max_outer {
            outcome = AulOutcome::Dnc {
                phase,
                reason: DncReason::OuterIterationLimit,
            };
            break;
        }
    }

    let approx_share_avg = if trace.is_empty() {
        0.0
    } else {
        trace.iter().map(|r| r.approx_share).sum::<f64>() / trace.len() as f64
    };
    let report = AulReport {
        outcome,
        aul_iterations: outer,
        ddp_iterations: total_ddp,
        g_max,
        trace,
        approx_share_avg,
        phases: phase + 1,
    };
    Ok(AulSolution {
        trajectory: traj,
        duals,
        report,
    })
}
