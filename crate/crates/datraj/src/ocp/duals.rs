use nalgebra::DVector;

use crate::da::DaScalar;

use super::constraints::{ConstraintEval, ConstraintKind, ConstraintSet};

/// Multiplier and penalty update parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AulParams {
    /// Initial penalty weight.
    pub mu0: f64,
    /// Geometric penalty growth factor.
    pub beta: f64,
    /// Penalty cap.
    pub mu_max: f64,
}

impl Default for AulParams {
    fn default() -> Self {
        AulParams {
            mu0: 10.0,
            beta: 10.0,
            mu_max: 1e8,
        }
    }
}

/// Per-stage dual vectors and penalty weights: entries 0..N-1 size the path
/// constraint stack, entry N the terminal stack.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPenaltyState {
    pub lambdas: Vec<DVector<f64>>,
    pub mus: Vec<DVector<f64>>,
}

impl DualPenaltyState {
    pub fn zeros(set: &ConstraintSet, n_stages: usize, params: &AulParams) -> Self {
        let mut lambdas = Vec::with_capacity(n_stages + 1);
        let mut mus = Vec::with_capacity(n_stages + 1);
        for _ in 0..n_stages {
            lambdas.push(DVector::zeros(set.n_path()));
            mus.push(DVector::from_element(set.n_path(), params.mu0));
        }
        lambdas.push(DVector::zeros(set.n_terminal()));
        mus.push(DVector::from_element(set.n_terminal(), params.mu0));
        DualPenaltyState { lambdas, mus }
    }
}

/// The augmented-Lagrangian term `[lambda + (I_mu / 2) g]' g` for one
/// constraint stack. `I_mu` is diagonal with entry `mu_i` for equalities,
/// and for inequalities `mu_i` when the constraint is violated or carries a
/// positive multiplier (judged at the expansion point) and zero otherwise,
/// so strictly satisfied inequalities are cost-neutral.
pub fn augment_penalty<S: DaScalar>(
    g: &[S],
    kinds: &[ConstraintKind],
    lambda: &DVector<f64>,
    mu: &DVector<f64>,
) -> Option<S> {
    let mut acc: Option<S> = None;
    for (i, gi) in g.iter().enumerate() {
        let active_mu = match kinds[i] {
            ConstraintKind::Equality => mu[i],
            ConstraintKind::Inequality => {
                if gi.constant_part() > 0.0 || lambda[i] > 0.0 {
                    mu[i]
                } else {
                    0.0
                }
            }
        };
        if lambda[i] == 0.0 && active_mu == 0.0 {
            continue;
        }
        let term = gi.scale(0.5 * active_mu).add(&gi.lit(lambda[i])).mul(gi);
        acc = Some(match acc {
            Some(a) => a.add(&term),
            None => term,
        });
    }
    acc
}

/// First-order multiplier update with clamping for inequalities, and capped
/// geometric penalty growth.
pub fn update_duals(
    set: &ConstraintSet,
    eval: &ConstraintEval,
    duals: &mut DualPenaltyState,
    params: &AulParams,
) {
    let n = duals.lambdas.len() - 1;
    let path_kinds = set.path_kinds();
    let term_kinds = set.terminal_kinds();
    for k in 0..=n {
        let kinds = if k < n { &path_kinds } else { &term_kinds };
        let g = &eval.values[k];
        let lam = &mut duals.lambdas[k];
        let mu = &mut duals.mus[k];
        for i in 0..g.len() {
            let stepped = lam[i] + mu[i] * g[i];
            lam[i] = match kinds[i] {
                ConstraintKind::Equality => stepped,
                ConstraintKind::Inequality => stepped.max(0.0),
            };
            mu[i] = (params.beta * mu[i]).min(params.mu_max);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::constraints::{eval_constraints, PathConstraint, TerminalConstraint};
    use crate::dynamics::NX;

    #[test]
    fn no_duals_no_penalty() {
        let g = vec![0.5f64, -0.1];
        let kinds = [ConstraintKind::Equality, ConstraintKind::Inequality];
        let lam = DVector::zeros(2);
        let mu = DVector::zeros(2);
        assert!(augment_penalty(&g, &kinds, &lam, &mu).is_none());
    }

    #[test]
    fn equality_hand_value() {
        // g = 0.5, lambda = 1, mu = 10 -> (1 + 2.5) * 0.5 = 1.75
        let g = vec![0.5f64];
        let kinds = [ConstraintKind::Equality];
        let lam = DVector::from_vec(vec![1.0]);
        let mu = DVector::from_vec(vec![10.0]);
        let add = augment_penalty(&g, &kinds, &lam, &mu).unwrap();
        assert!((add - 1.75).abs() < 1e-15);
    }

    #[test]
    fn inactive_inequality_adds_nothing() {
        let g = vec![-0.1f64];
        let kinds = [ConstraintKind::Inequality];
        let lam = DVector::from_vec(vec![0.0]);
        let mu = DVector::from_vec(vec![10.0]);
        assert!(augment_penalty(&g, &kinds, &lam, &mu).is_none());
    }

    #[test]
    fn violated_or_dualized_inequality_is_penalized() {
        let kinds = [ConstraintKind::Inequality];
        let mu = DVector::from_vec(vec![10.0]);
        // Violated with zero multiplier.
        let add = augment_penalty(&[0.2f64], &kinds, &DVector::zeros(1), &mu).unwrap();
        assert!((add - 0.2).abs() < 1e-15); // (0 + 5*0.2)*0.2 = 0.2
        // Satisfied but with positive multiplier: lambda g + mu/2 g^2.
        let lam = DVector::from_vec(vec![2.0]);
        let add = augment_penalty(&[-0.1f64], &kinds, &lam, &mu).unwrap();
        assert!((add - (2.0 * -0.1 + 5.0 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn dual_updates_follow_the_first_order_rule() {
        let set = ConstraintSet {
            path_ineq: vec![PathConstraint::MinimumMass { m_dry: 0.5 }],
            path_eq: Vec::new(),
            term_ineq: Vec::new(),
            term_eq: vec![TerminalConstraint::StateMatch { index: 0 }],
        };
        let params = AulParams::default();
        let mut duals = DualPenaltyState::zeros(&set, 1, &params);
        duals.lambdas[1][0] = 2.0;
        duals.mus[0][0] = 10.0;
        duals.mus[1][0] = 10.0;

        let xt = [0.0; NX];
        // Stage mass 1.5 -> g = -1 (inactive); terminal x residual 0.1.
        let states = [[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.5], [
            0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 1.4,
        ]];
        let controls = [[0.0, 0.0, 0.0]];
        let eval = eval_constraints(&set, &states, &controls, &xt);

        update_duals(&set, &eval, &mut duals, &params);
        // Inequality, g = -1, lambda = 0: clamped to zero.
        assert_eq!(duals.lambdas[0][0], 0.0);
        // Equality, lambda = 2, mu = 10, g = 0.1 -> 3.
        assert!((duals.lambdas[1][0] - 3.0).abs() < 1e-12);
        assert_eq!(duals.mus[0][0], 100.0);
    }

    #[test]
    fn penalties_cap_at_mu_max() {
        let set = ConstraintSet {
            path_ineq: Vec::new(),
            path_eq: Vec::new(),
            term_ineq: Vec::new(),
            term_eq: vec![TerminalConstraint::StateMatch { index: 0 }],
        };
        let params = AulParams {
            mu0: 1e7,
            beta: 10.0,
            mu_max: 1e8,
        };
        let mut duals = DualPenaltyState::zeros(&set, 0, &params);
        let xt = [0.0; NX];
        let states = [[0.0; NX]];
        let eval = eval_constraints(&set, &states, &[], &xt);
        update_duals(&set, &eval, &mut duals, &params);
        assert_eq!(duals.mus[0][0], 1e8);
        update_duals(&set, &eval, &mut duals, &params);
        assert_eq!(duals.mus[0][0], 1e8);
    }

    #[test]
    fn inequality_multipliers_never_go_negative() {
        let set = ConstraintSet {
            path_ineq: vec![PathConstraint::MinimumMass { m_dry: 0.5 }],
            ..Default::default()
        };
        let params = AulParams::default();
        let mut duals = DualPenaltyState::zeros(&set, 1, &params);
        let xt = [0.0; NX];
        let states = [[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0], [0.0; NX]];
        let controls = [[0.0, 0.0, 0.0]];
        let eval = eval_constraints(&set, &states, &controls, &xt);
        for _ in 0..5 {
            update_duals(&set, &eval, &mut duals, &params);
            assert!(duals.lambdas[0][0] >= 0.0);
        }
    }
}
