use nalgebra::DVector;

use crate::da::DaScalar;
use crate::dynamics::{NU, NX};

/// Whether a constraint entry is an inequality (`g <= 0`) or an equality
/// (`g = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Inequality,
    Equality,
}

/// Scalar path constraint `g(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathConstraint {
    /// `u'u - u_max^2 <= 0` (normalized thrust).
    ThrustBound { u_max_sq: f64 },
    /// `m_dry - m <= 0` (normalized masses).
    MinimumMass { m_dry: f64 },
}

impl PathConstraint {
    pub fn eval<S: DaScalar>(&self, x: &[S; NX], u: &[S; NU]) -> S {
        match *self {
            PathConstraint::ThrustBound { u_max_sq } => u[0]
                .mul(&u[0])
                .add(&u[1].mul(&u[1]))
                .add(&u[2].mul(&u[2]))
                .add(&u[0].lit(-u_max_sq)),
            PathConstraint::MinimumMass { m_dry } => x[6].neg().add(&x[6].lit(m_dry)),
        }
    }
}

/// Scalar terminal constraint `g(x_N, x_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalConstraint {
    /// `x[index] - x_target[index] = 0`.
    StateMatch { index: usize },
}

impl TerminalConstraint {
    pub fn eval<S: DaScalar>(&self, x: &[S; NX], x_target: &[f64; NX]) -> S {
        match *self {
            TerminalConstraint::StateMatch { index } => {
                x[index].add(&x[index].lit(-x_target[index]))
            }
        }
    }
}

/// The problem's constraint stack: path inequalities/equalities applied at
/// stages 0..N-1 and terminal inequalities/equalities at stage N.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub path_ineq: Vec<PathConstraint>,
    pub path_eq: Vec<PathConstraint>,
    pub term_ineq: Vec<TerminalConstraint>,
    pub term_eq: Vec<TerminalConstraint>,
}

impl ConstraintSet {
    /// Thrust bound and dry-mass floor along the path, per-component state
    /// matching at the end. `match_indices` selects the matched components
    /// (mass and, for equinoctial models, the longitude are excluded by the
    /// caller).
    pub fn transfer(u_max_norm: f64, m_dry_norm: f64, match_indices: &[usize]) -> Self {
        ConstraintSet {
            path_ineq: vec![
                PathConstraint::ThrustBound {
                    u_max_sq: u_max_norm * u_max_norm,
                },
                PathConstraint::MinimumMass { m_dry: m_dry_norm },
            ],
            path_eq: Vec::new(),
            term_ineq: Vec::new(),
            term_eq: match_indices
                .iter()
                .map(|&index| TerminalConstraint::StateMatch { index })
                .collect(),
        }
    }

    pub fn n_path(&self) -> usize {
        self.path_ineq.len() + self.path_eq.len()
    }

    pub fn n_terminal(&self) -> usize {
        self.term_ineq.len() + self.term_eq.len()
    }

    /// Kinds of the stacked path constraints, inequalities first.
    pub fn path_kinds(&self) -> Vec<ConstraintKind> {
        let mut kinds = vec![ConstraintKind::Inequality; self.path_ineq.len()];
        kinds.extend(vec![ConstraintKind::Equality; self.path_eq.len()]);
        kinds
    }

    pub fn terminal_kinds(&self) -> Vec<ConstraintKind> {
        let mut kinds = vec![ConstraintKind::Inequality; self.term_ineq.len()];
        kinds.extend(vec![ConstraintKind::Equality; self.term_eq.len()]);
        kinds
    }

    /// Stacked path constraint values at one stage, inequalities first.
    pub fn eval_path<S: DaScalar>(&self, x: &[S; NX], u: &[S; NU]) -> Vec<S> {
        self.path_ineq
            .iter()
            .chain(self.path_eq.iter())
            .map(|c| c.eval(x, u))
            .collect()
    }

    /// Stacked terminal constraint values, inequalities first.
    pub fn eval_terminal<S: DaScalar>(&self, x: &[S; NX], x_target: &[f64; NX]) -> Vec<S> {
        self.term_ineq
            .iter()
            .chain(self.term_eq.iter())
            .map(|c| c.eval(x, x_target))
            .collect()
    }
}

/// Constraint values along a trajectory plus the maximum violation.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    /// Per-stage stacked values: stages 0..N-1 carry path constraints,
    /// entry N the terminal block.
    pub values: Vec<DVector<f64>>,
    /// Maximum violation: `|g|` for equalities, `max(g, 0)` for
    /// inequalities.
    pub g_max: f64,
}

fn violation(kind: ConstraintKind, g: f64) -> f64 {
    match kind {
        ConstraintKind::Equality => g.abs(),
        ConstraintKind::Inequality => g.max(0.0),
    }
}

/// Evaluates the constraint stack on a state/control sequence.
pub fn eval_constraints(
    set: &ConstraintSet,
    states: &[[f64; NX]],
    controls: &[[f64; NU]],
    x_target: &[f64; NX],
) -> ConstraintEval {
    let n = controls.len();
    assert_eq!(states.len(), n + 1, "need N+1 states for N controls");
    let path_kinds = set.path_kinds();
    let term_kinds = set.terminal_kinds();
    let mut values = Vec::with_capacity(n + 1);
    let mut g_max: f64 = 0.0;
    for k in 0..n {
        let g = set.eval_path(&states[k], &controls[k]);
        for (kind, v) in path_kinds.iter().zip(g.iter()) {
            g_max = g_max.max(violation(*kind, *v));
        }
        values.push(DVector::from_vec(g));
    }
    let gt = set.eval_terminal(&states[n], x_target);
    for (kind, v) in term_kinds.iter().zip(gt.iter()) {
        g_max = g_max.max(violation(*kind, *v));
    }
    values.push(DVector::from_vec(gt));
    ConstraintEval { values, g_max }
}
