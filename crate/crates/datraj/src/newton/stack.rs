use nalgebra::{DMatrix, DVector};

use crate::da::{PolyMap, TruncatedPoly};
use crate::dynamics::{NU, NX};
use crate::ocp::{ConstraintEval, ConstraintKind, ConstraintSet, OcpProblem};
use crate::ddp::SolveError;

/// Offset of `u_k` inside the decision vector.
pub(crate) fn y_offset_u(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        NU + (k - 1) * (NX + NU) + NX
    }
}

/// Offset of `x_k` (k >= 1) inside the decision vector.
pub(crate) fn y_offset_x(k: usize) -> usize {
    debug_assert!(k >= 1);
    NU + (k - 1) * (NX + NU)
}

/// Which constraint entries take part in the polish: per stage, indices
/// into the stacked path constraints; continuity equalities are always
/// active and are not listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveConstraintStack {
    pub path_active: Vec<Vec<usize>>,
    pub term_active: Vec<usize>,
}

impl ActiveConstraintStack {
    /// Residual entries: active path rows plus the continuity rows per
    /// stage, plus the active terminal rows.
    pub fn total_rows(&self, n_stages: usize) -> usize {
        let path: usize = self.path_active.iter().map(|v| v.len()).sum();
        path + n_stages * NX + self.term_active.len()
    }

    pub fn has_terminal(&self) -> bool {
        !self.term_active.is_empty()
    }
}

/// Equalities are always active; an inequality joins the stack when its
/// value sits above `-tol_active`.
pub fn build_active_set(
    set: &ConstraintSet,
    eval: &ConstraintEval,
    tol_active: f64,
) -> ActiveConstraintStack {
    let n = eval.values.len() - 1;
    let path_kinds = set.path_kinds();
    let term_kinds = set.terminal_kinds();
    let pick = |kinds: &[ConstraintKind], g: &DVector<f64>| -> Vec<usize> {
        kinds
            .iter()
            .enumerate()
            .filter(|(i, kind)| match kind {
                ConstraintKind::Equality => true,
                ConstraintKind::Inequality => g[*i] >= -tol_active,
            })
            .map(|(i, _)| i)
            .collect()
    };
    ActiveConstraintStack {
        path_active: (0..n).map(|k| pick(&path_kinds, &eval.values[k])).collect(),
        term_active: pick(&term_kinds, &eval.values[n]),
    }
}

/// Per-stage expansions of the active constraint map in local variables
/// `(dx_k, du_k, dx_{k+1})`. The continuity residual
/// `h_k = x_{k+1} - f(x_k, u_k)` is represented by the dynamics expansion
/// plus the stored `x_{k+1}`; its dependence on `dx_{k+1}` is the exact
/// identity.
#[derive(Debug, Clone)]
pub struct GammaPolys {
    /// Dynamics expansions around the current `(x_k, u_k)`.
    pub stage_dyn: Vec<PolyMap>,
    /// Current next states.
    pub x_next: Vec<[f64; NX]>,
    /// Active path constraint expansions per stage.
    pub stage_g: Vec<Vec<TruncatedPoly>>,
    /// Active terminal constraint expansions (x-block variables).
    pub term_g: Vec<TruncatedPoly>,
}

/// Jacobian blocks of one stage's active constraints with respect to
/// `(x_k, u_k)`. Continuity rows carry `h_x = -f_x`, `h_u = -f_u`, and an
/// implicit identity on `x_{k+1}`.
#[derive(Debug, Clone)]
pub struct StageGradients {
    pub g_x: DMatrix<f64>,
    pub g_u: DMatrix<f64>,
    pub h_x: DMatrix<f64>,
    pub h_u: DMatrix<f64>,
}

/// All gradient blocks of the stacked constraint map.
#[derive(Debug, Clone)]
pub struct DeltaBlocks {
    pub stages: Vec<StageGradients>,
    pub terminal_gx: DMatrix<f64>,
}

impl GammaPolys {
    pub fn n_stages(&self) -> usize {
        self.stage_dyn.len()
    }

    /// Residual values at the expansion center, in stack order
    /// `[g_0, h_0, g_1, h_1, ..., g_N]`.
    pub fn center_values(&self) -> DVector<f64> {
        let n = self.n_stages();
        let mut d = Vec::new();
        for k in 0..n {
            for g in &self.stage_g[k] {
                d.push(g.constant_part());
            }
            for i in 0..NX {
                d.push(self.x_next[k][i] - self.stage_dyn[k].component(i).constant_part());
            }
        }
        for g in &self.term_g {
            d.push(g.constant_part());
        }
        DVector::from_vec(d)
    }

    /// Residual values at a displacement `dy` of the decision vector,
    /// evaluated through the polynomial surrogates.
    pub fn evaluate(&self, dy: &DVector<f64>) -> DVector<f64> {
        let n = self.n_stages();
        let mut local = [0.0; NX + NU];
        let mut d = Vec::new();
        for k in 0..n {
            local[..NX].fill(0.0);
            if k >= 1 {
                let ox = y_offset_x(k);
                local[..NX].copy_from_slice(&dy.as_slice()[ox..ox + NX]);
            }
            let ou = y_offset_u(k);
            local[NX..].copy_from_slice(&dy.as_slice()[ou..ou + NU]);
            for g in &self.stage_g[k] {
                d.push(g.evaluate(&local).expect("local slice length"));
            }
            let oxn = y_offset_x(k + 1);
            let fval = self.stage_dyn[k].evaluate(&local).expect("local slice length");
            for i in 0..NX {
                d.push(self.x_next[k][i] + dy[oxn + i] - fval[i]);
            }
        }
        if !self.term_g.is_empty() {
            local[..NX].fill(0.0);
            local[NX..].fill(0.0);
            let ox = y_offset_x(n);
            local[..NX].copy_from_slice(&dy.as_slice()[ox..ox + NX]);
            for g in &self.term_g {
                d.push(g.evaluate(&local).expect("local slice length"));
            }
        }
        DVector::from_vec(d)
    }

    /// Re-centers every expansion at `Y + dy` by composition.
    pub fn recenter(&mut self, dy: &DVector<f64>) {
        let n = self.n_stages();
        let ctx = self.stage_dyn[0].context().clone();
        let mut local = [0.0; NX + NU];
        for k in 0..n {
            local[..NX].fill(0.0);
            if k >= 1 {
                let ox = y_offset_x(k);
                local[..NX].copy_from_slice(&dy.as_slice()[ox..ox + NX]);
            }
            let ou = y_offset_u(k);
            local[NX..].copy_from_slice(&dy.as_slice()[ou..ou + NU]);
            let inner = ctx.shifted_variables(&local).expect("matching arity");
            self.stage_dyn[k] = self.stage_dyn[k].compose(&inner).expect("same context");
            for g in self.stage_g[k].iter_mut() {
                *g = g.compose(&inner).expect("same context");
            }
            let oxn = y_offset_x(k + 1);
            for i in 0..NX {
                self.x_next[k][i] += dy[oxn + i];
            }
        }
        if !self.term_g.is_empty() {
            local.fill(0.0);
            let ox = y_offset_x(n);
            local[..NX].copy_from_slice(&dy.as_slice()[ox..ox + NX]);
            let inner = ctx.shifted_variables(&local).expect("matching arity");
            for g in self.term_g.iter_mut() {
                *g = g.compose(&inner).expect("same context");
            }
        }
    }

    /// Extracts the gradient blocks feeding the normal-equations assembly.
    pub fn gradients(&self) -> DeltaBlocks {
        let n = self.n_stages();
        let mut stages = Vec::with_capacity(n);
        for k in 0..n {
            let n_g = self.stage_g[k].len();
            let mut g_x = DMatrix::zeros(n_g, NX);
            let mut g_u = DMatrix::zeros(n_g, NU);
            for (r, g) in self.stage_g[k].iter().enumerate() {
                let grad = g.gradient();
                for c in 0..NX {
                    g_x[(r, c)] = grad[c];
                }
                for c in 0..NU {
                    g_u[(r, c)] = grad[NX + c];
                }
            }
            let h_x = -self.stage_dyn[k].jacobian_block(0..NX);
            let h_u = -self.stage_dyn[k].jacobian_block(NX..NX + NU);
            stages.push(StageGradients { g_x, g_u, h_x, h_u });
        }
        let mut terminal_gx = DMatrix::zeros(self.term_g.len(), NX);
        for (r, g) in self.term_g.iter().enumerate() {
            let grad = g.gradient();
            for c in 0..NX {
                terminal_gx[(r, c)] = grad[c];
            }
        }
        DeltaBlocks {
            stages,
            terminal_gx,
        }
    }
}

impl DeltaBlocks {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn n_y(&self) -> usize {
        self.n_stages() * (NX + NU)
    }

    pub fn total_rows(&self) -> usize {
        let path: usize = self.stages.iter().map(|s| s.g_x.nrows()).sum();
        path + self.n_stages() * NX + self.terminal_gx.nrows()
    }

    /// `Delta' z`, assembled block-wise.
    pub fn apply_transpose(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n_stages();
        let mut out = DVector::zeros(self.n_y());
        let mut row = 0usize;
        for (k, s) in self.stages.iter().enumerate() {
            let n_g = s.g_x.nrows();
            let zg = z.rows(row, n_g).into_owned();
            let zh = z.rows(row + n_g, NX).into_owned();
            row += n_g + NX;

            let du = s.g_u.transpose() * &zg + s.h_u.transpose() * &zh;
            let ou = y_offset_u(k);
            for j in 0..NU {
                out[ou + j] += du[j];
            }
            if k >= 1 {
                let dx = s.g_x.transpose() * &zg + s.h_x.transpose() * &zh;
                let ox = y_offset_x(k);
                for i in 0..NX {
                    out[ox + i] += dx[i];
                }
            }
            // h_k depends on x_{k+1} through the identity.
            let oxn = y_offset_x(k + 1);
            for i in 0..NX {
                out[oxn + i] += zh[i];
            }
        }
        if self.terminal_gx.nrows() > 0 {
            let zt = z.rows(row, self.terminal_gx.nrows()).into_owned();
            let dx = self.terminal_gx.transpose() * &zt;
            let ox = y_offset_x(n);
            for i in 0..NX {
                out[ox + i] += dx[i];
            }
        }
        out
    }

    /// `Delta dy`, used by tests and the minimum-norm check.
    pub fn apply(&self, dy: &DVector<f64>) -> DVector<f64> {
        let n = self.n_stages();
        let mut out = Vec::with_capacity(self.total_rows());
        for (k, s) in self.stages.iter().enumerate() {
            let ou = y_offset_u(k);
            let du = dy.rows(ou, NU).into_owned();
            let dx = if k >= 1 {
                dy.rows(y_offset_x(k), NX).into_owned()
            } else {
                DVector::zeros(NX)
            };
            let g = &s.g_x * &dx + &s.g_u * &du;
            out.extend(g.iter().copied());
            let dxn = dy.rows(y_offset_x(k + 1), NX).into_owned();
            let h = &s.h_x * &dx + &s.h_u * &du + dxn;
            out.extend(h.iter().copied());
        }
        if self.terminal_gx.nrows() > 0 {
            let dx = dy.rows(y_offset_x(n), NX).into_owned();
            let g = &self.terminal_gx * &dx;
            out.extend(g.iter().copied());
        }
        DVector::from_vec(out)
    }

    /// Dense constraint Jacobian, for oracle comparisons.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.n_stages();
        let mut m = DMatrix::zeros(self.total_rows(), self.n_y());
        let mut row = 0usize;
        for (k, s) in self.stages.iter().enumerate() {
            let n_g = s.g_x.nrows();
            let ou = y_offset_u(k);
            m.view_mut((row, ou), (n_g, NU)).copy_from(&s.g_u);
            m.view_mut((row + n_g, ou), (NX, NU)).copy_from(&s.h_u);
            if k >= 1 {
                let ox = y_offset_x(k);
                m.view_mut((row, ox), (n_g, NX)).copy_from(&s.g_x);
                m.view_mut((row + n_g, ox), (NX, NX)).copy_from(&s.h_x);
            }
            let oxn = y_offset_x(k + 1);
            for i in 0..NX {
                m[(row + n_g + i, oxn + i)] = 1.0;
            }
            row += n_g + NX;
        }
        if self.terminal_gx.nrows() > 0 {
            let ox = y_offset_x(n);
            m.view_mut((row, ox), (self.terminal_gx.nrows(), NX))
                .copy_from(&self.terminal_gx);
        }
        m
    }
}

/// Expands the active constraint map around the iterate `(states,
/// controls)`: dynamics from scratch, path and terminal constraints
/// directly.
pub fn expand_gamma(
    problem: &OcpProblem,
    states: &[[f64; NX]],
    controls: &[[f64; NU]],
    stack: &ActiveConstraintStack,
) -> Result<GammaPolys, SolveError> {
    let n = controls.len();
    let ctx = &problem.ctx;
    let mut stage_dyn = Vec::with_capacity(n);
    let mut stage_g = Vec::with_capacity(n);
    for k in 0..n {
        let pm = problem
            .expand_dynamics(&states[k], &controls[k])
            .map_err(|source| SolveError::Dynamics { stage: k, source })?;
        stage_dyn.push(pm);

        let xp: [TruncatedPoly; NX] =
            std::array::from_fn(|i| ctx.variable(i, states[k][i]).expect("in range"));
        let up: [TruncatedPoly; NU] =
            std::array::from_fn(|j| ctx.variable(NX + j, controls[k][j]).expect("in range"));
        let all = problem.constraints.eval_path(&xp, &up);
        stage_g.push(
            stack.path_active[k]
                .iter()
                .map(|&i| all[i].clone())
                .collect(),
        );
    }
    let xp: [TruncatedPoly; NX] =
        std::array::from_fn(|i| ctx.variable(i, states[n][i]).expect("in range"));
    let all_t = problem.constraints.eval_terminal(&xp, &problem.x_target);
    let term_g = stack
        .term_active
        .iter()
        .map(|&i| all_t[i].clone())
        .collect();
    Ok(GammaPolys {
        stage_dyn,
        x_next: states[1..].to_vec(),
        stage_g,
        term_g,
    })
}
