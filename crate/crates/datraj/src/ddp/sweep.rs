use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::da::TruncatedPoly;
use crate::dynamics::{NU, NX};

use super::{ControlLaw, DdpSettings, SweepKind, Trajectory};

/// Regularization state. The weight climbs geometrically when a cost-to-go
/// control Hessian fails its Cholesky factorization and decays after
/// consecutive accepted full steps.
#[derive(Debug, Clone)]
pub struct RegLadder {
    pub rho: f64,
    reg0: f64,
    reg_min: f64,
    reg_max: f64,
    scale: f64,
}

/// Raised when the ladder runs past its cap without reaching positive
/// definiteness; surfaces as a did-not-converge outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("regularization exhausted")]
pub struct RegularizationExhausted;

impl RegLadder {
    pub fn new(settings: &DdpSettings) -> Self {
        RegLadder {
            rho: 0.0,
            reg0: settings.reg0,
            reg_min: settings.reg_min,
            reg_max: settings.reg_max,
            scale: settings.reg_scale,
        }
    }

    fn next(&self) -> Result<f64, RegularizationExhausted> {
        let next = if self.rho < self.reg0 {
            self.reg0
        } else {
            self.rho * self.scale
        };
        if next > self.reg_max {
            Err(RegularizationExhausted)
        } else {
            Ok(next)
        }
    }

    /// Climb one rung without a factorization attempt (line-search failure).
    pub fn increase(&mut self) -> Result<(), RegularizationExhausted> {
        self.rho = self.next()?;
        Ok(())
    }

    /// Relax one rung, bottoming out at the floor.
    pub fn decrease(&mut self) {
        if self.rho <= self.reg0 {
            self.rho = self.reg_min;
        } else {
            self.rho /= self.scale;
        }
    }
}

/// Returns `Q_uu + rho * I` for the first ladder weight that admits a
/// Cholesky factorization, together with the factorization.
pub fn regularize(
    q_uu: &DMatrix<f64>,
    ladder: &mut RegLadder,
) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>), RegularizationExhausted> {
    loop {
        let mut m = q_uu.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ladder.rho;
        }
        if let Some(chol) = m.clone().cholesky() {
            return Ok((m, chol));
        }
        ladder.rho = ladder.next()?;
    }
}

fn gains(
    q_u: &DVector<f64>,
    q_xu: &DMatrix<f64>,
    chol: &Cholesky<f64, Dyn>,
) -> (DVector<f64>, DMatrix<f64>) {
    let a = -chol.solve(q_u);
    let b = -chol.solve(&q_xu.transpose());
    (a, b)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Backward sweep reading dynamics and cost derivatives off the stage
/// expansions. With `kind = Ddp` the second-order dynamics terms enter the
/// cost-to-go Hessians; with `kind = ILqr` they are dropped.
///
/// Whenever the regularization weight has to climb mid-sweep, the recursion
/// restarts from the terminal stage so every cost-to-go matrix is built
/// with one consistent weight; stages factored at a smaller weight would
/// otherwise leak indefinite cost-to-go Hessians into the remaining
/// recursion.
pub fn backward_sweep(
    traj: &Trajectory,
    kind: SweepKind,
    ladder: &mut RegLadder,
) -> Result<ControlLaw, RegularizationExhausted> {
    loop {
        if let Some(law) = backward_sweep_once(traj, kind, ladder)? {
            return Ok(law);
        }
    }
}

/// One sweep attempt at the ladder's current weight; returns `None` when
/// the weight climbed mid-sweep and the recursion must restart.
fn backward_sweep_once(
    traj: &Trajectory,
    kind: SweepKind,
    ladder: &mut RegLadder,
) -> Result<Option<ControlLaw>, RegularizationExhausted> {
    assert!(matches!(kind, SweepKind::ILqr | SweepKind::Ddp));
    let rho_entry = ladder.rho;
    let n = traj.n_stages();
    let term = traj
        .terminal_poly
        .extract_derivatives(NX)
        .expect("order >= 2");
    let mut v_x = term.grad_x;
    let mut v_xx = term.hess_xx;

    let mut feedforward = vec![DVector::zeros(NU); n];
    let mut feedback = vec![DMatrix::zeros(NU, NX); n];

    for k in (0..n).rev() {
        let l = traj.cost_polys[k]
            .extract_derivatives(NX)
            .expect("order >= 2");
        let f_x = traj.stage_polys[k].jacobian_block(0..NX);
        let f_u = traj.stage_polys[k].jacobian_block(NX..NX + NU);

        let q_x = &l.grad_x + f_x.transpose() * &v_x;
        let q_u = &l.grad_u + f_u.transpose() * &v_x;
        let mut q_xx = &l.hess_xx + f_x.transpose() * &v_xx * &f_x;
        let mut q_xu = &l.hess_xu + f_x.transpose() * &v_xx * &f_u;
        let mut q_uu = &l.hess_uu + f_u.transpose() * &v_xx * &f_u;

        if kind == SweepKind::Ddp {
            let w = traj.stage_polys[k]
                .weighted_hessian(&v_x)
                .expect("order >= 2");
            q_xx += w.view((0, 0), (NX, NX));
            q_xu += w.view((0, NX), (NX, NU));
            q_uu += w.view((NX, NX), (NU, NU));
        }
        symmetrize(&mut q_xx);
        symmetrize(&mut q_uu);

        let (q_uu_reg, chol) = regularize(&q_uu, ladder)?;
        if ladder.rho != rho_entry {
            return Ok(None);
        }
        let (a, b) = gains(&q_u, &q_xu, &chol);

        v_x = &q_x + b.transpose() * (&q_uu_reg * &a) + b.transpose() * &q_u + &q_xu * &a;
        v_xx = &q_xx + b.transpose() * &q_uu_reg * &b + &q_xu * &b + (&q_xu * &b).transpose();
        symmetrize(&mut v_xx);

        feedforward[k] = a;
        feedback[k] = b;
    }

    Ok(Some(ControlLaw {
        feedforward,
        feedback,
    }))
}

/// Backward sweep that forms the cost-to-go polynomial directly:
/// `P_Q = P_l + P_V(P_f - x_next, 0)`, reads all five derivative blocks off
/// its coefficients, and propagates `P_V = P_Q(dx, a + b dx)`.
pub fn backward_sweep_q(
    traj: &Trajectory,
    ladder: &mut RegLadder,
) -> Result<ControlLaw, RegularizationExhausted> {
    loop {
        if let Some(law) = backward_sweep_q_once(traj, ladder)? {
            return Ok(law);
        }
    }
}

fn backward_sweep_q_once(
    traj: &Trajectory,
    ladder: &mut RegLadder,
) -> Result<Option<ControlLaw>, RegularizationExhausted> {
    let rho_entry = ladder.rho;
    let n = traj.n_stages();
    let ctx = traj.terminal_poly.context().clone();
    let mut p_v = traj.terminal_poly.clone();

    let mut feedforward = vec![DVector::zeros(NU); n];
    let mut feedback = vec![DMatrix::zeros(NU, NX); n];

    for k in (0..n).rev() {
        let mut inner: Vec<TruncatedPoly> = traj.stage_polys[k]
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| c.add_constant(-traj.states[k + 1][i]))
            .collect();
        for _ in 0..NU {
            inner.push(TruncatedPoly::zeros(&ctx));
        }
        let p_q = traj.cost_polys[k]
            .try_add(&p_v.compose(&inner).expect("matching arity"))
            .expect("same context");

        let d = p_q.extract_derivatives(NX).expect("order >= 2");
        let mut q_uu = d.hess_uu;
        symmetrize(&mut q_uu);
        let (_, chol) = regularize(&q_uu, ladder)?;
        if ladder.rho != rho_entry {
            return Ok(None);
        }
        let (a, b) = gains(&d.grad_u, &d.hess_xu, &chol);

        let mut inner2: Vec<TruncatedPoly> = (0..NX)
            .map(|i| ctx.variable(i, 0.0).expect("index in range"))
            .collect();
        for j in 0..NU {
            let mut row = vec![0.0; NX + NU];
            for i in 0..NX {
                row[i] = b[(j, i)];
            }
            inner2.push(TruncatedPoly::affine(&ctx, a[j], &row).expect("matching length"));
        }
        p_v = p_q.compose(&inner2).expect("matching arity");

        feedforward[k] = a;
        feedback[k] = b;
    }

    Ok(Some(ControlLaw {
        feedforward,
        feedback,
    }))
}
