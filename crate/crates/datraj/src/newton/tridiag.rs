use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::NX;

use super::stack::DeltaBlocks;

/// Symmetric block-tridiagonal matrix: diagonal blocks plus the blocks one
/// group below the diagonal.
#[derive(Debug, Clone)]
pub struct BlockTriDiagonal {
    pub diag: Vec<DMatrix<f64>>,
    /// `sub[i]` couples group `i + 1` to group `i`.
    pub sub: Vec<DMatrix<f64>>,
}

/// Lower-triangular block Cholesky factor mirroring the tridiagonal
/// structure.
#[derive(Debug, Clone)]
pub struct BlockCholeskyFactor {
    pub diag: Vec<DMatrix<f64>>,
    pub sub: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("block {block} is not positive definite")]
pub struct FactorizationError {
    pub block: usize,
}

impl BlockTriDiagonal {
    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn total_dim(&self) -> usize {
        self.diag.iter().map(|d| d.nrows()).sum()
    }

    /// Densifies for oracle comparisons.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.total_dim();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0usize;
        for (i, d) in self.diag.iter().enumerate() {
            m.view_mut((off, off), (d.nrows(), d.ncols())).copy_from(d);
            if i + 1 < self.diag.len() {
                let s = &self.sub[i];
                m.view_mut((off + d.nrows(), off), (s.nrows(), s.ncols()))
                    .copy_from(s);
                m.view_mut((off, off + d.nrows()), (s.ncols(), s.nrows()))
                    .copy_from(&s.transpose());
            }
            off += d.nrows();
        }
        m
    }
}

impl BlockCholeskyFactor {
    pub fn dense(&self) -> DMatrix<f64> {
        let n: usize = self.diag.iter().map(|d| d.nrows()).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0usize;
        for (i, d) in self.diag.iter().enumerate() {
            m.view_mut((off, off), (d.nrows(), d.ncols())).copy_from(d);
            if i + 1 < self.diag.len() {
                let s = &self.sub[i];
                m.view_mut((off + d.nrows(), off), (s.nrows(), s.ncols()))
                    .copy_from(s);
            }
            off += d.nrows();
        }
        m
    }
}

/// Builds the normal-equations matrix `Sigma = Delta Delta'` directly from
/// the per-stage gradient blocks, one group per stage (its active path rows
/// plus the continuity rows) and a final group for the terminal rows.
/// No sparse-matrix product is formed.
pub fn assemble_sigma(delta: &DeltaBlocks) -> BlockTriDiagonal {
    let n = delta.n_stages();
    let mut diag = Vec::with_capacity(n + 1);
    let mut sub = Vec::with_capacity(n);

    for (k, s) in delta.stages.iter().enumerate() {
        let n_g = s.g_x.nrows();
        let dim = n_g + NX;
        let mut d = DMatrix::zeros(dim, dim);
        // Stage 0 has no free x_k columns; its products run over u_0 only.
        let (gg, gh, hh) = if k == 0 {
            (
                &s.g_u * s.g_u.transpose(),
                &s.g_u * s.h_u.transpose(),
                &s.h_u * s.h_u.transpose(),
            )
        } else {
            (
                &s.g_x * s.g_x.transpose() + &s.g_u * s.g_u.transpose(),
                &s.g_x * s.h_x.transpose() + &s.g_u * s.h_u.transpose(),
                &s.h_x * s.h_x.transpose() + &s.h_u * s.h_u.transpose(),
            )
        };
        d.view_mut((0, 0), (n_g, n_g)).copy_from(&gg);
        d.view_mut((0, n_g), (n_g, NX)).copy_from(&gh);
        d.view_mut((n_g, 0), (NX, n_g)).copy_from(&gh.transpose());
        d.view_mut((n_g, n_g), (NX, NX)).copy_from(&hh);
        // Identity from the h_k dependence on x_{k+1}.
        for i in 0..NX {
            d[(n_g + i, n_g + i)] += 1.0;
        }
        diag.push(d);

        if k >= 1 {
            // Coupling to group k-1 through the shared x_k columns: the
            // previous continuity rows carry the identity there.
            let prev_g = delta.stages[k - 1].g_x.nrows();
            let mut l = DMatrix::zeros(dim, prev_g + NX);
            l.view_mut((0, prev_g), (n_g, NX)).copy_from(&s.g_x);
            l.view_mut((n_g, prev_g), (NX, NX)).copy_from(&s.h_x);
            sub.push(l);
        }
    }

    if delta.terminal_gx.nrows() > 0 {
        let n_t = delta.terminal_gx.nrows();
        diag.push(&delta.terminal_gx * delta.terminal_gx.transpose());
        let prev_g = delta.stages[n - 1].g_x.nrows();
        let mut l = DMatrix::zeros(n_t, prev_g + NX);
        l.view_mut((0, prev_g), (n_t, NX))
            .copy_from(&delta.terminal_gx);
        sub.push(l);
    }

    BlockTriDiagonal { diag, sub }
}

/// Block-tridiagonal Cholesky: `Pi_D0 = chol(D_0)`,
/// `Pi_Lk = L_k Pi_D(k-1)^-T`, `Pi_Dk = chol(D_k - Pi_Lk Pi_Lk')`.
pub fn block_cholesky(sigma: &BlockTriDiagonal) -> Result<BlockCholeskyFactor, FactorizationError> {
    let m = sigma.n_blocks();
    let mut diag = Vec::with_capacity(m);
    let mut sub = Vec::with_capacity(m.saturating_sub(1));
    for i in 0..m {
        let mut d = sigma.diag[i].clone();
        if i >= 1 {
            let prev: &DMatrix<f64> = &diag[i - 1];
            // Pi_L = L * prev^-T  <=>  prev * Pi_L' = L'.
            let lt = prev
                .solve_lower_triangular(&sigma.sub[i - 1].transpose())
                .ok_or(FactorizationError { block: i })?;
            let pi_l = lt.transpose();
            d -= &pi_l * pi_l.transpose();
            sub.push(pi_l);
        }
        let chol = d.cholesky().ok_or(FactorizationError { block: i })?;
        diag.push(chol.l());
    }
    Ok(BlockCholeskyFactor { diag, sub })
}

/// Solves `Sigma z = rhs` by forward substitution through the factor and
/// backward substitution through its transpose.
pub fn tridiag_solve(factor: &BlockCholeskyFactor, rhs: &DVector<f64>) -> DVector<f64> {
    let m = factor.diag.len();
    let mut offsets = Vec::with_capacity(m);
    let mut off = 0usize;
    for d in &factor.diag {
        offsets.push(off);
        off += d.nrows();
    }
    debug_assert_eq!(off, rhs.len());

    // Forward: Pi y = rhs.
    let mut y: Vec<DVector<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut b = rhs.rows(offsets[i], factor.diag[i].nrows()).into_owned();
        if i >= 1 {
            b -= &factor.sub[i - 1] * &y[i - 1];
        }
        let yi = factor.diag[i]
            .solve_lower_triangular(&b)
            .expect("positive diagonal");
        y.push(yi);
    }

    // Backward: Pi' z = y.
    let mut z: Vec<DVector<f64>> = vec![DVector::zeros(0); m];
    for i in (0..m).rev() {
        let mut b = y[i].clone();
        if i + 1 < m {
            b -= factor.sub[i].transpose() * &z[i + 1];
        }
        z[i] = factor.diag[i]
            .transpose()
            .solve_upper_triangular(&b)
            .expect("positive diagonal");
    }

    let mut out = DVector::zeros(rhs.len());
    for i in 0..m {
        out.rows_mut(offsets[i], z[i].len()).copy_from(&z[i]);
    }
    out
}
