use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::context::DaContext;
use super::error::DaError;
use super::poly::{accumulate, compose_many, var_powers, TruncatedPoly};

/// A vector-valued Taylor expansion: components sharing one context.
#[derive(Debug, Clone)]
pub struct PolyMap {
    components: Vec<TruncatedPoly>,
}

impl PolyMap {
    pub fn new(components: Vec<TruncatedPoly>) -> Result<Self, DaError> {
        if components.is_empty() {
            return Err(DaError::InvalidArgument("empty polynomial map".into()));
        }
        for c in components.iter().skip(1) {
            if !components[0].context().same_algebra(c.context()) {
                return Err(DaError::ContextMismatch {
                    lhs_vars: components[0].context().num_vars(),
                    lhs_order: components[0].context().order(),
                    rhs_vars: c.context().num_vars(),
                    rhs_order: c.context().order(),
                });
            }
        }
        Ok(PolyMap { components })
    }

    pub fn context(&self) -> &Arc<DaContext> {
        self.components[0].context()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &TruncatedPoly {
        &self.components[i]
    }

    pub fn components(&self) -> &[TruncatedPoly] {
        &self.components
    }

    /// Constant parts as a vector.
    pub fn constant_part(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.components[i].constant_part())
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<DVector<f64>, DaError> {
        let ctx = self.context();
        if point.len() != ctx.num_vars() {
            return Err(DaError::PointLength {
                expected: ctx.num_vars(),
                got: point.len(),
            });
        }
        let powers = var_powers(ctx, point);
        Ok(DVector::from_fn(self.dim(), |i, _| {
            accumulate(ctx, self.components[i].coeffs(), &powers)
        }))
    }

    /// Substitutes the inner polynomials into every component, sharing the
    /// monomial basis across components.
    pub fn compose(&self, inner: &[TruncatedPoly]) -> Result<PolyMap, DaError> {
        let components = compose_many(&self.components, inner)?;
        Ok(PolyMap { components })
    }

    /// First-order coefficient block: row i is the gradient of component i
    /// over variables `var_range`.
    pub fn jacobian_block(&self, var_range: std::ops::Range<usize>) -> DMatrix<f64> {
        let ctx = self.context();
        let mut j = DMatrix::zeros(self.dim(), var_range.len());
        for (r, comp) in self.components.iter().enumerate() {
            for (c, v) in var_range.clone().enumerate() {
                j[(r, c)] = comp.coeffs()[ctx.var_monomial(v)];
            }
        }
        j
    }

    /// `sum_i w[i] * Hessian(component_i)`, returned as one symmetric matrix
    /// over all variables. Used for the second-order dynamics terms of the
    /// cost-to-go recursion.
    pub fn weighted_hessian(&self, w: &DVector<f64>) -> Result<DMatrix<f64>, DaError> {
        let ctx = self.context();
        if ctx.order() < 2 {
            return Err(DaError::OrderTooLow {
                order: ctx.order(),
                needed: 2,
            });
        }
        if w.len() != self.dim() {
            return Err(DaError::Arity {
                expected: self.dim(),
                got: w.len(),
            });
        }
        let n = ctx.num_vars();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let idx = ctx.pair_monomial(i, j);
                let mut acc = 0.0;
                for (c, comp) in self.components.iter().enumerate() {
                    acc += w[c] * comp.coeffs()[idx];
                }
                let v = if i == j { 2.0 * acc } else { acc };
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    /// Estimated convergence radius: the displacement norm inside which the
    /// truncated expansion should track the true map to within `eps`.
    ///
    /// With `A_k` the largest (over components) sum of absolute coefficients
    /// of total degree k, the exponential decay of the coefficients is
    /// extrapolated one order past the truncation, `A_(n+1) = A_n * q` with
    /// `q` the ratio of the two highest nonzero orders, and the radius
    /// solves `A_(n+1) R^(n+1) = eps`. When no decay information exists
    /// (a single nonzero nonlinear order) the estimate degenerates to
    /// `(eps / A_n)^(1/n)`; maps that are affine at the truncation return
    /// infinity.
    pub fn convergence_radius(&self, eps: f64) -> Result<f64, DaError> {
        if !(eps > 0.0) {
            return Err(DaError::InvalidArgument(format!(
                "convergence radius needs eps > 0, got {eps}"
            )));
        }
        let order = self.context().order();
        let mut per_component: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| c.abs_sums_by_degree())
            .collect();
        let mut a = vec![0.0f64; order + 1];
        for sums in per_component.drain(..) {
            for (k, s) in sums.into_iter().enumerate() {
                if s > a[k] {
                    a[k] = s;
                }
            }
        }
        let Some(top) = (2..=order).rev().find(|&k| a[k] > 0.0) else {
            return Ok(f64::INFINITY);
        };
        match (1..top).rev().find(|&k| a[k] > 0.0) {
            Some(prev) => {
                let q = (a[top] / a[prev]).powf(1.0 / (top - prev) as f64);
                let a_next = a[top] * q;
                Ok((eps / a_next).powf(1.0 / (top + 1) as f64))
            }
            None => Ok((eps / a[top]).powf(1.0 / top as f64)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(nv: usize, order: usize) -> Arc<DaContext> {
        DaContext::new(nv, order).unwrap()
    }

    #[test]
    fn radius_of_affine_map_is_infinite() {
        let c = ctx(2, 2);
        let p = c.variable(0, 1.0).unwrap().scale(3.0);
        let q = c.variable(1, -2.0).unwrap();
        let m = PolyMap::new(vec![p, q]).unwrap();
        assert_eq!(m.convergence_radius(1e-6).unwrap(), f64::INFINITY);
    }

    #[test]
    fn radius_closed_form_for_single_quadratic_coefficient() {
        let c = ctx(2, 2);
        let x = c.variable(0, 0.0).unwrap();
        let m = PolyMap::new(vec![x.try_mul(&x).unwrap()]).unwrap();
        let r = m.convergence_radius(1e-6).unwrap();
        assert!((r - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn radius_rejects_nonpositive_eps() {
        let c = ctx(2, 2);
        let m = PolyMap::new(vec![c.constant(1.0)]).unwrap();
        assert!(m.convergence_radius(0.0).is_err());
        assert!(m.convergence_radius(-1.0).is_err());
    }

    #[test]
    fn jacobian_block_reads_first_order_coefficients() {
        let c = ctx(3, 2);
        let x = c.variable(0, 0.0).unwrap();
        let y = c.variable(1, 0.0).unwrap();
        let p = x.scale(2.0).try_add(&y.scale(-1.0)).unwrap();
        let m = PolyMap::new(vec![p, y.scale(4.0)]).unwrap();
        let j = m.jacobian_block(0..2);
        assert_eq!(j[(0, 0)], 2.0);
        assert_eq!(j[(0, 1)], -1.0);
        assert_eq!(j[(1, 0)], 0.0);
        assert_eq!(j[(1, 1)], 4.0);
    }

    #[test]
    fn weighted_hessian_sums_components() {
        let c = ctx(2, 2);
        let x = c.variable(0, 0.0).unwrap();
        let y = c.variable(1, 0.0).unwrap();
        let m = PolyMap::new(vec![
            x.try_mul(&x).unwrap(),          // Hessian [[2,0],[0,0]]
            x.try_mul(&y).unwrap(),          // Hessian [[0,1],[1,0]]
        ])
        .unwrap();
        let w = DVector::from_vec(vec![0.5, 2.0]);
        let h = m.weighted_hessian(&w).unwrap();
        assert_eq!(h[(0, 0)], 1.0);
        assert_eq!(h[(0, 1)], 2.0);
        assert_eq!(h[(1, 0)], 2.0);
        assert_eq!(h[(1, 1)], 0.0);
    }
}
