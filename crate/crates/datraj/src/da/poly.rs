use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::context::{DaContext, MultiIndex};
use super::error::DaError;

/// Coefficients smaller than this are flushed to zero during multiplication
/// to avoid denormal churn; far below every tolerance in the toolkit.
const COEFF_FLUSH: f64 = 1e-300;

/// Intrinsic functions defined on the algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntrinsicFn {
    Sqrt,
    Reciprocal,
    Pow(f64),
    Sin,
    Cos,
    Exp,
    Log,
}

/// A scalar function expanded as a multivariate Taylor polynomial truncated
/// at the context's order. Coefficients are stored densely in the context's
/// graded-lexicographic monomial order; a zero slot means the coefficient is
/// absent.
#[derive(Debug, Clone)]
pub struct TruncatedPoly {
    ctx: Arc<DaContext>,
    coeffs: Vec<f64>,
}

/// Value, gradient blocks, and symmetric Hessian blocks read off a
/// polynomial's coefficients for a `(x, u)` variable partition.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: f64,
    pub grad_x: DVector<f64>,
    pub grad_u: DVector<f64>,
    pub hess_xx: DMatrix<f64>,
    pub hess_xu: DMatrix<f64>,
    pub hess_uu: DMatrix<f64>,
}

impl TruncatedPoly {
    pub fn constant(ctx: &Arc<DaContext>, value: f64) -> Self {
        let mut coeffs = vec![0.0; ctx.len()];
        coeffs[0] = value;
        TruncatedPoly {
            ctx: ctx.clone(),
            coeffs,
        }
    }

    pub fn zeros(ctx: &Arc<DaContext>) -> Self {
        TruncatedPoly {
            ctx: ctx.clone(),
            coeffs: vec![0.0; ctx.len()],
        }
    }

    /// `constant + sum_i linear[i] * dv_i`.
    pub fn affine(ctx: &Arc<DaContext>, constant: f64, linear: &[f64]) -> Result<Self, DaError> {
        if linear.len() != ctx.num_vars() {
            return Err(DaError::Arity {
                expected: ctx.num_vars(),
                got: linear.len(),
            });
        }
        let mut p = TruncatedPoly::constant(ctx, constant);
        for (i, &c) in linear.iter().enumerate() {
            p.coeffs[ctx.var_monomial(i)] = c;
        }
        Ok(p)
    }

    pub fn context(&self) -> &Arc<DaContext> {
        &self.ctx
    }

    /// Constant part (coefficient of the all-zeros multi-index).
    pub fn constant_part(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficient(&self, mi: &MultiIndex) -> Result<f64, DaError> {
        match self.ctx.monomial_index(mi) {
            Some(i) => Ok(self.coeffs[i]),
            None => Err(DaError::InvalidArgument(format!(
                "monomial {:?} not representable in this algebra",
                mi.exponents()
            ))),
        }
    }

    /// Nonzero coefficients in graded-lexicographic monomial order.
    pub fn iter_coefficients(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (self.ctx.monomial(i), c))
    }

    pub(crate) fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn set_coeff_index(&mut self, index: usize, value: f64) {
        self.coeffs[index] = value;
    }

    fn check_same_algebra(&self, rhs: &Self) -> Result<(), DaError> {
        if self.ctx.same_algebra(&rhs.ctx) {
            Ok(())
        } else {
            Err(DaError::ContextMismatch {
                lhs_vars: self.ctx.num_vars(),
                lhs_order: self.ctx.order(),
                rhs_vars: rhs.ctx.num_vars(),
                rhs_order: rhs.ctx.order(),
            })
        }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, DaError> {
        self.check_same_algebra(rhs)?;
        let mut out = self.clone();
        for (o, r) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *o += r;
        }
        Ok(out)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, DaError> {
        self.check_same_algebra(rhs)?;
        let mut out = self.clone();
        for (o, r) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *o -= r;
        }
        Ok(out)
    }

    /// Cauchy product truncated at the context order.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self, DaError> {
        self.check_same_algebra(rhs)?;
        let table = self.ctx.mul_table();
        let a = &self.coeffs[..];
        let b = &rhs.coeffs[..];
        let mut coeffs = Vec::with_capacity(a.len());
        for k in 0..a.len() {
            let lo = table.starts[k] as usize;
            let hi = table.starts[k + 1] as usize;
            let mut acc = 0.0;
            // Index pairs come straight from the context tables, always in
            // range for its coefficient vectors.
            for &(i, j) in unsafe { table.pairs.get_unchecked(lo..hi) } {
                acc += unsafe { a.get_unchecked(i as usize) * b.get_unchecked(j as usize) };
            }
            coeffs.push(if acc.abs() < COEFF_FLUSH { 0.0 } else { acc });
        }
        Ok(TruncatedPoly {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= k;
        }
        out
    }

    pub fn negate(&self) -> Self {
        self.scale(-1.0)
    }

    /// `self + k * rhs`, coefficient-wise.
    pub fn add_scaled(&self, rhs: &Self, k: f64) -> Result<Self, DaError> {
        self.check_same_algebra(rhs)?;
        let mut out = self.clone();
        for (o, r) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *o += k * r;
        }
        Ok(out)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Four-term scaled accumulation with one allocation; per-coefficient
    /// operation order matches four chained `add_scaled` calls.
    pub(crate) fn add_scaled4(
        &self,
        a: (&Self, f64),
        b: (&Self, f64),
        c: (&Self, f64),
        d: (&Self, f64),
    ) -> Self {
        let mut out = self.clone();
        for (idx, slot) in out.coeffs.iter_mut().enumerate() {
            let mut v = *slot;
            v += a.1 * a.0.coeffs[idx];
            v += b.1 * b.0.coeffs[idx];
            v += c.1 * c.0.coeffs[idx];
            v += d.1 * d.0.coeffs[idx];
            *slot = v;
        }
        out
    }

    /// Composes the univariate power series `sum_k series[k] * n^k` with the
    /// nilpotent part `n = self - constant`, by Horner evaluation. The
    /// constant slot of the result is exactly `series[0]`.
    fn compose_series(&self, series: &[f64]) -> Self {
        let order = self.ctx.order();
        debug_assert_eq!(series.len(), order + 1);
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut acc = TruncatedPoly::constant(&self.ctx, series[order]);
        for k in (0..order).rev() {
            acc = acc.try_mul(&nil).expect("same context");
            acc.coeffs[0] += series[k];
        }
        acc.coeffs[0] = series[0];
        acc
    }

    /// Taylor coefficients of `x^alpha` around `c`: `binom(alpha, k) c^(alpha-k)`.
    fn power_series(c: f64, alpha: f64, order: usize) -> Vec<f64> {
        let mut series = vec![0.0; order + 1];
        series[0] = c.powf(alpha);
        for k in 1..=order {
            series[k] = series[k - 1] * (alpha - (k as f64 - 1.0)) / (k as f64 * c);
        }
        series
    }

    pub fn sqrt(&self) -> Result<Self, DaError> {
        let c = self.constant_part();
        if c <= 0.0 {
            return Err(DaError::Domain {
                op: "sqrt",
                value: c,
            });
        }
        let mut series = TruncatedPoly::power_series(c, 0.5, self.ctx.order());
        series[0] = c.sqrt();
        Ok(self.compose_series(&series))
    }

    pub fn recip(&self) -> Result<Self, DaError> {
        let c = self.constant_part();
        if c == 0.0 {
            return Err(DaError::Domain {
                op: "reciprocal",
                value: c,
            });
        }
        let order = self.ctx.order();
        let mut series = vec![0.0; order + 1];
        series[0] = 1.0 / c;
        for k in 1..=order {
            series[k] = -series[k - 1] / c;
        }
        Ok(self.compose_series(&series))
    }

    pub fn powf(&self, alpha: f64) -> Result<Self, DaError> {
        let c = self.constant_part();
        if c <= 0.0 {
            return Err(DaError::Domain {
                op: "pow",
                value: c,
            });
        }
        let series = TruncatedPoly::power_series(c, alpha, self.ctx.order());
        Ok(self.compose_series(&series))
    }

    pub fn sin(&self) -> Self {
        let c = self.constant_part();
        let (s, co) = (c.sin(), c.cos());
        let cycle = [s, co, -s, -co];
        let order = self.ctx.order();
        let mut fact = 1.0;
        let mut series = vec![0.0; order + 1];
        for (k, slot) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = cycle[k % 4] / fact;
        }
        self.compose_series(&series)
    }

    pub fn cos(&self) -> Self {
        let c = self.constant_part();
        let (s, co) = (c.sin(), c.cos());
        let cycle = [co, -s, -co, s];
        let order = self.ctx.order();
        let mut fact = 1.0;
        let mut series = vec![0.0; order + 1];
        for (k, slot) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = cycle[k % 4] / fact;
        }
        self.compose_series(&series)
    }

    pub fn exp(&self) -> Self {
        let e = self.constant_part().exp();
        let order = self.ctx.order();
        let mut fact = 1.0;
        let mut series = vec![0.0; order + 1];
        for (k, slot) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = e / fact;
        }
        self.compose_series(&series)
    }

    pub fn ln(&self) -> Result<Self, DaError> {
        let c = self.constant_part();
        if c <= 0.0 {
            return Err(DaError::Domain {
                op: "log",
                value: c,
            });
        }
        let order = self.ctx.order();
        let mut series = vec![0.0; order + 1];
        series[0] = c.ln();
        if order >= 1 {
            series[1] = 1.0 / c;
        }
        for k in 2..=order {
            series[k] = -series[k - 1] * (k as f64 - 1.0) / (k as f64 * c);
        }
        Ok(self.compose_series(&series))
    }

    /// Dispatch for the supported intrinsic set.
    pub fn intrinsic(&self, f: IntrinsicFn) -> Result<Self, DaError> {
        match f {
            IntrinsicFn::Sqrt => self.sqrt(),
            IntrinsicFn::Reciprocal => self.recip(),
            IntrinsicFn::Pow(alpha) => self.powf(alpha),
            IntrinsicFn::Sin => Ok(self.sin()),
            IntrinsicFn::Cos => Ok(self.cos()),
            IntrinsicFn::Exp => Ok(self.exp()),
            IntrinsicFn::Log => self.ln(),
        }
    }

    /// Evaluates the polynomial at the displacement `point` by direct
    /// monomial accumulation in index order.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, DaError> {
        if point.len() != self.ctx.num_vars() {
            return Err(DaError::PointLength {
                expected: self.ctx.num_vars(),
                got: point.len(),
            });
        }
        let powers = var_powers(&self.ctx, point);
        Ok(accumulate(&self.ctx, &self.coeffs, &powers))
    }

    /// Substitutes `inner[i]` for variable `i` and truncates at the order.
    /// The inner polynomials may live in a different algebra (shared among
    /// themselves); the result lives in the inner algebra.
    pub fn compose(&self, inner: &[TruncatedPoly]) -> Result<TruncatedPoly, DaError> {
        let out = compose_many(std::slice::from_ref(self), inner)?;
        Ok(out.into_iter().next().expect("one component"))
    }

    /// Gradient and symmetric Hessian over all variables, with the factorial
    /// scaling applied (diagonal second-order coefficients doubled).
    pub fn gradient(&self) -> DVector<f64> {
        let n = self.ctx.num_vars();
        DVector::from_fn(n, |i, _| self.coeffs[self.ctx.var_monomial(i)])
    }

    pub fn hessian(&self) -> Result<DMatrix<f64>, DaError> {
        if self.ctx.order() < 2 {
            return Err(DaError::OrderTooLow {
                order: self.ctx.order(),
                needed: 2,
            });
        }
        let n = self.ctx.num_vars();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let c = self.coeffs[self.ctx.pair_monomial(i, j)];
                let v = if i == j { 2.0 * c } else { c };
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    /// Splits value/gradient/Hessian into `(x, u)` blocks where the first
    /// `nx` variables form the x-block.
    pub fn extract_derivatives(&self, nx: usize) -> Result<Derivatives, DaError> {
        if nx > self.ctx.num_vars() {
            return Err(DaError::IndexOutOfRange {
                index: nx,
                num_vars: self.ctx.num_vars(),
            });
        }
        let grad = self.gradient();
        let hess = self.hessian()?;
        let nu = self.ctx.num_vars() - nx;
        Ok(Derivatives {
            value: self.constant_part(),
            grad_x: grad.rows(0, nx).into_owned(),
            grad_u: grad.rows(nx, nu).into_owned(),
            hess_xx: hess.view((0, 0), (nx, nx)).into_owned(),
            hess_xu: hess.view((0, nx), (nx, nu)).into_owned(),
            hess_uu: hess.view((nx, nx), (nu, nu)).into_owned(),
        })
    }

    /// Sum of absolute coefficient magnitudes at each total degree,
    /// `[A_0, ..., A_order]`.
    pub fn abs_sums_by_degree(&self) -> Vec<f64> {
        let order = self.ctx.order();
        let mut sums = vec![0.0; order + 1];
        for d in 0..=order {
            let r = self.ctx.degree_range(d);
            sums[d] = self.coeffs[r].iter().map(|c| c.abs()).sum();
        }
        sums
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, DaError> {
        self.check_same_algebra(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Per-variable powers `point[v]^d` for d = 0..=order.
pub(crate) fn var_powers(ctx: &DaContext, point: &[f64]) -> Vec<f64> {
    let order = ctx.order();
    let n = ctx.num_vars();
    let mut powers = vec![1.0; n * (order + 1)];
    for v in 0..n {
        for d in 1..=order {
            powers[v * (order + 1) + d] = powers[v * (order + 1) + d - 1] * point[v];
        }
    }
    powers
}

pub(crate) fn accumulate(ctx: &DaContext, coeffs: &[f64], powers: &[f64]) -> f64 {
    let order = ctx.order();
    let mut acc = 0.0;
    for (idx, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut term = c;
        for (v, &e) in ctx.monomial(idx).exponents().iter().enumerate() {
            if e > 0 {
                term *= powers[v * (order + 1) + e as usize];
            }
        }
        acc += term;
    }
    acc
}

/// Composes several polynomials over the same outer algebra with one shared
/// set of inner arguments, reusing the monomial basis across components.
pub(crate) fn compose_many(
    outer: &[impl std::borrow::Borrow<TruncatedPoly>],
    inner: &[TruncatedPoly],
) -> Result<Vec<TruncatedPoly>, DaError> {
    let first = outer
        .first()
        .ok_or_else(|| DaError::InvalidArgument("empty outer map".into()))?
        .borrow();
    let octx = first.ctx.clone();
    for p in outer {
        first.check_same_algebra(p.borrow())?;
    }
    if inner.len() != octx.num_vars() {
        return Err(DaError::Arity {
            expected: octx.num_vars(),
            got: inner.len(),
        });
    }
    let ictx = inner[0].ctx.clone();
    for p in inner.iter().skip(1) {
        inner[0].check_same_algebra(p)?;
    }
    if octx.order() != ictx.order() {
        return Err(DaError::ContextMismatch {
            lhs_vars: octx.num_vars(),
            lhs_order: octx.order(),
            rhs_vars: ictx.num_vars(),
            rhs_order: ictx.order(),
        });
    }

    // basis[m] = product of inner polynomials per the outer monomial m,
    // built incrementally degree by degree.
    let mut basis: Vec<TruncatedPoly> = Vec::with_capacity(octx.len());
    basis.push(TruncatedPoly::constant(&ictx, 1.0));
    for m in 1..octx.len() {
        let (p, v) = octx.parent_of(m);
        basis.push(basis[p].try_mul(&inner[v])?);
    }

    let mut out = Vec::with_capacity(outer.len());
    for p in outer {
        let p = p.borrow();
        let mut acc = TruncatedPoly::zeros(&ictx);
        for (m, &c) in p.coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, b) in acc.coeffs.iter_mut().zip(basis[m].coeffs.iter()) {
                    *o += c * b;
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}
