use super::error::DaError;
use super::poly::TruncatedPoly;

/// The arithmetic needed by the dynamics and cost functions, implemented by
/// both plain floats and truncated polynomials so a single code path yields
/// values and expansions through identical operation sequences.
pub trait DaScalar: Clone + std::fmt::Debug {
    /// Constant part of the value (the value itself for floats).
    fn constant_part(&self) -> f64;

    /// A constant in the same algebra as `self`.
    fn lit(&self, value: f64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn scale(&self, k: f64) -> Self;
    /// `self + k * rhs`.
    fn add_scaled(&self, rhs: &Self, k: f64) -> Self;

    /// `self + a*ka + b*kb + c*kc + d*kd`, the Runge-Kutta combination.
    /// Must apply the same per-element operation order as chained
    /// `add_scaled` calls so float and polynomial paths stay bit-identical.
    fn add_scaled4(&self, a: &Self, ka: f64, b: &Self, kb: f64, c: &Self, kc: f64, d: &Self, kd: f64) -> Self {
        self.add_scaled(a, ka)
            .add_scaled(b, kb)
            .add_scaled(c, kc)
            .add_scaled(d, kd)
    }

    fn sqrt(&self) -> Result<Self, DaError>;
    fn recip(&self) -> Result<Self, DaError>;
    fn powf(&self, alpha: f64) -> Result<Self, DaError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
}

impl DaScalar for f64 {
    fn constant_part(&self) -> f64 {
        *self
    }

    fn lit(&self, value: f64) -> Self {
        value
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn scale(&self, k: f64) -> Self {
        self * k
    }

    fn add_scaled(&self, rhs: &Self, k: f64) -> Self {
        self + k * rhs
    }

    fn sqrt(&self) -> Result<Self, DaError> {
        if *self <= 0.0 {
            return Err(DaError::Domain {
                op: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }

    fn recip(&self) -> Result<Self, DaError> {
        if *self == 0.0 {
            return Err(DaError::Domain {
                op: "reciprocal",
                value: *self,
            });
        }
        Ok(1.0 / self)
    }

    fn powf(&self, alpha: f64) -> Result<Self, DaError> {
        if *self <= 0.0 {
            return Err(DaError::Domain {
                op: "pow",
                value: *self,
            });
        }
        Ok(f64::powf(*self, alpha))
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }
}

impl DaScalar for TruncatedPoly {
    fn constant_part(&self) -> f64 {
        TruncatedPoly::constant_part(self)
    }

    fn lit(&self, value: f64) -> Self {
        TruncatedPoly::constant(self.context(), value)
    }

    fn add(&self, rhs: &Self) -> Self {
        self.try_add(rhs).expect("same context")
    }

    fn sub(&self, rhs: &Self) -> Self {
        self.try_sub(rhs).expect("same context")
    }

    fn neg(&self) -> Self {
        self.negate()
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.try_mul(rhs).expect("same context")
    }

    fn scale(&self, k: f64) -> Self {
        TruncatedPoly::scale(self, k)
    }

    fn add_scaled(&self, rhs: &Self, k: f64) -> Self {
        TruncatedPoly::add_scaled(self, rhs, k).expect("same context")
    }

    fn add_scaled4(
        &self,
        a: &Self,
        ka: f64,
        b: &Self,
        kb: f64,
        c: &Self,
        kc: f64,
        d: &Self,
        kd: f64,
    ) -> Self {
        TruncatedPoly::add_scaled4(self, (a, ka), (b, kb), (c, kc), (d, kd))
    }

    fn sqrt(&self) -> Result<Self, DaError> {
        TruncatedPoly::sqrt(self)
    }

    fn recip(&self) -> Result<Self, DaError> {
        TruncatedPoly::recip(self)
    }

    fn powf(&self, alpha: f64) -> Result<Self, DaError> {
        TruncatedPoly::powf(self, alpha)
    }

    fn sin(&self) -> Self {
        TruncatedPoly::sin(self)
    }

    fn cos(&self) -> Self {
        TruncatedPoly::cos(self)
    }
}
