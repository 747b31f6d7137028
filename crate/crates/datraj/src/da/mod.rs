//! Truncated multivariate Taylor-polynomial algebra.
//!
//! The algebra works on polynomials truncated at a fixed total degree over a
//! fixed set of perturbation variables. A [`DaContext`] describes the
//! algebra (variable count + truncation order) and precomputes the monomial
//! basis and multiplication table; [`TruncatedPoly`] holds the coefficients
//! of one scalar expansion, [`PolyMap`] a vector of them. Evaluating a
//! sufficiently smooth function on polynomial inputs yields its Taylor
//! expansion around the inputs' constant parts, from which derivatives are
//! read off the coefficients.

mod context;
mod error;
mod map;
mod poly;
mod scalar;

pub use context::{DaContext, MultiIndex};
pub use error::DaError;
pub use map::PolyMap;
pub use poly::{Derivatives, IntrinsicFn, TruncatedPoly};
pub use scalar::DaScalar;
