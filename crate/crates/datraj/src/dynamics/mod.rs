//! Continuous dynamics models and the stage propagator.
//!
//! Three models share the 7-state / 3-control layout `[r, v, m]` (Cartesian
//! two-body and CR3BP) or `[a, p, q, r, s, L, m]` (equinoctial Gauss
//! equations): gravity plus thrust acceleration, and mass flow
//! `dm/dt = -|u| / (g0 Isp)`. Everything works in normalized units and is
//! generic over plain floats and truncated polynomials, so expanding a stage
//! runs the exact same arithmetic as propagating it.

mod models;
mod units;

pub use models::{expand_stage, propagate_stage, rhs, DynamicsError, ModelKind, ModelSpec,
    StageSpec, NX, NU, THRUST_EPS};
pub use units::{NormalizationUnits, Spacecraft};
