use std::sync::Arc;

use thiserror::Error;

use crate::da::{DaContext, DaError, DaScalar, PolyMap, TruncatedPoly};

use super::units::{NormalizationUnits, Spacecraft, UnitsError};

/// State dimension (position/velocity/mass or equinoctial elements + mass).
pub const NX: usize = 7;
/// Control dimension.
pub const NU: usize = 3;

/// Smoothing of the thrust norm in the mass-flow term: `|u|` is evaluated as
/// `sqrt(u'u + THRUST_EPS^2)` so the dynamics stay differentiable at zero
/// thrust. Six orders of magnitude below the constraint tolerances.
pub const THRUST_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("singular dynamics: {quantity} = {value}{}", substep.map(|s| format!(" (substep {s})")).unwrap_or_default())]
    Singular {
        quantity: &'static str,
        value: f64,
        substep: Option<usize>,
    },

    #[error(transparent)]
    Units(#[from] UnitsError),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid stage: {0}")]
    InvalidStage(String),

    #[error(transparent)]
    Da(#[from] DaError),
}

impl DynamicsError {
    fn with_substep(mut self, step: usize) -> Self {
        if let DynamicsError::Singular { substep, .. } = &mut self {
            *substep = Some(step);
        }
        self
    }
}

/// Which force model the state vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Inertial two-body motion with mass: `[r, v, m]`.
    TwoBodyCartesian,
    /// Circular restricted three-body problem in the rotating frame.
    Cr3bp,
    /// Gauss variational equations in equinoctial elements
    /// `[a, p, q, r, s, L, m]` with RTN thrust.
    EquinoctialGauss,
}

/// A dynamics model with states in normalized units and controls carried
/// in newtons (thrust quantities -- bounds, tolerances, smoothing widths --
/// are quoted in newtons throughout the toolkit).
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub units: NormalizationUnits,
    /// Gravitational parameter in normalized units; the mass ratio for the
    /// CR3BP.
    pub mu: f64,
    /// Exhaust velocity `g0 * isp` in normalized units.
    pub exhaust_velocity: f64,
    /// Normalized force per newton: thrust controls convert through this
    /// factor wherever they enter the equations of motion.
    pub force_scale: f64,
}

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        units: NormalizationUnits,
        craft: &Spacecraft,
    ) -> Result<Self, DynamicsError> {
        let mu = match kind {
            ModelKind::Cr3bp => units.mu_grav,
            _ => units.mu_normalized(),
        };
        if let ModelKind::Cr3bp = kind {
            if !(mu > 0.0 && mu < 0.5) {
                return Err(DynamicsError::InvalidModel(format!(
                    "CR3BP mass ratio must lie in (0, 0.5), got {mu}"
                )));
            }
        }
        let exhaust_velocity = units.exhaust_velocity_normalized(craft.g0, craft.isp);
        let force_scale = 1.0 / units.thrust_unit();
        Ok(ModelSpec {
            kind,
            units,
            mu,
            exhaust_velocity,
            force_scale,
        })
    }
}

/// Fixed-duration stage with a fixed-step integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSpec {
    /// Stage duration in normalized time units.
    pub dt: f64,
    /// Classical RK4 steps per stage.
    pub substeps: usize,
}

impl StageSpec {
    pub fn new(dt: f64, substeps: usize) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) {
            return Err(DynamicsError::InvalidStage(format!(
                "stage duration must be > 0, got {dt}"
            )));
        }
        if substeps == 0 {
            return Err(DynamicsError::InvalidStage(
                "substeps must be at least 1".into(),
            ));
        }
        Ok(StageSpec { dt, substeps })
    }
}

/// Smoothed thrust magnitude `sqrt(u'u + eps^2)` [N].
fn thrust_norm<S: DaScalar>(u: &[S; NU]) -> Result<S, DaError> {
    let uu = u[0]
        .mul(&u[0])
        .add(&u[1].mul(&u[1]))
        .add(&u[2].mul(&u[2]));
    uu.add(&uu.lit(THRUST_EPS * THRUST_EPS)).sqrt()
}

/// Thrust-only pieces of the derivative. Constant over a zero-order-hold
/// stage, so the propagator computes them once per stage.
#[derive(Debug, Clone)]
struct ControlTerms<S> {
    /// Thrust in normalized force units.
    force: [S; NU],
    /// Mass flow in normalized units.
    mdot: S,
}

fn control_terms<S: DaScalar>(
    model: &ModelSpec,
    u: &[S; NU],
) -> Result<ControlTerms<S>, DynamicsError> {
    let force = std::array::from_fn(|j| u[j].scale(model.force_scale));
    let mdot = thrust_norm(u)?.scale(-model.force_scale / model.exhaust_velocity);
    Ok(ControlTerms { force, mdot })
}

/// Time derivative of the state under the given model: states in
/// normalized units, thrust controls in newtons.
pub fn rhs<S: DaScalar>(
    model: &ModelSpec,
    x: &[S; NX],
    u: &[S; NU],
) -> Result<[S; NX], DynamicsError> {
    let terms = control_terms(model, u)?;
    rhs_with_terms(model, x, &terms)
}

fn rhs_with_terms<S: DaScalar>(
    model: &ModelSpec,
    x: &[S; NX],
    terms: &ControlTerms<S>,
) -> Result<[S; NX], DynamicsError> {
    let u = &terms.force;
    let mdot = terms.mdot.clone();
    let m_const = x[6].constant_part();
    if !(m_const > 0.0) {
        return Err(DynamicsError::Singular {
            quantity: "mass",
            value: m_const,
            substep: None,
        });
    }
    let m_inv = x[6].recip()?;

    match model.kind {
        ModelKind::TwoBodyCartesian => {
            let r2 = x[0]
                .mul(&x[0])
                .add(&x[1].mul(&x[1]))
                .add(&x[2].mul(&x[2]));
            if !(r2.constant_part() > 0.0) {
                return Err(DynamicsError::Singular {
                    quantity: "radius",
                    value: r2.constant_part(),
                    substep: None,
                });
            }
            let inv_r3 = r2.powf(-1.5)?;
            let grav = inv_r3.scale(-model.mu);
            let acc = |i: usize| x[i].mul(&grav).add(&u[i].mul(&m_inv));
            Ok([
                x[3].clone(),
                x[4].clone(),
                x[5].clone(),
                acc(0),
                acc(1),
                acc(2),
                mdot,
            ])
        }
        ModelKind::Cr3bp => {
            let mu = model.mu;
            let xp = x[0].add(&x[0].lit(mu));
            let xm = x[0].add(&x[0].lit(mu - 1.0));
            let y2z2 = x[1].mul(&x[1]).add(&x[2].mul(&x[2]));
            let d1sq = xp.mul(&xp).add(&y2z2);
            let d2sq = xm.mul(&xm).add(&y2z2);
            if !(d1sq.constant_part() > 0.0) {
                return Err(DynamicsError::Singular {
                    quantity: "distance to primary",
                    value: d1sq.constant_part(),
                    substep: None,
                });
            }
            if !(d2sq.constant_part() > 0.0) {
                return Err(DynamicsError::Singular {
                    quantity: "distance to secondary",
                    value: d2sq.constant_part(),
                    substep: None,
                });
            }
            let c1 = d1sq.powf(-1.5)?.scale(1.0 - mu);
            let c2 = d2sq.powf(-1.5)?.scale(mu);
            // Effective-potential gradient.
            let ox = x[0].sub(&xp.mul(&c1)).sub(&xm.mul(&c2));
            let oy = x[1].sub(&x[1].mul(&c1)).sub(&x[1].mul(&c2));
            let oz = x[2].mul(&c1).add(&x[2].mul(&c2)).neg();
            Ok([
                x[3].clone(),
                x[4].clone(),
                x[5].clone(),
                x[4].scale(2.0).add(&ox).add(&u[0].mul(&m_inv)),
                x[3].scale(-2.0).add(&oy).add(&u[1].mul(&m_inv)),
                oz.add(&u[2].mul(&m_inv)),
                mdot,
            ])
        }
        ModelKind::EquinoctialGauss => {
            let (a, p, q, r, s, ll) = (&x[0], &x[1], &x[2], &x[3], &x[4], &x[5]);
            let a_const = a.constant_part();
            if !(a_const > 0.0) {
                return Err(DynamicsError::Singular {
                    quantity: "semi-major axis",
                    value: a_const,
                    substep: None,
                });
            }
            let b_sq = p
                .mul(p)
                .add(&q.mul(q))
                .neg()
                .add(&p.lit(1.0));
            if b_sq.constant_part() <= 1e-10 {
                return Err(DynamicsError::Singular {
                    quantity: "1 - p^2 - q^2",
                    value: b_sq.constant_part(),
                    substep: None,
                });
            }
            let b = b_sq.sqrt()?;
            let b_inv = b.recip()?;
            let sin_l = ll.sin();
            let cos_l = ll.cos();
            let psi = p
                .mul(&sin_l)
                .add(&q.mul(&cos_l))
                .add(&p.lit(1.0));
            if psi.constant_part().abs() <= 1e-10 {
                return Err(DynamicsError::Singular {
                    quantity: "1 + p sin L + q cos L",
                    value: psi.constant_part(),
                    substep: None,
                });
            }
            let psi_inv = psi.recip()?;

            let s_am = a.scale(1.0 / model.mu).sqrt()?; // sqrt(a / mu)
            let s_a3m = a.mul(&s_am); // sqrt(a^3 / mu)
            let s_ma3 = s_a3m.recip()?; // sqrt(mu / a^3), the mean motion

            let ur = u[0].mul(&m_inv);
            let ut = u[1].mul(&m_inv);
            let un = u[2].mul(&m_inv);

            // (q sin L - p cos L) uR + Psi uT, scaled by 2 sqrt(a^3/mu) / B
            let adot = q
                .mul(&sin_l)
                .sub(&p.mul(&cos_l))
                .mul(&ur)
                .add(&psi.mul(&ut))
                .mul(&s_a3m)
                .mul(&b_inv)
                .scale(2.0);

            let rc_ss = r.mul(&cos_l).sub(&s.mul(&sin_l));
            let bsam = b.mul(&s_am);

            let pdot = cos_l
                .mul(&ur)
                .neg()
                .add(
                    &p.add(&sin_l)
                        .mul(&psi_inv)
                        .add(&sin_l)
                        .mul(&ut),
                )
                .sub(&q.mul(&rc_ss).mul(&psi_inv).mul(&un))
                .mul(&bsam);

            let qdot = sin_l
                .mul(&ur)
                .add(
                    &q.add(&cos_l)
                        .mul(&psi_inv)
                        .add(&cos_l)
                        .mul(&ut),
                )
                .add(&p.mul(&rc_ss).mul(&psi_inv).mul(&un))
                .mul(&bsam);

            let one_r2s2 = r.mul(r).add(&s.mul(s)).add(&r.lit(1.0));
            let nfac = bsam.mul(&one_r2s2).mul(&psi_inv).mul(&un).scale(0.5);
            let rdot = nfac.mul(&sin_l);
            let sdot = nfac.mul(&cos_l);

            let ldot = s_ma3
                .mul(&psi)
                .mul(&psi)
                .mul(&b_inv)
                .mul(&b_inv)
                .mul(&b_inv)
                .sub(&bsam.mul(&psi_inv).mul(&rc_ss).mul(&un));

            Ok([adot, pdot, qdot, rdot, sdot, ldot, mdot])
        }
    }
}

fn rk4_step<S: DaScalar>(
    model: &ModelSpec,
    x: &[S; NX],
    u: &ControlTerms<S>,
    h: f64,
) -> Result<[S; NX], DynamicsError> {
    let k1 = rhs_with_terms(model, x, u)?;
    let x2 = std::array::from_fn(|i| x[i].add_scaled(&k1[i], 0.5 * h));
    let k2 = rhs_with_terms(model, &x2, u)?;
    let x3 = std::array::from_fn(|i| x[i].add_scaled(&k2[i], 0.5 * h));
    let k3 = rhs_with_terms(model, &x3, u)?;
    let x4 = std::array::from_fn(|i| x[i].add_scaled(&k3[i], h));
    let k4 = rhs_with_terms(model, &x4, u)?;
    Ok(std::array::from_fn(|i| {
        x[i].add_scaled4(
            &k1[i],
            h / 6.0,
            &k2[i],
            h / 3.0,
            &k3[i],
            h / 3.0,
            &k4[i],
            h / 6.0,
        )
    }))
}

/// Propagates one stage under zero-order-hold control with fixed-step
/// classical RK4. The identical code path serves floats and polynomials, so
/// stage expansions are expansions of the same numerical map.
pub fn propagate_stage<S: DaScalar>(
    model: &ModelSpec,
    stage: &StageSpec,
    x: &[S; NX],
    u: &[S; NU],
) -> Result<[S; NX], DynamicsError> {
    let h = stage.dt / stage.substeps as f64;
    let terms = control_terms(model, u)?;
    let mut state = x.clone();
    for step in 0..stage.substeps {
        state = rk4_step(model, &state, &terms, h).map_err(|e| e.with_substep(step))?;
    }
    Ok(state)
}

/// Expands one stage map around `(x, u)`: a 7-component polynomial in the
/// `N_x + N_u` perturbation variables whose constant part equals the
/// propagated state bit for bit.
pub fn expand_stage(
    model: &ModelSpec,
    stage: &StageSpec,
    x: &[f64; NX],
    u: &[f64; NU],
    ctx: &Arc<DaContext>,
) -> Result<PolyMap, DynamicsError> {
    if ctx.num_vars() != NX + NU {
        return Err(DynamicsError::Da(DaError::Arity {
            expected: NX + NU,
            got: ctx.num_vars(),
        }));
    }
    let xp: [TruncatedPoly; NX] = std::array::from_fn(|i| {
        ctx.variable(i, x[i]).expect("index in range")
    });
    let up: [TruncatedPoly; NU] = std::array::from_fn(|j| {
        ctx.variable(NX + j, u[j]).expect("index in range")
    });
    let out = propagate_stage(model, stage, &xp, &up)?;
    Ok(PolyMap::new(out.to_vec())?)
}
