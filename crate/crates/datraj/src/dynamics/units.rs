use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitsError {
    #[error("invalid normalization units: {0}")]
    Invalid(String),
}

/// Normalization units tying the dimensionless solver quantities to
/// physical ones. Velocities are normalized by `vu = lu / tu`, masses by
/// `mass_unit` (the initial wet mass), thrust by `mass_unit * lu / tu^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationUnits {
    /// Length unit [km].
    pub lu: f64,
    /// Time unit [s].
    pub tu: f64,
    /// Velocity unit [km/s].
    pub vu: f64,
    /// Gravitational parameter in model-native units: km^3/s^2 for
    /// gravitational-parameter models, the dimensionless mass ratio for the
    /// CR3BP.
    pub mu_grav: f64,
    /// Mass unit [kg].
    pub mass_unit: f64,
}

impl NormalizationUnits {
    pub fn new(
        lu: f64,
        tu: f64,
        vu: f64,
        mu_grav: f64,
        mass_unit: f64,
    ) -> Result<Self, UnitsError> {
        for (name, v) in [
            ("lu", lu),
            ("tu", tu),
            ("vu", vu),
            ("mu_grav", mu_grav),
            ("mass_unit", mass_unit),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(UnitsError::Invalid(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        let vu_expected = lu / tu;
        if ((vu - vu_expected) / vu_expected).abs() > 1e-9 {
            return Err(UnitsError::Invalid(format!(
                "vu = {vu} inconsistent with lu/tu = {vu_expected}"
            )));
        }
        Ok(NormalizationUnits {
            lu,
            tu,
            vu,
            mu_grav,
            mass_unit,
        })
    }

    /// Builds units with `vu` derived exactly as `lu / tu`, for sources
    /// that tabulate a rounded velocity unit.
    pub fn from_lu_tu(lu: f64, tu: f64, mu_grav: f64, mass_unit: f64) -> Result<Self, UnitsError> {
        NormalizationUnits::new(lu, tu, lu / tu, mu_grav, mass_unit)
    }

    /// Thrust unit [N]: mass unit times the acceleration unit.
    pub fn thrust_unit(&self) -> f64 {
        self.mass_unit * (self.lu * 1e3) / (self.tu * self.tu)
    }

    /// Gravitational parameter in normalized units (unused for the CR3BP,
    /// whose `mu_grav` is already dimensionless).
    pub fn mu_normalized(&self) -> f64 {
        self.mu_grav * self.tu * self.tu / (self.lu * self.lu * self.lu)
    }

    /// Exhaust velocity `g0 * isp` in normalized velocity units.
    pub fn exhaust_velocity_normalized(&self, g0: f64, isp: f64) -> f64 {
        g0 * isp / (self.vu * 1e3)
    }

    pub fn seconds_to_tu(&self, s: f64) -> f64 {
        s / self.tu
    }

    pub fn days_to_tu(&self, d: f64) -> f64 {
        self.seconds_to_tu(d * 86_400.0)
    }
}

/// Spacecraft data in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Spacecraft {
    /// Specific impulse [s].
    pub isp: f64,
    /// Standard gravity [m/s^2].
    pub g0: f64,
    /// Dry mass [kg].
    pub m_dry: f64,
    /// Maximum thrust magnitude [N].
    pub u_max: f64,
    /// Initial wet mass [kg].
    pub m0: f64,
}

impl Spacecraft {
    pub fn new(isp: f64, g0: f64, m_dry: f64, u_max: f64, m0: f64) -> Result<Self, UnitsError> {
        if !(isp > 0.0) {
            return Err(UnitsError::Invalid(format!("isp must be > 0, got {isp}")));
        }
        if !(g0 > 0.0) {
            return Err(UnitsError::Invalid(format!("g0 must be > 0, got {g0}")));
        }
        if !(u_max > 0.0) {
            return Err(UnitsError::Invalid(format!(
                "u_max must be > 0, got {u_max}"
            )));
        }
        if !(m_dry > 0.0) || !(m0 > m_dry) {
            return Err(UnitsError::Invalid(format!(
                "need m0 > m_dry > 0, got m0 = {m0}, m_dry = {m_dry}"
            )));
        }
        Ok(Spacecraft {
            isp,
            g0,
            m_dry,
            u_max,
            m0,
        })
    }

    pub fn u_max_normalized(&self, units: &NormalizationUnits) -> f64 {
        self.u_max / units.thrust_unit()
    }

    pub fn m_dry_normalized(&self, units: &NormalizationUnits) -> f64 {
        self.m_dry / units.mass_unit
    }

    pub fn m0_normalized(&self, units: &NormalizationUnits) -> f64 {
        self.m0 / units.mass_unit
    }
}
