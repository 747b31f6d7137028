use thiserror::Error;

use crate::da::DaScalar;
use crate::dynamics::{NU, NX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcpError {
    #[error("invalid cost specification: {0}")]
    InvalidCost(String),

    #[error("invalid homotopy schedule: {0}")]
    InvalidSchedule(String),
}

/// Homotopy-blended stage cost and quadratic terminal cost parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    /// Homotopy weight between the energy cost (eta = 1) and the
    /// pseudo-Huber fuel cost (eta = 0).
    pub eta: f64,
    /// Pseudo-Huber width, on the same scale as `control_scale * u`.
    pub sigma: f64,
    /// Scale mapping normalized controls to the units the cost (and its
    /// sigma) are written in; the thrust unit in newtons when the cost
    /// operates on physical thrust.
    pub control_scale: f64,
    /// Quadratic terminal weights per state component (mass weight 0).
    pub terminal_weights: [f64; NX],
}

impl CostSpec {
    pub fn new(eta: f64, sigma: f64, terminal_weights: [f64; NX]) -> Result<Self, OcpError> {
        CostSpec::with_control_scale(eta, sigma, 1.0, terminal_weights)
    }

    pub fn with_control_scale(
        eta: f64,
        sigma: f64,
        control_scale: f64,
        terminal_weights: [f64; NX],
    ) -> Result<Self, OcpError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(OcpError::InvalidCost(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        if !(sigma > 0.0) {
            return Err(OcpError::InvalidCost(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        if !(control_scale > 0.0) {
            return Err(OcpError::InvalidCost(format!(
                "control_scale must be > 0, got {control_scale}"
            )));
        }
        Ok(CostSpec {
            eta,
            sigma,
            control_scale,
            terminal_weights,
        })
    }

    pub fn set_phase(&mut self, eta: f64, sigma: f64) {
        self.eta = eta;
        self.sigma = sigma;
    }
}

/// `eta * u'u/2 + (1 - eta) * sigma * (sqrt(u'u / sigma^2 + 1) - 1)` with
/// `u` measured in the cost's control units: smooth everywhere, quadratic
/// for small thrust, close to the thrust norm for large thrust.
pub fn stage_cost<S: DaScalar>(spec: &CostSpec, _x: &[S; NX], u: &[S; NU]) -> S {
    let s2 = spec.control_scale * spec.control_scale;
    let uu = u[0]
        .mul(&u[0])
        .add(&u[1].mul(&u[1]))
        .add(&u[2].mul(&u[2]))
        .scale(s2);
    let energy = uu.scale(0.5 * spec.eta);
    let huber = uu
        .scale(1.0 / (spec.sigma * spec.sigma))
        .add(&uu.lit(1.0))
        .sqrt()
        .expect("argument >= 1")
        .add(&uu.lit(-1.0))
        .scale(spec.sigma * (1.0 - spec.eta));
    energy.add(&huber)
}

/// Weighted quadratic residual against the target state.
pub fn terminal_cost<S: DaScalar>(spec: &CostSpec, x: &[S; NX], x_target: &[f64; NX]) -> S {
    let mut acc = x[0].lit(0.0);
    for i in 0..NX {
        let w = spec.terminal_weights[i];
        if w == 0.0 {
            continue;
        }
        let d = x[i].add(&x[i].lit(-x_target[i]));
        acc = acc.add(&d.mul(&d).scale(w));
    }
    acc
}

/// Ordered sequence of `(eta, sigma)` pairs morphing the energy-optimal
/// problem into the fuel-optimal one.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopySchedule {
    stages: Vec<(f64, f64)>,
}

impl HomotopySchedule {
    pub fn new(stages: Vec<(f64, f64)>) -> Result<Self, OcpError> {
        if stages.is_empty() {
            return Err(OcpError::InvalidSchedule("schedule is empty".into()));
        }
        if stages[0].0 != 1.0 {
            return Err(OcpError::InvalidSchedule(format!(
                "first pair must have eta = 1 (pure energy), got {}",
                stages[0].0
            )));
        }
        for w in stages.windows(2) {
            let ((e0, s0), (e1, s1)) = (w[0], w[1]);
            if e1 > e0 || s1 > s0 {
                return Err(OcpError::InvalidSchedule(format!(
                    "eta and sigma must be non-increasing, got ({e0}, {s0}) -> ({e1}, {s1})"
                )));
            }
        }
        for &(eta, sigma) in &stages {
            if !(0.0..=1.0).contains(&eta) || !(sigma > 0.0) {
                return Err(OcpError::InvalidSchedule(format!(
                    "invalid pair ({eta}, {sigma})"
                )));
            }
        }
        Ok(HomotopySchedule { stages })
    }

    /// The classic four-phase fuel-optimal continuation.
    pub fn fuel_optimal_default() -> Self {
        HomotopySchedule::new(vec![(1.0, 1e-2), (0.5, 1e-2), (1e-1, 2e-3), (1e-3, 1e-3)])
            .expect("valid by construction")
    }

    /// Single energy-optimal phase.
    pub fn energy_only() -> Self {
        HomotopySchedule::new(vec![(1.0, 1e-2)]).expect("valid by construction")
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn pair(&self, index: usize) -> (f64, f64) {
        self.stages[index]
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.stages
    }

    /// The pair after `current`, or `None` once the fuel-optimal phase is
    /// complete.
    pub fn advance(&self, current: usize) -> Option<(f64, f64)> {
        self.stages.get(current + 1).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(eta: f64, sigma: f64) -> CostSpec {
        CostSpec::new(eta, sigma, [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap()
    }

    const X0: [f64; NX] = [0.0; NX];

    #[test]
    fn zero_thrust_costs_nothing() {
        let s = spec(0.3, 1e-2);
        let x = X0;
        let u = [0.0, 0.0, 0.0];
        assert_eq!(stage_cost(&s, &x, &u), 0.0);
    }

    #[test]
    fn pure_huber_hand_value() {
        // eta = 0, sigma = 1, u'u = 3 -> sqrt(4) - 1 = 1.
        let s = spec(0.0, 1.0);
        let u = [3f64.sqrt(), 0.0, 0.0];
        assert_relative_eq!(stage_cost(&s, &X0, &u), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_energy_hand_value() {
        let s = spec(1.0, 1e-2);
        let u = [0.1, 0.0, 0.0];
        assert_relative_eq!(stage_cost(&s, &X0, &u), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn terminal_cost_examples() {
        let s = spec(1.0, 1e-2);
        let xt = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5];
        let x = xt;
        assert_eq!(terminal_cost(&s, &x, &xt), 0.0);
        let mut x2 = xt;
        x2[1] += 1.0;
        assert_eq!(terminal_cost(&s, &x2, &xt), 1.0);
        // Mass deviation carries no weight.
        let mut x3 = xt;
        x3[6] += 10.0;
        assert_eq!(terminal_cost(&s, &x3, &xt), 0.0);
    }

    #[test]
    fn terminal_cost_matches_independent_quadratic() {
        let s = spec(1.0, 1e-2);
        let x = [0.3, -1.2, 0.8, 0.01, -0.4, 2.2, 0.9];
        let xt = [0.1, -1.0, 0.9, 0.02, -0.3, 2.0, 0.0];
        let direct: f64 = (0..6).map(|i| (x[i] - xt[i]) * (x[i] - xt[i])).sum();
        assert_relative_eq!(terminal_cost(&s, &x, &xt), direct, epsilon = 1e-14);
    }

    #[test]
    fn homotopy_affine_in_eta() {
        let u = [0.07, -0.02, 0.01];
        let (e0, e1) = (0.9, 0.2);
        let l0 = stage_cost(&spec(e0, 2e-3), &X0, &u);
        let l1 = stage_cost(&spec(e1, 2e-3), &X0, &u);
        let le = stage_cost(&spec(1.0, 2e-3), &X0, &u);
        let lh = stage_cost(&spec(0.0, 2e-3), &X0, &u);
        assert_relative_eq!(l0 - l1, (e0 - e1) * (le - lh), epsilon = 1e-15);
    }

    #[test]
    fn pseudo_huber_asymptotics() {
        // Large thrust: within sigma of the plain norm.
        let sigma = 1e-2;
        let s = spec(0.0, sigma);
        let big = 100.0 * sigma;
        let u = [big, 0.0, 0.0];
        assert!((stage_cost(&s, &X0, &u) - big).abs() <= sigma);
        // Small thrust: quadratic with curvature 1/sigma.
        let small = sigma / 100.0;
        let u = [small, 0.0, 0.0];
        let uu = small * small;
        let quad = uu / (2.0 * sigma);
        assert!((stage_cost(&s, &X0, &u) - quad).abs() <= uu * 1e-4 / sigma);
    }

    #[test]
    fn schedule_validation_and_advance() {
        let sched =
            HomotopySchedule::new(vec![(1.0, 1e-2), (0.5, 1e-2), (0.1, 2e-3), (1e-3, 1e-3)])
                .unwrap();
        assert_eq!(sched.advance(0), Some((0.5, 1e-2)));
        assert_eq!(sched.advance(3), None);
        let single = HomotopySchedule::new(vec![(1.0, 1e-2)]).unwrap();
        assert_eq!(single.advance(0), None);

        assert!(HomotopySchedule::new(vec![(0.5, 1e-2)]).is_err());
        assert!(HomotopySchedule::new(vec![(1.0, 1e-2), (1.0, 2e-2)]).is_err());
        assert!(HomotopySchedule::new(vec![(1.0, 1e-2), (0.5, 1e-2), (0.7, 1e-3)]).is_err());
    }

    #[test]
    fn stage_cost_is_smooth_on_polynomials_at_zero_thrust() {
        use crate::da::DaContext;
        let ctx = DaContext::new(NX + NU, 2).unwrap();
        let x: [crate::da::TruncatedPoly; NX] =
            std::array::from_fn(|i| ctx.variable(i, 0.1).unwrap());
        let u: [crate::da::TruncatedPoly; NU] =
            std::array::from_fn(|j| ctx.variable(NX + j, 0.0).unwrap());
        let s = spec(0.5, 1e-3);
        let c = stage_cost(&s, &x, &u);
        assert!(c.constant_part().abs() < 1e-15);
        for (_, v) in c.iter_coefficients() {
            assert!(v.is_finite());
        }
    }
}
