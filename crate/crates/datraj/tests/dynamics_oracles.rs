//! Oracle tests for the dynamics models and the stage propagator:
//! analytic two-body invariants, CR3BP Jacobi conservation, equinoctial
//! coast behavior, and agreement of the polynomial expansions with finite
//! differences and with the true propagation inside the convergence radius.

use datraj::da::DaContext;
use datraj::dynamics::{
    expand_stage, propagate_stage, rhs, ModelKind, ModelSpec, NormalizationUnits, Spacecraft,
    StageSpec, NU, NX,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn craft() -> Spacecraft {
    Spacecraft::new(2000.0, 9.81, 500.0, 0.5, 1000.0).unwrap()
}

fn sun_model() -> ModelSpec {
    let units = NormalizationUnits::new(
        149_597_870.7,
        5_022_642.891,
        29.784_691_83,
        1.327_124_400_41e11,
        1000.0,
    )
    .unwrap();
    ModelSpec::new(ModelKind::TwoBodyCartesian, units, &craft()).unwrap()
}

fn earth_moon_model() -> ModelSpec {
    let units = NormalizationUnits::from_lu_tu(384_399.0, 375_189.0, 1.21506e-2, 1000.0).unwrap();
    ModelSpec::new(ModelKind::Cr3bp, units, &craft()).unwrap()
}

fn earth_model() -> ModelSpec {
    let units = NormalizationUnits::from_lu_tu(42_241.0, 86_400.0, 398_600.0, 1000.0).unwrap();
    ModelSpec::new(ModelKind::EquinoctialGauss, units, &craft()).unwrap()
}

/// Specific orbital energy and angular momentum magnitude (two-body).
fn two_body_invariants(model: &ModelSpec, x: &[f64; NX]) -> (f64, f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let v2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
    let energy = 0.5 * v2 - model.mu / r;
    let h = [
        x[1] * x[5] - x[2] * x[4],
        x[2] * x[3] - x[0] * x[5],
        x[0] * x[4] - x[1] * x[3],
    ];
    let h_mag = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    (energy, h_mag)
}

/// Jacobi constant in the rotating frame.
fn jacobi(model: &ModelSpec, x: &[f64; NX]) -> f64 {
    let mu = model.mu;
    let d1 = ((x[0] + mu).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt();
    let d2 = ((x[0] + mu - 1.0).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt();
    let omega = 0.5 * (x[0] * x[0] + x[1] * x[1]) + (1.0 - mu) / d1 + mu / d2;
    2.0 * omega - (x[3] * x[3] + x[4] * x[4] + x[5] * x[5])
}

const COAST: [f64; NU] = [0.0, 0.0, 0.0];

#[test]
fn circular_orbit_closes_after_one_period() {
    let model = sun_model();
    // Circular orbit of radius 1 with the model's own mu: v = sqrt(mu).
    let v = model.mu.sqrt();
    let x0 = [1.0, 0.0, 0.0, 0.0, v, 0.0, 1.0];
    let period = 2.0 * std::f64::consts::PI / (model.mu / 1.0f64).sqrt();
    let stage = StageSpec::new(period, 4000).unwrap();
    let x1 = propagate_stage(&model, &stage, &x0, &COAST).unwrap();
    for i in 0..6 {
        assert!(
            (x1[i] - x0[i]).abs() < 1e-8,
            "component {i}: {} vs {}",
            x1[i],
            x0[i]
        );
    }
}

#[test]
fn propagation_composes_over_split_stages() {
    let model = sun_model();
    let x0 = [1.0, 0.1, -0.05, 0.02, 0.95, 0.01, 0.9];
    let u = [0.01, -0.02, 0.005];
    let whole = propagate_stage(&model, &StageSpec::new(0.3, 40).unwrap(), &x0, &u).unwrap();
    let half = StageSpec::new(0.15, 20).unwrap();
    let mid = propagate_stage(&model, &half, &x0, &u).unwrap();
    let split = propagate_stage(&model, &half, &mid, &u).unwrap();
    for i in 0..NX {
        assert!(
            (whole[i] - split[i]).abs() < 1e-10,
            "component {i}: {} vs {}",
            whole[i],
            split[i]
        );
    }
}

#[test]
fn two_body_coast_conserves_energy_and_momentum() {
    let model = sun_model();
    // One Earth-Mars-like stage: about 0.15 time units.
    let stage = StageSpec::new(0.15, 50).unwrap();
    let x0 = [1.0019, -0.345, 0.0, 0.328, 0.9432, 0.0001, 1.0];
    let x1 = propagate_stage(&model, &stage, &x0, &COAST).unwrap();
    let (e0, h0) = two_body_invariants(&model, &x0);
    let (e1, h1) = two_body_invariants(&model, &x1);
    assert!(((e1 - e0) / e0).abs() < 1e-9, "energy drift {}", (e1 - e0) / e0);
    assert!(((h1 - h0) / h0).abs() < 1e-9, "momentum drift {}", (h1 - h0) / h0);
}

#[test]
fn cr3bp_coast_conserves_jacobi_constant() {
    let model = earth_moon_model();
    // Near the L2 halo departure point of the transfer scenarios.
    let x0 = [1.16080, 0.0, -0.12270, 0.0, -0.20768, 0.0, 1.0];
    let stage = StageSpec::new(0.05, 100).unwrap();
    let x1 = propagate_stage(&model, &stage, &x0, &COAST).unwrap();
    let c0 = jacobi(&model, &x0);
    let c1 = jacobi(&model, &x1);
    assert!((c1 - c0).abs() < 1e-9, "Jacobi drift {}", c1 - c0);
}

#[test]
fn equinoctial_coast_holds_shape_elements() {
    let model = earth_model();
    let x0 = [0.25, 0.02, -0.01, 0.05, 0.03, 1.2, 0.95];
    let stage = StageSpec::new(0.4, 20).unwrap();
    let x1 = propagate_stage(&model, &stage, &x0, &COAST).unwrap();
    for i in 0..5 {
        assert!(
            (x1[i] - x0[i]).abs() <= 1e-12,
            "element {i} drifted by {}",
            x1[i] - x0[i]
        );
    }
    assert!(x1[5] > x0[5], "longitude must advance");
}

#[test]
fn mass_never_increases() {
    let model = sun_model();
    let stage = StageSpec::new(0.05, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = [1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 1.0];
    for _ in 0..20 {
        let u = [
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
        ];
        let x1 = propagate_stage(&model, &stage, &x, &u).unwrap();
        assert!(x1[6] <= x[6]);
        x = x1;
    }
}

#[test]
fn expansion_constant_part_is_bit_identical_to_propagation() {
    let ctx = DaContext::new(NX + NU, 2).unwrap();
    for model in [sun_model(), earth_moon_model(), earth_model()] {
        let (x0, stage) = match model.kind {
            ModelKind::Cr3bp => (
                [1.1608, 0.0, -0.1227, 0.0, -0.20768, 0.0, 1.0],
                StageSpec::new(0.05, 20).unwrap(),
            ),
            ModelKind::EquinoctialGauss => (
                [0.25, 0.02, -0.01, 0.05, 0.03, 1.2, 0.95],
                StageSpec::new(0.2, 20).unwrap(),
            ),
            ModelKind::TwoBodyCartesian => (
                [1.0019, -0.345, 0.0, 0.328, 0.9432, 0.0001, 1.0],
                StageSpec::new(0.15, 20).unwrap(),
            ),
        };
        let u = [0.01, -0.015, 0.002];
        let truth = propagate_stage(&model, &stage, &x0, &u).unwrap();
        let map = expand_stage(&model, &stage, &x0, &u, &ctx).unwrap();
        for i in 0..NX {
            assert_eq!(
                map.component(i).constant_part(),
                truth[i],
                "component {i}, model {:?}",
                model.kind
            );
        }
    }
}

/// First-order blocks of the stage expansion against central differences
/// of the propagation, and first/second derivatives of the raw dynamics
/// against central differences, at random states for all three models.
#[test]
fn expansion_jacobians_match_finite_differences() {
    let ctx = DaContext::new(NX + NU, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for model in [sun_model(), earth_moon_model(), earth_model()] {
        let stage = StageSpec::new(0.05, 10).unwrap();
        for _ in 0..4 {
            let x0: [f64; NX] = match model.kind {
                ModelKind::EquinoctialGauss => [
                    rng.gen_range(0.2..0.4),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(0.0..6.0),
                    rng.gen_range(0.7..1.0),
                ],
                _ => [
                    rng.gen_range(0.9..1.2),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(0.8..1.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(0.7..1.0),
                ],
            };
            let u = [
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            ];
            let map = expand_stage(&model, &stage, &x0, &u, &ctx).unwrap();
            let jx = map.jacobian_block(0..NX);
            let ju = map.jacobian_block(NX..NX + NU);
            let h = 1e-6;
            let mut scale = 1.0f64;
            for r in 0..NX {
                for c in 0..NX {
                    scale = scale.max(jx[(r, c)].abs());
                }
            }
            for c in 0..NX + NU {
                let mut xp = x0;
                let mut xm = x0;
                let mut up = u;
                let mut um = u;
                if c < NX {
                    xp[c] += h;
                    xm[c] -= h;
                } else {
                    up[c - NX] += h;
                    um[c - NX] -= h;
                }
                let fp = propagate_stage(&model, &stage, &xp, &up).unwrap();
                let fm = propagate_stage(&model, &stage, &xm, &um).unwrap();
                for r in 0..NX {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    let ad = if c < NX { jx[(r, c)] } else { ju[(r, c - NX)] };
                    assert!(
                        (ad - fd).abs() <= 1e-6 * scale.max(fd.abs()),
                        "model {:?} d f[{r}] / d v[{c}]: {ad} vs {fd}",
                        model.kind
                    );
                }
            }
        }
    }
}

#[test]
fn expansion_tracks_truth_inside_convergence_radius() {
    let ctx = DaContext::new(NX + NU, 2).unwrap();
    let model = sun_model();
    let stage = StageSpec::new(0.15, 50).unwrap();
    // Earth departure state of the Sun-centered transfer scenarios.
    let x0 = [-0.94052, -0.34501, 6.5e-6, 0.32817, -0.94261, 1.4564e-5, 1.0];
    let u = [1e-3, -2e-3, 5e-4];
    let map = expand_stage(&model, &stage, &x0, &u, &ctx).unwrap();
    let eps = 1e-6;
    let radius = map.convergence_radius(eps).unwrap();
    assert!(radius.is_finite() && radius > 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        // Random displacement with norm <= radius.
        let mut d = [0.0; NX + NU];
        let mut norm2 = 0.0f64;
        for v in d.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
            norm2 += *v * *v;
        }
        let scale = rng.gen_range(0.1..1.0) * radius / norm2.sqrt();
        for v in d.iter_mut() {
            *v *= scale;
        }
        let approx = map.evaluate(&d).unwrap();
        let mut xp = x0;
        let mut up = u;
        for i in 0..NX {
            xp[i] += d[i];
        }
        for j in 0..NU {
            up[j] += d[NX + j];
        }
        let truth = propagate_stage(&model, &stage, &xp, &up).unwrap();
        let mut err2 = 0.0;
        for i in 0..NX {
            err2 += (approx[i] - truth[i]).powi(2);
        }
        assert!(
            err2.sqrt() <= 2.0 * eps,
            "error {} beyond 2 eps inside radius {radius}",
            err2.sqrt()
        );
    }

    // Half-radius displacement stays within eps itself.
    let d = [radius * 0.5 / (NX as f64 + NU as f64).sqrt(); NX + NU];
    let approx = map.evaluate(&d).unwrap();
    let mut xp = x0;
    let mut up = u;
    for i in 0..NX {
        xp[i] += d[i];
    }
    for j in 0..NU {
        up[j] += d[NX + j];
    }
    let truth = propagate_stage(&model, &stage, &xp, &up).unwrap();
    let err: f64 = (0..NX)
        .map(|i| (approx[i] - truth[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(err <= eps, "half-radius error {err} above eps");
}

#[test]
fn rhs_hessians_match_finite_differences() {
    // Spot-check the second-order coefficients of the raw dynamics on the
    // CR3BP, whose gravity terms carry strong curvature.
    let ctx = DaContext::new(NX + NU, 2).unwrap();
    let model = earth_moon_model();
    let x0 = [0.85, 0.05, 0.1, 0.02, 0.2, -0.05, 0.9];
    let u0 = [0.01, 0.02, -0.01];
    let xp: [datraj::da::TruncatedPoly; NX] =
        std::array::from_fn(|i| ctx.variable(i, x0[i]).unwrap());
    let up: [datraj::da::TruncatedPoly; NU] =
        std::array::from_fn(|j| ctx.variable(NX + j, u0[j]).unwrap());
    let dx = rhs(&model, &xp, &up).unwrap();

    let h = 1e-5;
    for comp in 3..6 {
        let hess = dx[comp].hessian().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mut xpp = x0;
                let mut xpm = x0;
                let mut xmp = x0;
                let mut xmm = x0;
                xpp[a] += h;
                xpp[b] += h;
                xpm[a] += h;
                xpm[b] -= h;
                xmp[a] -= h;
                xmp[b] += h;
                xmm[a] -= h;
                xmm[b] -= h;
                let f = |x: &[f64; NX]| rhs(&model, x, &u0).unwrap()[comp];
                let fd = (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h);
                assert!(
                    (hess[(a, b)] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                    "hess[{a},{b}] of component {comp}: {} vs {fd}",
                    hess[(a, b)]
                );
            }
        }
    }
}
