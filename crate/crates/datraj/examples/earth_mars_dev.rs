//! Development driver for the Sun-centered Earth-Mars transfer.

use datraj::da::DaContext;
use datraj::ddp::{aul_solve, AulSettings, DdpSettings, SolverVariant};
use datraj::dynamics::{ModelKind, ModelSpec, NormalizationUnits, Spacecraft, StageSpec, NU, NX};
use datraj::newton::{newton_polish, NewtonSettings};
use datraj::ocp::{ConstraintSet, CostSpec, HomotopySchedule, OcpProblem};

fn earth_mars_problem(order: usize) -> OcpProblem {
    let units = NormalizationUnits::new(
        149_597_870.7,
        5_022_642.891,
        29.784_691_83,
        1.327_124_400_41e11,
        1000.0,
    )
    .unwrap();
    let craft = Spacecraft::new(2000.0, 9.81, 500.0, 0.5, 1000.0).unwrap();
    let x0_km = [-140_699_693.0, -51_614_428.0, 980.0];
    let v0_kms = [9.774_596, -28.078_28, 4.337_725e-4];
    let xt_km = [-172_682_023.0, 176_959_469.0, 7_948_912.0];
    let vt_kms = [-16.427_384, -14.860_506, 9.214_86e-2];

    let mut x0 = [0.0; NX];
    let mut xt = [0.0; NX];
    for i in 0..3 {
        x0[i] = x0_km[i] / units.lu;
        x0[3 + i] = v0_kms[i] / units.vu;
        xt[i] = xt_km[i] / units.lu;
        xt[3 + i] = vt_kms[i] / units.vu;
    }
    x0[6] = craft.m0_normalized(&units);

    let tof = units.days_to_tu(348.79);
    let n_stages = 40;
    let stage = StageSpec::new(tof / n_stages as f64, 50).unwrap();
    // Thrust quantities in newtons, mass normalized.
    let constraints = ConstraintSet::transfer(
        craft.u_max,
        craft.m_dry_normalized(&units),
        &[0, 1, 2, 3, 4, 5],
    );
    let cost = CostSpec::new(1.0, 1e-2, [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
    let model = ModelSpec::new(ModelKind::TwoBodyCartesian, units, &craft).unwrap();
    let ctx = DaContext::shared(NX + NU, order).unwrap();
    OcpProblem {
        model,
        stage,
        n_stages,
        x0,
        x_target: xt,
        cost,
        constraints,
        ctx,
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let variant = args
        .get(1)
        .and_then(|s| SolverVariant::parse(s))
        .unwrap_or_else(|| SolverVariant::parse("iLQRDyn").unwrap());
    let schedule = if args.iter().any(|a| a == "--energy") {
        HomotopySchedule::energy_only()
    } else {
        HomotopySchedule::fuel_optimal_default()
    };
    let eps_aul: f64 = args
        .iter()
        .position(|a| a == "--eps-aul")
        .and_then(|i| args.get(i + 1))
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-6);
    let eps_ddp: f64 = args
        .iter()
        .position(|a| a == "--eps-ddp")
        .and_then(|i| args.get(i + 1))
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-4);

    let mut problem = earth_mars_problem(2);
    let u0 = vec![[1e-6; NU]; problem.n_stages];

    let ddp_settings = DdpSettings {
        eps_ddp,
        eps_da: eps_aul,
        ..DdpSettings::default()
    };
    let aul_settings = AulSettings {
        eps_aul,
        ..AulSettings::default()
    };

    let t0 = std::time::Instant::now();
    let sol = aul_solve(
        &mut problem,
        &u0,
        variant,
        &ddp_settings,
        &aul_settings,
        &schedule,
    )
    .unwrap();
    let aul_time = t0.elapsed().as_secs_f64();

    let m_n = sol.trajectory.states[problem.n_stages][6];
    println!(
        "AUL [{variant}]: outcome {:?}, fuel {:.4} kg, g_max {:.3e}, {} AUL iters, {} DDP iters, share {:.3}, {:.2} s",
        sol.report.outcome,
        (1.0 - m_n) * 1000.0,
        sol.report.g_max,
        sol.report.aul_iterations,
        sol.report.ddp_iterations,
        sol.report.approx_share_avg,
        aul_time
    );

    if args.iter().any(|a| a == "--trace") {
        let n = sol.report.trace.len();
        for (i, r) in sol.report.trace.iter().enumerate().skip(n.saturating_sub(25)) {
            println!(
                "  iter {i}: J = {:.9e}, g_max = {:.3e}, alpha = {:.4}, rho = {:.1e}, share = {:.2}",
                r.cost, r.g_max, r.alpha, r.rho, r.approx_share
            );
        }
        let u_max = 0.5;
        let profile: Vec<String> = sol
            .trajectory
            .controls
            .iter()
            .map(|u| {
                let m = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() / u_max;
                format!("{m:.3}")
            })
            .collect();
        println!("thrust/u_max: {}", profile.join(" "));
    }

    let newton_settings = NewtonSettings {
        tol_active: eps_aul,
        ..NewtonSettings::default()
    };
    let t1 = std::time::Instant::now();
    let polished = newton_polish(&problem, &sol.trajectory, &sol.duals, &newton_settings).unwrap();
    let newton_time = t1.elapsed().as_secs_f64();
    let m_n = polished.trajectory.states[problem.n_stages][6];
    println!("profile: {}", datraj::ocp::profiling::report());
    println!(
        "Newton: outcome {:?}, fuel {:.4} kg, d_max {:.3e}, {} iters / {} outer, {:.2} s",
        polished.report.outcome,
        (1.0 - m_n) * 1000.0,
        polished.report.d_max,
        polished.report.iterations,
        polished.report.outer_iterations,
        newton_time
    );
}
