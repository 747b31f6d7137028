//! Property tests for the polynomial algebra.

use datraj::da::{DaContext, DaScalar, TruncatedPoly};
use proptest::prelude::*;

fn random_poly(ctx: &std::sync::Arc<DaContext>, coeffs: &[f64]) -> TruncatedPoly {
    let mut p = TruncatedPoly::zeros(ctx);
    let mut acc = ctx.constant(coeffs[0]);
    // Build from variable arithmetic so every monomial is reachable.
    let mut idx = 1;
    for v in 0..ctx.num_vars() {
        let var = ctx.variable(v, 0.0).unwrap();
        acc = acc
            .try_add(&var.scale(coeffs[idx % coeffs.len()]))
            .unwrap();
        idx += 1;
        for w in v..ctx.num_vars() {
            let other = ctx.variable(w, 0.0).unwrap();
            let prod = var.try_mul(&other).unwrap();
            acc = acc
                .try_add(&prod.scale(coeffs[idx % coeffs.len()]))
                .unwrap();
            idx += 1;
        }
    }
    p = p.try_add(&acc).unwrap();
    p
}

fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 24..32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // (p + q) * r = p * r + q * r coefficient-wise.
    #[test]
    fn ring_distributivity(a in coeff_vec(), b in coeff_vec(), c in coeff_vec(),
                           nv in 1usize..5, order in 2usize..5) {
        let ctx = DaContext::new(nv, order).unwrap();
        let p = random_poly(&ctx, &a);
        let q = random_poly(&ctx, &b);
        let r = random_poly(&ctx, &c);
        let lhs = p.try_add(&q).unwrap().try_mul(&r).unwrap();
        let rhs = p.try_mul(&r).unwrap().try_add(&q.try_mul(&r).unwrap()).unwrap();
        let scale = lhs.iter_coefficients().map(|(_, v)| v.abs()).fold(1.0, f64::max);
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-13 * scale);
    }

    // Multiplying at order n equals multiplying at order n+1 then dropping
    // the overflow degree.
    #[test]
    fn truncation_consistency(a in coeff_vec(), b in coeff_vec(),
                              nv in 1usize..4, order in 2usize..4) {
        let low = DaContext::new(nv, order).unwrap();
        let high = DaContext::new(nv, order + 1).unwrap();
        let p_low = random_poly(&low, &a);
        let q_low = random_poly(&low, &b);
        let p_high = random_poly(&high, &a);
        let q_high = random_poly(&high, &b);
        let prod_low = p_low.try_mul(&q_low).unwrap();
        let prod_high = p_high.try_mul(&q_high).unwrap();
        for (mi, v) in prod_low.iter_coefficients() {
            let vh = prod_high.coefficient(&datraj::da::MultiIndex::new(mi.exponents())).unwrap();
            prop_assert!((v - vh).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    // evaluate(compose(P, Q), d) = evaluate(P, evaluate(Q, d)) within the
    // truncation-order residual.
    #[test]
    fn composition_evaluation_commutes(a in coeff_vec(), b in coeff_vec(), c in coeff_vec(),
                                       seed in 0u64..1000) {
        let ctx = DaContext::new(2, 3).unwrap();
        let outer = random_poly(&ctx, &a);
        let q0 = random_poly(&ctx, &b);
        let q1 = random_poly(&ctx, &c);
        let composed = outer.compose(&[q0.clone(), q1.clone()]).unwrap();
        let t = (seed as f64 / 1000.0) * 2.0 - 1.0;
        // Displacement of norm <= 1e-3.
        let d = [7e-4 * t, 7e-4 * (1.0 - t.abs())];
        let direct = composed.evaluate(&d).unwrap();
        // The outer polynomial is exact (degree <= order), so only the
        // truncation of the composition contributes to the residual.
        let inner_vals = [q0.evaluate(&d).unwrap(), q1.evaluate(&d).unwrap()];
        let via = outer.evaluate(&inner_vals).unwrap();
        prop_assert!((direct - via).abs() <= 1e-9);
    }
}

/// A randomized smooth scalar function with one generic code path, so the
/// finite-difference oracle runs the same arithmetic on floats.
#[derive(Clone)]
struct SmoothFn {
    w: Vec<f64>,
    c: f64,
    mode: u8,
}

impl SmoothFn {
    fn eval<S: DaScalar>(&self, v: &[S]) -> S {
        let mut lin = v[0].lit(self.c);
        for (i, x) in v.iter().enumerate() {
            lin = lin.add(&x.scale(self.w[i % self.w.len()]));
        }
        let mut quad = v[0].lit(1.0);
        for x in v.iter() {
            quad = quad.add(&x.mul(x));
        }
        match self.mode % 4 {
            0 => lin.sin().mul(&quad.sqrt().unwrap()),
            1 => quad.recip().unwrap().add(&lin.cos()),
            2 => quad.powf(-1.5).unwrap().mul(&lin),
            _ => lin.sin().mul(&lin.cos()).add(&quad.sqrt().unwrap().recip().unwrap()),
        }
    }
}

/// Central finite differences of the scalar path.
fn fd_gradient(f: &SmoothFn, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
    }
    g
}

fn fd_hessian(f: &SmoothFn, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    let f0 = f.eval(x);
    for i in 0..n {
        for j in i..n {
            let mut xpp = x.to_vec();
            let mut xpm = x.to_vec();
            let mut xmp = x.to_vec();
            let mut xmm = x.to_vec();
            if i == j {
                xpp[i] += h;
                xmm[i] -= h;
                hess[i][i] = (f.eval(&xpp) - 2.0 * f0 + f.eval(&xmm)) / (h * h);
            } else {
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                let v = (f.eval(&xpp) - f.eval(&xpm) - f.eval(&xmp) + f.eval(&xmm))
                    / (4.0 * h * h);
                hess[i][j] = v;
                hess[j][i] = v;
            }
        }
    }
    hess
}

#[test]
fn derivative_extraction_matches_central_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let nv = 4;
    let ctx = DaContext::new(nv, 2).unwrap();
    for trial in 0..20 {
        let f = SmoothFn {
            w: (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            c: rng.gen_range(0.5..2.0),
            mode: trial as u8,
        };
        let x: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.3..1.0)).collect();
        let vars: Vec<TruncatedPoly> = (0..nv).map(|i| ctx.variable(i, x[i]).unwrap()).collect();
        let p = f.eval(&vars);

        let grad = p.gradient();
        let hess = p.hessian().unwrap();
        let h = 1e-5;
        let g_fd = fd_gradient(&f, &x, h);
        let h_fd = fd_hessian(&f, &x, h);
        let gscale = g_fd.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..nv {
            assert!(
                (grad[i] - g_fd[i]).abs() <= 1e-6 * gscale,
                "trial {trial}: grad[{i}] {} vs fd {}",
                grad[i],
                g_fd[i]
            );
        }
        let hscale = h_fd
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(1.0, f64::max);
        for i in 0..nv {
            for j in 0..nv {
                assert!(
                    (hess[(i, j)] - h_fd[i][j]).abs() <= 1e-5 * hscale,
                    "trial {trial}: hess[{i},{j}] {} vs fd {}",
                    hess[(i, j)],
                    h_fd[i][j]
                );
            }
        }
    }
}
