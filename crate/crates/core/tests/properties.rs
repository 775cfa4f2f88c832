//! Randomized invariants of the algebra, the norm oracles and the solver.

mod common;

use common::{random_metzler, random_stable_system, rng};
use nalgebra::{DMatrix, DVector};
use posgp::gpsolve::{check_feasibility, solve, GpProblem, Sense, SolveOptions, Status};
use posgp::posyalg::{Monomial, Posynomial, VarSpace};
use posgp::sysmodel::linalg::{perron_vectors, sigma_max};
use posgp::sysmodel::{
    gramians_kronecker, gramians_lyapunov, h2_norm_routes, hankel_singular_values, hinf_norm,
    hinf_sweep, schatten, spectral_abscissa,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_posy(rng: &mut ChaCha8Rng, nvars: usize) -> Posynomial {
    let terms = (0..rng.random_range(1..=5))
        .map(|_| {
            let mut exps = Vec::new();
            for s in 0..nvars {
                if rng.random::<f64>() < 0.7 {
                    exps.push((s, rng.random_range(-2.0..2.0)));
                }
            }
            Monomial::new(rng.random_range(0.1..10.0), exps).unwrap()
        })
        .collect();
    Posynomial::new(terms).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..5.0)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// A feasible, bounded GP: the objective holds every `x_i + 1/x_i`, and each
/// constraint is scaled to 1/2 at `x = 1`.
fn random_gp(rng: &mut ChaCha8Rng) -> GpProblem {
    let n = rng.random_range(1..=4);
    let vars = VarSpace::new((0..n).map(|i| format!("x{i}"))).unwrap();
    let mut obj = random_posy(rng, n);
    for i in 0..n {
        obj = &obj + &Posynomial::new(vec![Monomial::var(i), Monomial::var_pow(i, -1.0)]).unwrap();
    }
    let mut p = GpProblem::new(vars, obj);
    for k in 0..rng.random_range(0..=3) {
        let c = random_posy(rng, n);
        let at1 = c.eval(&vec![1.0; n]).unwrap();
        let sense = if rng.random::<bool>() {
            Sense::Strict
        } else {
            Sense::NonStrict
        };
        p.push(format!("c{k}"), c.scale(0.5 / at1).unwrap(), sense);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_log_convexity(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let f = random_posy(&mut r, 3);
        let x = random_point(&mut r, 3);
        let y = random_point(&mut r, 3);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.powf(1.0 - t) * b.powf(t)).collect();
        let lhs = f.eval(&mid).unwrap();
        let rhs = f.eval(&x).unwrap().powf(1.0 - t) * f.eval(&y).unwrap().powf(t);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn log_domain_hessian_is_psd(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_posy(&mut r, 4);
        let z: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
        let h = f.log_eval(&z).unwrap().hessian;
        let min = h.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-9, "{min}");
    }

    #[test]
    fn eval_is_a_ring_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_posy(&mut r, 3);
        let g = random_posy(&mut r, 3);
        let p = random_point(&mut r, 3);
        let (fp, gp) = (f.eval(&p).unwrap(), g.eval(&p).unwrap());
        prop_assert!(rel((&f * &g).eval(&p).unwrap(), fp * gp) < 1e-12);
        prop_assert!(rel((&f + &g).eval(&p).unwrap(), fp + gp) < 1e-12);
    }

    #[test]
    fn monomials_are_closed(seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut r = rng(seed);
        let m = random_posy(&mut r, 3).terms()[0].clone();
        let n = random_posy(&mut r, 3).terms()[0].clone();
        let p = random_point(&mut r, 3);
        prop_assert!(rel(m.mul(&n).eval(&p).unwrap(), m.eval(&p).unwrap() * n.eval(&p).unwrap()) < 1e-12);
        prop_assert!(rel(m.powf(a).eval(&p).unwrap(), m.eval(&p).unwrap().powf(a)) < 1e-10);
    }

    #[test]
    fn lemma_perron_frobenius(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let m = random_metzler(&mut r, n);
        let lam = spectral_abscissa(&m).unwrap();
        // above the abscissa the resolvent gives a positive certificate
        let gamma = lam + r.random_range(0.01..2.0);
        let res = (DMatrix::identity(n, n) * gamma - &m).try_inverse().unwrap();
        let v = res * DVector::from_element(n, 1.0);
        prop_assert!(v.iter().all(|&x| x > 0.0));
        let gap = &m * &v - &v * gamma;
        prop_assert!(gap.iter().all(|&x| x < 0.0), "{gap}");
        // below it the left Perron vector refutes every positive candidate
        let below = lam - r.random_range(0.01..2.0);
        let (_, _, l) = perron_vectors(&m).unwrap();
        for _ in 0..50 {
            let v = DVector::from_fn(n, |_, _| r.random_range(0.01..10.0));
            let gap = &m * &v - &v * below;
            prop_assert!(gap.iter().any(|&x| x >= 0.0));
            prop_assert!(l.dot(&gap) > 0.0);
        }
    }

    #[test]
    fn lemma_gain_pair(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (r.random_range(1..=4), r.random_range(1..=4));
        let m = DMatrix::from_fn(p, q, |_, _| if r.random::<f64>() < 0.6 { r.random_range(0.0..2.0) } else { 0.0 });
        let norm = sigma_max(&m);
        let gamma = norm * r.random_range(0.5..1.5) + 1e-3;
        // singular pair of a strictly positive perturbation of m whose norm stays on the same side of γ
        let eta = 1e-3 * (gamma - norm).abs() / (p * q) as f64;
        let mp = m.map(|x| x + eta);
        let svd = mp.clone().svd(true, true);
        let u = svd.v_t.unwrap().row(0).transpose().map(f64::abs);
        let v = svd.u.unwrap().column(0).map(f64::abs);
        let pair_ok = (&m * &u - &v * gamma).iter().all(|&x| x < 0.0)
            && (m.transpose() * &v - &u * gamma).iter().all(|&x| x < 0.0);
        prop_assert_eq!(pair_ok, norm < gamma, "norm {} gamma {}", norm, gamma);
    }

    #[test]
    fn lemma_gramian_vector(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let s = random_stable_system(&mut r, n, 1, 1);
        let g = s.g.column(0).into_owned();
        let finv = s.f.clone().try_inverse().unwrap();
        let base = -(&s.h * &finv * &g)[0];
        let v = base + r.random_range(1e-3..1.0);
        let lift = -(&s.h * &finv * DVector::from_element(n, 1.0))[0];
        let slack = 0.5 * (v - base) / lift.max(1e-12);
        let omega = -&finv * (&g + DVector::from_element(n, slack));
        prop_assert!((&s.h * &omega)[0] < v);
        prop_assert!((&s.f * &omega + &g).iter().all(|&x| x < 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gramian_routes_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let s = {
            let (nw, ny) = (r.random_range(1..=3), r.random_range(1..=3));
            random_stable_system(&mut r, n, nw, ny)
        };
        let a = gramians_lyapunov(&s).unwrap();
        let b = gramians_kronecker(&s).unwrap();
        let scale = a.wc.amax().max(a.wo.amax()).max(1.0);
        prop_assert!((&a.wc - &b.wc).amax() <= 1e-8 * scale);
        prop_assert!((&a.wo - &b.wo).amax() <= 1e-8 * scale);
        let (h1, h2) = h2_norm_routes(&s).unwrap();
        prop_assert!(rel(h1, h2) <= 1e-8, "{h1} {h2}");
    }

    #[test]
    fn hinf_is_the_static_gain(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let mut s = {
            let (nw, ny) = (r.random_range(1..=3), r.random_range(1..=3));
            random_stable_system(&mut r, n, nw, ny)
        };
        // keep the poles off the lowest grid frequency so its gain is the DC value
        for i in 0..n {
            s.f[(i, i)] -= 1.0;
        }
        let omegas: Vec<f64> = (0..201).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 200.0)).collect();
        let sweep = hinf_sweep(&s, &omegas).unwrap();
        let h = hinf_norm(&s).unwrap();
        prop_assert!(rel(sweep, h) <= 1e-6, "{sweep} {h}");
        prop_assert!(sweep <= h * (1.0 + 1e-12));
    }

    #[test]
    fn schatten_is_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let s = {
            let (nw, ny) = (r.random_range(1..=3), r.random_range(1..=3));
            random_stable_system(&mut r, n, nw, ny)
        };
        let sv = hankel_singular_values(&s).unwrap();
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        let direct = sv.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(rel(schatten(&sv, 2), direct) <= 1e-10);
        prop_assert!(schatten(&sv, 4) <= schatten(&sv, 2) * (1.0 + 1e-12));
        prop_assert!(schatten(&sv, 6) <= schatten(&sv, 4) * (1.0 + 1e-12));
    }

    #[test]
    fn log_gradient_matches_central_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_posy(&mut r, 3);
        let z: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let e = f.log_eval(&z).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let (ep, em) = (f.log_eval(&zp).unwrap(), f.log_eval(&zm).unwrap());
            let fd = (ep.value - em.value) / (2.0 * h);
            prop_assert!((fd - e.gradient[i]).abs() <= 1e-6 * e.gradient[i].abs().max(1.0));
            for j in 0..3 {
                let fd = (ep.gradient[j] - em.gradient[j]) / (2.0 * h);
                prop_assert!((fd - e.hessian[(i, j)]).abs() <= 1e-6 * e.hessian[(i, j)].abs().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn solver_is_deterministic_and_self_certifying(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_gp(&mut r);
        let opts = SolveOptions::default();
        let a = solve(&p, &opts).unwrap();
        let b = solve(&p, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.status, Status::Optimal);
        let fr = check_feasibility(&p, &a.point, opts.strict_margin / 2.0).unwrap();
        prop_assert!(fr.strictly_feasible, "{:?}", fr);
        for w in a.objective_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn argmin_ignores_objective_scale(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let p = random_gp(&mut r);
        let mut q = p.clone();
        q.objective = q.objective.scale(c).unwrap();
        let opts = SolveOptions::default();
        let a = solve(&p, &opts).unwrap();
        let b = solve(&q, &opts).unwrap();
        prop_assert_eq!(b.status, Status::Optimal);
        for (x, y) in a.point.iter().zip(&b.point) {
            prop_assert!((x.ln() - y.ln()).abs() <= 1e-4, "{:?} vs {:?}", a.point, b.point);
        }
        prop_assert!(rel(b.objective_value, c * a.objective_value) <= 1e-6);
    }
}
