use super::*;
use crate::gpsolve::{solve, SolveOptions, Status};
use crate::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use crate::sysmodel::BlockStructure;

/// `ẋ = −θx + w`, `y = x`, cost `θ`.
fn scalar() -> (ParamSystem, CostSpec) {
    let ps = ParamSystem::new(
        VarSpace::new(["theta"]).unwrap(),
        PosyMatrix::zeros(1, 1),
        DiagMonoMatrix::new(vec![Monomial::var(0)]),
        PosyMatrix::identity(1),
        PosyMatrix::identity(1),
    )
    .unwrap();
    (ps, CostSpec::new(Posynomial::var(0), 0.0).unwrap())
}

fn run(req: Requirement) -> Outcome {
    let (ps, cost) = scalar();
    let out = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req,
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(out.status(), Status::Optimal, "{}", req.name());
    out
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn h2_scalar() {
    let out = run(Requirement::H2 {
        gamma2: Level::Fixed(0.5),
    });
    let t = out.theta()[0];
    assert!(close(t, 2.0 / (1.0f64 - 1e-4).powi(2), 1e-5), "{t}");
    let (ps, _) = scalar();
    assert!(certify(&ps, &out, &CertifyOptions::default())
        .unwrap()
        .passed());
}

#[test]
fn h2_structure() {
    let (ps, cost) = scalar();
    let gp = build_h2_gp(&ps, &cost, &ThetaSet::unconstrained(), 0.5).unwrap();
    assert_eq!(gp.vars.names(), ["theta", "omega[0]"]);
    assert_eq!(gp.constraints.len(), 2);
}

#[test]
fn hinf_scalar_and_structure() {
    let out = run(Requirement::Hinf {
        gammainf: Level::Fixed(0.5),
    });
    assert!(
        close(out.theta()[0], 2.0 / (1.0f64 - 1e-4).powi(2), 1e-5),
        "{}",
        out.theta()[0]
    );
    let (ps, cost) = scalar();
    let gp = build_hinf_gp(&ps, &cost, &ThetaSet::unconstrained(), 0.5).unwrap();
    assert_eq!(gp.constraints.len(), 4);
    assert_eq!(gp.vars.len(), 5);
    assert!(certify(&ps, &out, &CertifyOptions::default())
        .unwrap()
        .passed());
}

#[test]
fn hankel_and_schatten_agree() {
    let h = run(Requirement::Hankel {
        gamma: Level::Fixed(0.25),
    });
    let s = run(Requirement::Schatten {
        p: 2,
        gamma: Level::Fixed(0.25),
    });
    let (th, ts) = (h.theta()[0], s.theta()[0]);
    assert!(close(th, 2.0 / (1.0f64 - 1e-4).powf(1.5), 1e-5), "{th}");
    assert!(close(ts, 2.0 / (1.0f64 - 1e-4).powi(2), 1e-5), "{ts}");
    assert!(close(th, ts, 1e-4));
    let (ps, cost) = scalar();
    let gp = build_hankel_gp(&ps, &cost, &ThetaSet::unconstrained(), 0.25).unwrap();
    assert_eq!(gp.constraints.len(), 3);
    assert!(certify(&ps, &h, &CertifyOptions::default())
        .unwrap()
        .passed());
    assert!(certify(&ps, &s, &CertifyOptions::default())
        .unwrap()
        .passed());
}

#[test]
fn schatten_rejects_odd_order() {
    let (ps, cost) = scalar();
    assert!(build_schatten_gp(&ps, &cost, &ThetaSet::unconstrained(), 3, 1.0).is_err());
}

#[test]
fn schatten_variable_count() {
    let vs = VarSpace::new(["a", "b"]).unwrap();
    let mut at = PosyMatrix::zeros(2, 2);
    at.set(0, 1, Some(Posynomial::var(0)));
    let ps = ParamSystem::new(
        vs,
        at,
        DiagMonoMatrix::new(vec![Monomial::var(1), Monomial::var(1)]),
        PosyMatrix::identity(2),
        PosyMatrix::identity(2),
    )
    .unwrap();
    let cost = CostSpec::new(Posynomial::var(1), 0.0).unwrap();
    let gp = build_schatten_gp(&ps, &cost, &ThetaSet::unconstrained(), 2, 1.0).unwrap();
    let (nx, nw, ny) = (2, 2, 2);
    assert_eq!(gp.vars.len(), 2 + 2 + 2 * (nx * nx * nw + nx * nx * ny));
}

#[test]
fn mixed_reduces_to_hinf() {
    let (ps, _) = scalar();
    let alpha = TradeoffFn::mixed(Posynomial::var(1)).unwrap();
    let m = run(Requirement::Mixed {
        alpha,
        gamma: Level::Fixed(0.5),
    });
    let h = run(Requirement::Hinf {
        gammainf: Level::Fixed(0.5),
    });
    assert!(
        close(m.theta()[0], h.theta()[0], 1e-4),
        "{} {}",
        m.theta()[0],
        h.theta()[0]
    );
    assert!(certify(&ps, &m, &CertifyOptions::default())
        .unwrap()
        .passed());
}

#[test]
fn mixed_sum_is_certified() {
    let (ps, _) = scalar();
    let alpha = TradeoffFn::mixed(&Posynomial::var(0) + &Posynomial::var(1)).unwrap();
    let out = run(Requirement::Mixed {
        alpha,
        gamma: Level::Fixed(3.0),
    });
    let cert = certify(&ps, &out, &CertifyOptions::default()).unwrap();
    assert!(cert.passed(), "{cert:?}");
}

#[test]
fn tradeoff_tags() {
    let bad = Posynomial::new(vec![Monomial::var_pow(0, -1.0)]).unwrap();
    assert_eq!(
        TradeoffFn::mixed(bad.clone()).unwrap_err(),
        Error::Monotonicity("gamma2".into())
    );
    assert!(TradeoffFn::delay(bad).is_ok());
    assert!(TradeoffFn::delay(Posynomial::var(0)).is_err());
}

#[test]
fn robust_scalar() {
    let (ps, cost) = scalar();
    let u = UncertaintyStructure {
        blocks: BlockStructure::scalars(1),
        eps: 0.3,
    };
    let out = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &Requirement::Robust {
            uncertainty: u,
            gamma: Level::Fixed(0.1),
        },
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(out.is_optimal());
    assert!(close(out.theta()[0], 0.4, 1e-3), "{}", out.theta()[0]);
    assert!(certify(
        &ps,
        &out,
        &CertifyOptions {
            samples: 100,
            seed: 0
        }
    )
    .unwrap()
    .passed());
}

#[test]
fn robust_epsmax_scalar() {
    let (ps, _) = scalar();
    let theta = ThetaSet::new(vec![Posynomial::var(0)]);
    let gp = build_robust_epsmax(&ps, &theta, &BlockStructure::scalars(1), 0.1).unwrap();
    let r = solve(&gp, &SolveOptions::default()).unwrap();
    assert!(r.is_optimal());
    let eps = r.value(&gp.vars, "eps").unwrap();
    assert!(close(eps, 0.9, 1e-3), "{eps}");

    let gp = build_robust_epsmax(&ps, &theta, &BlockStructure::scalars(1), 1.5).unwrap();
    assert_eq!(
        solve(&gp, &SolveOptions::default()).unwrap().status,
        Status::Infeasible
    );
}

#[test]
fn robust_free_level_maximizes_decay() {
    let (ps, cost) = scalar();
    let theta = ThetaSet::new(vec![Posynomial::var(0)]);
    let u = UncertaintyStructure {
        blocks: BlockStructure::scalars(1),
        eps: 0.3,
    };
    let req = Requirement::Robust {
        uncertainty: u,
        gamma: Level::Fixed(0.1),
    };
    let out = minimize_gamma(&ps, &cost, &theta, &req, None, &SolveOptions::default()).unwrap();
    assert!(close(out.level().unwrap(), 0.7, 1e-3), "{:?}", out.level());
}

fn delay_scalar() -> (ParamSystem, CostSpec) {
    let (ps, cost) = scalar();
    let ad = PosyMatrix::from_numeric(&nalgebra::DMatrix::from_element(1, 1, 0.5)).unwrap();
    (
        ps.with_delay(ad, PosyMatrix::zeros(1, 1), 1.0).unwrap(),
        cost,
    )
}

#[test]
fn delay_scalar_decay() {
    let (ps, cost) = delay_scalar();
    let beta =
        TradeoffFn::delay(Posynomial::new(vec![Monomial::var_pow(0, -1.0)]).unwrap()).unwrap();
    let req = Requirement::Delay {
        beta,
        gamma: Level::Fixed(10.0),
    };
    let out = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req,
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(out.is_optimal());
    let rho = out.value("rho").unwrap();
    assert!(rho >= 0.1);
    let expect = 0.1 + 0.5 * 0.1f64.exp();
    assert!(
        close(out.theta()[0], expect, 2e-3),
        "{} vs {expect}",
        out.theta()[0]
    );
    let cert = certify(&ps, &out, &CertifyOptions::default()).unwrap();
    assert!(cert.passed(), "{cert:?}");
}

#[test]
fn delay_requires_delay_block() {
    let (ps, cost) = scalar();
    let beta =
        TradeoffFn::delay(Posynomial::new(vec![Monomial::var_pow(0, -1.0)]).unwrap()).unwrap();
    let err = build_delay_gp(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &beta,
        10.0,
        &SolveOptions::default(),
    );
    assert_eq!(err.unwrap_err(), Error::MissingDelay);
}

#[test]
fn missing_factorization() {
    let vs = VarSpace::new(["a", "b"]).unwrap();
    let ps = ParamSystem::new(
        vs,
        PosyMatrix::zeros(2, 2),
        DiagMonoMatrix::new(vec![Monomial::var(0), Monomial::var(1)]),
        PosyMatrix::identity(2),
        PosyMatrix::identity(2),
    )
    .unwrap();
    let cost = CostSpec::new(&Posynomial::var(0) + &Posynomial::var(1), 0.0).unwrap();
    let err = build_h2_gp(&ps, &cost, &ThetaSet::unconstrained(), 1.0).unwrap_err();
    assert_eq!(err, Error::MissingFactorization);
    assert!(build_hinf_gp(&ps, &cost, &ThetaSet::unconstrained(), 1.0).is_ok());
}

#[test]
fn min_gamma_with_budget() {
    let (ps, cost) = scalar();
    let req = Requirement::Hinf {
        gammainf: Level::Fixed(1.0),
    };
    let out = minimize_gamma(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req,
        Some(2.0),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(out.is_optimal());
    let g = out.level().unwrap();
    assert!(close(g, 0.5, 1e-3), "{g}");
    let above = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req.with_level(Level::Fixed(1.01 * g)).unwrap(),
        Some(2.0),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(above.is_optimal());
    let below = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req.with_level(Level::Fixed(0.99 * g)).unwrap(),
        Some(2.0),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(below.status(), Status::Infeasible);
}
