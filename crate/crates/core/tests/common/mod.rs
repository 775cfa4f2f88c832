//! Seeded random instances shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use posgp::gpsolve::SolveOptions;
use posgp::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use posgp::synth::{CostSpec, Level, Requirement, ThetaSet, TradeoffFn, UncertaintyStructure};
use posgp::sysmodel::{
    delay_decay_rate, delay_gains, h2_norm, hankel_singular_values, hinf_norm, schatten,
    BlockStructure, NumericSystem, ParamSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    H2,
    Hinf,
    Mixed,
    Hankel,
    Schatten(u32),
    Robust,
    EpsMax,
    Delay,
}

pub const ALL_KINDS: [Kind; 8] = [
    Kind::H2,
    Kind::Hinf,
    Kind::Mixed,
    Kind::Hankel,
    Kind::Schatten(4),
    Kind::Robust,
    Kind::EpsMax,
    Kind::Delay,
];

pub struct Instance {
    pub ps: ParamSystem,
    pub cost: CostSpec,
    pub theta: ThetaSet,
    pub req: Requirement,
}

/// Reference parameter point `(k, a)` at which every instance is stable.
pub const THETA0: [f64; 2] = [10.0, 1.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64, hi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < density {
            rng.random_range(0.05..hi)
        } else {
            0.0
        }
    });
    // every column and row carries some weight so no channel is disconnected
    for j in 0..cols {
        if m.column(j).sum() == 0.0 {
            let i = rng.random_range(0..rows);
            m[(i, j)] = rng.random_range(0.05..hi);
        }
    }
    for i in 0..rows {
        if m.row(i).sum() == 0.0 {
            let j = rng.random_range(0..cols);
            m[(i, j)] = rng.random_range(0.05..hi);
        }
    }
    m
}

/// `Ã(k, a)` has entries `c_ij` or `c_ij·a`, `R = k·diag(R0)`, numeric `B`,
/// `C`; cost `k + 1/a`; `Θ = {k ≤ 50, 1/2 ≤ a ≤ 2}`.
pub fn random_system(
    rng: &mut ChaCha8Rng,
    nx: usize,
    nw: usize,
    ny: usize,
    with_delay: bool,
) -> ParamSystem {
    let vars = VarSpace::new(["k", "a"]).unwrap();
    let mut at = PosyMatrix::zeros(nx, nx);
    for i in 0..nx {
        for j in 0..nx {
            if rng.random::<f64>() < 0.5 {
                let c = rng.random_range(0.05..1.0);
                let m = if rng.random::<bool>() {
                    Monomial::new(c, [(1, 1.0)]).unwrap()
                } else {
                    Monomial::constant(c).unwrap()
                };
                at.set(i, j, Some(m.into()));
            }
        }
    }
    let r = DiagMonoMatrix::new(
        (0..nx)
            .map(|_| Monomial::new(rng.random_range(1.0..2.0), [(0, 1.0)]).unwrap())
            .collect(),
    );
    let b = PosyMatrix::from_numeric(&sparse(rng, nx, nw, 0.6, 1.0)).unwrap();
    let c = PosyMatrix::from_numeric(&sparse(rng, ny, nx, 0.6, 1.0)).unwrap();
    let ps = ParamSystem::new(vars, at, r, b, c).unwrap();
    if with_delay {
        let ad = PosyMatrix::from_numeric(&sparse(rng, nx, nx, 0.4, 0.5)).unwrap();
        let cd = PosyMatrix::zeros(ny, nx);
        let h = rng.random_range(0.2..1.0);
        ps.with_delay(ad, cd, h).unwrap()
    } else {
        ps
    }
}

pub fn cost() -> CostSpec {
    let p = Posynomial::new(vec![Monomial::var(0), Monomial::var_pow(1, -1.0)]).unwrap();
    CostSpec::new(p, 0.0).unwrap()
}

pub fn theta_set() -> ThetaSet {
    ThetaSet::new(vec![
        Monomial::new(1.0 / 50.0, [(0, 1.0)]).unwrap().into(),
        Monomial::new(0.5, [(1, 1.0)]).unwrap().into(),
        Monomial::new(0.5, [(1, -1.0)]).unwrap().into(),
    ])
}

/// The system with `F + γI`, used to size robust bounds.
fn shifted(s: &NumericSystem, gamma: f64) -> NumericSystem {
    let n = s.nx();
    NumericSystem::new(
        &s.f + DMatrix::identity(n, n) * gamma,
        s.g.clone(),
        s.h.clone(),
    )
    .unwrap()
}

pub fn mixed_alpha() -> TradeoffFn {
    TradeoffFn::mixed(&Posynomial::var(0) + &Posynomial::var(1)).unwrap()
}

pub fn delay_beta() -> TradeoffFn {
    TradeoffFn::delay(
        Posynomial::new(vec![
            Monomial::var_pow(0, -1.0),
            Monomial::new(0.1, [(1, 1.0)]).unwrap(),
            Monomial::new(0.1, [(2, 1.0)]).unwrap(),
        ])
        .unwrap(),
    )
    .unwrap()
}

/// A random instance that is feasible at `THETA0` with room to spare.
pub fn random_instance(kind: Kind, seed: u64) -> Instance {
    let mut rng = rng(seed ^ 0x5eed_0000);
    let nx = rng.random_range(1..=4);
    let (nw, ny) = match kind {
        Kind::Robust | Kind::EpsMax => {
            let m = rng.random_range(1..=nx.min(3));
            (m, m)
        }
        _ => (rng.random_range(1..=3), rng.random_range(1..=3)),
    };
    let ps = random_system(&mut rng, nx, nw, ny, kind == Kind::Delay);
    let s0 = ps.instantiate(&THETA0).unwrap();
    let mut blocks = || {
        if nw > 1 && rng.random::<bool>() {
            BlockStructure::new(vec![nw - 1], 1).unwrap()
        } else if rng.random::<bool>() {
            BlockStructure::full(nw)
        } else {
            BlockStructure::scalars(nw)
        }
    };
    let req = match kind {
        Kind::H2 => Requirement::H2 {
            gamma2: Level::Fixed(1.5 * h2_norm(&s0).unwrap()),
        },
        Kind::Hinf => Requirement::Hinf {
            gammainf: Level::Fixed(1.5 * hinf_norm(&s0).unwrap()),
        },
        Kind::Mixed => {
            let g = h2_norm(&s0).unwrap() + hinf_norm(&s0).unwrap();
            Requirement::Mixed {
                alpha: mixed_alpha(),
                gamma: Level::Fixed(1.5 * g),
            }
        }
        Kind::Hankel => Requirement::Hankel {
            gamma: Level::Fixed(1.5 * hankel_singular_values(&s0).unwrap()[0]),
        },
        Kind::Schatten(p) => {
            let g = schatten(&hankel_singular_values(&s0).unwrap(), p);
            Requirement::Schatten {
                p,
                gamma: Level::Fixed(1.5 * g),
            }
        }
        Kind::Robust => {
            let gamma = 0.5;
            let eps = 0.5 / hinf_norm(&shifted(&s0, gamma)).unwrap();
            Requirement::Robust {
                uncertainty: UncertaintyStructure {
                    blocks: blocks(),
                    eps,
                },
                gamma: Level::Fixed(gamma),
            }
        }
        Kind::EpsMax => Requirement::RobustEpsMax {
            blocks: blocks(),
            gamma: 0.5,
        },
        Kind::Delay => {
            let h = ps.delay.as_ref().unwrap().h;
            let rho = delay_decay_rate(&s0).unwrap().min(3.0 / h) * 0.5;
            let g = delay_gains(&s0).unwrap();
            let beta = delay_beta();
            let level = 1.5 * beta.eval(&[rho, g.l1, g.linf]).unwrap();
            Requirement::Delay {
                beta,
                gamma: Level::Fixed(level),
            }
        }
    };
    Instance {
        ps,
        cost: cost(),
        theta: theta_set(),
        req,
    }
}

pub fn opts() -> SolveOptions {
    SolveOptions::default()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

/// Random Metzler matrix.
pub fn random_metzler(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -rng.random_range(0.0..3.0)
        } else if rng.random::<f64>() < 0.6 {
            rng.random_range(0.0..1.0)
        } else {
            0.0
        }
    })
}

/// Random Hurwitz Metzler `F`, nonnegative `G`, `H`.
pub fn random_stable_system(
    rng: &mut ChaCha8Rng,
    nx: usize,
    nw: usize,
    ny: usize,
) -> NumericSystem {
    let mut f = random_metzler(rng, nx);
    let a = posgp::sysmodel::spectral_abscissa(&f).unwrap();
    let shift = a + rng.random_range(0.1..2.0);
    for i in 0..nx {
        f[(i, i)] -= shift;
    }
    let g = sparse(rng, nx, nw, 0.6, 1.0);
    let h = sparse(rng, ny, nx, 0.6, 1.0);
    NumericSystem::new(f, g, h).unwrap()
}
