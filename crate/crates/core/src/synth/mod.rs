//! Geometric programs for norm- and robustness-constrained parameter design.
//!
//! Every builder takes a [`ParamSystem`], a cost, and a parameter set Θ, and
//! produces a [`GpProblem`] whose first `n_θ` variables are the system
//! parameters. Auxiliary variables follow, named after their role
//! (`omega[3]`, `xi[0]`, `pi[1]`, ...).

mod builders;
mod certify;

pub use certify::{certify, Certificate, CertifyOptions, Check};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpsolve::{solve, GpProblem, SolveOptions, SolveResult, Status};
use crate::posyalg::{Posynomial, VarSpace};
use crate::sysmodel::{BlockStructure, ParamSystem};

/// `L(θ) = L̃(θ) − L0` with `L̃` a posynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub ltilde: Posynomial,
    pub l0: f64,
}

impl CostSpec {
    pub fn new(ltilde: Posynomial, l0: f64) -> Result<Self> {
        if !l0.is_finite() {
            return Err(Error::Invalid(format!(
                "cost shift must be finite, got {l0}"
            )));
        }
        Ok(Self { ltilde, l0 })
    }

    /// `L(θ)`; trailing auxiliary entries of `point` are ignored.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(self.ltilde.eval(point)? - self.l0)
    }
}

/// `Θ = {θ > 0 : f_i(θ) ≤ 1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThetaSet {
    pub constraints: Vec<Posynomial>,
}

impl ThetaSet {
    pub fn new(constraints: Vec<Posynomial>) -> Self {
        Self { constraints }
    }

    /// The whole positive orthant.
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn contains(&self, theta: &[f64]) -> Result<bool> {
        for f in &self.constraints {
            if f.eval(theta)? > 1.0 + 1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotone {
    NonDecreasing,
    NonIncreasing,
}

/// A posynomial in a few named gains, with a monotonicity tag per argument.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffFn {
    args: VarSpace,
    expr: Posynomial,
    tags: Vec<Monotone>,
}

pub const MIXED_ARGS: [&str; 2] = ["gamma2", "gammainf"];
pub const DELAY_ARGS: [&str; 3] = ["rho", "gamma1", "gammainf"];

impl TradeoffFn {
    /// Checks that every term of `expr` respects the tags. A posynomial is
    /// monotone in an argument exactly when all its exponents there share a sign.
    pub fn new(args: VarSpace, expr: Posynomial, tags: Vec<Monotone>) -> Result<Self> {
        if tags.len() != args.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} arguments but {} monotonicity tags",
                args.len(),
                tags.len()
            )));
        }
        if let Some(s) = expr.max_slot() {
            if s >= args.len() {
                return Err(Error::MissingVariable(s));
            }
        }
        for (slot, tag) in tags.iter().enumerate() {
            let bad = expr.terms().iter().any(|t| {
                let a = t.exponent(slot);
                match tag {
                    Monotone::NonDecreasing => a < 0.0,
                    Monotone::NonIncreasing => a > 0.0,
                }
            });
            if bad {
                return Err(Error::Monotonicity(args.name(slot).to_string()));
            }
        }
        Ok(Self { args, expr, tags })
    }

    /// `α(γ₂, γ∞)`, nondecreasing in both.
    pub fn mixed(expr: Posynomial) -> Result<Self> {
        Self::new(
            VarSpace::new(MIXED_ARGS)?,
            expr,
            vec![Monotone::NonDecreasing; 2],
        )
    }

    /// `β(ρ, γ₁, γ∞)`, nonincreasing in `ρ` and nondecreasing in the gains.
    pub fn delay(expr: Posynomial) -> Result<Self> {
        use Monotone::*;
        Self::new(
            VarSpace::new(DELAY_ARGS)?,
            expr,
            vec![NonIncreasing, NonDecreasing, NonDecreasing],
        )
    }

    pub fn args(&self) -> &VarSpace {
        &self.args
    }

    pub fn expr(&self) -> &Posynomial {
        &self.expr
    }

    pub fn tags(&self) -> &[Monotone] {
        &self.tags
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        self.expr.eval(values)
    }

    fn require(&self, names: &[&str], tags: &[Monotone]) -> Result<()> {
        let same_args = self
            .args
            .names()
            .iter()
            .map(String::as_str)
            .eq(names.iter().copied());
        if !same_args {
            return Err(Error::Invalid(format!(
                "trade-off arguments must be ({}), got ({})",
                names.join(", "),
                self.args.names().join(", ")
            )));
        }
        for (i, (have, want)) in self.tags.iter().zip(tags).enumerate() {
            if have != want {
                return Err(Error::Monotonicity(self.args.name(i).to_string()));
            }
        }
        Ok(())
    }
}

/// Block pattern of the uncertainty plus its norm bound `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyStructure {
    pub blocks: BlockStructure,
    pub eps: f64,
}

/// A norm level: either given, or a decision variable to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Level {
    Fixed(f64),
    Free,
}

impl Level {
    pub fn fixed(self) -> Option<f64> {
        match self {
            Level::Fixed(g) => Some(g),
            Level::Free => None,
        }
    }
}

/// Which synthesis problem to compile.
#[derive(Debug, Clone, PartialEq)]
pub enum Requirement {
    H2 {
        gamma2: Level,
    },
    Hinf {
        gammainf: Level,
    },
    Mixed {
        alpha: TradeoffFn,
        gamma: Level,
    },
    Hankel {
        gamma: Level,
    },
    Schatten {
        p: u32,
        gamma: Level,
    },
    /// Decay rate `γ ≥ 0` under structured uncertainty. A free level is maximized.
    Robust {
        uncertainty: UncertaintyStructure,
        gamma: Level,
    },
    /// Largest tolerable `ε` for a fixed decay rate.
    RobustEpsMax {
        blocks: BlockStructure,
        gamma: f64,
    },
    Delay {
        beta: TradeoffFn,
        gamma: Level,
    },
}

impl Requirement {
    pub fn name(&self) -> &'static str {
        match self {
            Requirement::H2 { .. } => "h2",
            Requirement::Hinf { .. } => "hinf",
            Requirement::Mixed { .. } => "mixed",
            Requirement::Hankel { .. } => "hankel",
            Requirement::Schatten { .. } => "schatten",
            Requirement::Robust { .. } => "robust",
            Requirement::RobustEpsMax { .. } => "robust-epsmax",
            Requirement::Delay { .. } => "delay",
        }
    }

    pub fn level(&self) -> Option<Level> {
        match self {
            Requirement::H2 { gamma2: l }
            | Requirement::Hinf { gammainf: l }
            | Requirement::Mixed { gamma: l, .. }
            | Requirement::Hankel { gamma: l }
            | Requirement::Schatten { gamma: l, .. }
            | Requirement::Robust { gamma: l, .. }
            | Requirement::Delay { gamma: l, .. } => Some(*l),
            Requirement::RobustEpsMax { .. } => None,
        }
    }

    /// Same requirement at another level. Fails for `RobustEpsMax`, whose
    /// decision variable is `ε`.
    pub fn with_level(&self, level: Level) -> Result<Self> {
        let mut r = self.clone();
        match &mut r {
            Requirement::H2 { gamma2: l }
            | Requirement::Hinf { gammainf: l }
            | Requirement::Mixed { gamma: l, .. }
            | Requirement::Hankel { gamma: l }
            | Requirement::Schatten { gamma: l, .. }
            | Requirement::Robust { gamma: l, .. }
            | Requirement::Delay { gamma: l, .. } => *l = level,
            Requirement::RobustEpsMax { .. } => {
                return Err(Error::Invalid("robust-epsmax has no norm level".into()))
            }
        }
        Ok(r)
    }

    /// Name of the GP variable that carries a free level.
    pub fn level_var(&self) -> &'static str {
        match self {
            Requirement::H2 { .. } => "gamma2",
            Requirement::Hinf { .. } => "gammainf",
            Requirement::RobustEpsMax { .. } => "eps",
            _ => "gamma",
        }
    }
}

/// A compiled problem together with the data needed to read its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Built {
    pub problem: GpProblem,
    pub requirement: Requirement,
    pub n_theta: usize,
}

impl Built {
    pub fn theta<'a>(&self, result: &'a SolveResult) -> &'a [f64] {
        &result.point[..self.n_theta.min(result.point.len())]
    }

    pub fn value(&self, result: &SolveResult, name: &str) -> Option<f64> {
        self.problem
            .vars
            .slot(name)
            .and_then(|s| result.point.get(s).copied())
    }

    /// The norm level at the solution: the fixed value, or the optimized one.
    /// For `RobustEpsMax` this is `ε⋆`.
    pub fn level(&self, result: &SolveResult) -> Option<f64> {
        match self.requirement.level() {
            Some(Level::Fixed(g)) => Some(g),
            _ => self.value(result, self.requirement.level_var()),
        }
    }
}

/// Compiles `requirement` into a GP. With `budget = Some(L̄)` the constraint
/// `L̃(θ) ≤ L̄ + L0` is added. A free level becomes the objective (minimized,
/// or maximized for robust decay); otherwise the objective is `L̃`.
pub fn build(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    requirement: &Requirement,
    budget: Option<f64>,
    opts: &SolveOptions,
) -> Result<Built> {
    builders::build(ps, cost, theta, requirement, budget, opts)
}

pub fn build_h2_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    gamma2: f64,
) -> Result<GpProblem> {
    let req = Requirement::H2 {
        gamma2: Level::Fixed(gamma2),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_hinf_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    gammainf: f64,
) -> Result<GpProblem> {
    let req = Requirement::Hinf {
        gammainf: Level::Fixed(gammainf),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_mixed_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    alpha: &TradeoffFn,
    gamma: f64,
) -> Result<GpProblem> {
    let req = Requirement::Mixed {
        alpha: alpha.clone(),
        gamma: Level::Fixed(gamma),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_hankel_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    gamma: f64,
) -> Result<GpProblem> {
    let req = Requirement::Hankel {
        gamma: Level::Fixed(gamma),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_schatten_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    p: u32,
    gamma: f64,
) -> Result<GpProblem> {
    let req = Requirement::Schatten {
        p,
        gamma: Level::Fixed(gamma),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_robust_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    uncertainty: &UncertaintyStructure,
    gamma: f64,
) -> Result<GpProblem> {
    let req = Requirement::Robust {
        uncertainty: uncertainty.clone(),
        gamma: Level::Fixed(gamma),
    };
    Ok(build(ps, cost, theta, &req, None, &SolveOptions::default())?.problem)
}

/// Maximizes `ε` (objective `1/ε`). The cost is not used.
pub fn build_robust_epsmax(
    ps: &ParamSystem,
    theta: &ThetaSet,
    blocks: &BlockStructure,
    gamma: f64,
) -> Result<GpProblem> {
    let req = Requirement::RobustEpsMax {
        blocks: blocks.clone(),
        gamma,
    };
    let cost = CostSpec::new(Posynomial::one(), 0.0)?;
    Ok(build(ps, &cost, theta, &req, None, &SolveOptions::default())?.problem)
}

pub fn build_delay_gp(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    beta: &TradeoffFn,
    gamma: f64,
    opts: &SolveOptions,
) -> Result<GpProblem> {
    let req = Requirement::Delay {
        beta: beta.clone(),
        gamma: Level::Fixed(gamma),
    };
    Ok(build(ps, cost, theta, &req, None, opts)?.problem)
}

/// A solved design.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub built: Built,
    pub result: SolveResult,
}

impl Outcome {
    pub fn status(&self) -> Status {
        self.result.status
    }

    pub fn is_optimal(&self) -> bool {
        self.result.is_optimal()
    }

    pub fn theta(&self) -> &[f64] {
        self.built.theta(&self.result)
    }

    pub fn level(&self) -> Option<f64> {
        self.built.level(&self.result)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.built.value(&self.result, name)
    }
}

/// Builds and solves in one step.
pub fn synthesize(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    requirement: &Requirement,
    budget: Option<f64>,
    opts: &SolveOptions,
) -> Result<Outcome> {
    let built = build(ps, cost, theta, requirement, budget, opts)?;
    let result = solve(&built.problem, opts)?;
    Ok(Outcome { built, result })
}

/// Optimizes the norm level under the cost budget `L̃(θ) ≤ L̄ + L0`
/// (`None` drops the budget). The optimal level is [`Outcome::level`].
pub fn minimize_gamma(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    requirement: &Requirement,
    budget: Option<f64>,
    opts: &SolveOptions,
) -> Result<Outcome> {
    let req = requirement.with_level(Level::Free)?;
    synthesize(ps, cost, theta, &req, budget, opts)
}

#[cfg(test)]
mod tests;
