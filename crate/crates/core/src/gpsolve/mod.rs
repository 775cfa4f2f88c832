//! Standard-form geometric programs and a log-barrier interior-point solver.

mod barrier;

pub use barrier::solve;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posyalg::{LogEval, Monomial, Posynomial, VarSpace};

/// How a `≤ 1` constraint is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sense {
    /// `f ≤ 1`.
    NonStrict,
    /// `f < 1`, relaxed to `f ≤ 1 − ε_s` by [`normalize`].
    Strict,
    /// A strict constraint that has already been divided by `1 − margin`.
    Tightened { margin: f64 },
}

impl Sense {
    fn is_strict(self) -> bool {
        !matches!(self, Sense::NonStrict)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub posy: Posynomial,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub label: String,
    pub mono: Monomial,
}

/// `mult · (exp(h · arg) − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub arg: Monomial,
    pub h: f64,
    pub mult: Posynomial,
}

impl ExpTerm {
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let x = self.h * self.arg.eval(point)?;
        Ok(x.exp_m1() * self.mult.eval(point)?)
    }

    /// Truncated series `Σ_{ℓ=1}^{k} (h·arg)^ℓ/ℓ! · mult`.
    pub fn series(&self, order: usize) -> Result<Posynomial> {
        let mut terms = Vec::with_capacity(order);
        let mut fact = 1.0;
        for l in 1..=order {
            fact *= l as f64;
            let m = self
                .arg
                .powf(l as f64)
                .scale(self.h.powi(l as i32) / fact)?;
            terms.push(m);
        }
        Ok(Posynomial::new(terms)?.mul(&self.mult))
    }
}

/// `base + Σ terms ≤ 1`, where the terms involve an exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpConstraint {
    pub label: String,
    pub base: Option<Posynomial>,
    pub terms: Vec<ExpTerm>,
    pub sense: Sense,
}

impl ExpConstraint {
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let mut v = match &self.base {
            Some(b) => b.eval(point)?,
            None => 0.0,
        };
        for t in &self.terms {
            v += t.eval(point)?;
        }
        Ok(v)
    }
}

/// minimize `objective` s.t. `posy ≤ 1`, `mono = 1`, exp constraints `≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    pub vars: VarSpace,
    pub objective: Posynomial,
    pub constraints: Vec<Constraint>,
    pub equalities: Vec<Equality>,
    pub exp_constraints: Vec<ExpConstraint>,
}

impl GpProblem {
    pub fn new(vars: VarSpace, objective: Posynomial) -> Self {
        Self {
            vars,
            objective,
            constraints: Vec::new(),
            equalities: Vec::new(),
            exp_constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, posy: Posynomial, sense: Sense) {
        self.constraints.push(Constraint {
            label: label.into(),
            posy,
            sense,
        });
    }

    pub fn push_equality(&mut self, label: impl Into<String>, mono: Monomial) {
        self.equalities.push(Equality {
            label: label.into(),
            mono,
        });
    }

    /// Checks that every expression only refers to declared variables.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        let check = |s: Option<usize>, what: &str| -> Result<()> {
            match s {
                Some(s) if s >= n => Err(Error::DimensionMismatch(format!(
                    "{what} refers to slot {s} but only {n} variables are declared"
                ))),
                _ => Ok(()),
            }
        };
        check(self.objective.max_slot(), "objective")?;
        for c in &self.constraints {
            check(c.posy.max_slot(), &c.label)?;
            if let Sense::Tightened { margin } = c.sense {
                if !(0.0..1.0).contains(&margin) {
                    return Err(Error::Invalid(format!(
                        "bad margin {margin} on {}",
                        c.label
                    )));
                }
            }
        }
        for e in &self.equalities {
            check(e.mono.max_slot(), &e.label)?;
        }
        for c in &self.exp_constraints {
            check(c.base.as_ref().and_then(Posynomial::max_slot), &c.label)?;
            for t in &c.terms {
                check(t.arg.max_slot(), &c.label)?;
                check(t.mult.max_slot(), &c.label)?;
                if !(t.h > 0.0) || !t.h.is_finite() {
                    return Err(Error::Invalid(format!(
                        "exp term scale must be positive in {}",
                        c.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len() + self.exp_constraints.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub strict_margin: f64,
    pub tol_kkt: f64,
    /// Newton steps allowed per centering problem.
    pub max_iters: usize,
    pub delay_series_order: usize,
    pub initial_t: f64,
    pub mu: f64,
    /// Cap on `ρ·h` used by the delay builder.
    pub delay_rho_h_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            strict_margin: 1e-4,
            tol_kkt: 1e-8,
            max_iters: 200,
            delay_series_order: 20,
            initial_t: 1.0,
            mu: 20.0,
            delay_rho_h_cap: 4.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if !(self.strict_margin > 0.0 && self.strict_margin < 0.5) {
            return bad("strict margin must lie in (0, 0.5)");
        }
        if !(self.tol_kkt > 0.0) {
            return bad("tol_kkt must be positive");
        }
        if self.max_iters == 0 || self.delay_series_order == 0 {
            return bad("iteration counts must be at least 1");
        }
        if !(self.initial_t > 0.0) || !(self.mu > 1.0) {
            return bad("barrier schedule needs t0 > 0 and mu > 1");
        }
        if !(self.delay_rho_h_cap > 0.0) {
            return bad("delay cap must be positive");
        }
        Ok(())
    }

    /// Applies `POSGP_MAX_ITERS` when set.
    pub fn with_env(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var("POSGP_MAX_ITERS") {
            self.max_iters = v
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("POSGP_MAX_ITERS={v} is not an integer")))?;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIters,
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    /// Values in the original (positive) domain, one per variable.
    pub point: Vec<f64>,
    pub objective_value: f64,
    /// Values of the posynomial constraints as given, in order.
    pub constraint_values: Vec<f64>,
    /// Exact values of the exponential constraints.
    pub exp_constraint_values: Vec<f64>,
    /// Duality gap `m/t` of the final centered barrier iterate.
    pub kkt_residual: f64,
    /// `‖∇F_0 + Σ λ_i ∇F_i‖_∞` with the barrier multipliers `λ_i = 1/(t·(−F_i))`.
    pub stationarity: f64,
    /// Total Newton steps over both phases.
    pub iterations: usize,
    /// Objective after each outer barrier iteration.
    pub objective_history: Vec<f64>,
    /// Optimal value of the phase-I problem when it was used as evidence.
    pub phase1_value: Option<f64>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, vars: &VarSpace, name: &str) -> Result<f64> {
        Ok(self.point[vars.require(name)?])
    }
}

/// Tightens strict constraints and replaces exponential terms by their
/// truncated series. Idempotent.
pub fn normalize(p: &GpProblem, opts: &SolveOptions) -> Result<GpProblem> {
    p.validate()?;
    opts.validate()?;
    let mut out = GpProblem::new(p.vars.clone(), p.objective.clone());
    out.equalities = p.equalities.clone();
    let tighten = |posy: Posynomial, sense: Sense| -> Result<(Posynomial, Sense)> {
        match sense {
            Sense::Strict => Ok((
                posy.scale(1.0 / (1.0 - opts.strict_margin))?,
                Sense::Tightened {
                    margin: opts.strict_margin,
                },
            )),
            s => Ok((posy, s)),
        }
    };
    for c in &p.constraints {
        let (posy, sense) = tighten(c.posy.clone(), c.sense)?;
        out.constraints.push(Constraint {
            label: c.label.clone(),
            posy,
            sense,
        });
    }
    for c in &p.exp_constraints {
        let mut acc = c.base.clone();
        for t in &c.terms {
            let s = t.series(opts.delay_series_order)?;
            acc = Some(match acc {
                Some(a) => a.add(&s),
                None => s,
            });
        }
        let posy = acc.ok_or_else(|| Error::Invalid(format!("empty constraint {}", c.label)))?;
        let (posy, sense) = tighten(posy, c.sense)?;
        out.constraints.push(Constraint {
            label: c.label.clone(),
            posy,
            sense,
        });
    }
    Ok(out)
}

/// A GP after the change of variables `v = exp(z)`.
#[derive(Debug, Clone)]
pub struct LogProblem {
    pub objective: Posynomial,
    pub constraints: Vec<Posynomial>,
    /// Rows of `A z = b` from the monomial equalities.
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

impl LogProblem {
    pub fn objective_at(&self, z: &[f64]) -> Result<LogEval> {
        self.objective.log_eval(z)
    }

    pub fn constraints_at(&self, z: &[f64]) -> Result<Vec<LogEval>> {
        self.constraints.iter().map(|c| c.log_eval(z)).collect()
    }
}

/// Log-domain form of a problem without exponential constraints.
pub fn log_transform(p: &GpProblem) -> Result<LogProblem> {
    if !p.exp_constraints.is_empty() {
        return Err(Error::Invalid(
            "normalize the problem before transforming it".into(),
        ));
    }
    let n = p.vars.len();
    let m = p.equalities.len();
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for (i, e) in p.equalities.iter().enumerate() {
        for &(s, x) in e.mono.exponents() {
            a[(i, s)] = x;
        }
        b[i] = -e.mono.coeff().ln();
    }
    Ok(LogProblem {
        objective: p.objective.clone(),
        constraints: p.constraints.iter().map(|c| c.posy.clone()).collect(),
        eq_matrix: a,
        eq_rhs: b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub constraint_values: Vec<f64>,
    pub exp_constraint_values: Vec<f64>,
    pub equality_values: Vec<f64>,
    /// Strict constraints hold with the margin, the others with `≤ 1`,
    /// and every equality holds to `1e-8` in the log domain.
    pub strictly_feasible: bool,
}

const NONSTRICT_SLACK: f64 = 1e-9;
const EQUALITY_TOL: f64 = 1e-8;

pub fn check_feasibility(p: &GpProblem, point: &[f64], margin: f64) -> Result<FeasibilityReport> {
    if point.len() != p.vars.len() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries for {} variables",
            point.len(),
            p.vars.len()
        )));
    }
    let ok = |v: f64, sense: Sense| {
        if sense.is_strict() {
            v <= 1.0 - margin
        } else {
            v <= 1.0 + NONSTRICT_SLACK
        }
    };
    let mut feasible = true;
    let mut cv = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let v = c.posy.eval(point)?;
        feasible &= ok(v, c.sense);
        cv.push(v);
    }
    let mut ev = Vec::with_capacity(p.exp_constraints.len());
    for c in &p.exp_constraints {
        let v = c.eval(point)?;
        feasible &= ok(v, c.sense);
        ev.push(v);
    }
    let mut qv = Vec::with_capacity(p.equalities.len());
    for e in &p.equalities {
        let v = e.mono.eval(point)?;
        feasible &= v.ln().abs() <= EQUALITY_TOL;
        qv.push(v);
    }
    Ok(FeasibilityReport {
        constraint_values: cv,
        exp_constraint_values: ev,
        equality_values: qv,
        strictly_feasible: feasible,
    })
}
