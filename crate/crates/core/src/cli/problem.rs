//! TOML problem files.
//!
//! ```toml
//! variables = ["theta"]
//!
//! [system]
//! atilde = [[0]]          # entries are numbers or expression strings
//! r = ["theta"]           # diagonal of R, monomials
//! b = [[1]]
//! c = [[1]]
//! # r_factor = "theta"; r0 = [1.0]     explicit R = r·R0
//! # ad = [[0.5]]; cd = [[0]]; h = 1.0  delay block
//!
//! [cost]
//! expr = "theta"
//! l0 = 0.0
//!
//! [theta]
//! constraints = ["theta/10"]
//!
//! [requirement]           # optional defaults for the solve commands
//! gamma = 0.5
//! alpha = "gamma2 + gammainf"
//! beta = "rho^-1"
//! p = 2
//!
//! [uncertainty]
//! full_blocks = [1]
//! scalar_blocks = 0
//! eps = 0.3
//!
//! [solver]
//! strict_margin = 1e-4
//! ```

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::expr::{parse_expr, parse_nonzero};
use crate::error::{Error, Result};
use crate::gpsolve::SolveOptions;
use crate::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use crate::synth::{CostSpec, ThetaSet, TradeoffFn, DELAY_ARGS, MIXED_ARGS};
use crate::sysmodel::{BlockStructure, ParamSystem};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Num(f64),
    Text(String),
}

type SEntry = Spanned<Entry>;
type SText = Spanned<String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    variables: Vec<SText>,
    system: RawSystem,
    cost: RawCost,
    #[serde(default)]
    theta: RawTheta,
    #[serde(default)]
    requirement: RawRequirement,
    uncertainty: Option<RawUncertainty>,
    #[serde(default)]
    solver: SolverSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    atilde: Vec<Vec<SEntry>>,
    r: Vec<SEntry>,
    b: Vec<Vec<SEntry>>,
    c: Vec<Vec<SEntry>>,
    r_factor: Option<SEntry>,
    r0: Option<Vec<f64>>,
    ad: Option<Vec<Vec<SEntry>>>,
    cd: Option<Vec<Vec<SEntry>>>,
    h: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    expr: SEntry,
    #[serde(default)]
    l0: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTheta {
    #[serde(default)]
    constraints: Vec<SEntry>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequirement {
    gamma: Option<f64>,
    alpha: Option<SEntry>,
    beta: Option<SEntry>,
    p: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUncertainty {
    #[serde(default)]
    full_blocks: Vec<usize>,
    #[serde(default)]
    scalar_blocks: usize,
    eps: Option<f64>,
}

/// Solver overrides from the `[solver]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_kkt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_h_cap: Option<f64>,
}

impl SolverSection {
    pub fn apply(&self, mut o: SolveOptions) -> SolveOptions {
        if let Some(v) = self.strict_margin {
            o.strict_margin = v;
        }
        if let Some(v) = self.tol_kkt {
            o.tol_kkt = v;
        }
        if let Some(v) = self.max_iters {
            o.max_iters = v;
        }
        if let Some(v) = self.series_order {
            o.delay_series_order = v;
        }
        if let Some(v) = self.rho_h_cap {
            o.delay_rho_h_cap = v;
        }
        o
    }
}

/// A validated problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub system: ParamSystem,
    pub cost: CostSpec,
    pub theta: ThetaSet,
    pub gamma: Option<f64>,
    pub alpha: Option<TradeoffFn>,
    pub beta: Option<TradeoffFn>,
    pub schatten_p: Option<u32>,
    pub blocks: Option<BlockStructure>,
    pub eps: Option<f64>,
    pub solver: SolverSection,
}

/// Byte offset to 1-based line and column (in characters).
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn at(&self, span: std::ops::Range<usize>, msg: String) -> Error {
        let (line, col) = line_col(self.text, span.start);
        Error::Parse { line, col, msg }
    }

    /// Parses one entry. String contents start one character after the
    /// opening quote.
    fn expr(&self, e: &SEntry, vars: &VarSpace) -> Result<Option<Posynomial>> {
        match e.get_ref() {
            Entry::Num(x) if *x == 0.0 => Ok(None),
            Entry::Num(x) if *x > 0.0 && x.is_finite() => Ok(Some(Posynomial::constant(*x)?)),
            Entry::Num(x) => Err(self.at(
                e.span(),
                format!("negative coefficient: {x} is not a posynomial"),
            )),
            Entry::Text(s) => {
                let (line, col) = line_col(self.text, e.span().start);
                parse_expr(s, vars, line, col + 1)
            }
        }
    }

    fn nonzero(&self, e: &SEntry, vars: &VarSpace, what: &str) -> Result<Posynomial> {
        match e.get_ref() {
            Entry::Text(s) => {
                let (line, col) = line_col(self.text, e.span().start);
                parse_nonzero(s, vars, line, col + 1)
            }
            _ => self
                .expr(e, vars)?
                .ok_or_else(|| self.at(e.span(), format!("{what} must not be zero"))),
        }
    }

    fn monomial(&self, e: &SEntry, vars: &VarSpace, what: &str) -> Result<Monomial> {
        let p = self.nonzero(e, vars, what)?;
        p.as_monomial()
            .cloned()
            .ok_or_else(|| self.at(e.span(), format!("{what} must be a monomial")))
    }

    fn matrix(&self, rows: &[Vec<SEntry>], vars: &VarSpace, name: &str) -> Result<PosyMatrix> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = PosyMatrix::zeros(rows.len(), ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                let span = row.first().map_or(0..0, |e| e.span());
                return Err(self.at(
                    span,
                    format!(
                        "`{name}` row {i} has {} entries, expected {ncols}",
                        row.len()
                    ),
                ));
            }
            for (j, e) in row.iter().enumerate() {
                m.set(i, j, self.expr(e, vars)?);
            }
        }
        Ok(m)
    }
}

/// Parses and validates a problem file's contents.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let raw: RawProblem = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        Error::Parse {
            line,
            col,
            msg: e.message().to_string(),
        }
    })?;
    let cx = Ctx { text };
    let mut vars = VarSpace::default();
    for v in &raw.variables {
        let ok = v
            .get_ref()
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
            && v.get_ref().chars().all(|c| c.is_alphanumeric() || c == '_');
        if !ok {
            return Err(cx.at(v.span(), format!("invalid variable name `{}`", v.get_ref())));
        }
        vars.push(v.get_ref().clone())
            .map_err(|e| cx.at(v.span(), e.to_string()))?;
    }

    let s = &raw.system;
    let atilde = cx.matrix(&s.atilde, &vars, "atilde")?;
    let r = DiagMonoMatrix::new(
        s.r.iter()
            .map(|e| cx.monomial(e, &vars, "R diagonal"))
            .collect::<Result<_>>()?,
    );
    let b = cx.matrix(&s.b, &vars, "b")?;
    let c = cx.matrix(&s.c, &vars, "c")?;
    let mut system = ParamSystem::new(vars.clone(), atilde, r, b, c)?;
    match (&s.r_factor, &s.r0) {
        (Some(f), Some(r0)) => {
            let m = cx.monomial(f, &vars, "r_factor")?;
            system = system
                .with_factorization(m, r0.clone())
                .map_err(|e| cx.at(f.span(), e.to_string()))?;
        }
        (None, None) => {}
        _ => {
            return Err(Error::Invalid(
                "`r_factor` and `r0` must be given together".into(),
            ))
        }
    }
    match (&s.ad, &s.cd, s.h) {
        (Some(ad), cd, Some(h)) => {
            let ad = cx.matrix(ad, &vars, "ad")?;
            let cd = match cd {
                Some(cd) => cx.matrix(cd, &vars, "cd")?,
                None => PosyMatrix::zeros(system.ny(), system.nx()),
            };
            system = system.with_delay(ad, cd, h)?;
        }
        (None, None, None) => {}
        _ => {
            return Err(Error::Invalid(
                "a delay block needs `ad` and `h` (and optionally `cd`)".into(),
            ))
        }
    }

    let cost = CostSpec::new(cx.nonzero(&raw.cost.expr, &vars, "cost")?, raw.cost.l0)?;
    let theta = ThetaSet::new(
        raw.theta
            .constraints
            .iter()
            .map(|e| cx.nonzero(e, &vars, "theta constraint"))
            .collect::<Result<_>>()?,
    );

    let rq = &raw.requirement;
    let tradeoff =
        |e: &Option<SEntry>, names: &[&str], make: fn(Posynomial) -> Result<TradeoffFn>| {
            e.as_ref()
                .map(|e| {
                    let args = VarSpace::new(names.iter().copied())?;
                    let p = cx.nonzero(e, &args, "trade-off function")?;
                    make(p).map_err(|err| cx.at(e.span(), err.to_string()))
                })
                .transpose()
        };
    let alpha = tradeoff(&rq.alpha, &MIXED_ARGS, TradeoffFn::mixed)?;
    let beta = tradeoff(&rq.beta, &DELAY_ARGS, TradeoffFn::delay)?;
    let (blocks, eps) = match &raw.uncertainty {
        Some(u) => (
            Some(BlockStructure::new(u.full_blocks.clone(), u.scalar_blocks)?),
            u.eps,
        ),
        None => (None, None),
    };
    raw.solver.apply(SolveOptions::default()).validate()?;
    Ok(Problem {
        system,
        cost,
        theta,
        gamma: rq.gamma,
        alpha,
        beta,
        schatten_p: rq.p,
        blocks,
        eps,
        solver: raw.solver,
    })
}

pub fn read_problem(path: &std::path::Path) -> Result<Problem> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

#[derive(Serialize)]
struct EchoProblem {
    variables: Vec<String>,
    system: EchoSystem,
    cost: EchoCost,
    theta: EchoTheta,
    requirement: EchoRequirement,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncertainty: Option<EchoUncertainty>,
    solver: SolverSection,
}

#[derive(Serialize)]
struct EchoSystem {
    atilde: Vec<Vec<String>>,
    r: Vec<String>,
    b: Vec<Vec<String>>,
    c: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_factor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ad: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cd: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
}

#[derive(Serialize)]
struct EchoCost {
    expr: String,
    l0: f64,
}

#[derive(Serialize)]
struct EchoTheta {
    constraints: Vec<String>,
}

#[derive(Serialize)]
struct EchoRequirement {
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u32>,
}

#[derive(Serialize)]
struct EchoUncertainty {
    full_blocks: Vec<usize>,
    scalar_blocks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
}

impl Problem {
    /// Canonical problem-file text; parsing it yields `self` again.
    pub fn to_toml(&self) -> String {
        let s = &self.system;
        let vars = &s.vars;
        let mat = |m: &PosyMatrix| -> Vec<Vec<String>> {
            (0..m.rows())
                .map(|i| {
                    (0..m.cols())
                        .map(|j| m.get(i, j).map_or("0".into(), |p| p.display(vars)))
                        .collect()
                })
                .collect()
        };
        let detected = s.r.factor();
        let explicit = s
            .factorization
            .as_ref()
            .filter(|f| detected.as_ref() != Some(&(f.r.clone(), f.r0.clone())));
        let echo = EchoProblem {
            variables: vars.names().to_vec(),
            system: EchoSystem {
                atilde: mat(&s.atilde),
                r: s.r.diagonal().iter().map(|m| m.display(vars)).collect(),
                b: mat(&s.b),
                c: mat(&s.c),
                r_factor: explicit.map(|f| f.r.display(vars)),
                r0: explicit.map(|f| f.r0.clone()),
                ad: s.delay.as_ref().map(|d| mat(&d.ad)),
                cd: s.delay.as_ref().map(|d| mat(&d.cd)),
                h: s.delay.as_ref().map(|d| d.h),
            },
            cost: EchoCost {
                expr: self.cost.ltilde.display(vars),
                l0: self.cost.l0,
            },
            theta: EchoTheta {
                constraints: self
                    .theta
                    .constraints
                    .iter()
                    .map(|p| p.display(vars))
                    .collect(),
            },
            requirement: EchoRequirement {
                gamma: self.gamma,
                alpha: self.alpha.as_ref().map(|f| f.expr().display(f.args())),
                beta: self.beta.as_ref().map(|f| f.expr().display(f.args())),
                p: self.schatten_p,
            },
            uncertainty: self.blocks.as_ref().map(|b| EchoUncertainty {
                full_blocks: b.full_blocks.clone(),
                scalar_blocks: b.scalar_blocks,
                eps: self.eps,
            }),
            solver: self.solver.clone(),
        };
        toml::to_string(&echo).expect("problem echo serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"
variables = ["theta"]

[system]
atilde = [[0]]
r = ["theta"]
b = [[1]]
c = [[1]]

[cost]
expr = "theta"
"#;

    #[test]
    fn parses_scalar() {
        let p = parse_problem(SCALAR).unwrap();
        assert_eq!(p.system.nx(), 1);
        assert!(p.system.atilde.get(0, 0).is_none());
        assert!(p.system.factorization.is_some());
        assert_eq!(p.cost.l0, 0.0);
    }

    #[test]
    fn negative_coefficient_location() {
        let text = SCALAR.replace("expr = \"theta\"", "expr = \"theta - 1\"");
        let err = parse_problem(&text).unwrap_err();
        let Error::Parse { line, col, msg } = err else {
            panic!("{err:?}")
        };
        assert_eq!(line, 11);
        assert_eq!(col, 15);
        assert!(msg.contains("negative"));
    }

    #[test]
    fn toml_syntax_errors_have_locations() {
        let err = parse_problem("variables = [\"a\"\n[system]\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
        let err = parse_problem(&SCALAR.replace("[cost]", "[cost]\nbogus = 1")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 11, .. }), "{err:?}");
    }

    #[test]
    fn dimension_and_name_errors() {
        let bad = SCALAR.replace("b = [[1]]", "b = [[1], [1]]");
        assert!(matches!(
            parse_problem(&bad),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = SCALAR.replace("r = [\"theta\"]", "r = [\"phi\"]");
        assert!(matches!(
            parse_problem(&bad),
            Err(Error::Parse {
                line: 6,
                col: 7,
                ..
            })
        ));
        let bad = SCALAR.replace("r = [\"theta\"]", "r = [\"theta + 1\"]");
        assert!(parse_problem(&bad).is_err());
    }

    #[test]
    fn echo_is_idempotent() {
        let text = r#"
variables = ["a", "b"]
[system]
atilde = [[0, "2*a^0.5/b"], ["a + b", 0]]
r = ["3*b", "b"]
b = [[1, 0], [0, "a"]]
c = [[1, 1]]
ad = [[0.5, 0], [0, 0]]
h = 0.5
[cost]
expr = "a + b^2"
l0 = 1.5
[theta]
constraints = ["a/4", "0.25/b"]
[requirement]
gamma = 2.0
alpha = "gamma2 + 2*gammainf"
beta = "rho^-1 + gamma1"
p = 4
[uncertainty]
full_blocks = [1]
eps = 0.1
[solver]
strict_margin = 1e-6
"#;
        let p = parse_problem(text).unwrap();
        let echo = p.to_toml();
        let q = parse_problem(&echo).unwrap();
        assert_eq!(p, q);
        assert_eq!(echo, q.to_toml());
    }
}
