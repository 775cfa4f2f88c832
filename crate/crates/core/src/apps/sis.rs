use nalgebra::DMatrix;

use super::graphs::pagerank;
use crate::error::{Error, Result};
use crate::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use crate::synth::{CostSpec, ThetaSet, UncertaintyStructure};
use crate::sysmodel::{BlockStructure, ParamSystem};

/// Linearized SIS epidemic `ẋ = (BA − D)x` with per-node infection rates
/// `β_i ∈ [β̲, β̄]` and recovery rates `δ_i ∈ [δ̲, δ̄]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SisNetwork {
    /// Nominal adjacency, `a[i, j]` = weight of the edge `j → i`.
    pub adjacency: DMatrix<f64>,
    /// Bound on the adjacency perturbation.
    pub eps: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Exponent of the infection-rate cost `f`.
    pub p: f64,
    /// Exponent of the recovery-rate cost `g`.
    pub q: f64,
    /// Required decay rate.
    pub gamma: f64,
}

impl SisNetwork {
    /// Rates and exponents used in the published network example.
    pub fn with_defaults(adjacency: DMatrix<f64>, eps: f64) -> Self {
        Self {
            adjacency,
            eps,
            beta_min: 0.1,
            beta_max: 0.2,
            delta_min: 1.0,
            delta_max: 2.0,
            p: 0.1,
            q: 1.0,
            gamma: 0.01,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.adjacency;
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if let Some((k, v)) = a
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            let n = a.nrows();
            return Err(Error::NegativeEntry {
                name: "adjacency",
                row: k % n,
                col: k / n,
                value: *v,
            });
        }
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos("beta_min", self.beta_min)?;
        pos("delta_min", self.delta_min)?;
        pos("p", self.p)?;
        pos("q", self.q)?;
        if !(self.beta_max > self.beta_min) || !self.beta_max.is_finite() {
            return Err(Error::Invalid("need beta_min < beta_max".into()));
        }
        if !(self.delta_max > self.delta_min) || !self.delta_max.is_finite() {
            return Err(Error::Invalid("need delta_min < delta_max".into()));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Invalid(format!(
                "eps must be nonnegative, got {}",
                self.eps
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Invalid(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Normalized infection-rate cost, 1 at `β̲` and 0 at `β̄`.
    pub fn f(&self, beta: f64) -> f64 {
        let p = self.p;
        (beta.powf(-p) - self.beta_max.powf(-p)) / (self.beta_min.powf(-p) - self.beta_max.powf(-p))
    }

    /// Normalized recovery-rate cost, 0 at `δ̲` and 1 at `δ̄`.
    pub fn g(&self, delta: f64) -> f64 {
        let q = self.q;
        (delta.powf(q) - self.delta_min.powf(q)) / (self.delta_max.powf(q) - self.delta_min.powf(q))
    }

    /// Lower bound of the reparametrized recovery variable `δ^c`.
    fn deltac_min(&self) -> f64 {
        1.0 / (self.delta_max - self.delta_min + 1.0)
    }

    /// `δ = δ̄ + 1 − 1/δ^c`.
    pub fn delta_from_deltac(&self, dc: f64) -> f64 {
        self.delta_max + 1.0 - 1.0 / dc
    }

    pub fn deltac_from_delta(&self, delta: f64) -> f64 {
        1.0 / (self.delta_max + 1.0 - delta)
    }
}

#[derive(Debug, Clone)]
pub struct SisProblem {
    pub system: ParamSystem,
    pub cost: CostSpec,
    pub theta: ThetaSet,
    pub uncertainty: UncertaintyStructure,
    pub reparametrized: bool,
}

impl SisProblem {
    /// Infection and recovery rates `(β, δ)` from a solution vector.
    pub fn rates(&self, sn: &SisNetwork, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = sn.n();
        let beta = theta[..n].to_vec();
        let delta = theta[n..2 * n]
            .iter()
            .map(|&d| {
                if self.reparametrized {
                    sn.delta_from_deltac(d)
                } else {
                    d
                }
            })
            .collect();
        (beta, delta)
    }
}

/// Variables are `beta[i]` then `delta[i]`, or `deltac[i]` when
/// `reparametrize` is set. The plain form has `Ã = diag(β)A`, `R = diag(δ)`;
/// the reparametrized form has `Ã = diag(β)A + diag(1/δ^c)` and the constant
/// `R = (δ̄+1)I`, which admits the `r·R0` factorization. `B = diag(β)`,
/// `C = I`, and the uncertainty is one full `N×N` block.
///
/// The recovery cost `g(δ)` is not a posynomial in `δ^c`; the reparametrized
/// cost replaces it by the normalized `(δ^c − δ^c_min)/(1 − δ^c_min)`, which
/// is increasing in `δ` and agrees with `g` at both bounds.
pub fn build_sis_problem(sn: &SisNetwork, reparametrize: bool) -> Result<SisProblem> {
    sn.validate()?;
    let n = sn.n();
    let mut vars = VarSpace::default();
    let beta: Vec<usize> = (0..n)
        .map(|i| vars.push(format!("beta[{i}]")))
        .collect::<Result<_>>()?;
    let rec = if reparametrize { "deltac" } else { "delta" };
    let delta: Vec<usize> = (0..n)
        .map(|i| vars.push(format!("{rec}[{i}]")))
        .collect::<Result<_>>()?;

    let mut atilde = PosyMatrix::from_fn(n, n, |i, j| {
        let w = sn.adjacency[(i, j)];
        (w > 0.0)
            .then(|| Posynomial::from(Monomial::var(beta[i]).scale(w).expect("positive weight")))
    });
    let r = if reparametrize {
        for i in 0..n {
            let inv = Posynomial::from(Monomial::var_pow(delta[i], -1.0));
            let cur = atilde.get(i, i).cloned();
            atilde.set(i, i, Some(cur.map_or(inv.clone(), |c| c.add(&inv))));
        }
        DiagMonoMatrix::new(vec![Monomial::constant(sn.delta_max + 1.0)?; n])
    } else {
        DiagMonoMatrix::new(delta.iter().map(|&d| Monomial::var(d)).collect())
    };
    let b = PosyMatrix::from_fn(n, n, |i, j| (i == j).then(|| Posynomial::var(beta[i])));
    let c = PosyMatrix::identity(n);

    let p = sn.p;
    let fscale = 1.0 / (sn.beta_min.powf(-p) - sn.beta_max.powf(-p));
    let mut terms: Vec<Monomial> = beta
        .iter()
        .map(|&s| Monomial::var_pow(s, -p).scale(fscale))
        .collect::<Result<_>>()?;
    let mut l0 = n as f64 * sn.beta_max.powf(-p) * fscale;
    let mut theta = ThetaSet::default();
    for &s in &beta {
        theta
            .constraints
            .push(Monomial::var(s).scale(1.0 / sn.beta_max)?.into());
        theta
            .constraints
            .push(Monomial::var_pow(s, -1.0).scale(sn.beta_min)?.into());
    }
    if reparametrize {
        let lo = sn.deltac_min();
        let gscale = 1.0 / (1.0 - lo);
        for &s in &delta {
            terms.push(Monomial::var(s).scale(gscale)?);
            theta.constraints.push(Posynomial::var(s));
            theta
                .constraints
                .push(Monomial::var_pow(s, -1.0).scale(lo)?.into());
        }
        l0 += n as f64 * lo * gscale;
    } else {
        let q = sn.q;
        let gscale = 1.0 / (sn.delta_max.powf(q) - sn.delta_min.powf(q));
        for &s in &delta {
            terms.push(Monomial::var_pow(s, q).scale(gscale)?);
            theta
                .constraints
                .push(Monomial::var(s).scale(1.0 / sn.delta_max)?.into());
            theta
                .constraints
                .push(Monomial::var_pow(s, -1.0).scale(sn.delta_min)?.into());
        }
        l0 += n as f64 * sn.delta_min.powf(q) * gscale;
    }
    let cost = CostSpec::new(Posynomial::new(terms)?, l0)?;
    let system = ParamSystem::new(vars, atilde, r, b, c)?;
    let uncertainty = UncertaintyStructure {
        blocks: BlockStructure::full(n),
        eps: sn.eps,
    };
    Ok(SisProblem {
        system,
        cost,
        theta,
        uncertainty,
        reparametrized: reparametrize,
    })
}

/// Per-node spending and centrality.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NodeInvestment {
    pub node: usize,
    pub beta: f64,
    pub delta: f64,
    /// Normalized cost of lowering the infection rate.
    pub f_beta: f64,
    /// Normalized cost of raising the recovery rate.
    pub g_delta: f64,
    pub pagerank: f64,
}

/// Investment per node at a solution, with PageRank (damping 0.85) of the
/// nominal graph.
pub fn sis_investments(sn: &SisNetwork, sp: &SisProblem, theta: &[f64]) -> Vec<NodeInvestment> {
    let (beta, delta) = sp.rates(sn, theta);
    let pr = pagerank(&sn.adjacency, 0.85);
    (0..sn.n())
        .map(|i| NodeInvestment {
            node: i,
            beta: beta[i],
            delta: delta[i],
            f_beta: sn.f(beta[i]),
            g_delta: sn.g(delta[i]),
            pagerank: pr[i],
        })
        .collect()
}
