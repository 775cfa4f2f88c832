use serde::{Deserialize, Serialize};

use super::{Outcome, Requirement};
use crate::error::{Error, Result};
use crate::sysmodel::{
    delay_decay_check, delay_decay_rate, delay_gains, h2_norm, hankel_singular_values, hinf_norm,
    robust_abscissa_estimate, schatten, ParamSystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Random candidates for the robust sampling oracle.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
        }
    }
}

/// One oracle comparison. `passed` means `value` lies strictly on the safe
/// side of `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value < bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Instantiates the solved parameters and compares the matching oracle with
/// the requested bound. Oracle failures (e.g. an unstable system) are errors.
pub fn certify(ps: &ParamSystem, outcome: &Outcome, opts: &CertifyOptions) -> Result<Certificate> {
    if !outcome.is_optimal() {
        return Err(Error::Invalid(format!(
            "cannot certify a {:?} solve",
            outcome.status()
        )));
    }
    let s = ps.instantiate(outcome.theta())?;
    let level = outcome
        .level()
        .ok_or_else(|| Error::Invalid("solution has no level".into()))?;
    let need = |name: &str| {
        outcome
            .value(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    };
    let checks = match &outcome.built.requirement {
        Requirement::H2 { .. } => vec![Check::below("h2", h2_norm(&s)?, level)],
        Requirement::Hinf { .. } => vec![Check::below("hinf", hinf_norm(&s)?, level)],
        Requirement::Mixed { alpha, .. } => {
            let (h2, hinf) = (h2_norm(&s)?, hinf_norm(&s)?);
            vec![
                Check::below("h2", h2, need("gamma2")?),
                Check::below("hinf", hinf, need("gammainf")?),
                Check::below("alpha", alpha.eval(&[h2, hinf])?, level),
            ]
        }
        Requirement::Hankel { .. } => {
            let sv = hankel_singular_values(&s)?;
            vec![Check::below(
                "hankel",
                sv.first().copied().unwrap_or(0.0),
                level,
            )]
        }
        Requirement::Schatten { p, .. } => {
            vec![Check::below(
                "schatten",
                schatten(&hankel_singular_values(&s)?, *p),
                level,
            )]
        }
        Requirement::Robust { uncertainty, .. } => {
            let est = robust_abscissa_estimate(
                &s,
                &uncertainty.blocks,
                uncertainty.eps,
                opts.samples,
                opts.seed,
            )?;
            vec![Check::below("robust_abscissa", est, -level)]
        }
        Requirement::RobustEpsMax { blocks, gamma } => {
            let est = robust_abscissa_estimate(&s, blocks, level, opts.samples, opts.seed)?;
            vec![Check::below("robust_abscissa", est, -gamma)]
        }
        Requirement::Delay { beta, .. } => {
            let g = delay_gains(&s)?;
            let rho = need("rho")?;
            let rate = delay_decay_rate(&s)?;
            let decay_ok = delay_decay_check(&s, rho * (1.0 - 1e-6))?;
            let beta_val = beta.eval(&[rho, g.l1, g.linf])?;
            vec![
                Check::below("delay_l1", g.l1, need("gamma1")?),
                Check::below("delay_linf", g.linf, need("gammainf")?),
                Check {
                    name: "decay_rate".into(),
                    value: rate,
                    bound: rho,
                    passed: decay_ok,
                },
                Check::below("beta", beta_val, level),
            ]
        }
    };
    Ok(Certificate { checks })
}
