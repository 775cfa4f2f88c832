use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::{solve, spectral_abscissa};
use super::{NumericDelay, NumericSystem, HURWITZ_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayGains {
    pub l1: f64,
    pub linf: f64,
}

fn delay_of(s: &NumericSystem) -> Result<&NumericDelay> {
    s.delay.as_ref().ok_or(Error::MissingDelay)
}

/// Max column and row sums of `(H + C_d)(−F − A_d)⁻¹ G`.
pub fn delay_gains(s: &NumericSystem) -> Result<DelayGains> {
    let d = delay_of(s)?;
    let total = &s.f + &d.ad;
    let a = spectral_abscissa(&total)?;
    if a >= HURWITZ_TOL {
        return Err(Error::NotHurwitz(a));
    }
    let m = (&s.h + &d.cd) * solve(&(-total), &s.g, "−F − A_d")?;
    let l1 = (0..m.ncols())
        .map(|j| m.column(j).sum())
        .fold(0.0, f64::max);
    let linf = (0..m.nrows()).map(|i| m.row(i).sum()).fold(0.0, f64::max);
    Ok(DelayGains { l1, linf })
}

/// True when `F + ρI + e^{ρh} A_d` is Hurwitz, certifying decay rate `ρ`.
pub fn delay_decay_check(s: &NumericSystem, rho: f64) -> Result<bool> {
    let d = delay_of(s)?;
    let n = s.nx();
    let m = &s.f + DMatrix::identity(n, n) * rho + &d.ad * (rho * d.h).exp();
    Ok(spectral_abscissa(&m)? < HURWITZ_TOL)
}

/// Supremum of the certifiable decay rates, found by bisection.
/// Returns 0 when the system is not stable.
pub fn delay_decay_rate(s: &NumericSystem) -> Result<f64> {
    if !delay_decay_check(s, 0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while delay_decay_check(s, hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(hi);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if delay_decay_check(s, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(lo)
}

/// Forward-Euler simulation of the unforced delay system from the constant
/// history `x(t) = x0` on `[−h, 0]`, with step `h/200`. Returns samples at
/// every step, starting at `t = 0`.
pub fn simulate_delay(
    s: &NumericSystem,
    x0: &DVector<f64>,
    t_end: f64,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let d = delay_of(s)?;
    if x0.len() != s.nx() {
        return Err(Error::DimensionMismatch(
            "initial state length differs from n_x".into(),
        ));
    }
    const STEPS_PER_DELAY: usize = 200;
    let dt = d.h / STEPS_PER_DELAY as f64;
    let n_steps = (t_end / dt).ceil() as usize;
    let mut traj: Vec<(f64, DVector<f64>)> = Vec::with_capacity(n_steps + 1);
    traj.push((0.0, x0.clone()));
    for k in 0..n_steps {
        let x = &traj[k].1;
        let delayed = if k >= STEPS_PER_DELAY {
            &traj[k - STEPS_PER_DELAY].1
        } else {
            x0
        };
        let dx = &s.f * x + &d.ad * delayed;
        let next = x + dx * dt;
        traj.push(((k + 1) as f64 * dt, next));
    }
    Ok(traj)
}
