use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::linalg::{kron_sum, lyapunov, sigma_max, sigma_max_complex, solve};
use super::{delay_decay_rate, delay_gains, NumericSystem};
use crate::error::{Error, Result};
use crate::posyalg::{bar_matrices, PosyMatrix};

/// Largest Kronecker system the Grammian cross-check will assemble.
const KRON_ROUTE_LIMIT: usize = 1500;
const ROUTE_TOL: f64 = 1e-8;

/// `H₂` norm through the Kronecker-sum solve and the Lyapunov equation.
pub fn h2_norm_routes(s: &NumericSystem) -> Result<(f64, f64)> {
    s.require_hurwitz()?;
    let n = s.nx();
    let mut gt = DMatrix::zeros(n * n, 1);
    for j in 0..s.nw() {
        let col = s.g.column(j).into_owned();
        gt += col.kronecker(&col);
    }
    let mut ht = DMatrix::zeros(1, n * n);
    for i in 0..s.ny() {
        let row = s.h.row(i).into_owned();
        ht += row.kronecker(&row);
    }
    let k = kron_sum(&s.f, &s.f);
    let x = solve(&k, &gt, "F ⊕ F")?;
    let kron = (-(ht * x)[(0, 0)]).max(0.0).sqrt();

    let wc = lyapunov(&s.f, &(&s.g * s.g.transpose()))?;
    let lyap = (&s.h * wc * s.h.transpose()).trace().max(0.0).sqrt();
    Ok((kron, lyap))
}

pub fn h2_norm(s: &NumericSystem) -> Result<f64> {
    let (kron, lyap) = h2_norm_routes(s)?;
    if (kron - lyap).abs() > 1e-7 * kron.max(lyap).max(1e-300) + 1e-14 {
        return Err(Error::RouteDisagreement(format!(
            "H2 norm {kron} vs {lyap}"
        )));
    }
    Ok(kron)
}

/// `‖−H F⁻¹ G‖₂`, the `H∞` norm of an internally positive system.
pub fn hinf_norm(s: &NumericSystem) -> Result<f64> {
    s.require_hurwitz()?;
    let x = solve(&s.f, &s.g, "F")?;
    Ok(sigma_max(&(-&s.h * x)))
}

/// `max_ω σ_max(H (jωI − F)⁻¹ G)` over the given frequencies.
pub fn hinf_sweep(s: &NumericSystem, omegas: &[f64]) -> Result<f64> {
    s.require_hurwitz()?;
    let n = s.nx();
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let fc = to_c(&s.f);
    let gc = to_c(&s.g);
    let hc = to_c(&s.h);
    let mut best = 0.0f64;
    for &w in omegas {
        let a = DMatrix::<Complex<f64>>::identity(n, n) * Complex::new(0.0, w) - &fc;
        let x = a
            .full_piv_lu()
            .solve(&gc)
            .ok_or_else(|| Error::Singular("jωI − F".into()))?;
        best = best.max(sigma_max_complex(&(&hc * x)));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gramians {
    pub wc: DMatrix<f64>,
    pub wo: DMatrix<f64>,
}

/// `F W_C + W_C Fᵀ = −G Gᵀ` and `Fᵀ W_O + W_O F = −Hᵀ H`.
pub fn gramians_lyapunov(s: &NumericSystem) -> Result<Gramians> {
    s.require_hurwitz()?;
    let wc = lyapunov(&s.f, &(&s.g * s.g.transpose()))?;
    let wo = lyapunov(&s.f.transpose(), &(s.h.transpose() * &s.h))?;
    Ok(Gramians { wc, wo })
}

pub fn controllability_gramian(s: &NumericSystem) -> Result<DMatrix<f64>> {
    s.require_hurwitz()?;
    lyapunov(&s.f, &(&s.g * s.g.transpose()))
}

/// Numeric `(B̄₁, B̄₂, C̄₁, C̄₂)` for input map `g` and output map `h`.
pub fn numeric_bar_matrices(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<[DMatrix<f64>; 4]> {
    let bar = bar_matrices(&PosyMatrix::from_numeric(g)?, &PosyMatrix::from_numeric(h)?)?;
    Ok([
        bar.b1.eval(&[])?,
        bar.b2.eval(&[])?,
        bar.c1.eval(&[])?,
        bar.c2.eval(&[])?,
    ])
}

/// `W_C = −B̄₁ (F ⊕ O ⊕ Fᵀ)⁻¹ B̄₂` and `W_O = −C̄₁ (Fᵀ ⊕ O ⊕ F)⁻¹ C̄₂`.
pub fn gramians_kronecker(s: &NumericSystem) -> Result<Gramians> {
    s.require_hurwitz()?;
    let [b1, b2, c1, c2] = numeric_bar_matrices(&s.g, &s.h)?;
    let ft = s.f.transpose();
    let kc = kron_sum(&kron_sum(&s.f, &DMatrix::zeros(s.nw(), s.nw())), &ft);
    let ko = kron_sum(&kron_sum(&ft, &DMatrix::zeros(s.ny(), s.ny())), &s.f);
    let wc = -b1 * solve(&kc, &b2, "F ⊕ O ⊕ Fᵀ")?;
    let wo = -c1 * solve(&ko, &c2, "Fᵀ ⊕ O ⊕ F")?;
    Ok(Gramians { wc, wo })
}

fn check_routes(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = a.amax().max(b.amax()).max(1.0);
    let diff = (a - b).amax();
    if diff > ROUTE_TOL * scale {
        return Err(Error::RouteDisagreement(format!(
            "{what} differs by {diff:e}"
        )));
    }
    Ok(())
}

/// Hankel singular values in descending order.
///
/// The Lyapunov Grammians are cross-checked against the Kronecker
/// representation whenever the Kronecker systems are small enough to form.
pub fn hankel_singular_values(s: &NumericSystem) -> Result<Vec<f64>> {
    let gl = gramians_lyapunov(s)?;
    let n = s.nx();
    if n * n * s.nw().max(s.ny()).max(1) <= KRON_ROUTE_LIMIT {
        let gk = gramians_kronecker(s)?;
        check_routes(&gl.wc, &gk.wc, "W_C")?;
        check_routes(&gl.wo, &gk.wo, "W_O")?;
    }
    Ok(hsv_from_gramians(&gl))
}

pub(crate) fn hsv_from_gramians(g: &Gramians) -> Vec<f64> {
    let n = g.wc.nrows();
    let mut lam: Vec<f64> = match g.wc.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let m = l.transpose() * &g.wo * &l;
            let m = (&m + m.transpose()) * 0.5;
            m.symmetric_eigenvalues().iter().copied().collect()
        }
        None => {
            let p = &g.wo * &g.wc;
            if n == 0 {
                Vec::new()
            } else {
                p.complex_eigenvalues().iter().map(|z| z.re).collect()
            }
        }
    };
    for v in lam.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    lam.sort_by(|a, b| b.total_cmp(a));
    lam
}

/// `(Σ σ_i^p)^{1/p}` over Hankel singular values.
pub fn schatten(sv: &[f64], p: u32) -> f64 {
    if p == 0 {
        return f64::NAN;
    }
    let m = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = sv.iter().map(|v| (v / m).powi(p as i32)).sum();
    m * s.powf(1.0 / p as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub h2: f64,
    pub hinf: f64,
    pub hankel_sv: Vec<f64>,
    pub schatten: BTreeMap<u32, f64>,
    pub spectral_abscissa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate_lb: Option<f64>,
}

/// All oracle values for a stable system. Delay systems additionally get
/// their gains and the largest certified decay rate.
pub fn norm_report(s: &NumericSystem, schatten_orders: &[u32]) -> Result<NormReport> {
    let spectral_abscissa = s.spectral_abscissa()?;
    let h2 = h2_norm(s)?;
    let hinf = hinf_norm(s)?;
    let hankel_sv = hankel_singular_values(s)?;
    let mut sch = BTreeMap::new();
    for &p in schatten_orders {
        sch.insert(p, schatten(&hankel_sv, p));
    }
    let (mut l1_gain, mut linf_gain, mut decay_rate_lb) = (None, None, None);
    if s.delay.is_some() {
        let g = delay_gains(s)?;
        l1_gain = Some(g.l1);
        linf_gain = Some(g.linf);
        decay_rate_lb = Some(delay_decay_rate(s)?);
    }
    Ok(NormReport {
        h2,
        hinf,
        hankel_sv,
        schatten: sch,
        spectral_abscissa,
        l1_gain,
        linf_gain,
        decay_rate_lb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(f: &[f64], n: usize, g: &[f64], nw: usize, h: &[f64], ny: usize) -> NumericSystem {
        NumericSystem::new(
            DMatrix::from_row_slice(n, n, f),
            DMatrix::from_row_slice(n, nw, g),
            DMatrix::from_row_slice(ny, n, h),
        )
        .unwrap()
    }

    #[test]
    fn h2_examples() {
        let s = sys(&[-1.0], 1, &[1.0], 1, &[1.0], 1);
        assert!((h2_norm(&s).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let s = sys(&[-1.0], 1, &[1.0], 1, &[0.0], 1);
        assert_eq!(h2_norm(&s).unwrap(), 0.0);
        let s = sys(
            &[-1.0, 0.0, 0.0, -2.0],
            2,
            &[1.0, 0.0, 0.0, 1.0],
            2,
            &[1.0, 0.0, 0.0, 1.0],
            2,
        );
        assert!((h2_norm(&s).unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hinf_examples() {
        let s = sys(&[-1.0], 1, &[1.0], 1, &[1.0], 1);
        assert!((hinf_norm(&s).unwrap() - 1.0).abs() < 1e-14);
        let s = sys(&[-1.0], 1, &[0.0], 1, &[1.0], 1);
        assert_eq!(hinf_norm(&s).unwrap(), 0.0);
        let s = sys(&[-1.0, 0.0, 0.0, -2.0], 2, &[1.0, 1.0], 1, &[1.0, 1.0], 1);
        assert!((hinf_norm(&s).unwrap() - 1.5).abs() < 1e-14);
        let sweep = hinf_sweep(&s, &[1e-3, 1.0, 10.0]).unwrap();
        assert!(sweep <= 1.5 && sweep > 1.4999);
    }

    #[test]
    fn hankel_examples() {
        let s = sys(&[-1.0], 1, &[1.0], 1, &[1.0], 1);
        let sv = hankel_singular_values(&s).unwrap();
        assert!((sv[0] - 0.5).abs() < 1e-14);
        let s = sys(&[-1.0, 0.0, 0.0, -2.0], 2, &[0.0, 0.0], 1, &[1.0, 1.0], 1);
        assert_eq!(hankel_singular_values(&s).unwrap(), vec![0.0, 0.0]);
        let s = sys(
            &[-1.0, 0.0, 0.0, -2.0],
            2,
            &[1.0, 0.0, 0.0, 1.0],
            2,
            &[1.0, 0.0, 0.0, 1.0],
            2,
        );
        let sv = hankel_singular_values(&s).unwrap();
        assert!((sv[0] - 0.5).abs() < 1e-12 && (sv[1] - 0.25).abs() < 1e-12);
        assert!((schatten(&sv, 2) - (0.25f64 + 0.0625).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unstable_rejected() {
        let s = sys(&[0.5], 1, &[1.0], 1, &[1.0], 1);
        assert!(matches!(h2_norm(&s), Err(Error::NotHurwitz(_))));
        assert!(matches!(hinf_norm(&s), Err(Error::NotHurwitz(_))));
    }

    #[test]
    fn bar_route_single_input() {
        let s = sys(&[-2.0, 0.5, 0.3, -1.0], 2, &[1.0, 0.4], 1, &[0.2, 1.0], 1);
        let a = gramians_lyapunov(&s).unwrap();
        let b = gramians_kronecker(&s).unwrap();
        assert!((a.wc - b.wc).amax() < 1e-12);
        assert!((a.wo - b.wo).amax() < 1e-12);
    }
}
