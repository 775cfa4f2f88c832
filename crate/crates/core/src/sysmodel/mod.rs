//! Numeric and parametrized positive systems, plus the norm oracles used to
//! certify synthesized parameters.

mod delay;
pub mod linalg;
mod norms;
mod robust;

pub use delay::{delay_decay_check, delay_decay_rate, delay_gains, simulate_delay, DelayGains};
pub use linalg::spectral_abscissa;
pub use norms::{
    controllability_gramian, gramians_kronecker, gramians_lyapunov, h2_norm, h2_norm_routes,
    hankel_singular_values, hinf_norm, hinf_sweep, norm_report, numeric_bar_matrices, schatten,
    Gramians, NormReport,
};
pub use robust::{robust_abscissa_estimate, BlockStructure};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, VarSpace};

/// Hurwitz means spectral abscissa below this.
pub const HURWITZ_TOL: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericDelay {
    pub ad: DMatrix<f64>,
    pub cd: DMatrix<f64>,
    pub h: f64,
}

/// `ẋ = F x + A_d x(t−h) + G w`, `y = H x + C_d x(t−h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSystem {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub delay: Option<NumericDelay>,
}

fn check_nonneg(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeEntry {
                    name,
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

impl NumericSystem {
    pub fn new(f: DMatrix<f64>, g: DMatrix<f64>, h: DMatrix<f64>) -> Result<Self> {
        Self::with_delay(f, g, h, None)
    }

    pub fn with_delay(
        f: DMatrix<f64>,
        g: DMatrix<f64>,
        h: DMatrix<f64>,
        delay: Option<NumericDelay>,
    ) -> Result<Self> {
        let n = f.nrows();
        if !f.is_square() {
            return Err(Error::NotSquare {
                rows: f.nrows(),
                cols: f.ncols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = f[(i, j)];
                if !v.is_finite() || (i != j && v < 0.0) {
                    return Err(Error::NotMetzler {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        if g.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "F is {n}x{n}, G is {}x{}, H is {}x{}",
                g.nrows(),
                g.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        check_nonneg("G", &g)?;
        check_nonneg("H", &h)?;
        if let Some(d) = &delay {
            if d.ad.shape() != (n, n) || d.cd.shape() != h.shape() {
                return Err(Error::DimensionMismatch(
                    "delay blocks do not match F and H".into(),
                ));
            }
            if !(d.h > 0.0) || !d.h.is_finite() {
                return Err(Error::Invalid(format!(
                    "delay must be positive, got {}",
                    d.h
                )));
            }
            check_nonneg("A_d", &d.ad)?;
            check_nonneg("C_d", &d.cd)?;
        }
        Ok(Self { f, g, h, delay })
    }

    pub fn nx(&self) -> usize {
        self.f.nrows()
    }

    pub fn nw(&self) -> usize {
        self.g.ncols()
    }

    pub fn ny(&self) -> usize {
        self.h.nrows()
    }

    pub fn spectral_abscissa(&self) -> Result<f64> {
        spectral_abscissa(&self.f)
    }

    pub(crate) fn require_hurwitz(&self) -> Result<()> {
        let a = self.spectral_abscissa()?;
        if a < HURWITZ_TOL {
            Ok(())
        } else {
            Err(Error::NotHurwitz(a))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDelay {
    pub ad: PosyMatrix,
    pub cd: PosyMatrix,
    pub h: f64,
}

/// `R(θ) = r(θ)·R0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub r: Monomial,
    pub r0: Vec<f64>,
}

/// A positive system whose matrices are posynomial in `θ`:
/// `A(θ) = Ã(θ) − R(θ)` with `R` diagonal and monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSystem {
    pub vars: VarSpace,
    pub atilde: PosyMatrix,
    pub r: DiagMonoMatrix,
    pub b: PosyMatrix,
    pub c: PosyMatrix,
    pub delay: Option<ParamDelay>,
    pub factorization: Option<Factorization>,
}

impl ParamSystem {
    /// Builds a system and detects an `r·R0` factorization when one exists.
    pub fn new(
        vars: VarSpace,
        atilde: PosyMatrix,
        r: DiagMonoMatrix,
        b: PosyMatrix,
        c: PosyMatrix,
    ) -> Result<Self> {
        let n = atilde.rows();
        if !atilde.is_square() {
            return Err(Error::NotSquare {
                rows: atilde.rows(),
                cols: atilde.cols(),
            });
        }
        if r.n() != n || b.rows() != n || c.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Ã is {n}x{n}, R has {} diagonals, B is {:?}, C is {:?}",
                r.n(),
                b.shape(),
                c.shape()
            )));
        }
        let nv = vars.len();
        let check = |m: Option<usize>| match m {
            Some(s) if s >= nv => Err(Error::MissingVariable(s)),
            _ => Ok(()),
        };
        check(atilde.max_slot())?;
        check(b.max_slot())?;
        check(c.max_slot())?;
        for d in r.diagonal() {
            check(d.max_slot())?;
        }
        let factorization = r.factor().map(|(r, r0)| Factorization { r, r0 });
        Ok(Self {
            vars,
            atilde,
            r,
            b,
            c,
            delay: None,
            factorization,
        })
    }

    pub fn with_delay(mut self, ad: PosyMatrix, cd: PosyMatrix, h: f64) -> Result<Self> {
        let n = self.nx();
        if ad.shape() != (n, n) || cd.shape() != self.c.shape() {
            return Err(Error::DimensionMismatch(
                "delay blocks do not match Ã and C".into(),
            ));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Invalid(format!("delay must be positive, got {h}")));
        }
        self.delay = Some(ParamDelay { ad, cd, h });
        Ok(self)
    }

    /// Replaces the detected factorization with an explicit one, checking
    /// that `r·R0_i` reproduces every diagonal of `R`.
    pub fn with_factorization(mut self, r: Monomial, r0: Vec<f64>) -> Result<Self> {
        if r0.len() != self.nx() {
            return Err(Error::DimensionMismatch(
                "R0 length differs from n_x".into(),
            ));
        }
        for (i, (d, &k)) in self.r.diagonal().iter().zip(&r0).enumerate() {
            let prod = r.scale(k)?;
            let same_exps = prod.exponents() == d.exponents();
            let same_coeff = (prod.coeff() - d.coeff()).abs() <= 1e-12 * d.coeff();
            if !same_exps || !same_coeff {
                return Err(Error::Invalid(format!(
                    "r·R0 does not match R at diagonal {i}"
                )));
            }
        }
        self.factorization = Some(Factorization { r, r0 });
        Ok(self)
    }

    pub fn nx(&self) -> usize {
        self.atilde.rows()
    }

    pub fn nw(&self) -> usize {
        self.b.cols()
    }

    pub fn ny(&self) -> usize {
        self.c.rows()
    }

    /// Evaluates the system at `θ`. Extra trailing entries (auxiliary GP
    /// variables) are ignored.
    pub fn instantiate(&self, theta: &[f64]) -> Result<NumericSystem> {
        let n = self.nx();
        let mut f = self.atilde.eval(theta)?;
        let r = self.r.eval(theta)?;
        for i in 0..n {
            f[(i, i)] -= r[i];
        }
        let g = self.b.eval(theta)?;
        let h = self.c.eval(theta)?;
        let delay = match &self.delay {
            Some(d) => Some(NumericDelay {
                ad: d.ad.eval(theta)?,
                cd: d.cd.eval(theta)?,
                h: d.h,
            }),
            None => None,
        };
        NumericSystem::with_delay(f, g, h, delay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posyalg::Posynomial;

    fn scalar() -> ParamSystem {
        let vs = VarSpace::new(["theta"]).unwrap();
        ParamSystem::new(
            vs,
            PosyMatrix::zeros(1, 1),
            DiagMonoMatrix::new(vec![Monomial::var(0)]),
            PosyMatrix::identity(1),
            PosyMatrix::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn scalar_instantiation() {
        let s = scalar().instantiate(&[2.0]).unwrap();
        assert_eq!(s.f[(0, 0)], -2.0);
        assert_eq!(s.g[(0, 0)], 1.0);
        assert_eq!(s.h[(0, 0)], 1.0);
        assert!(scalar().factorization.is_some());
    }

    #[test]
    fn off_diagonal_product() {
        let vs = VarSpace::new(["t1", "t2"]).unwrap();
        let mut a = PosyMatrix::zeros(2, 2);
        a.set(0, 1, Some(&Posynomial::var(0) * &Posynomial::var(1)));
        let ps = ParamSystem::new(
            vs,
            a,
            DiagMonoMatrix::new(vec![Monomial::var(0), Monomial::var(1)]),
            PosyMatrix::identity(2),
            PosyMatrix::identity(2),
        )
        .unwrap();
        let s = ps.instantiate(&[2.0, 3.0]).unwrap();
        assert_eq!(s.f[(0, 1)], 6.0);
        assert!(ps.factorization.is_none());
    }

    #[test]
    fn rejects_non_metzler_and_negative() {
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, -0.1, 0.0, -1.0]);
        let g = DMatrix::identity(2, 2);
        assert!(matches!(
            NumericSystem::new(f, g.clone(), g.clone()),
            Err(Error::NotMetzler { row: 0, col: 1, .. })
        ));
        let f = -DMatrix::identity(2, 2);
        let bad = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert!(matches!(
            NumericSystem::new(f, bad, g),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn explicit_factorization_checked() {
        let ps = scalar();
        assert!(ps
            .clone()
            .with_factorization(Monomial::var(0), vec![1.0])
            .is_ok());
        assert!(ps.with_factorization(Monomial::var(0), vec![2.0]).is_err());
    }
}
