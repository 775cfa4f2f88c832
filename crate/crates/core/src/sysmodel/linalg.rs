//! Dense linear-algebra helpers shared by the oracles.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Largest real part of the eigenvalues of a square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    // a diagonal similarity keeps the spectrum and usually unsticks a stalled QR sweep
    let n = m.nrows();
    let schur = schur(m.clone()).or_else(|_| {
        (1..=4)
            .find_map(|k| {
                let d = DVector::from_fn(n, |i, _| 1.0 + 0.3 * ((k * (i + 1)) as f64).sin());
                let scaled = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] / d[j]);
                schur(scaled).ok()
            })
            .ok_or(Error::EigenFailure)
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn schur<T: nalgebra::ComplexField<RealField = f64>>(
    m: DMatrix<T>,
) -> Result<Schur<T, nalgebra::Dyn>> {
    Schur::try_new(m, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)
}

/// `a ⊕ b = a ⊗ I + I ⊗ b`.
pub fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ia = DMatrix::identity(a.nrows(), a.nrows());
    let ib = DMatrix::identity(b.nrows(), b.nrows());
    a.kronecker(&ib) + ia.kronecker(b)
}

/// Column-major vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let lu = a.clone().full_piv_lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what.to_string()));
    }
    Ok(x)
}

/// Solves `F W + W Fᵀ = −Q` by a complex Schur form and triangular
/// back-substitution.
pub fn lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let fc: DMatrix<C64> = f.map(|v| C64::new(v, 0.0));
    let schur = schur(fc)?;
    let (u, t) = schur.unpack();
    let qc: DMatrix<C64> = q.map(|v| C64::new(-v, 0.0));
    let c = u.adjoint() * qc * &u;
    let mut y = DMatrix::<C64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut acc = c[(i, j)];
            for k in i + 1..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                acc -= y[(i, k)] * t[(j, k)].conj();
            }
            let den = t[(i, i)] + t[(j, j)].conj();
            if den.norm() < 1e-300 {
                return Err(Error::Singular("Lyapunov operator".into()));
            }
            y[(i, j)] = acc / den;
        }
    }
    let w = &u * y * u.adjoint();
    let mut out = w.map(|z| z.re);
    // symmetrize away rounding
    out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

/// Largest singular value.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn sigma_max_complex(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Right null vector of `m` (singular vector of the smallest singular value).
pub fn null_vector(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    Some(vt.row(k).transpose())
}

/// Nonnegative right and left Perron vectors of a Metzler matrix.
pub fn perron_vectors(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let lam = spectral_abscissa(m)?;
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n) * lam;
    let r = null_vector(&shifted)
        .ok_or(Error::EigenFailure)?
        .map(f64::abs);
    let l = null_vector(&shifted.transpose())
        .ok_or(Error::EigenFailure)?
        .map(f64::abs);
    Ok((lam, r, l))
}
