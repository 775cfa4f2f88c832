use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{perron_vectors, spectral_abscissa};
use super::NumericSystem;
use crate::error::{Error, Result};

/// Block-diagonal pattern `diag(Δ_1, …, Δ_φ, δ_{φ+1}, …, δ_{φ+σ})`:
/// full nonnegative blocks first, then nonnegative scalars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub full_blocks: Vec<usize>,
    pub scalar_blocks: usize,
}

impl BlockStructure {
    pub fn new(full_blocks: Vec<usize>, scalar_blocks: usize) -> Result<Self> {
        if full_blocks.contains(&0) {
            return Err(Error::InvalidStructure(
                "full blocks must have positive size".into(),
            ));
        }
        if full_blocks.is_empty() && scalar_blocks == 0 {
            return Err(Error::InvalidStructure("structure has no blocks".into()));
        }
        Ok(Self {
            full_blocks,
            scalar_blocks,
        })
    }

    /// One full block of size `m`.
    pub fn full(m: usize) -> Self {
        Self {
            full_blocks: vec![m],
            scalar_blocks: 0,
        }
    }

    /// `m` independent scalars.
    pub fn scalars(m: usize) -> Self {
        Self {
            full_blocks: Vec::new(),
            scalar_blocks: m,
        }
    }

    pub fn size(&self) -> usize {
        self.full_blocks.iter().sum::<usize>() + self.scalar_blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.full_blocks.len() + self.scalar_blocks
    }

    /// `(offset, size)` of every block, full blocks first.
    pub fn ranges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut off = 0;
        for &m in &self.full_blocks {
            out.push((off, m));
            off += m;
        }
        for _ in 0..self.scalar_blocks {
            out.push((off, 1));
            off += 1;
        }
        out
    }

    /// Block index of every channel.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size());
        for (k, (_, m)) in self.ranges().into_iter().enumerate() {
            out.extend(std::iter::repeat_n(k, m));
        }
        out
    }

    pub fn check(&self, nw: usize, ny: usize) -> Result<()> {
        let m = self.size();
        if m != nw || m != ny {
            return Err(Error::InvalidStructure(format!(
                "blocks cover {m} channels but the system has {nw} inputs and {ny} outputs"
            )));
        }
        Ok(())
    }
}

/// `Δ` with block `k` equal to `ε · x_k y_kᵀ / (‖x_k‖ ‖y_k‖)`.
fn assemble(
    structure: &BlockStructure,
    eps: f64,
    xs: &[DVector<f64>],
    ys: &[DVector<f64>],
) -> DMatrix<f64> {
    let m = structure.size();
    let mut d = DMatrix::zeros(m, m);
    for (k, (off, size)) in structure.ranges().into_iter().enumerate() {
        let (x, y) = (&xs[k], &ys[k]);
        let (nx, ny) = (x.norm(), y.norm());
        if nx == 0.0 || ny == 0.0 {
            continue;
        }
        let block = x * y.transpose() * (eps / (nx * ny));
        d.view_mut((off, off), (size, size)).copy_from(&block);
    }
    d
}

fn closed_loop(s: &NumericSystem, d: &DMatrix<f64>) -> DMatrix<f64> {
    &s.f + &s.g * d * &s.h
}

/// Sampled lower bound on `sup λ_max(F + G Δ H)` over structured
/// nonnegative `Δ` with `‖Δ‖ ≤ ε`.
///
/// The all-ones candidate and a Perron-gradient ascent are always tried; the
/// `samples` random rank-one candidates come from a fixed seeded stream, so
/// the estimate is nondecreasing in `samples`.
pub fn robust_abscissa_estimate(
    s: &NumericSystem,
    structure: &BlockStructure,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    structure.check(s.nw(), s.ny())?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Invalid(format!(
            "uncertainty bound must be nonnegative, got {eps}"
        )));
    }
    let mut best = spectral_abscissa(&s.f)?;
    if eps == 0.0 {
        return Ok(best);
    }
    let ranges = structure.ranges();
    let ones: Vec<DVector<f64>> = ranges
        .iter()
        .map(|&(_, m)| DVector::from_element(m, 1.0))
        .collect();
    best = best.max(spectral_abscissa(&closed_loop(
        s,
        &assemble(structure, eps, &ones, &ones),
    ))?);

    // ascent along the Perron gradient (Gᵀl)(Hr)ᵀ, block by block
    let (mut xs, mut ys) = (ones.clone(), ones);
    for _ in 0..50 {
        let m = closed_loop(s, &assemble(structure, eps, &xs, &ys));
        let (lam, r, l) = perron_vectors(&m)?;
        best = best.max(lam);
        let gl = s.g.transpose() * l;
        let hr = &s.h * r;
        let mut moved = false;
        for (k, &(off, size)) in ranges.iter().enumerate() {
            let nx = gl.rows(off, size).into_owned();
            let ny = hr.rows(off, size).into_owned();
            if nx.norm() == 0.0 || ny.norm() == 0.0 {
                continue;
            }
            let nx = &nx / nx.norm();
            let ny = &ny / ny.norm();
            if (&nx - &xs[k] / xs[k].norm()).amax() > 1e-12
                || (&ny - &ys[k] / ys[k].norm()).amax() > 1e-12
            {
                moved = true;
            }
            xs[k] = nx;
            ys[k] = ny;
        }
        if !moved {
            break;
        }
    }
    best = best.max(spectral_abscissa(&closed_loop(
        s,
        &assemble(structure, eps, &xs, &ys),
    ))?);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut rx = Vec::with_capacity(ranges.len());
        let mut ry = Vec::with_capacity(ranges.len());
        for &(_, m) in &ranges {
            rx.push(DVector::from_fn(m, |_, _| rng.random::<f64>()));
            ry.push(DVector::from_fn(m, |_, _| rng.random::<f64>()));
        }
        let d = assemble(structure, eps, &rx, &ry);
        best = best.max(spectral_abscissa(&closed_loop(s, &d))?);
    }
    Ok(best)
}
