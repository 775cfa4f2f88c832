use nalgebra::DMatrix;

use super::{add_opt, Monomial, Posynomial};
use crate::error::{Error, Result};

/// Dense matrix of optional posynomials; `None` is a structural zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PosyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Option<Posynomial>>,
}

impl PosyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![None; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Some(Posynomial::one()));
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Option<Posynomial>,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.entries[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Lifts a nonnegative numeric matrix; zeros become structural zeros.
    pub fn from_numeric(m: &DMatrix<f64>) -> Result<Self> {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeEntry {
                        name: "numeric",
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if v > 0.0 {
                    out.set(i, j, Some(Posynomial::constant(v)?));
                }
            }
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Posynomial> {
        self.entries[i * self.cols + j].as_ref()
    }

    pub fn set(&mut self, i: usize, j: usize, p: Option<Posynomial>) {
        self.entries[i * self.cols + j] = p;
    }

    /// Nonzero entries of row `i` as `(column, entry)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &Posynomial)> {
        self.entries[i * self.cols..(i + 1) * self.cols]
            .iter()
            .enumerate()
            .filter_map(|(j, e)| e.as_ref().map(|p| (j, p)))
    }

    /// All nonzero entries as `(row, column, entry)`.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, &Posynomial)> {
        let cols = self.cols;
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(k, e)| e.as_ref().map(|p| (k / cols, k % cols, p)))
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn max_slot(&self) -> Option<usize> {
        self.nonzeros().filter_map(|(_, _, p)| p.max_slot()).max()
    }

    pub fn eval(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (i, j, p) in self.nonzeros() {
            out[(i, j)] = p.eval(point)?;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).cloned())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            add_opt(self.get(i, j).cloned(), other.get(i, j))
        }))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    let cur = out.entries[i * other.cols + j].take();
                    out.entries[i * other.cols + j] = add_opt(cur, Some(&a.mul(b)));
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = other.shape();
        let mut out = Self::zeros(self.rows * r2, self.cols * c2);
        for (i, j, a) in self.nonzeros() {
            for (k, l, b) in other.nonzeros() {
                out.set(i * r2 + k, j * c2 + l, Some(a.mul(b)));
            }
        }
        out
    }

    /// Kronecker sum `a ⊕ b = a ⊗ I + I ⊗ b` of two square matrices.
    pub fn kron_sum(a: &Self, b: &Self) -> Result<Self> {
        for m in [a, b] {
            if !m.is_square() {
                return Err(Error::NotSquare {
                    rows: m.rows,
                    cols: m.cols,
                });
            }
        }
        a.kron(&Self::identity(b.rows))
            .add(&Self::identity(a.rows).kron(b))
    }

    /// `M ⊕ M`.
    pub fn kron_sum_symbolic(&self) -> Result<Self> {
        Self::kron_sum(self, self)
    }

    /// `M ⊕ O_pad ⊕ N`, where the middle zero block only widens the index space.
    pub fn kron_sum_padded(m: &Self, pad: usize, n: &Self) -> Result<Self> {
        Self::kron_sum(&Self::kron_sum(m, &Self::zeros(pad, pad))?, n)
    }

    pub fn remap(&self, map: impl Fn(usize) -> usize + Copy) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).map(|p| p.remap(map))
        })
    }
}

/// Diagonal matrix with a monomial on every diagonal position.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMonoMatrix {
    diag: Vec<Monomial>,
}

impl DiagMonoMatrix {
    pub fn new(diag: Vec<Monomial>) -> Self {
        Self { diag }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[Monomial] {
        &self.diag
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.diag[i]
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.diag.iter().map(|m| m.eval(point)).collect()
    }

    pub fn to_posy_matrix(&self) -> PosyMatrix {
        let mut m = PosyMatrix::zeros(self.n(), self.n());
        for (i, d) in self.diag.iter().enumerate() {
            m.set(i, i, Some(d.clone().into()));
        }
        m
    }

    /// Splits `R = r·R0` when every diagonal has the same exponents.
    /// `r` gets unit coefficient and `R0` collects the coefficients.
    pub fn factor(&self) -> Option<(Monomial, Vec<f64>)> {
        let first = self.diag.first()?;
        if self.diag.iter().any(|d| d.exponents() != first.exponents()) {
            return None;
        }
        let r = Monomial::new(1.0, first.exponents().iter().copied()).ok()?;
        Some((r, self.diag.iter().map(Monomial::coeff).collect()))
    }
}

/// `(B̃, C̃)` with `B̃ = Σ_j B_j ⊗ B_j` over columns of `B` and
/// `C̃ = Σ_i C_i ⊗ C_i` over rows of `C`.
pub fn build_h2_vectors(b: &PosyMatrix, c: &PosyMatrix) -> Result<(PosyMatrix, PosyMatrix)> {
    let n = b.rows();
    if c.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {n} rows but C has {} columns",
            c.cols()
        )));
    }
    let mut bt = PosyMatrix::zeros(n * n, 1);
    for w in 0..b.cols() {
        let col = PosyMatrix::from_fn(n, 1, |i, _| b.get(i, w).cloned());
        bt = bt.add(&col.kron(&col))?;
    }
    let mut ct = PosyMatrix::zeros(1, n * n);
    for y in 0..c.rows() {
        let row = PosyMatrix::from_fn(1, n, |_, j| c.get(y, j).cloned());
        ct = ct.add(&row.kron(&row))?;
    }
    Ok((bt, ct))
}

/// Stacked Kronecker forms of the input and output maps used by the
/// Grammian representations.
///
/// With the flattened index `(a, w, b) ↦ (a·n_w + w)·n_x + b`:
/// `B̄₁[i, (i,w,b)] = B[b,w]`, `B̄₂[(a,w,b), j] = δ_bj·B[a,w]`, and the
/// same with `Cᵀ` in place of `B` for `C̄₁`, `C̄₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarMatrices {
    pub b1: PosyMatrix,
    pub b2: PosyMatrix,
    pub c1: PosyMatrix,
    pub c2: PosyMatrix,
}

pub fn bar_matrices(b: &PosyMatrix, c: &PosyMatrix) -> Result<BarMatrices> {
    let n = b.rows();
    if c.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {n} rows but C has {} columns",
            c.cols()
        )));
    }
    let (b1, b2) = bar_pair(b);
    let (c1, c2) = bar_pair(&c.transpose());
    Ok(BarMatrices { b1, b2, c1, c2 })
}

fn bar_pair(b: &PosyMatrix) -> (PosyMatrix, PosyMatrix) {
    let (n, m) = b.shape();
    let idx = |a: usize, w: usize, k: usize| (a * m + w) * n + k;
    let mut b1 = PosyMatrix::zeros(n, n * n * m);
    let mut b2 = PosyMatrix::zeros(n * n * m, n);
    for i in 0..n {
        for w in 0..m {
            for k in 0..n {
                if let Some(p) = b.get(k, w) {
                    b1.set(i, idx(i, w, k), Some(p.clone()));
                }
                if let Some(p) = b.get(i, w) {
                    b2.set(idx(i, w, k), k, Some(p.clone()));
                }
            }
        }
    }
    (b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posyalg::VarSpace;

    fn numeric(rows: usize, cols: usize, vals: &[f64]) -> PosyMatrix {
        PosyMatrix::from_numeric(&DMatrix::from_row_slice(rows, cols, vals)).unwrap()
    }

    fn kron_sum_num(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let id = DMatrix::identity(n, n);
        a.kronecker(&id) + id.kronecker(a)
    }

    #[test]
    fn scalar_kron_sum_doubles() {
        let vs = VarSpace::new(["a"]).unwrap();
        let m = PosyMatrix::from_fn(1, 1, |_, _| Some(Posynomial::var(0)));
        let k = m.kron_sum_symbolic().unwrap();
        assert_eq!(k.get(0, 0).unwrap().display(&vs), "2*a");
    }

    #[test]
    fn identity_kron_sum() {
        let k = PosyMatrix::identity(2).kron_sum_symbolic().unwrap();
        let v = k.eval(&[]).unwrap();
        assert_eq!(v, DMatrix::identity(4, 4) * 2.0);
    }

    #[test]
    fn kron_sum_matches_numeric() {
        let m = PosyMatrix::from_fn(2, 2, |i, j| {
            if (i, j) == (1, 0) {
                None
            } else {
                Some(
                    Monomial::new(1.0 + i as f64, [(0, 1.0 + j as f64), (1, -0.5)])
                        .unwrap()
                        .into(),
                )
            }
        });
        let pt = [1.7, 0.4];
        let sym = m.kron_sum_symbolic().unwrap().eval(&pt).unwrap();
        let num = kron_sum_num(&m.eval(&pt).unwrap());
        assert!((sym - num).amax() < 1e-14);
        assert!(m.kron_sum_symbolic().unwrap().get(2, 0).is_none());
        assert!(matches!(
            PosyMatrix::zeros(2, 3).kron_sum_symbolic(),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn h2_vectors_examples() {
        let b = numeric(2, 1, &[1.0, 2.0]);
        let c = numeric(1, 2, &[1.0, 0.0]);
        let (bt, ct) = build_h2_vectors(&b, &c).unwrap();
        assert_eq!(bt.eval(&[]).unwrap().as_slice(), &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(ct.eval(&[]).unwrap().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(ct.nnz(), 1);
        assert!(build_h2_vectors(&b, &numeric(1, 3, &[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn bar_matrix_shapes_and_sparsity() {
        let b = numeric(2, 1, &[1.0, 0.0]);
        let c = numeric(3, 2, &[1.0, 1.0, 0.0, 1.0, 2.0, 0.0]);
        let bar = bar_matrices(&b, &c).unwrap();
        assert_eq!(bar.b1.shape(), (2, 4));
        assert_eq!(bar.b2.shape(), (4, 2));
        assert_eq!(bar.c1.shape(), (2, 12));
        assert_eq!(bar.c2.shape(), (12, 2));
        assert_eq!(bar.b1.nnz(), 2);

        let s = numeric(1, 1, &[3.0]);
        let bar = bar_matrices(&s, &s).unwrap();
        for m in [&bar.b1, &bar.b2, &bar.c1, &bar.c2] {
            assert_eq!(m.eval(&[]).unwrap()[(0, 0)], 3.0);
        }
    }

    #[test]
    fn matmul_and_transpose() {
        let a = numeric(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let b = numeric(2, 1, &[4.0, 5.0]);
        let p = a.matmul(&b).unwrap().eval(&[]).unwrap();
        assert_eq!(p.as_slice(), &[14.0, 15.0]);
        assert_eq!(
            a.transpose().eval(&[]).unwrap(),
            a.eval(&[]).unwrap().transpose()
        );
        assert!(b.matmul(&b).is_err());
    }

    #[test]
    fn factorization_detection() {
        let r = DiagMonoMatrix::new(vec![
            Monomial::new(2.0, [(0, 1.0)]).unwrap(),
            Monomial::new(3.0, [(0, 1.0)]).unwrap(),
        ]);
        let (m, r0) = r.factor().unwrap();
        assert_eq!(m, Monomial::var(0));
        assert_eq!(r0, vec![2.0, 3.0]);
        let r = DiagMonoMatrix::new(vec![Monomial::var(0), Monomial::var(1)]);
        assert!(r.factor().is_none());
    }
}
