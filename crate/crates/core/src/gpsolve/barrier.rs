//! Phase-I / phase-II log-barrier method on the log-transformed problem.

use nalgebra::{DMatrix, DVector};

use super::{normalize, GpProblem, SolveOptions, SolveResult, Status};
use crate::error::{Error, Result};
use crate::posyalg::Posynomial;

const Z_LIMIT: f64 = 700.0;
const NEWTON_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.01;
const PHASE1_EARLY_EXIT: f64 = -0.1;
const MAX_OUTER: usize = 100;
// largest log-domain move per Newton step
const MAX_STEP: f64 = 5.0;

/// Affine parametrization `z = z0 + N y` of the log-domain variables that
/// satisfies the monomial equalities and pins unused variables at 0.
struct Reduction {
    z0: DVector<f64>,
    basis: Basis,
}

enum Basis {
    Selection(Vec<usize>),
    Dense(DMatrix<f64>),
}

impl Reduction {
    fn dim(&self) -> usize {
        match &self.basis {
            Basis::Selection(s) => s.len(),
            Basis::Dense(m) => m.ncols(),
        }
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut z = self.z0.clone();
        match &self.basis {
            Basis::Selection(s) => {
                for (k, &i) in s.iter().enumerate() {
                    z[i] += y[k];
                }
            }
            Basis::Dense(m) => z += m * DVector::from_column_slice(y),
        }
        z.as_slice().to_vec()
    }

    /// Exponent vector and constant shift of `aᵀz` in the reduced variables.
    fn reduce(&self, a: &[(usize, f64)]) -> (f64, Vec<(usize, f64)>) {
        let shift: f64 = a.iter().map(|&(s, x)| x * self.z0[s]).sum();
        match &self.basis {
            Basis::Selection(sel) => {
                let out = a
                    .iter()
                    .filter_map(|&(s, x)| sel.binary_search(&s).ok().map(|k| (k, x)))
                    .collect();
                (shift, out)
            }
            Basis::Dense(m) => {
                let mut dense = vec![0.0; m.ncols()];
                for &(s, x) in a {
                    for (k, d) in dense.iter_mut().enumerate() {
                        *d += x * m[(s, k)];
                    }
                }
                let scale = dense.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                let out = dense
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() > 1e-13 * scale.max(1.0))
                    .collect();
                (shift, out)
            }
        }
    }
}

/// A posynomial in log form over the reduced coordinates.
struct Compiled {
    b: Vec<f64>,
    a: Vec<Vec<(usize, f64)>>,
}

struct Derivs {
    value: f64,
    probs: Vec<f64>,
    grad: Vec<(usize, f64)>,
}

impl Compiled {
    fn new(p: &Posynomial, red: &Reduction) -> Self {
        let mut b = Vec::with_capacity(p.len());
        let mut a = Vec::with_capacity(p.len());
        for t in p.terms() {
            let (shift, exps) = red.reduce(t.exponents());
            b.push(t.coeff().ln() + shift);
            a.push(exps);
        }
        Self { b, a }
    }

    fn is_constant(&self) -> bool {
        self.a.iter().all(Vec::is_empty)
    }

    fn logits(&self, y: &[f64]) -> Vec<f64> {
        self.b
            .iter()
            .zip(&self.a)
            .map(|(b, a)| b + a.iter().map(|&(k, x)| x * y[k]).sum::<f64>())
            .collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let l = self.logits(y);
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    fn derivs(&self, y: &[f64], scratch: &mut [f64]) -> Derivs {
        let l = self.logits(y);
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = l.iter().map(|v| (v - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
        let mut support = Vec::new();
        for (p, a) in probs.iter().zip(&self.a) {
            for &(k, x) in a {
                support.push(k);
                scratch[k] += p * x;
            }
        }
        support.sort_unstable();
        support.dedup();
        let grad = support
            .iter()
            .map(|&k| (k, std::mem::take(&mut scratch[k])))
            .collect();
        Derivs {
            value: m + total.ln(),
            probs,
            grad,
        }
    }

    /// `hess += c1 · Σ p_k a_k a_kᵀ`.
    fn add_second_moment(&self, probs: &[f64], c1: f64, hess: &mut DMatrix<f64>) {
        for (p, a) in probs.iter().zip(&self.a) {
            let w = c1 * p;
            if w == 0.0 {
                continue;
            }
            for &(i, xi) in a {
                for &(j, xj) in a {
                    hess[(i, j)] += w * xi * xj;
                }
            }
        }
    }
}

/// Barrier `−log(1 − e^h)` for the convex constraint `e^h ≤ 1`, where `h` is
/// a log-posynomial, together with its slope `e^h / (1 − e^h)`. Unlike
/// `−log(−h)` it stays bounded as `h → −∞`, so directions that only slacken
/// constraints do not pull the iterate away.
fn log_barrier(h: f64) -> Option<(f64, f64)> {
    if !(h < 0.0) {
        return None;
    }
    Some((-(-h.exp_m1()).ln(), 1.0 / (-h).exp_m1()))
}

fn add_outer(g: &[(usize, f64)], c: f64, hess: &mut DMatrix<f64>) {
    for &(i, gi) in g {
        for &(j, gj) in g {
            hess[(i, j)] += c * gi * gj;
        }
    }
}

/// Barrier function being centered.
trait Barrier {
    fn dim(&self) -> usize;
    /// `None` when `x` is outside the barrier's domain.
    fn value(&self, x: &[f64], t: f64) -> Option<f64>;
    fn derivs(&self, x: &[f64], t: f64) -> (f64, DVector<f64>, DMatrix<f64>);
}

/// minimize `s` subject to `f_i(y)·e^{−s} < 1`; the last coordinate is `s`.
struct Phase1<'a> {
    cons: &'a [Compiled],
    k: usize,
}

impl Barrier for Phase1<'_> {
    fn dim(&self) -> usize {
        self.k + 1
    }

    fn value(&self, x: &[f64], t: f64) -> Option<f64> {
        let s = x[self.k];
        let mut v = t * s;
        for c in self.cons {
            v += log_barrier(c.value(x) - s)?.0;
        }
        Some(v)
    }

    fn derivs(&self, x: &[f64], t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let s = x[self.k];
        let mut scratch = vec![0.0; self.k];
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut v = t * s;
        grad[self.k] = t;
        for c in self.cons {
            let d = c.derivs(x, &mut scratch);
            let (b, w) = log_barrier(d.value - s).unwrap_or((f64::INFINITY, f64::INFINITY));
            v += b;
            for &(i, gi) in &d.grad {
                grad[i] += gi * w;
            }
            grad[self.k] -= w;
            c.add_second_moment(&d.probs, w, &mut hess);
            add_outer(&d.grad, w * w, &mut hess);
            let cross = w * (1.0 + w);
            for &(i, gi) in &d.grad {
                hess[(i, self.k)] -= gi * cross;
                hess[(self.k, i)] -= gi * cross;
            }
            hess[(self.k, self.k)] += cross;
        }
        (v, grad, hess)
    }
}

/// minimize `t·F_0(y) − Σ log(1 − f_i(y))`.
struct Phase2<'a> {
    obj: &'a Compiled,
    cons: &'a [Compiled],
    k: usize,
}

impl Barrier for Phase2<'_> {
    fn dim(&self) -> usize {
        self.k
    }

    fn value(&self, x: &[f64], t: f64) -> Option<f64> {
        let mut v = t * self.obj.value(x);
        for c in self.cons {
            v += log_barrier(c.value(x))?.0;
        }
        Some(v)
    }

    fn derivs(&self, x: &[f64], t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.k;
        let mut scratch = vec![0.0; n];
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let d0 = self.obj.derivs(x, &mut scratch);
        let mut v = t * d0.value;
        for &(i, gi) in &d0.grad {
            grad[i] += t * gi;
        }
        self.obj.add_second_moment(&d0.probs, t, &mut hess);
        add_outer(&d0.grad, -t, &mut hess);
        for c in self.cons {
            let d = c.derivs(x, &mut scratch);
            let (b, w) = log_barrier(d.value).unwrap_or((f64::INFINITY, f64::INFINITY));
            v += b;
            for &(i, gi) in &d.grad {
                grad[i] += gi * w;
            }
            c.add_second_moment(&d.probs, w, &mut hess);
            add_outer(&d.grad, w * w, &mut hess);
        }
        (v, grad, hess)
    }
}

enum Centering {
    Converged,
    Stopped,
    MaxIters,
    Numeric,
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    // Jacobi scaling: curvatures of different variables can differ by many
    // orders of magnitude, and a shift relative to the largest one would swamp
    // the flat directions
    let n = grad.len();
    let dmax = (0..n).map(|i| hess[(i, i)]).fold(0.0f64, f64::max);
    let floor = 1e-300f64.max(dmax * 1e-30);
    let d: Vec<f64> = (0..n)
        .map(|i| 1.0 / hess[(i, i)].max(floor).sqrt())
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| hess[(i, j)] * d[i] * d[j]);
    let g = DVector::from_fn(n, |i, _| -grad[i] * d[i]);
    let mut delta = 1e-13;
    for _ in 0..12 {
        let mut h = scaled.clone();
        for i in 0..n {
            h[(i, i)] += delta;
        }
        if let Some(ch) = h.cholesky() {
            let y = ch.solve(&g);
            let dx = DVector::from_fn(n, |i, _| y[i] * d[i]);
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        delta *= 100.0;
    }
    None
}

fn center<B: Barrier>(
    b: &B,
    x: &mut [f64],
    t: f64,
    max_iters: usize,
    steps: &mut usize,
    stop: impl Fn(&[f64]) -> bool,
) -> Centering {
    for _ in 0..max_iters {
        let (f, g, h) = b.derivs(x, t);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Centering::Numeric;
        }
        let Some(mut dx) = newton_direction(&g, &h) else {
            return Centering::Numeric;
        };
        let len = dx.amax();
        if len > MAX_STEP {
            dx *= MAX_STEP / len;
        }
        let slope = g.dot(&dx);
        // relative to |f| since that is all the precision f carries
        if -slope / 2.0 <= NEWTON_TOL.max(1e-15 * f.abs()) {
            return Centering::Converged;
        }
        let mut step = 1.0;
        let mut trial = x.to_vec();
        loop {
            for i in 0..x.len() {
                trial[i] = x[i] + step * dx[i];
            }
            let slack = 1e-14 * f.abs();
            match b.value(&trial, t) {
                Some(v) if v <= f + ARMIJO * step * slope + slack => break,
                _ => {}
            }
            step *= 0.5;
            if step < 1e-12 {
                // no further progress at working precision
                return Centering::Converged;
            }
        }
        x.copy_from_slice(&trial);
        *steps += 1;
        if x.iter().any(|v| v.abs() > Z_LIMIT) {
            return Centering::Numeric;
        }
        if stop(x) {
            return Centering::Stopped;
        }
    }
    Centering::MaxIters
}

fn build_reduction(p: &GpProblem) -> Result<Option<Reduction>> {
    let n = p.vars.len();
    let mut used = vec![false; n];
    let mut mark = |posy: &Posynomial| {
        for t in posy.terms() {
            for &(s, _) in t.exponents() {
                used[s] = true;
            }
        }
    };
    mark(&p.objective);
    for c in &p.constraints {
        mark(&c.posy);
    }
    for e in &p.equalities {
        for &(s, _) in e.mono.exponents() {
            used[s] = true;
        }
    }
    if p.equalities.is_empty() {
        let sel = (0..n).filter(|&i| used[i]).collect();
        return Ok(Some(Reduction {
            z0: DVector::zeros(n),
            basis: Basis::Selection(sel),
        }));
    }

    let pinned: Vec<usize> = (0..n).filter(|&i| !used[i]).collect();
    let m = p.equalities.len() + pinned.len();
    let rows = m.max(n);
    let mut a = DMatrix::zeros(rows, n);
    let mut rhs = DVector::zeros(rows);
    for (i, e) in p.equalities.iter().enumerate() {
        for &(s, x) in e.mono.exponents() {
            a[(i, s)] = x;
        }
        rhs[i] = -e.mono.coeff().ln();
    }
    for (k, &s) in pinned.iter().enumerate() {
        a[(p.equalities.len() + k, s)] = 1.0;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(*v));
    let tol = 1e-10 * smax.max(1.0);
    let z0 = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let resid = (&a * &z0 - &rhs).amax();
    if resid > 1e-8 * (1.0 + rhs.amax()) {
        return Ok(None);
    }
    let vt = svd.v_t.as_ref().ok_or(Error::EigenFailure)?;
    let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (k, &i) in null.iter().enumerate() {
        basis.set_column(k, &vt.row(i).transpose());
    }
    Ok(Some(Reduction {
        z0,
        basis: Basis::Dense(basis),
    }))
}

/// Solves a geometric program. Strict constraints and exponential terms are
/// normalized first, so `p` may be given in either form.
pub fn solve(p: &GpProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let np = normalize(p, opts)?;
    let n = np.vars.len();
    let mut result = SolveResult {
        status: Status::NumericFailure,
        point: vec![1.0; n],
        objective_value: f64::NAN,
        constraint_values: Vec::new(),
        exp_constraint_values: Vec::new(),
        kkt_residual: f64::INFINITY,
        iterations: 0,
        objective_history: Vec::new(),
        phase1_value: None,
        stationarity: f64::NAN,
    };
    let finish = |mut r: SolveResult, z: &[f64]| -> Result<SolveResult> {
        r.point = z.iter().map(|v| v.exp()).collect();
        let or_nan = |v: Result<f64>| v.unwrap_or(f64::NAN);
        r.objective_value = or_nan(p.objective.eval(&r.point));
        r.constraint_values = p
            .constraints
            .iter()
            .map(|c| or_nan(c.posy.eval(&r.point)))
            .collect();
        r.exp_constraint_values = p
            .exp_constraints
            .iter()
            .map(|c| or_nan(c.eval(&r.point)))
            .collect();
        Ok(r)
    };

    let Some(red) = build_reduction(&np)? else {
        result.status = Status::Infeasible;
        return finish(result, &vec![0.0; n]);
    };
    let k = red.dim();
    let obj = Compiled::new(&np.objective, &red);
    let mut cons = Vec::with_capacity(np.constraints.len());
    for c in &np.constraints {
        let cc = Compiled::new(&c.posy, &red);
        if cc.is_constant() {
            let v = cc.value(&[]);
            if v >= 0.0 {
                result.status = Status::Infeasible;
                result.phase1_value = Some(v);
                return finish(result, red.z0.as_slice());
            }
        } else {
            cons.push(cc);
        }
    }
    let m = cons.len();

    // phase I
    let mut y = vec![0.0; k];
    let worst = cons
        .iter()
        .map(|c| c.value(&y))
        .fold(f64::NEG_INFINITY, f64::max);
    if m > 0 && worst >= 0.0 {
        let ph1 = Phase1 { cons: &cons, k };
        let mut x = y.clone();
        x.push(worst + 1.0);
        let mut t = opts.initial_t;
        let mut found = false;
        for _ in 0..MAX_OUTER {
            let outcome = center(
                &ph1,
                &mut x,
                t,
                opts.max_iters,
                &mut result.iterations,
                |x| x[k] < PHASE1_EARLY_EXIT,
            );
            let s = x[k];
            match outcome {
                Centering::Numeric => return finish(result, &red.lift(&x[..k])),
                Centering::MaxIters => {
                    result.status = Status::MaxIters;
                    result.phase1_value = Some(s);
                    return finish(result, &red.lift(&x[..k]));
                }
                Centering::Stopped => {
                    found = true;
                    break;
                }
                Centering::Converged => {}
            }
            if s < 0.0 {
                found = true;
                break;
            }
            let gap = (m as f64) / t;
            if s - gap > 0.0 || gap < opts.tol_kkt {
                result.status = Status::Infeasible;
                result.phase1_value = Some(s);
                return finish(result, &red.lift(&x[..k]));
            }
            t *= opts.mu;
        }
        if !found {
            result.status = Status::Infeasible;
            result.phase1_value = Some(x[k]);
            return finish(result, &red.lift(&x[..k]));
        }
        y.copy_from_slice(&x[..k]);
    }

    // phase II
    let ph2 = Phase2 {
        obj: &obj,
        cons: &cons,
        k,
    };
    let mut t = opts.initial_t;
    let mut status = Status::MaxIters;
    for _ in 0..MAX_OUTER {
        match center(
            &ph2,
            &mut y,
            t,
            opts.max_iters,
            &mut result.iterations,
            |_| false,
        ) {
            Centering::Numeric => {
                result.status = Status::NumericFailure;
                return finish(result, &red.lift(&y));
            }
            Centering::MaxIters => {
                status = Status::MaxIters;
                break;
            }
            _ => {}
        }
        result.objective_history.push(obj.value(&y).exp());
        let gap = m as f64 / t;
        if gap < opts.tol_kkt {
            status = Status::Optimal;
            break;
        }
        t *= opts.mu;
    }
    let (_, g, _) = ph2.derivs(&y, t);
    result.stationarity = g.amax() / t;
    result.kkt_residual = m as f64 / t;
    result.status = status;
    finish(result, &red.lift(&y))
}
