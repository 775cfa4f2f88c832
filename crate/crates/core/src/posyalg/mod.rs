//! Monomials, posynomials and posynomial-valued matrices.
//!
//! Variables are addressed by their slot in a [`VarSpace`]. Slots never move,
//! so expressions built over a space stay valid after the space is extended
//! with auxiliary variables.

mod logeval;
mod matrix;

pub use logeval::LogEval;
pub use matrix::{bar_matrices, build_h2_vectors, BarMatrices, DiagMonoMatrix, PosyMatrix};

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Ordered list of distinct positive decision variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarSpace {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut space = Self::default();
        for n in names {
            space.push(n)?;
        }
        Ok(space)
    }

    /// Appends a variable and returns its slot.
    pub fn push(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Invalid("variable names must be non-empty".into()));
        }
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateVariable(name));
        }
        let slot = self.names.len();
        self.index.insert(name.clone(), slot);
        self.names.push(name);
        Ok(slot)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.slot(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// True when `other` starts with exactly the variables of `self`.
    pub fn is_prefix_of(&self, other: &VarSpace) -> bool {
        self.names.len() <= other.names.len()
            && self.names.iter().zip(&other.names).all(|(a, b)| a == b)
    }

    /// Builds a dense point from named values. Every variable must be given.
    pub fn point<'a, I>(&self, values: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut point = vec![f64::NAN; self.len()];
        for (name, v) in values {
            point[self.require(name)?] = v;
        }
        for (slot, v) in point.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::MissingVariable(slot));
            }
            if !(*v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive {
                    name: self.names[slot].clone(),
                    value: *v,
                });
            }
        }
        Ok(point)
    }
}

/// `coeff · Π v_i^{a_i}` with a strictly positive coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coeff: f64,
    // sorted by slot, no zero exponents
    exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn new<I>(coeff: f64, exps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        if !(coeff > 0.0) || !coeff.is_finite() {
            return Err(Error::NonPositiveCoefficient(coeff));
        }
        let mut raw: Vec<(usize, f64)> = exps.into_iter().collect();
        raw.sort_by_key(|(s, _)| *s);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
        for (s, a) in raw {
            if !a.is_finite() {
                return Err(Error::Invalid(format!("non-finite exponent {a}")));
            }
            match merged.last_mut() {
                Some((ls, la)) if *ls == s => *la += a,
                _ => merged.push((s, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        Ok(Self {
            coeff,
            exps: merged,
        })
    }

    pub fn constant(coeff: f64) -> Result<Self> {
        Self::new(coeff, [])
    }

    pub fn one() -> Self {
        Self {
            coeff: 1.0,
            exps: Vec::new(),
        }
    }

    /// The monomial `v_slot`.
    pub fn var(slot: usize) -> Self {
        Self {
            coeff: 1.0,
            exps: vec![(slot, 1.0)],
        }
    }

    /// The monomial `v_slot^power`.
    pub fn var_pow(slot: usize, power: f64) -> Self {
        let exps = if power == 0.0 {
            Vec::new()
        } else {
            vec![(slot, power)]
        };
        Self { coeff: 1.0, exps }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(usize, f64)] {
        &self.exps
    }

    pub fn exponent(&self, slot: usize) -> f64 {
        self.exps
            .binary_search_by_key(&slot, |(s, _)| *s)
            .map(|i| self.exps[i].1)
            .unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn max_slot(&self) -> Option<usize> {
        self.exps.last().map(|(s, _)| *s)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.coeff * c, self.exps.iter().copied())
    }

    pub fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Self::one();
        }
        Self {
            coeff: self.coeff.powf(p),
            exps: self.exps.iter().map(|&(s, a)| (s, a * p)).collect(),
        }
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() || j < other.exps.len() {
            let take_left =
                j == other.exps.len() || (i < self.exps.len() && self.exps[i].0 < other.exps[j].0);
            let take_right =
                i == self.exps.len() || (j < other.exps.len() && other.exps[j].0 < self.exps[i].0);
            if take_left {
                exps.push(self.exps[i]);
                i += 1;
            } else if take_right {
                exps.push(other.exps[j]);
                j += 1;
            } else {
                let a = self.exps[i].1 + other.exps[j].1;
                if a != 0.0 {
                    exps.push((self.exps[i].0, a));
                }
                i += 1;
                j += 1;
            }
        }
        Monomial {
            coeff: self.coeff * other.coeff,
            exps,
        }
    }

    /// Moves every exponent from slot `s` to slot `map(s)`.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Monomial {
        Monomial::new(self.coeff, self.exps.iter().map(|&(s, a)| (map(s), a)))
            .expect("coefficient already validated")
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let mut v = self.coeff;
        for &(s, a) in &self.exps {
            let x = *point.get(s).ok_or(Error::MissingVariable(s))?;
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::NonPositive {
                    name: format!("#{s}"),
                    value: x,
                });
            }
            v *= x.powf(a);
        }
        Ok(v)
    }

    /// `log c + aᵀz`.
    pub fn log_eval(&self, z: &[f64]) -> Result<f64> {
        let mut v = self.coeff.ln();
        for &(s, a) in &self.exps {
            v += a * *z.get(s).ok_or(Error::MissingVariable(s))?;
        }
        Ok(v)
    }

    fn key(&self) -> Vec<(usize, u64)> {
        self.exps.iter().map(|&(s, a)| (s, a.to_bits())).collect()
    }

    pub fn display(&self, vars: &VarSpace) -> String {
        let mut parts = Vec::new();
        if self.coeff != 1.0 || self.exps.is_empty() {
            parts.push(fmt_num(self.coeff));
        }
        for &(s, a) in &self.exps {
            let name = vars
                .names
                .get(s)
                .cloned()
                .unwrap_or_else(|| format!("#{s}"));
            if a == 1.0 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{}", fmt_num(a)));
            }
        }
        parts.join("*")
    }
}

fn fmt_num(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:?}").trim_end_matches(".0").to_string()
}

/// A non-empty sum of monomials. Like terms are merged on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyPosynomial);
        }
        Ok(Self {
            terms: merge_like_terms(terms),
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Ok(Monomial::constant(c)?.into())
    }

    pub fn one() -> Self {
        Monomial::one().into()
    }

    pub fn var(slot: usize) -> Self {
        Monomial::var(slot).into()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn as_monomial(&self) -> Option<&Monomial> {
        if self.is_monomial() {
            self.terms.first()
        } else {
            None
        }
    }

    pub fn max_slot(&self) -> Option<usize> {
        self.terms.iter().filter_map(Monomial::max_slot).max()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.terms.iter().map(|t| t.eval(point)).sum()
    }

    pub fn add(&self, other: &Posynomial) -> Posynomial {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Posynomial {
            terms: merge_like_terms(terms),
        }
    }

    pub fn mul(&self, other: &Posynomial) -> Posynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        Posynomial {
            terms: merge_like_terms(terms),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t.mul(m)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Result<Posynomial> {
        let terms = self
            .terms
            .iter()
            .map(|t| t.scale(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Posynomial { terms })
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Posynomial {
        let mut acc = Posynomial::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn remap(&self, map: impl Fn(usize) -> usize + Copy) -> Posynomial {
        Posynomial {
            terms: merge_like_terms(self.terms.iter().map(|t| t.remap(map)).collect()),
        }
    }

    pub fn display(&self, vars: &VarSpace) -> String {
        self.terms
            .iter()
            .map(|t| t.display(vars))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

fn merge_like_terms(terms: Vec<Monomial>) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = Vec::with_capacity(terms.len());
    let mut seen: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
    for t in terms {
        match seen.get(&t.key()) {
            Some(&i) => out[i].coeff += t.coeff,
            None => {
                seen.insert(t.key(), out.len());
                out.push(t);
            }
        }
    }
    out
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

impl Add for &Posynomial {
    type Output = Posynomial;
    fn add(self, rhs: &Posynomial) -> Posynomial {
        Posynomial::add(self, rhs)
    }
}

impl Mul for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Posynomial) -> Posynomial {
        Posynomial::mul(self, rhs)
    }
}

impl Mul<&Monomial> for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Monomial) -> Posynomial {
        self.mul_monomial(rhs)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(&VarSpace::default()))
    }
}

impl fmt::Display for Posynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(&VarSpace::default()))
    }
}

/// Adds two optional entries, treating `None` as a structural zero.
pub fn add_opt(a: Option<Posynomial>, b: Option<&Posynomial>) -> Option<Posynomial> {
    match (a, b) {
        (None, None) => None,
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b.clone()),
        (Some(a), Some(b)) => Some(a.add(b)),
    }
}
