use super::{Built, CostSpec, Level, Requirement, ThetaSet, TradeoffFn, DELAY_ARGS, MIXED_ARGS};
use crate::error::{Error, Result};
use crate::gpsolve::{Constraint, ExpConstraint, ExpTerm, GpProblem, Sense, SolveOptions};
use crate::posyalg::{bar_matrices, build_h2_vectors, Monomial, PosyMatrix, Posynomial};
use crate::sysmodel::{BlockStructure, Factorization, ParamSystem};

pub(super) fn build(
    ps: &ParamSystem,
    cost: &CostSpec,
    theta: &ThetaSet,
    req: &Requirement,
    budget: Option<f64>,
    opts: &SolveOptions,
) -> Result<Built> {
    let n_theta = ps.vars.len();
    let in_theta = |p: &Posynomial, what: &str| match p.max_slot() {
        Some(s) if s >= n_theta => Err(Error::DimensionMismatch(format!(
            "{what} refers to slot {s} outside the system variables"
        ))),
        _ => Ok(()),
    };
    in_theta(&cost.ltilde, "cost")?;
    for f in &theta.constraints {
        in_theta(f, "Θ constraint")?;
    }

    let mut b = Builder {
        gp: GpProblem::new(ps.vars.clone(), Posynomial::one()),
        ps,
        sourced: Vec::new(),
    };
    let level = |b: &mut Builder, l: Level| b.level(l, req.level_var());
    let objective = match req {
        Requirement::H2 { gamma2 } => {
            let g = level(&mut b, *gamma2)?;
            b.h2(&g)?;
            free_objective(*gamma2, &g)
        }
        Requirement::Hinf { gammainf } => {
            let g = level(&mut b, *gammainf)?;
            b.hinf(&g)?;
            free_objective(*gammainf, &g)
        }
        Requirement::Mixed { alpha, gamma } => {
            alpha.require(&MIXED_ARGS, &[super::Monotone::NonDecreasing; 2])?;
            let g = level(&mut b, *gamma)?;
            let g2 = Monomial::var(b.gp.vars.push("gamma2")?);
            let ginf = Monomial::var(b.gp.vars.push("gammainf")?);
            // the norm bounds below are strict and α is monotone, so a
            // nonconstant α needs no extra tightening
            let sense = if alpha.expr().max_slot().is_some() {
                Sense::NonStrict
            } else {
                Sense::Strict
            };
            b.tradeoff("mixed.alpha", alpha, &[&g2, &ginf], &g, sense)?;
            b.h2(&g2)?;
            b.hinf(&ginf)?;
            free_objective(*gamma, &g)
        }
        Requirement::Hankel { gamma } => {
            let g = level(&mut b, *gamma)?;
            b.hankel(&g)?;
            free_objective(*gamma, &g)
        }
        Requirement::Schatten { p, gamma } => {
            if *p < 2 || p % 2 != 0 {
                return Err(Error::Invalid(format!(
                    "Schatten order must be an even integer ≥ 2, got {p}"
                )));
            }
            let g = level(&mut b, *gamma)?;
            b.schatten(*p, &g)?;
            free_objective(*gamma, &g)
        }
        Requirement::Robust { uncertainty, gamma } => {
            let eps = uncertainty.eps;
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(Error::Invalid(format!(
                    "uncertainty bound must be nonnegative, got {eps}"
                )));
            }
            if let Level::Fixed(g) = gamma {
                if !(*g >= 0.0) || !g.is_finite() {
                    return Err(Error::Invalid(format!(
                        "decay rate must be nonnegative, got {g}"
                    )));
                }
            }
            let g = match gamma {
                Level::Fixed(g) if *g == 0.0 => None,
                l => Some(level(&mut b, *l)?),
            };
            if eps == 0.0 {
                b.nominal_decay(g.as_ref())?;
            } else {
                b.robust(
                    &uncertainty.blocks,
                    &Monomial::constant(eps.sqrt())?,
                    g.as_ref(),
                )?;
            }
            match (gamma, g) {
                (Level::Free, Some(g)) => Some(Posynomial::from(g.recip())),
                _ => None,
            }
        }
        Requirement::RobustEpsMax { blocks, gamma } => {
            if !(*gamma >= 0.0) || !gamma.is_finite() {
                return Err(Error::Invalid(format!(
                    "decay rate must be nonnegative, got {gamma}"
                )));
            }
            let eps = b.gp.vars.push("eps")?;
            let g = if *gamma == 0.0 {
                None
            } else {
                Some(Monomial::constant(*gamma)?)
            };
            b.robust(blocks, &Monomial::var_pow(eps, 0.5), g.as_ref())?;
            Some(Posynomial::from(Monomial::var_pow(eps, -1.0)))
        }
        Requirement::Delay { beta, gamma } => {
            use super::Monotone::*;
            beta.require(&DELAY_ARGS, &[NonIncreasing, NonDecreasing, NonDecreasing])?;
            let g = level(&mut b, *gamma)?;
            b.delay(beta, &g, opts)?;
            free_objective(*gamma, &g)
        }
    };

    for (i, f) in theta.constraints.iter().enumerate() {
        b.gp.push(format!("theta[{i}]"), f.clone(), Sense::NonStrict);
    }
    if let Some(lbar) = budget {
        let cap = lbar + cost.l0;
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::Invalid(format!(
                "budget L̄ + L0 must be positive, got {cap}"
            )));
        }
        b.gp.push("budget", cost.ltilde.scale(1.0 / cap)?, Sense::NonStrict);
    }
    let mut problem = b.gp;
    problem.objective = objective.unwrap_or_else(|| cost.ltilde.clone());
    prune_structural_zeros(&mut problem, &b.sourced);
    problem.validate()?;
    Ok(Built {
        problem,
        requirement: req.clone(),
        n_theta,
    })
}

/// A sourced variable whose exact value is zero (a Grammian entry not
/// reachable from any source) can only approach zero in a GP, which leaves
/// the optimum unattained. Such a variable is one whose lower-bounding rows
/// (all terms carry it with a negative exponent) have only terms containing
/// another such variable. Their terms are dropped from every other
/// constraint. Their own rows stay, being homogeneous in them, so the
/// stability they encode is still enforced.
fn prune_structural_zeros(gp: &mut GpProblem, sourced: &[usize]) {
    let n = gp.vars.len();
    let mut dead = vec![false; n];
    for &v in sourced {
        dead[v] = true;
    }
    let lower = |c: &Constraint, v: usize| {
        let ts = c.posy.terms();
        ts.iter().all(|t| t.exponent(v) <= 0.0) && ts.iter().any(|t| t.exponent(v) < 0.0)
    };
    loop {
        let mut changed = false;
        for v in 0..n {
            if !dead[v] {
                continue;
            }
            let live_term = gp.constraints.iter().filter(|c| lower(c, v)).any(|c| {
                c.posy.terms().iter().any(|t| {
                    t.exponent(v) < 0.0 && t.exponents().iter().all(|&(s, a)| a < 0.0 || !dead[s])
                })
            });
            if live_term {
                dead[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !dead.iter().any(|&d| d) {
        return;
    }
    gp.constraints.retain_mut(|c| {
        if (0..n).any(|v| dead[v] && lower(c, v)) {
            return true;
        }
        let kept: Vec<Monomial> = c
            .posy
            .terms()
            .iter()
            .filter(|t| !t.exponents().iter().any(|&(s, a)| a > 0.0 && dead[s]))
            .cloned()
            .collect();
        match Posynomial::new(kept) {
            Ok(p) => {
                c.posy = p;
                true
            }
            Err(_) => false,
        }
    });
}

/// Objective for a free level: the level itself.
fn free_objective(level: Level, g: &Monomial) -> Option<Posynomial> {
    match level {
        Level::Fixed(_) => None,
        Level::Free => Some(g.clone().into()),
    }
}

struct Builder<'a> {
    gp: GpProblem,
    ps: &'a ParamSystem,
    /// Variables fixed by linear equations with constant sources, whose
    /// structural zeros are exact.
    sourced: Vec<usize>,
}

/// `(M x)_i = Σ_j M_ij · scale(j) · x_j` for every row, `None` on structural zeros.
fn mat_vec(
    m: &PosyMatrix,
    x: &[usize],
    scale: impl Fn(usize) -> Monomial,
) -> Vec<Option<Posynomial>> {
    (0..m.rows())
        .map(|i| {
            let mut acc: Option<Posynomial> = None;
            for (j, p) in m.row(i) {
                let t = p.mul_monomial(&scale(j).mul(&Monomial::var(x[j])));
                acc = Some(match acc {
                    Some(a) => a.add(&t),
                    None => t,
                });
            }
            acc
        })
        .collect()
}

fn one(_: usize) -> Monomial {
    Monomial::one()
}

/// Entrywise sum of two row vectors of optional posynomials.
fn add_rows(a: Vec<Option<Posynomial>>, b: Vec<Option<Posynomial>>) -> Vec<Option<Posynomial>> {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(x.add(&y)),
            (x, None) => x,
            (None, y) => y,
        })
        .collect()
}

/// Row sums of a posynomial matrix (`M 𝟙`).
fn row_sums(m: &PosyMatrix) -> Vec<Option<Posynomial>> {
    (0..m.rows())
        .map(|i| {
            m.row(i).fold(None, |acc: Option<Posynomial>, (_, p)| {
                Some(match acc {
                    Some(a) => a.add(p),
                    None => p.clone(),
                })
            })
        })
        .collect()
}

impl Builder<'_> {
    fn aux(&mut self, name: &str, n: usize) -> Result<Vec<usize>> {
        (0..n)
            .map(|i| self.gp.vars.push(format!("{name}[{i}]")))
            .collect()
    }

    fn level(&mut self, level: Level, name: &str) -> Result<Monomial> {
        match level {
            Level::Fixed(g) if g > 0.0 && g.is_finite() => Monomial::constant(g),
            Level::Fixed(g) => Err(Error::Invalid(format!(
                "norm level must be positive, got {g}"
            ))),
            Level::Free => Ok(Monomial::var(self.gp.vars.push(name)?)),
        }
    }

    fn factorization(&self) -> Result<&Factorization> {
        self.ps
            .factorization
            .as_ref()
            .ok_or(Error::MissingFactorization)
    }

    /// Pushes `num / den < 1` per row, skipping structural zeros.
    fn rows(
        &mut self,
        label: &str,
        nums: Vec<Option<Posynomial>>,
        den: impl Fn(usize) -> Monomial,
    ) {
        for (i, num) in nums.into_iter().enumerate() {
            if let Some(num) = num {
                let c = num.mul_monomial(&den(i).recip());
                self.gp.push(format!("{label}[{i}]"), c, Sense::Strict);
            }
        }
    }

    /// `γ^{-1} f(args) < 1`, with the trade-off arguments bound to monomials.
    fn tradeoff(
        &mut self,
        label: &str,
        f: &TradeoffFn,
        args: &[&Monomial],
        level: &Monomial,
        sense: Sense,
    ) -> Result<()> {
        let mut acc: Option<Posynomial> = None;
        for t in f.expr().terms() {
            let mut m = Monomial::constant(t.coeff())?;
            for &(slot, a) in t.exponents() {
                m = m.mul(&args[slot].powf(a));
            }
            let m = m.mul(&level.recip());
            acc = Some(match acc {
                Some(p) => p.add(&m.into()),
                None => m.into(),
            });
        }
        let posy = acc.ok_or(Error::EmptyPosynomial)?;
        self.gp.push(label, posy, sense);
        Ok(())
    }

    /// Kronecker-indexed rows `(a, ·, b)` are divided by `r·(R0_a + R0_b)·ω`.
    fn kron_den<'f>(
        &self,
        f: &'f Factorization,
        pad: usize,
        omega: &'f [usize],
    ) -> impl Fn(usize) -> Monomial + 'f {
        let n = f.r0.len();
        move |k| {
            let a = k / (pad * n);
            let b = k % n;
            f.r.scale(f.r0[a] + f.r0[b])
                .expect("positive R0")
                .mul(&Monomial::var(omega[k]))
        }
    }

    fn h2(&mut self, gamma2: &Monomial) -> Result<()> {
        let ps = self.ps;
        let f = self.factorization()?.clone();
        let n = ps.nx();
        let omega = self.aux("omega", n * n)?;
        self.sourced.extend(&omega);
        let (bt, ct) = build_h2_vectors(&ps.b, &ps.c)?;
        let gain = mat_vec(&ct, &omega, one).pop().flatten();
        if let Some(g) = gain {
            self.gp
                .push("h2.gain", g.mul_monomial(&gamma2.powf(-2.0)), Sense::Strict);
        }
        let k = ps.atilde.kron_sum_symbolic()?;
        let nums = add_rows(
            mat_vec(&k, &omega, one),
            (0..n * n).map(|i| bt.get(i, 0).cloned()).collect(),
        );
        let den = self.kron_den(&f, 1, &omega);
        self.rows("h2.lyap", nums, den);
        Ok(())
    }

    fn hinf(&mut self, gammainf: &Monomial) -> Result<()> {
        let ps = self.ps;
        let (nx, nw, ny) = (ps.nx(), ps.nw(), ps.ny());
        let u = self.aux("u", nw)?;
        let v = self.aux("v", ny)?;
        let xi = self.aux("xi", nx)?;
        let zeta = self.aux("zeta", nx)?;
        let r = ps.r.diagonal().to_vec();
        let gi = gammainf.recip();

        self.rows("hinf.out", mat_vec(&ps.c, &xi, |_| gi.clone()), |k| {
            Monomial::var(v[k])
        });
        let nums = add_rows(mat_vec(&ps.atilde, &xi, one), mat_vec(&ps.b, &u, one));
        self.rows("hinf.state", nums, |i| r[i].mul(&Monomial::var(xi[i])));
        let bt = ps.b.transpose();
        self.rows("hinf.in", mat_vec(&bt, &zeta, |_| gi.clone()), |j| {
            Monomial::var(u[j])
        });
        let at = ps.atilde.transpose();
        let nums = add_rows(
            mat_vec(&at, &zeta, one),
            mat_vec(&ps.c.transpose(), &v, one),
        );
        self.rows("hinf.costate", nums, |i| r[i].mul(&Monomial::var(zeta[i])));
        Ok(())
    }

    fn hankel(&mut self, gamma: &Monomial) -> Result<()> {
        let ps = self.ps;
        let f = self.factorization()?.clone();
        let (nx, nw, ny) = (ps.nx(), ps.nw(), ps.ny());
        let bars = bar_matrices(&ps.b, &ps.c)?;
        let kw = PosyMatrix::kron_sum_padded(&ps.atilde, nw, &ps.atilde.transpose())?;
        let ky = PosyMatrix::kron_sum_padded(&ps.atilde.transpose(), ny, &ps.atilde)?;
        let b2c1 = bars.b2.matmul(&bars.c1)?;

        let v = self.aux("v", nx)?;
        let w1 = self.aux("omega1", nx * nx * nw)?;
        let w2 = self.aux("omega2", nx * nx * ny)?;
        let g2 = gamma.powf(-2.0);
        self.rows("hankel.head", mat_vec(&bars.b1, &w1, |_| g2.clone()), |i| {
            Monomial::var(v[i])
        });
        let nums = add_rows(mat_vec(&kw, &w1, one), mat_vec(&b2c1, &w2, one));
        let den = self.kron_den(&f, nw, &w1);
        self.rows("hankel.ctrb", nums, den);
        let nums = add_rows(mat_vec(&ky, &w2, one), mat_vec(&bars.c2, &v, one));
        let den = self.kron_den(&f, ny, &w2);
        self.rows("hankel.obsv", nums, den);
        Ok(())
    }

    fn schatten(&mut self, p: u32, gamma: &Monomial) -> Result<()> {
        let ps = self.ps;
        let f = self.factorization()?.clone();
        let (nx, nw, ny) = (ps.nx(), ps.nw(), ps.ny());
        let bars = bar_matrices(&ps.b, &ps.c)?;
        let kw = PosyMatrix::kron_sum_padded(&ps.atilde, nw, &ps.atilde.transpose())?;
        let ky = PosyMatrix::kron_sum_padded(&ps.atilde.transpose(), ny, &ps.atilde)?;
        let b2c1 = bars.b2.matmul(&bars.c1)?;
        let c2b1 = bars.c2.matmul(&bars.b1)?;
        let p = p as usize;

        let gi = self.aux("gamma_i", nx)?;
        self.sourced.extend(&gi);
        let sum = Posynomial::new(
            gi.iter()
                .map(|&s| Monomial::var(s).mul(&gamma.powf(-(p as f64))))
                .collect(),
        )?;
        self.gp.push("schatten.sum", sum, Sense::Strict);
        for i in 0..nx {
            let chain: Vec<Vec<usize>> = (1..=p)
                .map(|l| {
                    let len = nx * nx * if l % 2 == 1 { nw } else { ny };
                    self.aux(&format!("omega_{i}_{l}"), len)
                })
                .collect::<Result<_>>()?;
            self.sourced.extend(chain.iter().flatten());
            let head = mat_vec(&bars.b1, &chain[0], one).swap_remove(i);
            if let Some(h) = head {
                self.gp.push(
                    format!("schatten.head[{i}]"),
                    h.mul_monomial(&Monomial::var(gi[i]).recip()),
                    Sense::Strict,
                );
            }
            for l in 1..=p {
                let w = &chain[l - 1];
                let nums = if l % 2 == 1 {
                    add_rows(mat_vec(&kw, w, one), mat_vec(&b2c1, &chain[l], one))
                } else if l < p {
                    add_rows(mat_vec(&ky, w, one), mat_vec(&c2b1, &chain[l], one))
                } else {
                    let tail = (0..bars.c2.rows())
                        .map(|q| bars.c2.get(q, i).cloned())
                        .collect();
                    add_rows(mat_vec(&ky, w, one), tail)
                };
                let pad = if l % 2 == 1 { nw } else { ny };
                let den = self.kron_den(&f, pad, w);
                self.rows(&format!("schatten.chain_{i}_{l}"), nums, den);
            }
        }
        Ok(())
    }

    /// Scaled small-gain conditions with `Π = diag(π_k I)`. `sqrt_eps` is a
    /// constant or `ε^{1/2}`; `gamma = None` means zero decay rate.
    fn robust(
        &mut self,
        blocks: &BlockStructure,
        sqrt_eps: &Monomial,
        gamma: Option<&Monomial>,
    ) -> Result<()> {
        let ps = self.ps;
        blocks.check(ps.nw(), ps.ny())?;
        let (nx, m) = (ps.nx(), blocks.size());
        let pi = self.aux("pi", blocks.num_blocks())?;
        let u = self.aux("u", m)?;
        let v = self.aux("v", m)?;
        let xi = self.aux("xi", nx)?;
        let zeta = self.aux("zeta", nx)?;
        let owner = blocks.block_of();
        let r = ps.r.diagonal().to_vec();
        let pi_pow = |j: usize, a: f64| sqrt_eps.mul(&Monomial::var_pow(pi[owner[j]], a));
        let decay = |x: &[usize]| -> Vec<Option<Posynomial>> {
            (0..nx)
                .map(|i| gamma.map(|g| g.mul(&Monomial::var(x[i])).into()))
                .collect()
        };

        // √ε Π^{1/2} C ξ < v
        let nums: Vec<_> = mat_vec(&ps.c, &xi, one)
            .into_iter()
            .enumerate()
            .map(|(j, p)| p.map(|p| p.mul_monomial(&pi_pow(j, 0.5))))
            .collect();
        self.rows("robust.out", nums, |j| Monomial::var(v[j]));
        // Ãξ + γξ + √ε B Π^{-1/2} u < Rξ
        let nums = add_rows(
            add_rows(mat_vec(&ps.atilde, &xi, one), decay(&xi)),
            mat_vec(&ps.b, &u, |j| pi_pow(j, -0.5)),
        );
        self.rows("robust.state", nums, |i| r[i].mul(&Monomial::var(xi[i])));
        // √ε Π^{-1/2} Bᵀ ζ < u
        let nums: Vec<_> = mat_vec(&ps.b.transpose(), &zeta, one)
            .into_iter()
            .enumerate()
            .map(|(j, p)| p.map(|p| p.mul_monomial(&pi_pow(j, -0.5))))
            .collect();
        self.rows("robust.in", nums, |j| Monomial::var(u[j]));
        // Ãᵀζ + γζ + √ε Cᵀ Π^{1/2} v < Rζ
        let nums = add_rows(
            add_rows(mat_vec(&ps.atilde.transpose(), &zeta, one), decay(&zeta)),
            mat_vec(&ps.c.transpose(), &v, |j| pi_pow(j, 0.5)),
        );
        self.rows("robust.costate", nums, |i| {
            r[i].mul(&Monomial::var(zeta[i]))
        });
        Ok(())
    }

    /// `ε = 0`: only `(Ã + γI)ξ < Rξ` remains.
    fn nominal_decay(&mut self, gamma: Option<&Monomial>) -> Result<()> {
        let ps = self.ps;
        let xi = self.aux("xi", ps.nx())?;
        let r = ps.r.diagonal().to_vec();
        let decay = (0..ps.nx())
            .map(|i| gamma.map(|g| g.mul(&Monomial::var(xi[i])).into()))
            .collect();
        let nums = add_rows(mat_vec(&ps.atilde, &xi, one), decay);
        self.rows("robust.state", nums, |i| r[i].mul(&Monomial::var(xi[i])));
        Ok(())
    }

    fn delay(&mut self, beta: &TradeoffFn, gamma: &Monomial, opts: &SolveOptions) -> Result<()> {
        let ps = self.ps;
        let d = ps.delay.as_ref().ok_or(Error::MissingDelay)?;
        let nx = ps.nx();
        let xi = self.aux("xi", nx)?;
        let u = self.aux("u", nx)?;
        let v = self.aux("v", nx)?;
        let rho = Monomial::var(self.gp.vars.push("rho")?);
        let g1 = Monomial::var(self.gp.vars.push("gamma1")?);
        let ginf = Monomial::var(self.gp.vars.push("gammainf")?);
        let r = ps.r.diagonal().to_vec();
        let ad_tilde = ps.atilde.add(&d.ad)?;
        let c_total = ps.c.add(&d.cd)?;

        self.tradeoff(
            "delay.beta",
            beta,
            &[&rho, &g1, &ginf],
            gamma,
            Sense::Strict,
        )?;
        self.gp.push(
            "delay.rho_cap",
            Posynomial::from(rho.scale(d.h / opts.delay_rho_h_cap)?),
            Sense::NonStrict,
        );

        // (Ã_d + ρI + g(ρ) A_d) ξ < R ξ
        let base = mat_vec(&ad_tilde, &xi, one);
        let delayed = mat_vec(&d.ad, &xi, one);
        for i in 0..nx {
            let den = r[i].mul(&Monomial::var(xi[i])).recip();
            let rho_term = Posynomial::from(rho.mul(&Monomial::var(xi[i])).mul(&den));
            let base = Some(match &base[i] {
                Some(b) => b.mul_monomial(&den).add(&rho_term),
                None => rho_term,
            });
            let terms = match &delayed[i] {
                Some(a) => vec![ExpTerm {
                    arg: rho.clone(),
                    h: d.h,
                    mult: a.mul_monomial(&den),
                }],
                None => Vec::new(),
            };
            self.gp.exp_constraints.push(ExpConstraint {
                label: format!("delay.decay[{i}]"),
                base,
                terms,
                sense: Sense::Strict,
            });
        }
        // Ã_dᵀ u + (C + C_d)ᵀ 𝟙 < R u
        let nums = add_rows(
            mat_vec(&ad_tilde.transpose(), &u, one),
            row_sums(&c_total.transpose()),
        );
        self.rows("delay.l1_state", nums, |i| r[i].mul(&Monomial::var(u[i])));
        // Bᵀ u < γ₁
        self.rows("delay.l1_gain", mat_vec(&ps.b.transpose(), &u, one), |_| {
            g1.clone()
        });
        // Ã_d v + B 𝟙 < R v
        let nums = add_rows(mat_vec(&ad_tilde, &v, one), row_sums(&ps.b));
        self.rows("delay.linf_state", nums, |i| r[i].mul(&Monomial::var(v[i])));
        // (C + C_d) v < γ∞
        self.rows("delay.linf_gain", mat_vec(&c_total, &v, one), |_| {
            ginf.clone()
        });
        Ok(())
    }
}
