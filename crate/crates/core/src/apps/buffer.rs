use super::graphs::Edge;
use crate::error::{Error, Result};
use crate::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use crate::synth::{CostSpec, ThetaSet};
use crate::sysmodel::ParamSystem;

/// Flow network where node `i` forwards `ψ_i w_ij x_i` along each out-edge
/// and destinations drain at rate `φ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferNetwork {
    pub n: usize,
    /// Directed edges with resolved positive weights.
    pub edges: Vec<(usize, usize, f64)>,
    /// Weight of the flow outputs `αu` in `y`.
    pub alpha: f64,
    /// Upper bound `φ̄_i` (used for destinations) per node.
    pub phi_max: Vec<f64>,
    /// Upper bound `ψ̄_i` (used for non-destinations) per node.
    pub psi_max: Vec<f64>,
}

impl BufferNetwork {
    /// Missing weights default to `1/|N_i^out|`. Bounds are uniform.
    pub fn new(n: usize, edges: &[Edge], alpha: f64, phi_max: f64, psi_max: f64) -> Result<Self> {
        let mut outdeg = vec![0usize; n];
        for e in edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::DimensionMismatch(format!(
                    "edge {}→{} outside {n} nodes",
                    e.src, e.dst
                )));
            }
            outdeg[e.src] += 1;
        }
        let edges = edges
            .iter()
            .map(|e| (e.src, e.dst, e.weight.unwrap_or(1.0 / outdeg[e.src] as f64)))
            .collect();
        let bn = Self {
            n,
            edges,
            alpha,
            phi_max: vec![phi_max; n],
            psi_max: vec![psi_max; n],
        };
        bn.validate()?;
        Ok(bn)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "output weight must be nonnegative, got {}",
                self.alpha
            )));
        }
        if self.phi_max.len() != self.n || self.psi_max.len() != self.n {
            return Err(Error::DimensionMismatch(
                "bound vectors must have one entry per node".into(),
            ));
        }
        for &b in self.phi_max.iter().chain(&self.psi_max) {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Invalid(format!(
                    "parameter bounds must be positive, got {b}"
                )));
            }
        }
        for &(i, j, w) in &self.edges {
            if i >= self.n || j >= self.n {
                return Err(Error::DimensionMismatch(format!(
                    "edge {i}→{j} outside {} nodes",
                    self.n
                )));
            }
            if i == j {
                return Err(Error::Invalid(format!("self-loop at node {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Invalid(format!(
                    "edge {i}→{j} has non-positive weight {w}"
                )));
            }
        }
        if self.origins().is_empty() {
            return Err(Error::Invalid(
                "network has no origin (node without in-edges)".into(),
            ));
        }
        if self.destinations().is_empty() {
            return Err(Error::Invalid(
                "network has no destination (node without out-edges)".into(),
            ));
        }
        Ok(())
    }

    /// Nodes with empty in-neighborhood, ascending.
    pub fn origins(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| !self.edges.iter().any(|e| e.1 == i))
            .collect()
    }

    /// Nodes with empty out-neighborhood, ascending.
    pub fn destinations(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| !self.edges.iter().any(|e| e.0 == i))
            .collect()
    }

    fn out_weight(&self, i: usize) -> f64 {
        self.edges.iter().filter(|e| e.0 == i).map(|e| e.2).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BufferProblem {
    pub system: ParamSystem,
    pub cost: CostSpec,
    pub theta: ThetaSet,
    /// Non-fatal observations, e.g. isolated nodes.
    pub warnings: Vec<String>,
}

/// Variables are `phi[i]` for destinations, then `psi[i]` for the other
/// nodes; `Ã = A_G Ψ`, `R_ii = ψ_i Σ_j w_ij` or `φ_i`, `B` selects the
/// origins and `C = [I; αHΨ]` (flow rows dropped when `α = 0`).
pub fn build_buffer_network(bn: &BufferNetwork) -> Result<BufferProblem> {
    bn.validate()?;
    let n = bn.n;
    let dests = bn.destinations();
    let origins = bn.origins();
    let mut vars = VarSpace::default();
    let mut slot = vec![0usize; n];
    for &i in &dests {
        slot[i] = vars.push(format!("phi[{i}]"))?;
    }
    for i in (0..n).filter(|i| !dests.contains(i)) {
        slot[i] = vars.push(format!("psi[{i}]"))?;
    }

    let mut atilde = PosyMatrix::zeros(n, n);
    for &(j, i, w) in &bn.edges {
        let cur = atilde.get(i, j).cloned();
        let term = Posynomial::from(Monomial::var(slot[j]).scale(w)?);
        atilde.set(i, j, Some(cur.map_or(term.clone(), |c| c.add(&term))));
    }
    let r = DiagMonoMatrix::new(
        (0..n)
            .map(|i| {
                if dests.contains(&i) {
                    Ok(Monomial::var(slot[i]))
                } else {
                    Monomial::var(slot[i]).scale(bn.out_weight(i))
                }
            })
            .collect::<Result<_>>()?,
    );
    let b = PosyMatrix::from_fn(n, origins.len(), |i, k| {
        (origins[k] == i).then(Posynomial::one)
    });
    let flow_rows = if bn.alpha > 0.0 { bn.edges.len() } else { 0 };
    let mut c = PosyMatrix::zeros(n + flow_rows, n);
    for i in 0..n {
        c.set(i, i, Some(Posynomial::one()));
    }
    if flow_rows > 0 {
        for (l, &(src, _, w)) in bn.edges.iter().enumerate() {
            c.set(
                n + l,
                src,
                Some(Monomial::var(slot[src]).scale(bn.alpha * w)?.into()),
            );
        }
    }

    let cost = CostSpec::new(
        Posynomial::new((0..vars.len()).map(Monomial::var).collect())?,
        0.0,
    )?;
    let mut theta = ThetaSet::default();
    for i in 0..n {
        let bound = if dests.contains(&i) {
            bn.phi_max[i]
        } else {
            bn.psi_max[i]
        };
        theta
            .constraints
            .push(Monomial::var(slot[i]).scale(1.0 / bound)?.into());
    }
    let warnings = (0..n)
        .filter(|i| origins.contains(i) && dests.contains(i))
        .map(|i| format!("node {i} is isolated (both origin and destination)"))
        .collect();
    let system = ParamSystem::new(vars, atilde, r, b, c)?;
    Ok(BufferProblem {
        system,
        cost,
        theta,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::graphs::{random_dag, Edge};

    #[test]
    fn two_node_chain() {
        let bn = BufferNetwork::new(2, &[Edge::new(0, 1, 1.0)], 0.0, 5.0, 5.0).unwrap();
        let bp = build_buffer_network(&bn).unwrap();
        assert_eq!(bp.system.vars.names(), ["phi[1]", "psi[0]"]);
        // θ = (φ₂, ψ₁) = (3, 2)
        let s = bp.system.instantiate(&[3.0, 2.0]).unwrap();
        assert_eq!(s.f.as_slice(), &[-2.0, 2.0, 0.0, -3.0]);
        assert_eq!(s.h, nalgebra::DMatrix::identity(2, 2));
        assert_eq!(s.g.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn flow_outputs() {
        let bn = BufferNetwork::new(
            3,
            &[Edge::unweighted(0, 1), Edge::unweighted(0, 2)],
            0.1,
            5.0,
            5.0,
        )
        .unwrap();
        assert_eq!(bn.edges[0].2, 0.5);
        let bp = build_buffer_network(&bn).unwrap();
        assert_eq!(bp.system.ny(), 5);
        let theta = [1.0, 1.0, 4.0];
        let s = bp.system.instantiate(&theta).unwrap();
        assert!((s.h[(3, 0)] - 0.1 * 0.5 * 4.0).abs() < 1e-15);
    }

    #[test]
    fn conservation_on_random_dags() {
        for seed in 0..20 {
            let n = 8;
            let bn = BufferNetwork::new(n, &random_dag(n, 0.3, seed), 0.1, 5.0, 5.0).unwrap();
            let bp = build_buffer_network(&bn).unwrap();
            let theta: Vec<f64> = (0..bp.system.vars.len())
                .map(|k| 0.5 + 0.1 * k as f64)
                .collect();
            let s = bp.system.instantiate(&theta).unwrap();
            let dests = bn.destinations();
            for j in (0..n).filter(|j| !dests.contains(j)) {
                assert!(s.f.column(j).sum().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_networks() {
        assert!(BufferNetwork::new(
            2,
            &[Edge::new(0, 1, 1.0), Edge::new(1, 0, 1.0)],
            0.0,
            1.0,
            1.0
        )
        .is_err());
        assert!(BufferNetwork::new(2, &[Edge::new(0, 0, 1.0)], 0.0, 1.0, 1.0).is_err());
        let bn = BufferNetwork::new(3, &[Edge::new(0, 1, 1.0)], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(build_buffer_network(&bn).unwrap().warnings.len(), 1);
    }
}
