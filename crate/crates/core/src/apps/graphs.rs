//! Edge lists, adjacency matrices, fixture generators and PageRank.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Directed edge `src → dst`. A missing weight means "use the default".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: Option<f64>,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Self {
            src,
            dst,
            weight: Some(weight),
        }
    }

    pub fn unweighted(src: usize, dst: usize) -> Self {
        Self {
            src,
            dst,
            weight: None,
        }
    }
}

/// Parses `src dst [weight]` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |col: usize, msg: String| Error::Parse {
            line: lineno + 1,
            col,
            msg,
        };
        let col_of = |k: usize| raw.find(fields[k]).map_or(1, |c| c + 1);
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err(
                1,
                format!("expected `src dst [weight]`, got {} fields", fields.len()),
            ));
        }
        let node = |k: usize| {
            fields[k]
                .parse::<usize>()
                .map_err(|_| err(col_of(k), format!("invalid node id `{}`", fields[k])))
        };
        let (src, dst) = (node(0)?, node(1)?);
        let weight = match fields.get(2) {
            Some(w) => {
                let v: f64 = w
                    .parse()
                    .map_err(|_| err(col_of(2), format!("invalid weight `{w}`")))?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(err(col_of(2), format!("weight must be positive, got {v}")));
                }
                Some(v)
            }
            None => None,
        };
        edges.push(Edge { src, dst, weight });
    }
    Ok(edges)
}

/// Number of nodes implied by the largest id.
pub fn node_count(edges: &[Edge]) -> usize {
    edges
        .iter()
        .map(|e| e.src.max(e.dst) + 1)
        .max()
        .unwrap_or(0)
}

/// `A[dst, src] = weight` (missing weights count as 1).
pub fn adjacency(n: usize, edges: &[Edge]) -> Result<DMatrix<f64>> {
    let mut a = DMatrix::zeros(n, n);
    for e in edges {
        if e.src >= n || e.dst >= n {
            return Err(Error::DimensionMismatch(format!(
                "edge {}→{} outside {n} nodes",
                e.src, e.dst
            )));
        }
        a[(e.dst, e.src)] += e.weight.unwrap_or(1.0);
    }
    Ok(a)
}

/// Directed cycle `0 → 1 → … → n−1 → 0`.
pub fn ring(n: usize) -> Vec<Edge> {
    (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect()
}

/// Undirected star centered at node 0 (both directions).
pub fn star(n: usize) -> Vec<Edge> {
    (1..n)
        .flat_map(|i| [Edge::new(0, i, 1.0), Edge::new(i, 0, 1.0)])
        .collect()
}

/// Directed path `0 → 1 → … → n−1`.
pub fn chain(n: usize) -> Vec<Edge> {
    (1..n).map(|i| Edge::new(i - 1, i, 1.0)).collect()
}

/// Random DAG on a fixed topological order. Every node except the last gets
/// at least one out-edge and every node except the first at least one
/// in-edge, so node 0 is the unique origin and node n−1 a destination.
pub fn random_dag(n: usize, p: f64, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            adj[i][j] = rng.random::<f64>() < p;
        }
    }
    for i in 0..n.saturating_sub(1) {
        if !adj[i].iter().any(|&x| x) {
            let j = rng.random_range(i + 1..n);
            adj[i][j] = true;
        }
    }
    for j in 1..n {
        if !(0..j).any(|i| adj[i][j]) {
            let i = rng.random_range(0..j);
            adj[i][j] = true;
        }
    }
    let mut edges = Vec::new();
    for (i, row) in adj.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e {
                edges.push(Edge::unweighted(i, j));
            }
        }
    }
    edges
}

/// Undirected Erdős–Rényi graph G(n, p), each edge listed in both directions.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push(Edge::new(i, j, 1.0));
                edges.push(Edge::new(j, i, 1.0));
            }
        }
    }
    edges
}

/// PageRank of the graph with adjacency `a` (`a[dst, src]` = edge weight),
/// by power iteration. Dangling nodes spread their mass uniformly.
pub fn pagerank(a: &DMatrix<f64>, damping: f64) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let out: Vec<f64> = (0..n).map(|j| a.column(j).sum()).collect();
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let dangling: f64 = (0..n).filter(|&j| out[j] == 0.0).map(|j| r[j]).sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for j in 0..n {
            if out[j] > 0.0 {
                for i in 0..n {
                    next[i] += damping * a[(i, j)] / out[j] * r[j];
                }
            }
        }
        let diff: f64 = next.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum();
        r = next;
        if diff < 1e-13 {
            break;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_edge_lists() {
        let e = parse_edge_list("# demo\n0 1\n1 2 0.5  # weighted\n\n").unwrap();
        assert_eq!(e, vec![Edge::unweighted(0, 1), Edge::new(1, 2, 0.5)]);
        assert_eq!(node_count(&e), 3);
        let err = parse_edge_list("0 1\n1 x\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    col: 3,
                    ..
                }
            ),
            "{err:?}"
        );
        assert!(parse_edge_list("0 1 -2\n").is_err());
    }

    #[test]
    fn adjacency_convention() {
        let a = adjacency(2, &[Edge::new(0, 1, 3.0)]).unwrap();
        assert_eq!(a[(1, 0)], 3.0);
        assert_eq!(a[(0, 1)], 0.0);
    }

    #[test]
    fn dag_has_single_origin() {
        let n = 12;
        let e = random_dag(n, 0.25, 7);
        let a = adjacency(n, &e).unwrap();
        let origins: Vec<usize> = (0..n).filter(|&i| a.row(i).sum() == 0.0).collect();
        assert_eq!(origins, vec![0]);
        assert!(a.column(n - 1).sum() == 0.0);
        assert!(e.iter().all(|e| e.src < e.dst));
    }

    #[test]
    fn pagerank_sums_to_one_and_favours_hub() {
        let a = adjacency(6, &star(6)).unwrap();
        let r = pagerank(&a, 0.85);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(r[1..].iter().all(|&x| x < r[0]));
        // symmetric ring: uniform
        let r = pagerank(&adjacency(5, &ring(5)).unwrap(), 0.85);
        assert!(r.iter().all(|&x| (x - 0.2).abs() < 1e-10));
    }

    #[test]
    fn er_is_symmetric_and_seeded() {
        let a = adjacency(10, &erdos_renyi(10, 0.4, 3)).unwrap();
        assert_eq!(a, a.transpose());
        assert_eq!(erdos_renyi(10, 0.4, 3), erdos_renyi(10, 0.4, 3));
    }
}
