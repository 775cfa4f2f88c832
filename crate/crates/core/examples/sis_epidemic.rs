//! SIS epidemic control on a 20-node Erdős–Rényi graph. Spending grows with
//! the size of the adjacency uncertainty.
//!
//! ```bash
//! cargo run --example sis_epidemic
//! ```

use posgp::apps::{build_sis_problem, graphs, sis_investments, SisNetwork};
use posgp::gpsolve::SolveOptions;
use posgp::synth::{synthesize, Level, Requirement};
use posgp::sysmodel::linalg::sigma_max;

fn main() -> posgp::Result<()> {
    let edges = graphs::parse_edge_list(include_str!("../fixtures/er20.edges"))?;
    let a = graphs::adjacency(graphs::node_count(&edges), &edges)?;
    let norm = sigma_max(&a);
    let opts = SolveOptions::default();

    for frac in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let sn = SisNetwork::with_defaults(a.clone(), frac * norm);
        let sp = build_sis_problem(&sn, true)?;
        let req = Requirement::Robust {
            uncertainty: sp.uncertainty.clone(),
            gamma: Level::Fixed(sn.gamma),
        };
        let out = synthesize(&sp.system, &sp.cost, &sp.theta, &req, None, &opts)?;
        println!(
            "eps = {frac:.1}·|A|: cost {:.4} ({:?})",
            sp.cost.eval(out.theta())?,
            out.status()
        );

        if frac == 0.2 {
            // hubs get the most recovery investment
            let mut inv = sis_investments(&sn, &sp, out.theta());
            inv.sort_by(|x, y| y.pagerank.total_cmp(&x.pagerank));
            for i in inv.iter().take(3) {
                println!(
                    "  node {:>2}: pagerank {:.3}, beta {:.3}, delta {:.3}",
                    i.node, i.pagerank, i.beta, i.delta
                );
            }
        }
    }
    Ok(())
}
