//! Buffer network on a seeded random DAG: the smallest H∞ level, then the
//! cost of designs at looser levels.

use posgp::apps::{build_buffer_network, graphs, BufferNetwork};
use posgp::gpsolve::SolveOptions;
use posgp::synth::{minimize_gamma, synthesize, Level, Requirement};
use posgp::sysmodel::hinf_norm;

fn main() -> posgp::Result<()> {
    let n = 12;
    let edges = graphs::random_dag(n, 0.25, 12);
    let net = BufferNetwork::new(n, &edges, 0.1, 5.0, 5.0)?;
    let bp = build_buffer_network(&net)?;
    for w in &bp.warnings {
        eprintln!("warning: {w}");
    }
    let opts = SolveOptions::default();

    let min = minimize_gamma(
        &bp.system,
        &bp.cost,
        &bp.theta,
        &Requirement::Hinf {
            gammainf: Level::Free,
        },
        None,
        &opts,
    )?;
    let gstar = min.level().expect("free level");
    println!("{} nodes, {} edges, gamma* = {gstar:.4}", n, edges.len());

    for f in [1.5, 2.0, 4.0] {
        let req = Requirement::Hinf {
            gammainf: Level::Fixed(f * gstar),
        };
        let out = synthesize(&bp.system, &bp.cost, &bp.theta, &req, None, &opts)?;
        let hinf = hinf_norm(&bp.system.instantiate(out.theta())?)?;
        println!(
            "gamma {:.4}: cost {:.4}, hinf {hinf:.4}",
            f * gstar,
            bp.cost.eval(out.theta())?
        );
    }
    Ok(())
}
