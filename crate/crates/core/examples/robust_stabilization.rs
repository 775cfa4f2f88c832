//! Robust decay under a bounded nonnegative perturbation, plus the dual
//! question: how much perturbation a fixed budget tolerates.
//!
//! ```bash
//! cargo run --example robust_stabilization
//! ```

use posgp::cli::read_problem;
use posgp::gpsolve::SolveOptions;
use posgp::synth::{synthesize, Level, Requirement, UncertaintyStructure};
use posgp::sysmodel::{robust_abscissa_estimate, BlockStructure};

fn main() -> posgp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/robust.toml");
    let p = read_problem(path.as_ref())?;
    let opts = SolveOptions::default();
    let blocks = BlockStructure::scalars(1);
    let gamma = 0.1;

    // δ must cover the worst perturbation ε plus the decay rate
    for eps in [0.0, 0.3, 1.0, 3.0] {
        let uncertainty = UncertaintyStructure {
            blocks: blocks.clone(),
            eps,
        };
        let req = Requirement::Robust {
            uncertainty,
            gamma: Level::Fixed(gamma),
        };
        let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
        let s = p.system.instantiate(out.theta())?;
        let worst = robust_abscissa_estimate(&s, &blocks, eps, 1000, 0)?;
        println!(
            "eps {eps:<4} delta* = {:.5}  worst abscissa {worst:.5}",
            out.theta()[0]
        );
    }

    let req = Requirement::RobustEpsMax { blocks, gamma };
    let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
    println!(
        "largest tolerable eps with delta <= 10: {:.5}",
        out.level().unwrap_or(f64::NAN)
    );
    Ok(())
}
