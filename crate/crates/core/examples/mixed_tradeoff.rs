//! Mixed H²/H∞ design: `γ₂ + γ∞ < γ`, traced over a range of γ.

use posgp::cli::read_problem;
use posgp::gpsolve::SolveOptions;
use posgp::synth::{synthesize, Level, Requirement};
use posgp::sysmodel::{h2_norm, hinf_norm};

fn main() -> posgp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/mixed.toml");
    let p = read_problem(path.as_ref())?;
    let alpha = p.alpha.clone().expect("fixture defines alpha");
    let opts = SolveOptions::default();

    println!(
        "{:>6} {:>9} {:>8} {:>8} {:>8}",
        "gamma", "cost", "h2", "hinf", "sum"
    );
    for gamma in [2.0, 2.5, 3.0, 4.0, 6.0] {
        let req = Requirement::Mixed {
            alpha: alpha.clone(),
            gamma: Level::Fixed(gamma),
        };
        let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
        if !out.is_optimal() {
            println!("{gamma:>6.2} {:?}", out.status());
            continue;
        }
        let s = p.system.instantiate(out.theta())?;
        let (h2, hinf) = (h2_norm(&s)?, hinf_norm(&s)?);
        println!(
            "{gamma:>6.2} {:>9.4} {h2:>8.4} {hinf:>8.4} {:>8.4}",
            p.cost.eval(out.theta())?,
            h2 + hinf
        );
    }
    Ok(())
}
