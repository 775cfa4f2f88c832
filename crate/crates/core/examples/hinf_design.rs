//! H∞ design on a two-compartment model read from TOML, followed by a
//! comparison of the static gain with a frequency sweep.
//!
//! ```bash
//! cargo run --example hinf_design
//! ```

use posgp::cli::parse_problem;
use posgp::gpsolve::SolveOptions;
use posgp::synth::{minimize_gamma, synthesize, Level, Requirement};
use posgp::sysmodel::{hinf_norm, hinf_sweep};

const PROBLEM: &str = r#"
variables = ["k", "g"]

[system]
atilde = [[0, "0.5*k"], ["0.3*k", 0]]
r = ["k", "2*k"]
b = [["g"], [0.5]]
c = [[1, 1]]

[cost]
expr = "k + 1/g"

[theta]
constraints = ["k/10", "g/10"]
"#;

fn main() -> posgp::Result<()> {
    let p = parse_problem(PROBLEM)?;
    let opts = SolveOptions::default();

    // the smallest level reachable inside Θ
    let best = minimize_gamma(
        &p.system,
        &p.cost,
        &p.theta,
        &Requirement::Hinf {
            gammainf: Level::Free,
        },
        None,
        &opts,
    )?;
    let gstar = best.level().expect("free level is a variable");
    println!("smallest achievable hinf: {gstar:.5}");

    for f in [1.2, 2.0, 4.0] {
        let req = Requirement::Hinf {
            gammainf: Level::Fixed(f * gstar),
        };
        let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
        let s = p.system.instantiate(out.theta())?;
        let omegas: Vec<f64> = (0..201)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 200.0))
            .collect();
        println!(
            "gamma {:.4}: cost {:.4}  k {:.4}  g {:.4}  hinf {:.5}  sweep {:.5}",
            f * gstar,
            p.cost.eval(out.theta())?,
            out.theta()[0],
            out.theta()[1],
            hinf_norm(&s)?,
            hinf_sweep(&s, &omegas)?,
        );
    }
    Ok(())
}
