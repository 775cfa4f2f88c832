//! Hankel-norm and Schatten-norm designs on two decoupled channels with
//! singular values `1/(2k)` and `1/(4k)`. Larger `p` moves the Schatten
//! bound toward the Hankel norm, so the required gain drops.

use posgp::cli::parse_problem;
use posgp::gpsolve::SolveOptions;
use posgp::synth::{synthesize, Level, Requirement};
use posgp::sysmodel::{hankel_singular_values, schatten};

const PROBLEM: &str = r#"
variables = ["k"]

[system]
atilde = [[0, 0], [0, 0]]
r = ["k", "2*k"]
b = [[1, 0], [0, 1]]
c = [[1, 0], [0, 1]]

[cost]
expr = "k"
"#;

fn main() -> posgp::Result<()> {
    let p = parse_problem(PROBLEM)?;
    let opts = SolveOptions::default();
    let gamma = 0.5;

    let hankel = synthesize(
        &p.system,
        &p.cost,
        &p.theta,
        &Requirement::Hankel {
            gamma: Level::Fixed(gamma),
        },
        None,
        &opts,
    )?;
    let sv = hankel_singular_values(&p.system.instantiate(hankel.theta())?)?;
    println!(
        "hankel      k = {:.5}  sigma = {:.5?}",
        hankel.theta()[0],
        sv
    );

    for order in [2, 4, 8] {
        let req = Requirement::Schatten {
            p: order,
            gamma: Level::Fixed(gamma),
        };
        let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
        let sv = hankel_singular_values(&p.system.instantiate(out.theta())?)?;
        println!(
            "schatten {order}  k = {:.5}  S_p = {:.5}  ({:?})",
            out.theta()[0],
            schatten(&sv, order),
            out.status()
        );
    }
    Ok(())
}
