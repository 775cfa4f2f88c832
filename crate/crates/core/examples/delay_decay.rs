//! Time-delay design `ẋ = −θx + 0.5·x(t−1) + w`. The delay builder returns a
//! certified decay rate ρ; the true rate solves `r = θ − 0.5·eʳ`.

use posgp::cli::read_problem;
use posgp::gpsolve::SolveOptions;
use posgp::synth::{certify, synthesize, CertifyOptions, Level, Requirement};
use posgp::sysmodel::{delay_decay_rate, delay_gains};

fn main() -> posgp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/delay.toml");
    let p = read_problem(path.as_ref())?;
    let beta = p.beta.clone().expect("fixture defines beta");
    let opts = SolveOptions::default();

    for gamma in [10.0, 4.0, 2.0, 1.0] {
        let req = Requirement::Delay {
            beta: beta.clone(),
            gamma: Level::Fixed(gamma),
        };
        let out = synthesize(&p.system, &p.cost, &p.theta, &req, None, &opts)?;
        let s = p.system.instantiate(out.theta())?;
        let g = delay_gains(&s)?;
        println!(
            "1/rho < {gamma:<4}: theta {:.5}  rho {:.5}  true rate {:.5}  l1 {:.4}  linf {:.4}  certified {}",
            out.theta()[0],
            out.value("rho").unwrap_or(f64::NAN),
            delay_decay_rate(&s)?,
            g.l1,
            g.linf,
            certify(&p.system, &out, &CertifyOptions::default())?.passed(),
        );
    }
    Ok(())
}
