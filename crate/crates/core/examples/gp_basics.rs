//! A small geometric program solved directly, without any system model.
//!
//! Minimize `x/y + y` subject to `2/x + x·y/4 ≤ 1` and `y ≥ 1/4`.
//!
//! ```bash
//! cargo run --example gp_basics
//! ```

use posgp::cli::expr::parse_nonzero;
use posgp::gpsolve::{check_feasibility, solve, GpProblem, Sense, SolveOptions};
use posgp::posyalg::VarSpace;

fn main() -> posgp::Result<()> {
    let vars = VarSpace::new(["x", "y"])?;
    let p = |s: &str| parse_nonzero(s, &vars, 1, 1);

    let mut gp = GpProblem::new(vars.clone(), p("x/y + y")?);
    gp.push("budget", p("2/x + x*y/4")?, Sense::NonStrict);
    gp.push("floor", p("0.25/y")?, Sense::NonStrict);

    let opts = SolveOptions::default();
    let r = solve(&gp, &opts)?;
    println!("status     {:?}", r.status);
    for (name, v) in vars.names().iter().zip(&r.point) {
        println!("{name:<10} {v:.6}");
    }
    println!("objective  {:.6}", r.objective_value);
    println!("iterations {}", r.iterations);

    let fr = check_feasibility(&gp, &r.point, 0.0)?;
    println!("feasible   {}", fr.strictly_feasible);
    Ok(())
}
