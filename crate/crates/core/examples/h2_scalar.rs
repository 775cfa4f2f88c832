//! Cheapest stable lag `ẋ = −θx + w` whose H² norm stays below 1/2.
//! The exact answer is `θ = 2`.

use posgp::gpsolve::SolveOptions;
use posgp::posyalg::{DiagMonoMatrix, Monomial, PosyMatrix, Posynomial, VarSpace};
use posgp::synth::{certify, synthesize, CertifyOptions, CostSpec, Level, Requirement, ThetaSet};
use posgp::sysmodel::{h2_norm, ParamSystem};

fn main() -> posgp::Result<()> {
    let vars = VarSpace::new(["theta"])?;
    let ps = ParamSystem::new(
        vars,
        PosyMatrix::zeros(1, 1),
        DiagMonoMatrix::new(vec![Monomial::var(0)]),
        PosyMatrix::from_numeric(&nalgebra::dmatrix![1.0])?,
        PosyMatrix::from_numeric(&nalgebra::dmatrix![1.0])?,
    )?;
    let cost = CostSpec::new(Posynomial::var(0), 0.0)?;
    let req = Requirement::H2 {
        gamma2: Level::Fixed(0.5),
    };

    let out = synthesize(
        &ps,
        &cost,
        &ThetaSet::unconstrained(),
        &req,
        None,
        &SolveOptions::default(),
    )?;
    let theta = out.theta()[0];
    let s = ps.instantiate(out.theta())?;
    println!("theta* = {theta:.6} (exact 2)");
    println!("h2     = {:.6} < 0.5", h2_norm(&s)?);
    println!(
        "certified: {}",
        certify(&ps, &out, &CertifyOptions::default())?.passed()
    );
    Ok(())
}
