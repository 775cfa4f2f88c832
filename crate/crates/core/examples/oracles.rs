//! The numeric norm oracles on a fixed positive system, including both
//! Gramian routes.

use nalgebra::dmatrix;
use posgp::sysmodel::{
    gramians_kronecker, gramians_lyapunov, h2_norm_routes, hinf_sweep, norm_report, NumericSystem,
};

fn main() -> posgp::Result<()> {
    let s = NumericSystem::new(
        dmatrix![-2.0, 0.5, 0.0; 0.3, -1.5, 0.4; 0.0, 0.2, -1.0],
        dmatrix![1.0; 0.0; 0.5],
        dmatrix![0.0, 1.0, 1.0],
    )?;

    let r = norm_report(&s, &[2, 4])?;
    println!(
        "{}",
        serde_json::to_string_pretty(&r).expect("report serializes")
    );

    let (a, b) = (gramians_lyapunov(&s)?, gramians_kronecker(&s)?);
    println!(
        "gramian routes differ by {:.1e}",
        (&a.wc - &b.wc).amax().max((&a.wo - &b.wo).amax())
    );
    let (h2_lyap, h2_kron) = h2_norm_routes(&s)?;
    println!("h2 by route: {h2_lyap:.12} / {h2_kron:.12}");

    let omegas: Vec<f64> = std::iter::once(0.0)
        .chain((0..200).map(|k| 10f64.powf(-3.0 + 0.03 * k as f64)))
        .collect();
    println!(
        "hinf static gain {:.12}, sweep {:.12}",
        r.hinf,
        hinf_sweep(&s, &omegas)?
    );
    Ok(())
}
