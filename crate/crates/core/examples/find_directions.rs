//! Greedy search for orthonormal subgaussian directions in the cube and
//! certification of every accepted direction.

use subgauss::bodies::BodySpec;
use subgauss::construction::{make_grid, prepare, FindOptions};
use subgauss::moments::EvaluatorKind;
use subgauss::Result;

fn main() -> Result<()> {
    let n = 16;
    let body = BodySpec::cube(n)?;
    let grid = make_grid(n, 0.25, 4.0, 0.05)?;
    println!("grid exponents {:?}", grid.exponents);
    let prep = prepare(&body, 50_000, 3, EvaluatorKind::Auto)?;
    let set = prep.find(&grid, &FindOptions::default())?;
    let (off, diag) = set.orthonormality_error();
    println!(
        "accepted {} of {} from {} candidates; orthonormality error {:.1e} / {:.1e}",
        set.thetas.len(),
        set.target_m,
        set.stats.candidates,
        off,
        diag
    );
    let cert = prep.certify(&set, false);
    for d in cert.directions.iter().take(4) {
        println!(
            "theta {}: ratio range [{:.3}, {:.3}], pass {}",
            d.theta_id, d.inf_ratio, d.sup_ratio, d.pass
        );
    }
    println!(
        "all certified: {}, empirical c = {:.3}",
        cert.all_pass, cert.empirical_c
    );
    Ok(())
}
