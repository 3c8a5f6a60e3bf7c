//! Puts the cone into isotropic position and reports the isotropic constant
//! together with the covariance residual after the map.

use subgauss::bodies::BodySpec;
use subgauss::isotropy::isotropize;
use subgauss::sampling::{default_method, sample_uniform};
use subgauss::Result;

fn main() -> Result<()> {
    let n = 5;
    let body = BodySpec::cone(n)?;
    let batch = sample_uniform(&body, 100_000, 7, default_method(&body))?;
    let (cov, t) = isotropize(&batch)?;
    println!("covariance diagonal:");
    for i in 0..n {
        println!("  {:.5}", cov.sigma[(i, i)]);
    }
    println!("L_K = {:.5} (cross-check {:?})", t.lk, t.lk_cross_check);
    println!("det T = {:.6}", t.det_check);
    println!(
        "residual |Cov(TX) - L_K^2 I|_F = {:.2e}, bootstrap bound {:.2e}",
        t.cov_residual.unwrap_or(f64::NAN),
        t.cov_ci.unwrap_or(f64::NAN)
    );
    Ok(())
}
