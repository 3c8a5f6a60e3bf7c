//! The axis of the cone: its marginal approaches a shifted exponential, so
//! its L^p norms grow linearly in p and the direction is not subgaussian.

use subgauss::bodies::BodySpec;
use subgauss::construction::{certify, injected_set};
use subgauss::verify::{cone_axis_slope, cone_axis_tv, mgf_diverges, shifted_exponential_mgf};
use subgauss::Result;

fn main() -> Result<()> {
    for n in [50, 100, 200] {
        println!(
            "n = {n:>3}: slope of ||<X, axis>||_p / p = {:.3}, TV to the exponential = {:.4}",
            cone_axis_slope(n)?,
            cone_axis_tv(n)?
        );
    }
    for t in [0.5, 0.9, 0.99] {
        println!("E exp(t Y) at t = {t}: {:.4}", shifted_exponential_mgf(t));
    }
    println!("diverges at t = 1: {}", mgf_diverges(1.0));

    let n = 50;
    let body = BodySpec::cone(n)?;
    let mut axis = vec![0.0; n];
    axis[n - 1] = 1.0;
    let set = injected_set(n, vec![axis], 1.0);
    let cert = certify(&set, &body, None, true);
    let d = &cert.directions[0];
    println!(
        "certifying the axis: pass {}, growth slope {:?}, reasons {:?}",
        d.pass, d.growth_slope, d.reasons
    );
    Ok(())
}
