//! Samples the unit-volume simplex by hit-and-run and compares it with the
//! direct sampler using two-sample KS tests along random directions. The
//! chain enters the tests with its effective sample size.

use subgauss::bodies::BodySpec;
use subgauss::sampling::{sample_uniform, validate_sampler, Method};
use subgauss::Result;

fn main() -> Result<()> {
    let n = 8;
    let body = BodySpec::simplex(n)?;
    let direct = sample_uniform(&body, 20_000, 1, Method::Direct)?;
    let chain = sample_uniform(&body, 20_000, 2, Method::default_hit_and_run(n))?;
    let report = validate_sampler(&body, &direct, &chain, 3)?;
    println!("per-direction KS level {:.2e}", report.per_direction_alpha);
    for (i, d) in report.directions.iter().enumerate().take(5) {
        println!(
            "direction {i}: D = {:.4}, p = {:.3}, chain ESS = {:.0}, mean z = {:+.2}, var z = {:+.2}",
            d.ks_statistic, d.ks_p_value, d.trial_ess, d.mean_z, d.variance_z
        );
    }
    let flagged = report.directions.iter().filter(|d| d.flagged).count();
    println!(
        "{} directions, {flagged} flagged, passed: {}",
        report.directions.len(),
        report.passed
    );
    Ok(())
}
