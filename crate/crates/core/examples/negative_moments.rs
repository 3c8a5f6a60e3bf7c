//! Negative moments of a norm on the sphere and under the Gaussian measure,
//! and the exact ratio between them.

use subgauss::bodies::BodySpec;
use subgauss::moments::negative::{
    gaussian_radial_prefactor, neg_moment_gaussian, neg_moment_sphere,
};
use subgauss::Result;

fn main() -> Result<()> {
    let n = 20;
    let cube = BodySpec::cube(n)?;
    // The support function of the cube is the norm whose unit ball is its polar.
    let norm = |u: &[f64]| cube.support(u).expect("closed form");
    for q in [1.0, 2.0, 5.0, 8.0] {
        let w = neg_moment_sphere(norm, q, n, 100_000, 5)?;
        let g = neg_moment_gaussian(norm, q, n, 100_000, 6)?;
        let factor = gaussian_radial_prefactor(n, q)?;
        println!(
            "q = {q:>3}: W = {:.4}, G = {:.4}, G / W = {:.4}, exact ratio {:.4}",
            w.value,
            g.value,
            g.value / w.value,
            factor
        );
    }
    for n in [20, 50, 100] {
        let f = gaussian_radial_prefactor(n, n as f64 / 2.0)?;
        println!(
            "n = {n:>3}: prefactor at q = n/2 over sqrt(n) = {:.4}",
            f / (n as f64).sqrt()
        );
    }
    Ok(())
}
