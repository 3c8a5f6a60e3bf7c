//! Negative moments of norms over the sphere, Gaussian space and the body.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::{block_ranges, LogSumExp};
use crate::rng::{Domain, Streams};
use crate::sampling::{sphere_point, SampleBatch, BLOCK};
use crate::stats::{block_bootstrap, BOOTSTRAP_BLOCKS, BOOTSTRAP_SEED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NegFunctional {
    /// `(int_S ||u||^{-q} dsigma)^{-1/q}`
    WMinusQ,
    /// `(int_K |x|^q dx)^{1/q}`
    IQ,
    /// `(int ||y||^{-q} dgamma_n)^{-1/q}`
    GMinusQ,
}

#[derive(Clone, Debug, Serialize)]
pub struct NegMomentEstimate {
    pub functional: NegFunctional,
    pub q: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Exact ratio `G_{-q} / W_{-q}` for any norm:
/// `(2^{-q/2} Gamma((n-q)/2) / Gamma(n/2))^{-1/q}`, valid for `0 < q < n`.
pub fn gaussian_radial_prefactor(n: usize, q: f64) -> Result<f64> {
    let nf = n as f64;
    if !(q > 0.0 && q < nf) {
        return Err(Error::QOutOfRange {
            q,
            range: format!("0 < q < {n}"),
        });
    }
    let ln_inner = -0.5 * q * 2f64.ln() + ln_gamma(0.5 * (nf - q)) - ln_gamma(0.5 * nf);
    Ok((-ln_inner / q).exp())
}

/// `lim_{q -> 0+}` of the prefactor: `exp((psi(n/2) + ln 2) / 2)`.
pub fn prefactor_small_q_limit(n: usize) -> f64 {
    (0.5 * (digamma(0.5 * n as f64) + 2f64.ln())).exp()
}

/// Power mean `(mean r_i^{s})^{1/s}` of positive values given as `ln r_i`,
/// with a block-bootstrap interval.
fn log_power_mean(ln_r: &[f64], s: f64, seed: u64) -> (f64, f64, f64, f64) {
    let blocks = block_ranges(ln_r.len(), BOOTSTRAP_BLOCKS);
    let per_block: Vec<(f64, f64)> = blocks
        .iter()
        .map(|r| {
            let mut acc = LogSumExp::default();
            ln_r[r.clone()].iter().for_each(|l| acc.push(s * l));
            (acc.value(), r.len() as f64)
        })
        .collect();
    let combine = |w: Option<&[u32]>| {
        let mut acc = LogSumExp::default();
        let mut count = 0.0;
        for (i, (v, c)) in per_block.iter().enumerate() {
            let wi = w.map_or(1.0, |w| w[i] as f64);
            if wi > 0.0 {
                acc.push(v + wi.ln());
                count += wi * c;
            }
        }
        ((acc.value() - count.ln()) / s).exp()
    };
    let value = combine(None);
    let boot = block_bootstrap(per_block.len(), BOOTSTRAP_SEED ^ seed, |w| combine(Some(w)));
    (
        value,
        boot.low.min(value),
        boot.high.max(value),
        boot.std_err,
    )
}

fn check_q(q: f64, n: usize) -> Result<()> {
    if !(q > 0.0 && q <= 0.5 * n as f64) {
        return Err(Error::QOutOfRange {
            q,
            range: format!("0 < q <= n/2 = {}", 0.5 * n as f64),
        });
    }
    Ok(())
}

fn ln_norms<F, G>(norm: &F, draw: G, samples: usize, seed: u64, domain: Domain) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&mut crate::rng::StreamRng) -> Vec<f64> + Sync,
{
    let streams = Streams::new(seed, domain);
    block_ranges(samples, samples.div_ceil(BLOCK))
        .into_par_iter()
        .enumerate()
        .map(|(b, range)| {
            let mut rng = streams.stream(b as u64);
            range
                .map(|_| norm(&draw(&mut rng)).ln())
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// `W_{-q}` of the body whose polar norm is `polar_norm`, over `samples`
/// uniform directions. Requires `0 < q <= n/2`.
pub fn neg_moment_sphere<F>(
    polar_norm: F,
    q: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<NegMomentEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_q(q, n)?;
    let ln_r = ln_norms(
        &polar_norm,
        |rng| sphere_point(n, rng),
        samples,
        seed,
        Domain::Sphere,
    );
    let (value, lo, hi, se) = log_power_mean(&ln_r, -q, seed);
    Ok(NegMomentEstimate {
        functional: NegFunctional::WMinusQ,
        q,
        value,
        ci_low: lo,
        ci_high: hi,
        std_err: se,
        samples,
    })
}

/// `G_{-q}` over `samples` standard Gaussian points. Requires `0 < q <= n/2`.
pub fn neg_moment_gaussian<F>(
    polar_norm: F,
    q: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<NegMomentEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_q(q, n)?;
    let draw = |rng: &mut crate::rng::StreamRng| {
        (0..n)
            .map(|_| StandardNormal.sample(rng))
            .collect::<Vec<f64>>()
    };
    let ln_r = ln_norms(&polar_norm, draw, samples, seed, Domain::Gaussian);
    let (value, lo, hi, se) = log_power_mean(&ln_r, -q, seed);
    Ok(NegMomentEstimate {
        functional: NegFunctional::GMinusQ,
        q,
        value,
        ci_low: lo,
        ci_high: hi,
        std_err: se,
        samples,
    })
}

/// `I_q = (E|X|^q)^{1/q}` over a uniform sample of a volume-one body.
/// Needs `q != 0` and `q >= -n/2` so the power mean has finite variance.
pub fn euclid_moment(batch: &SampleBatch, q: f64) -> Result<NegMomentEstimate> {
    let n = batch.dim as f64;
    if q == 0.0 || q < -0.5 * n || q <= -n {
        return Err(Error::QOutOfRange {
            q,
            range: format!("q != 0 and q >= -n/2 = {}", -0.5 * n),
        });
    }
    let ln_r: Vec<f64> = batch
        .rows()
        .map(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>().ln())
        .collect();
    let (value, lo, hi, se) = log_power_mean(&ln_r, q, batch.seed);
    Ok(NegMomentEstimate {
        functional: NegFunctional::IQ,
        q,
        value,
        ci_low: lo,
        ci_high: hi,
        std_err: se,
        samples: batch.len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::BodySpec;
    use crate::sampling::{sample_uniform, Method};

    fn euclid(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn prefactor_values() {
        assert!((gaussian_radial_prefactor(4, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(gaussian_radial_prefactor(4, 4.0).is_err());
        let r = gaussian_radial_prefactor(100, 10.0).unwrap() / 10.0;
        assert!((0.5..=1.5).contains(&r));
        let lim = prefactor_small_q_limit(10);
        assert!((gaussian_radial_prefactor(10, 1e-6).unwrap() - lim).abs() < 1e-5);
    }

    #[test]
    fn sphere_moment_of_the_ball_is_one() {
        let w = neg_moment_sphere(euclid, 2.0, 6, 2000, 1).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
        let w = neg_moment_sphere(|x| 3.0 * euclid(x), 2.0, 6, 2000, 1).unwrap();
        assert!((w.value - 3.0).abs() < 1e-12, "{}", w.value);
        assert!(neg_moment_sphere(euclid, 4.0, 6, 10, 1).is_err());
    }

    #[test]
    fn gaussian_moment_of_the_ball() {
        let g = neg_moment_gaussian(euclid, 2.0, 8, 400_000, 2).unwrap();
        let exact = gaussian_radial_prefactor(8, 2.0).unwrap();
        assert!(
            (g.value - exact).abs() < 4.0 * g.std_err,
            "{:?} vs {exact}",
            g
        );
    }

    #[test]
    fn second_euclidean_moment_of_the_ball() {
        let k = BodySpec::ball(3).unwrap();
        let b = sample_uniform(&k, 200_000, 3, Method::Direct).unwrap();
        let i2 = euclid_moment(&b, 2.0).unwrap();
        let r = (3.0 / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
        let exact = r * (3.0f64 / 5.0).sqrt();
        assert!((i2.value - exact).abs() < 4.0 * i2.std_err);
        assert!(euclid_moment(&b, -1.0).is_ok());
        let seg = sample_uniform(&BodySpec::cube(1).unwrap(), 100, 0, Method::Direct).unwrap();
        assert!(matches!(
            euclid_moment(&seg, -1.0),
            Err(Error::QOutOfRange { .. })
        ));
    }
}
