//! Kolmogorov–Smirnov statistics, Wilson intervals and the block bootstrap.

use rand::Rng;
use serde::Serialize;

use crate::numerics::{mean_and_sd, percentile};
use crate::rng::{Domain, Streams};

/// Bootstrap resample count.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Number of blocks a sample is cut into before resampling.
pub const BOOTSTRAP_BLOCKS: usize = 200;
/// Sub-seed used when the caller does not supply one.
pub const BOOTSTRAP_SEED: u64 = 0xB007_5EED;

/// Asymptotic 1% critical coefficient `sqrt(-ln(0.005) / 2)`.
pub const KS_C_ALPHA_1PCT: f64 = 1.627_624_1;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// Two-sample Kolmogorov–Smirnov test at the 1% level.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsOutcome {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let en = (nf * mf / (nf + mf)).sqrt();
    let critical_value = KS_C_ALPHA_1PCT / en;
    KsOutcome {
        statistic: d,
        critical_value,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
        rejected: d > critical_value,
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let nf = n as f64;
    let phat = k as f64 / nf;
    let denom = 1.0 + Z * Z / nf;
    let centre = (phat + Z * Z / (2.0 * nf)) / denom;
    let half = Z * (phat * (1.0 - phat) / nf + Z * Z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapSummary {
    pub low: f64,
    pub high: f64,
    pub std_err: f64,
}

/// Percentile bootstrap over blocks. `stat` receives the multiplicity of each
/// block in the resample and returns the statistic.
pub fn block_bootstrap<F>(blocks: usize, seed: u64, stat: F) -> BootstrapSummary
where
    F: Fn(&[u32]) -> f64,
{
    let streams = Streams::new(seed, Domain::Bootstrap);
    let mut reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|r| {
            let mut rng = streams.stream(r as u64);
            let mut counts = vec![0u32; blocks];
            for _ in 0..blocks {
                counts[rng.random_range(0..blocks)] += 1;
            }
            stat(&counts)
        })
        .filter(|v| v.is_finite())
        .collect();
    if reps.is_empty() {
        return BootstrapSummary {
            low: f64::NAN,
            high: f64::NAN,
            std_err: f64::NAN,
        };
    }
    reps.sort_by(|a, b| a.total_cmp(b));
    let (_, sd) = mean_and_sd(&reps);
    BootstrapSummary {
        low: percentile(&reps, 0.025),
        high: percentile(&reps, 0.975),
        std_err: sd,
    }
}
