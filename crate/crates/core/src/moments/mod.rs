//! Marginal `L^p` norms, profiles over `p`, the `psi_2` proxy and tails.

pub mod evaluator;
pub mod negative;

use std::ops::Range;

use serde::Serialize;

use crate::bodies::MarginalDensity;
use crate::error::{Error, Result};
use crate::numerics::{block_ranges, LogSumExp};
use crate::stats::{block_bootstrap, wilson_interval, BOOTSTRAP_BLOCKS, BOOTSTRAP_SEED};

pub use evaluator::{
    AutoEvaluator, EvaluatorKind, LpEvaluator, QuadratureEvaluator, SampleEvaluator,
};
pub use negative::{
    euclid_moment, gaussian_radial_prefactor, neg_moment_gaussian, neg_moment_sphere,
    prefactor_small_q_limit, NegFunctional, NegMomentEstimate,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    MonteCarlo,
    Quadrature,
    /// Closed-form even moment.
    Exact,
}

impl EstimateMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMethod::MonteCarlo => "monte_carlo",
            EstimateMethod::Quadrature => "quadrature",
            EstimateMethod::Exact => "exact",
        }
    }
}

/// `(E|X|^p)^{1/p}` with an interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LpEstimate {
    pub p: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: f64,
    pub method: EstimateMethod,
}

impl LpEstimate {
    /// Estimate for `lambda * X`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let l = lambda.abs();
        LpEstimate {
            value: self.value * l,
            ci_low: self.ci_low * l,
            ci_high: self.ci_high * l,
            std_err: self.std_err * l,
            ..*self
        }
    }
}

/// Largest `p` for which a Monte Carlo power mean from `samples` points is
/// accepted: `ln N / ln 3`.
pub fn p_max(samples: usize) -> f64 {
    (samples as f64).ln() / 3f64.ln()
}

/// Absolute projected values cut into the fixed bootstrap blocks.
#[derive(Clone, Debug)]
pub struct ProjectedSample {
    ln_abs: Vec<f64>,
    blocks: Vec<Range<usize>>,
    seed: u64,
}

impl ProjectedSample {
    pub fn new(values: &[f64], seed: u64) -> Self {
        ProjectedSample {
            ln_abs: values.iter().map(|v| v.abs().ln()).collect(),
            blocks: block_ranges(values.len(), BOOTSTRAP_BLOCKS),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.ln_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_abs.is_empty()
    }

    pub fn p_max(&self) -> f64 {
        p_max(self.len())
    }

    /// Monte Carlo `L^p` norm, accumulated in log space, with a percentile
    /// block-bootstrap interval.
    pub fn lp(&self, p: f64) -> Result<LpEstimate> {
        if !(p > 0.0) {
            return Err(Error::invalid(format!("p must be positive, got {p}")));
        }
        let p_max = self.p_max();
        if p > p_max {
            return Err(Error::PTooLargeForBudget { p, p_max });
        }
        let per_block: Vec<(f64, f64)> = self
            .blocks
            .iter()
            .map(|r| {
                let mut acc = LogSumExp::default();
                self.ln_abs[r.clone()].iter().for_each(|l| acc.push(p * l));
                (acc.value(), r.len() as f64)
            })
            .collect();
        let combine = |w: Option<&[u32]>| {
            let mut acc = LogSumExp::default();
            let mut count = 0.0;
            for (i, (ln_s, c)) in per_block.iter().enumerate() {
                let wi = w.map_or(1.0, |w| w[i] as f64);
                if wi > 0.0 {
                    acc.push(ln_s + wi.ln());
                    count += wi * c;
                }
            }
            ((acc.value() - count.ln()) / p).exp()
        };
        let value = combine(None);
        let boot = block_bootstrap(per_block.len(), BOOTSTRAP_SEED ^ self.seed, |w| {
            combine(Some(w))
        });
        Ok(LpEstimate {
            p,
            value,
            ci_low: boot.low.min(value),
            ci_high: boot.high.max(value),
            std_err: boot.std_err,
            method: EstimateMethod::MonteCarlo,
        })
    }

    /// `P(|X| >= t E|X|)` with a Wilson interval.
    pub fn tail(&self, t: f64) -> TailEstimate {
        let mut acc = LogSumExp::default();
        self.ln_abs.iter().for_each(|l| acc.push(*l));
        let mean_abs = (acc.value() - (self.len() as f64).ln()).exp();
        let threshold = (t * mean_abs).ln();
        let hits = self.ln_abs.iter().filter(|l| **l >= threshold).count();
        let (lo, hi) = wilson_interval(hits, self.len());
        TailEstimate {
            t,
            mean_abs,
            probability: hits as f64 / self.len() as f64,
            ci_low: lo,
            ci_high: hi,
            method: EstimateMethod::MonteCarlo,
        }
    }
}

/// Monte Carlo `||<X, y>||_p` over a sample of points (row-major).
pub fn marginal_lp_sample(
    points: &[f64],
    dim: usize,
    y: &[f64],
    p: f64,
    seed: u64,
) -> Result<LpEstimate> {
    if y.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: y.len(),
        });
    }
    let values: Vec<f64> = points
        .chunks_exact(dim)
        .map(|x| x.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect();
    ProjectedSample::new(&values, seed).lp(p)
}

/// `L^p` norm of a one-dimensional law by quadrature.
pub fn marginal_lp_density(density: &MarginalDensity, p: f64) -> LpEstimate {
    let q = density.ln_abs_moment(p);
    let value = (q.ln_value / p).exp();
    let rel = q.rel_error.max(1e-13) / p;
    LpEstimate {
        p,
        value,
        ci_low: value * (1.0 - rel),
        ci_high: value * (1.0 + rel),
        std_err: value * rel,
        method: EstimateMethod::Quadrature,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailEstimate {
    pub t: f64,
    pub mean_abs: f64,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: EstimateMethod,
}

/// `P(|X| >= t E|X|)` by quadrature.
pub fn tail_prob_density(density: &MarginalDensity, t: f64) -> TailEstimate {
    let mean_abs = density.ln_abs_moment(1.0).ln_value.exp();
    let prob = density.two_sided_tail(t * mean_abs).clamp(0.0, 1.0);
    TailEstimate {
        t,
        mean_abs,
        probability: prob,
        ci_low: (prob - 1e-12).max(0.0),
        ci_high: (prob + 1e-12).min(1.0),
        method: EstimateMethod::Quadrature,
    }
}

/// Estimates of `||<X, theta>||_p` along one direction over a grid of `p`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentProfile {
    pub theta_id: usize,
    pub theta: Vec<f64>,
    pub n: usize,
    pub lk: f64,
    pub entries: Vec<LpEstimate>,
    /// The requested grid was cut at the Monte Carlo limit `p_max`.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Psi2 {
    pub value: f64,
    pub attained_p: f64,
    pub truncated: bool,
}

impl MomentProfile {
    pub fn value_at(&self, p: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.p == p).map(|e| e.value)
    }

    /// `max_p ||.||_p / sqrt(p)` over the grid, with the maximizing `p`.
    pub fn psi2_norm(&self) -> Result<Psi2> {
        let best = self
            .entries
            .iter()
            .map(|e| (e.value / e.p.sqrt(), e.p))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or(Error::EmptyProfile)?;
        Ok(Psi2 {
            value: best.0,
            attained_p: best.1,
            truncated: self.truncated,
        })
    }

    /// `value(p)` non-decreasing in `p` up to interval overlap.
    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].ci_high >= w[0].ci_low)
    }

    pub fn write_csv_rows<W: std::io::Write>(&self, out: &mut csv::Writer<W>) -> Result<()> {
        for e in &self.entries {
            out.write_record([
                self.theta_id.to_string(),
                e.p.to_string(),
                e.value.to_string(),
                e.ci_low.to_string(),
                e.ci_high.to_string(),
                e.method.as_str().to_string(),
            ])?;
        }
        Ok(())
    }
}

pub const PROFILE_CSV_HEADER: [&str; 6] = ["theta_id", "p", "value", "ci_low", "ci_high", "method"];

/// Writes profiles as one CSV table.
pub fn profiles_to_csv<W: std::io::Write>(profiles: &[MomentProfile], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_CSV_HEADER)?;
    for p in profiles {
        p.write_csv_rows(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{BodySpec, Law};
    use crate::sampling::{sample_gaussian, sample_uniform, Method};

    fn uniform() -> MarginalDensity {
        MarginalDensity::scalar(Law::Uniform { lo: -0.5, hi: 0.5 })
    }

    #[test]
    fn cube_quadrature_values() {
        let d = BodySpec::cube(4)
            .unwrap()
            .marginal_density(&[1.0, 0.0, 0.0, 0.0])
            .unwrap();
        assert!((marginal_lp_density(&d, 1.0).value - 0.25).abs() < 1e-12);
        assert!((marginal_lp_density(&d, 2.0).value - 12f64.sqrt().recip()).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_respects_p_max() {
        let g = sample_gaussian(1, 1000, 0).unwrap();
        let s = ProjectedSample::new(&g.points, 0);
        assert!(matches!(s.lp(7.0), Err(Error::PTooLargeForBudget { .. })));
        assert!(s.lp(6.0).is_ok());
    }

    #[test]
    fn gaussian_fourth_moment() {
        let g = sample_gaussian(1, 1_000_000, 3).unwrap();
        let est = ProjectedSample::new(&g.points, 3).lp(4.0).unwrap();
        let exact = 3f64.powf(0.25);
        assert!((est.value - exact).abs() < 3.0 * est.std_err, "{:?}", est);
    }

    #[test]
    fn monte_carlo_cube_coordinate() {
        let k = BodySpec::cube(2).unwrap();
        let b = sample_uniform(&k, 200_000, 8, Method::Direct).unwrap();
        let est = marginal_lp_sample(&b.points, 2, &[1.0, 0.0], 1.0, 8).unwrap();
        assert!((est.value - 0.25).abs() < 3.0 * est.std_err);
        assert!(est.ci_low <= est.value && est.value <= est.ci_high);
    }

    #[test]
    fn psi2_examples() {
        let u = uniform();
        let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
        let profile = |d: &MarginalDensity| MomentProfile {
            theta_id: 0,
            theta: vec![1.0],
            n: 1,
            lk: 1.0,
            entries: grid.iter().map(|p| marginal_lp_density(d, *p)).collect(),
            truncated: false,
        };
        let psi = profile(&u).psi2_norm().unwrap();
        assert_eq!(psi.attained_p, 1.0);
        assert!((psi.value - 0.25).abs() < 1e-12);
        let e = MarginalDensity::scalar(Law::ShiftedExponential { lo: -1.0 });
        let psi = profile(&e).psi2_norm().unwrap();
        assert_eq!(psi.attained_p, 16.0);
        let empty = MomentProfile {
            entries: vec![],
            ..profile(&u)
        };
        assert!(matches!(empty.psi2_norm(), Err(Error::EmptyProfile)));
    }

    #[test]
    fn tail_examples() {
        let u = uniform();
        assert!((tail_prob_density(&u, 1.0).probability - 0.5).abs() < 1e-10);
        assert!(tail_prob_density(&u, 2.0).probability < 1e-12);
        let g = MarginalDensity::scalar(Law::Normal { sigma: 1.0 });
        let t = tail_prob_density(&g, 2.0);
        assert!((t.mean_abs - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((t.probability - 0.110_5).abs() < 1e-4, "{}", t.probability);
    }
}
