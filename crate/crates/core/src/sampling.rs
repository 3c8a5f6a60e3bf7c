//! Uniform samplers on bodies and a standard Gaussian sampler.
//!
//! Points are produced in fixed blocks of [`BLOCK`] points; block `b` draws
//! from stream `b` of the `(seed, domain)` key, so a batch is the same for
//! every thread count.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{BodyDescriptor, BodyKind, BodySpec};
use crate::error::{Error, Result};
use crate::numerics::block_ranges;
use crate::rng::{Domain, StreamRng, Streams};
use crate::stats::{kolmogorov_survival, ks_two_sample};

pub const BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Direct,
    HitAndRun { burn_in: usize, thinning: usize },
}

impl Method {
    /// `burn_in = max(10 n, 1000)`, `thinning = n`.
    pub fn default_hit_and_run(n: usize) -> Self {
        Method::HitAndRun {
            burn_in: (10 * n).max(1000),
            thinning: n.max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Source {
    Body(BodyDescriptor),
    Gaussian { n: usize },
}

/// `len` points of dimension `dim`, stored row-major.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub points: Vec<f64>,
    pub len: usize,
    pub dim: usize,
    pub source: Source,
    pub seed: u64,
    pub method: Method,
}

impl SampleBatch {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    /// `<x_i, y>` for every point.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|x| x.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Points mapped by `x -> M x` (row-major `dim x dim` matrix).
    pub fn transformed(&self, m: &[f64]) -> SampleBatch {
        let n = self.dim;
        let points = self
            .rows()
            .flat_map(|x| (0..n).map(move |i| (0..n).map(|j| m[i * n + j] * x[j]).sum::<f64>()))
            .collect();
        SampleBatch {
            points,
            ..self.clone()
        }
    }

    /// Little-endian binary: `u32 N`, `u32 n`, then `N * n` f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.len as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in &self.points {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary layout back as `(N, n, points)`.
    pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, usize, Vec<f64>)> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let len = u32::from_le_bytes(head[..4].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(head[4..].try_into().unwrap()) as usize;
        let mut buf = vec![0u8; len * dim * 8];
        r.read_exact(&mut buf)?;
        let points = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((len, dim, points))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record((0..self.dim).map(|i| format!("x{i}")))?;
        for x in self.rows() {
            out.write_record(x.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Whether `sample_uniform` can use `Method::Direct` for this body.
pub fn has_direct_sampler(body: &BodySpec) -> bool {
    match &body.kind {
        BodyKind::OraclePolytope { .. } => false,
        BodyKind::Cone { base, .. } => has_direct_sampler(base),
        _ => true,
    }
}

/// Direct sampling when available, hit-and-run with default settings
/// otherwise.
pub fn default_method(body: &BodySpec) -> Method {
    if has_direct_sampler(body) {
        Method::Direct
    } else {
        Method::default_hit_and_run(body.dim)
    }
}

pub fn sample_uniform(
    body: &BodySpec,
    len: usize,
    seed: u64,
    method: Method,
) -> Result<SampleBatch> {
    if len == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let n = body.dim;
    if let Method::HitAndRun { burn_in, thinning } = method {
        if burn_in < 10 * n {
            return Err(Error::BadBurnIn {
                burn_in,
                min: 10 * n,
            });
        }
        if thinning == 0 {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        if !body.contains(&vec![0.0; n])? {
            return Err(Error::NoInteriorPoint);
        }
    } else if !has_direct_sampler(body) {
        return Err(Error::Unsupported(format!(
            "no direct sampler for {}",
            body.name()
        )));
    }
    let streams = Streams::new(seed, Domain::BodySampling);
    let chord = ChordFinder::new(body)?;
    let blocks: Vec<Vec<f64>> = block_ranges(len, len.div_ceil(BLOCK))
        .into_par_iter()
        .enumerate()
        .map(|(b, range)| {
            let mut rng = streams.stream(b as u64);
            let mut out = Vec::with_capacity(range.len() * n);
            match method {
                Method::Direct => {
                    for _ in range {
                        out.extend(direct_point(body, &mut rng));
                    }
                }
                Method::HitAndRun { burn_in, thinning } => {
                    let mut y = body.to_raw(&vec![0.0; n]);
                    for _ in 0..burn_in {
                        chord.step(&mut y, &mut rng);
                    }
                    for _ in range {
                        for _ in 0..thinning {
                            chord.step(&mut y, &mut rng);
                        }
                        out.extend(body.from_raw(&y));
                    }
                }
            }
            out
        })
        .collect();
    Ok(SampleBatch {
        points: blocks.concat(),
        len,
        dim: n,
        source: Source::Body(body.descriptor()),
        seed,
        method,
    })
}

pub fn sample_gaussian(n: usize, len: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 || len == 0 {
        return Err(Error::invalid("Gaussian sampler needs n >= 1 and N >= 1"));
    }
    let streams = Streams::new(seed, Domain::Gaussian);
    let blocks: Vec<Vec<f64>> = block_ranges(len, len.div_ceil(BLOCK))
        .into_par_iter()
        .enumerate()
        .map(|(b, range)| {
            let mut rng = streams.stream(b as u64);
            (0..range.len() * n)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    Ok(SampleBatch {
        points: blocks.concat(),
        len,
        dim: n,
        source: Source::Gaussian { n },
        seed,
        method: Method::Direct,
    })
}

/// Uniform point on the unit sphere.
pub fn sphere_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            return g.into_iter().map(|v| v / r).collect();
        }
    }
}

/// One direct uniform point in the normalized frame.
fn direct_point(body: &BodySpec, rng: &mut StreamRng) -> Vec<f64> {
    let n = body.dim;
    let raw: Vec<f64> = match &body.kind {
        BodyKind::Cube => (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
        BodyKind::EuclideanBall => unit_ball_point(n, rng),
        BodyKind::LpBall { p } if p.is_infinite() => {
            (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
        }
        BodyKind::LpBall { p } if *p == 2.0 => unit_ball_point(n, rng),
        BodyKind::LpBall { p } => {
            // generalized Gaussian coordinates with an exponential slack
            let gamma = Gamma::new(1.0 / p, 1.0).expect("valid shape");
            let z: Vec<f64> = (0..n)
                .map(|_| {
                    let g: f64 = gamma.sample(rng);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * g.powf(1.0 / p)
                })
                .collect();
            let w: f64 = Exp1.sample(rng);
            let denom = (z.iter().map(|v| v.abs().powf(*p)).sum::<f64>() + w).powf(1.0 / p);
            z.into_iter().map(|v| v / denom).collect()
        }
        BodyKind::Simplex => {
            let e: Vec<f64> = (0..=n).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = e.iter().sum();
            e[..n].iter().map(|v| v / total).collect()
        }
        BodyKind::Cone { base, height } => {
            let u: f64 = rng.random();
            let s = height * (1.0 - u.powf(1.0 / n as f64));
            let f = 1.0 - s / height;
            let mut y: Vec<f64> = direct_point(base, rng).into_iter().map(|v| f * v).collect();
            y.push(s);
            y
        }
        BodyKind::OraclePolytope { .. } => unreachable!("checked by has_direct_sampler"),
    };
    body.from_raw(&raw)
}

fn unit_ball_point(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let dir = sphere_point(n, rng);
    let r = rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| r * v).collect()
}

/// Chord computation in the raw frame of a body.
struct ChordFinder<'a> {
    body: &'a BodySpec,
    /// Bracket for bisection: every raw point has norm below this.
    reach: f64,
}

impl<'a> ChordFinder<'a> {
    fn new(body: &'a BodySpec) -> Result<Self> {
        let centre = body.center_shift.iter().map(|c| c * c).sum::<f64>().sqrt();
        let reach = 2.0 * (centre + body.bounding_radius()? / body.scale) + 1e-9;
        Ok(ChordFinder { body, reach })
    }

    /// Interval `[lo, hi]` of `t` with `y + t d` in the body.
    fn chord(&self, y: &[f64], d: &[f64]) -> (f64, f64) {
        match &self.body.kind {
            BodyKind::Cube => box_chord(y, d, 0.5),
            BodyKind::LpBall { p } if p.is_infinite() => box_chord(y, d, 1.0),
            BodyKind::EuclideanBall => ball_chord(y, d),
            BodyKind::LpBall { p } if *p == 2.0 => ball_chord(y, d),
            BodyKind::Simplex => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for (yi, di) in y.iter().zip(d) {
                    halfspace_cut(-di, *yi, &mut lo, &mut hi);
                }
                let sd: f64 = d.iter().sum();
                let sy: f64 = y.iter().sum();
                halfspace_cut(sd, 1.0 - sy, &mut lo, &mut hi);
                (lo, hi)
            }
            BodyKind::OraclePolytope { halfspaces } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for h in halfspaces {
                    let ad: f64 = h.normal.iter().zip(d).map(|(a, b)| a * b).sum();
                    halfspace_cut(ad, h.slack(y), &mut lo, &mut hi);
                }
                (lo, hi)
            }
            _ => (-self.bisect(y, d, -1.0), self.bisect(y, d, 1.0)),
        }
    }

    /// Largest `t >= 0` (to 1e-12 relative) with `y + sign t d` inside.
    fn bisect(&self, y: &[f64], d: &[f64], sign: f64) -> f64 {
        let mut inside = 0.0;
        let mut outside = self.reach;
        let mut z = y.to_vec();
        while outside - inside > 1e-12 * self.reach {
            let mid = 0.5 * (inside + outside);
            for ((zi, yi), di) in z.iter_mut().zip(y).zip(d) {
                *zi = yi + sign * mid * di;
            }
            if self.body.contains_raw(&z) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    }

    fn step(&self, y: &mut [f64], rng: &mut StreamRng) {
        let d = sphere_point(y.len(), rng);
        let (lo, hi) = self.chord(y, &d);
        if !(hi > lo) {
            return;
        }
        let mut z = y.to_vec();
        for _ in 0..8 {
            let t = lo + (hi - lo) * rng.random::<f64>();
            for ((zi, yi), di) in z.iter_mut().zip(y.iter()).zip(&d) {
                *zi = yi + t * di;
            }
            if self.body.contains_raw(&z) {
                y.copy_from_slice(&z);
                return;
            }
        }
    }
}

fn box_chord(y: &[f64], d: &[f64], half: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (yi, di) in y.iter().zip(d) {
        halfspace_cut(*di, half - yi, &mut lo, &mut hi);
        halfspace_cut(-di, half + yi, &mut lo, &mut hi);
    }
    (lo, hi)
}

fn ball_chord(y: &[f64], d: &[f64]) -> (f64, f64) {
    let b: f64 = y.iter().zip(d).map(|(a, c)| a * c).sum();
    let c: f64 = y.iter().map(|v| v * v).sum::<f64>() - 1.0;
    let disc = (b * b - c).max(0.0).sqrt();
    (-b - disc, -b + disc)
}

/// Intersects `[lo, hi]` with `{t : a t <= slack}`.
fn halfspace_cut(a: f64, slack: f64, lo: &mut f64, hi: &mut f64) {
    if a > 0.0 {
        *hi = hi.min(slack / a);
    } else if a < 0.0 {
        *lo = lo.max(slack / a);
    }
}

/// Number of random directions examined by [`validate_sampler`].
pub const VALIDATION_DIRECTIONS: usize = 20;
/// Family-wise level of the validation.
pub const VALIDATION_ALPHA: f64 = 0.01;

#[derive(Clone, Debug, Serialize)]
pub struct DirectionCheck {
    pub ks_statistic: f64,
    /// Effective size of the trial sample along this direction.
    pub trial_ess: f64,
    pub ks_p_value: f64,
    pub mean_z: f64,
    pub variance_z: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub directions: Vec<DirectionCheck>,
    /// Per-direction KS level after splitting the family-wise level.
    pub per_direction_alpha: f64,
    pub critical_coefficient: f64,
    pub passed: bool,
}

/// Compares two batches along random directions with two-sample KS tests
/// and mean/variance z-scores. A direction is flagged when its KS statistic
/// exceeds the critical value at level `0.01 / 20`. Hit-and-run batches
/// enter with their effective sample size, so chain autocorrelation is not
/// mistaken for a difference in law.
pub fn validate_sampler(
    body: &BodySpec,
    reference: &SampleBatch,
    trial: &SampleBatch,
    seed: u64,
) -> Result<ValidationReport> {
    for batch in [reference, trial] {
        if batch.dim != body.dim {
            return Err(Error::DimensionMismatch {
                expected: body.dim,
                got: batch.dim,
            });
        }
    }
    let alpha = VALIDATION_ALPHA / VALIDATION_DIRECTIONS as f64;
    let coeff = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let streams = Streams::new(seed, Domain::Check);
    let directions: Vec<DirectionCheck> = (0..VALIDATION_DIRECTIONS)
        .map(|i| {
            let theta = sphere_point(body.dim, &mut streams.stream(i as u64));
            let a = reference.project(&theta);
            let b = trial.project(&theta);
            let ks = ks_two_sample(&a, &b);
            let na = effective_size(reference, &a);
            let nb = effective_size(trial, &b);
            let en = (na * nb / (na + nb)).sqrt();
            let (ma, va, ka) = moments4(&a);
            let (mb, vb, kb) = moments4(&b);
            let mean_z = (ma - mb) / (va / na + vb / nb).sqrt();
            // variance of the sample variance is (mu4 - sigma^4) / N
            let variance_z = (va - vb) / ((ka - va * va) / na + (kb - vb * vb) / nb).sqrt();
            DirectionCheck {
                ks_statistic: ks.statistic,
                trial_ess: nb,
                ks_p_value: kolmogorov_survival(en * ks.statistic),
                mean_z,
                variance_z,
                flagged: ks.statistic > coeff / en,
            }
        })
        .collect();
    let passed = directions.iter().all(|d| !d.flagged);
    Ok(ValidationReport {
        directions,
        per_direction_alpha: alpha,
        critical_coefficient: coeff,
        passed,
    })
}

/// `N / tau` with `tau` the integrated autocorrelation time of a chain's
/// projection (initial positive sequence estimator); `N` for direct draws.
fn effective_size(batch: &SampleBatch, xs: &[f64]) -> f64 {
    let len = xs.len() as f64;
    if batch.method == Method::Direct || xs.len() < 4 {
        return len;
    }
    let (m, v, _) = moments4(xs);
    if !(v > 0.0) {
        return len;
    }
    let rho = |k: usize| -> f64 {
        xs.iter()
            .zip(&xs[k..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / (len * v)
    };
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < xs.len().min(2 * BLOCK) {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    len / tau.max(1.0)
}

/// Mean, variance and fourth central moment.
fn moments4(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let k = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, v, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_coordinate_variance() {
        let k = BodySpec::cube(2).unwrap();
        let s = sample_uniform(&k, 100_000, 1, Method::Direct).unwrap();
        for i in 0..2 {
            let xs: Vec<f64> = s.rows().map(|x| x[i]).collect();
            let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            // sd of the estimator: sqrt((1/80 - 1/144) / N)
            let sd = ((1.0 / 80.0 - 1.0 / 144.0) / 1e5f64).sqrt();
            assert!((var - 1.0 / 12.0).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn ball_mean_radius() {
        let k = BodySpec::ball(2).unwrap();
        let s = sample_uniform(&k, 100_000, 2, Method::Direct).unwrap();
        let r = 1.0 / std::f64::consts::PI.sqrt();
        let mean: f64 = s.rows().map(|x| x[0].hypot(x[1])).sum::<f64>() / 1e5;
        assert!((mean - 2.0 * r / 3.0).abs() < 0.002);
    }

    #[test]
    fn all_points_are_members() {
        let bodies = vec![
            BodySpec::cube(4).unwrap(),
            BodySpec::ball(4).unwrap(),
            BodySpec::lp_ball(4, 1.0).unwrap(),
            BodySpec::lp_ball(4, 3.0).unwrap(),
            BodySpec::simplex(4).unwrap(),
            BodySpec::cone(4).unwrap(),
        ];
        for k in &bodies {
            for method in [Method::Direct, Method::default_hit_and_run(4)] {
                let s = sample_uniform(k, 3000, 5, method).unwrap();
                assert!(
                    s.rows().all(|x| k.contains(x).unwrap()),
                    "{} {:?}",
                    k.name(),
                    method
                );
            }
        }
    }

    #[test]
    fn single_point_is_reproducible() {
        let k = BodySpec::simplex(3).unwrap();
        let a = sample_uniform(&k, 1, 9, Method::Direct).unwrap();
        let b = sample_uniform(&k, 1, 9, Method::Direct).unwrap();
        assert_eq!(a.points, b.points);
        let g1 = sample_gaussian(2, 2, 7).unwrap();
        let g2 = sample_gaussian(2, 2, 7).unwrap();
        assert_eq!(g1.points, g2.points);
    }

    #[test]
    fn short_burn_in_is_rejected() {
        let k = BodySpec::cube(5).unwrap();
        let m = Method::HitAndRun {
            burn_in: 10,
            thinning: 1,
        };
        assert!(matches!(
            sample_uniform(&k, 10, 0, m),
            Err(Error::BadBurnIn {
                burn_in: 10,
                min: 50
            })
        ));
    }

    #[test]
    fn gaussian_mean() {
        let g = sample_gaussian(1, 1_000_000, 11).unwrap();
        let m = g.points.iter().sum::<f64>() / 1e6;
        assert!(m.abs() < 0.004);
    }

    #[test]
    fn validation_flags_different_laws() {
        let cube = BodySpec::cube(3).unwrap();
        let ball = BodySpec::ball(3).unwrap();
        let a = sample_uniform(&cube, 20_000, 1, Method::Direct).unwrap();
        let b = sample_uniform(&cube, 20_000, 2, Method::Direct).unwrap();
        let c = sample_uniform(&ball, 20_000, 3, Method::Direct).unwrap();
        assert!(validate_sampler(&cube, &a, &b, 0).unwrap().passed);
        assert!(!validate_sampler(&cube, &a, &c, 0).unwrap().passed);
    }

    #[test]
    fn chain_effective_size_is_smaller() {
        let cube = BodySpec::cube(10).unwrap();
        let a = sample_uniform(&cube, 20_000, 1, Method::Direct).unwrap();
        let b = sample_uniform(&cube, 20_000, 2, Method::default_hit_and_run(10)).unwrap();
        let r = validate_sampler(&cube, &a, &b, 0).unwrap();
        assert!(r
            .directions
            .iter()
            .all(|d| d.trial_ess < 20_000.0 && d.trial_ess > 1_000.0));
    }

    #[test]
    fn binary_round_trip() {
        let g = sample_gaussian(3, 5, 1).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 15 * 8);
        let (len, dim, pts) = SampleBatch::read_binary(&buf[..]).unwrap();
        assert_eq!((len, dim), (5, 3));
        assert_eq!(pts, g.points);
    }
}
