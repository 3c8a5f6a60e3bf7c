//! Convex-body catalog: membership, support functions, volume-one
//! normalization and closed-form marginals.
//!
//! Every body is stored as a raw reference shape plus an affine map
//! `x = scale * (raw - center_shift)` that centers it and fixes its volume.

mod descriptor;
pub mod marginal;
pub mod polytope;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{block_ranges, log_integrate};
use crate::rng::{Domain, Streams};
use crate::stats::wilson_interval;

pub use descriptor::BodyDescriptor;
pub use marginal::{DensityForm, Law, MarginalDensity};
use polytope::dot;
pub use polytope::Halfspace;

pub const DEFAULT_VOLUME_SAMPLES: usize = 200_000;
const VOLUME_BLOCK: usize = 4096;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyKind {
    Cube,
    EuclideanBall,
    LpBall { p: f64 },
    Simplex,
    Cone { base: Box<BodySpec>, height: f64 },
    OraclePolytope { halfspaces: Vec<Halfspace> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    VolumeOne,
    Raw,
}

/// Monte Carlo volume of the raw polytope with a 95% interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BodySpec {
    pub kind: BodyKind,
    pub dim: usize,
    pub normalization: Normalization,
    /// Raw-frame barycenter subtracted before scaling.
    pub center_shift: Vec<f64>,
    /// Linear factor applied after centering.
    pub scale: f64,
    /// Raw polytope volume estimate (polytopes only).
    pub volume: Option<VolumeEstimate>,
}

impl BodySpec {
    pub fn cube(n: usize) -> Result<Self> {
        make_body(BodyKind::Cube, n)
    }

    pub fn ball(n: usize) -> Result<Self> {
        make_body(BodyKind::EuclideanBall, n)
    }

    pub fn lp_ball(n: usize, p: f64) -> Result<Self> {
        make_body(BodyKind::LpBall { p }, n)
    }

    pub fn simplex(n: usize) -> Result<Self> {
        make_body(BodyKind::Simplex, n)
    }

    /// Cone over a volume-one cube base with height `n`, the height at which
    /// the raw cone already has volume one.
    pub fn cone(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("cone needs n >= 2"));
        }
        let base = BodySpec::cube(n - 1)?;
        make_body(
            BodyKind::Cone {
                base: Box::new(base),
                height: n as f64,
            },
            n,
        )
    }

    pub fn name(&self) -> String {
        match &self.kind {
            BodyKind::Cube => "cube".into(),
            BodyKind::EuclideanBall => "ball".into(),
            BodyKind::LpBall { p } if p.is_infinite() => "lp_ball(p=inf)".into(),
            BodyKind::LpBall { p } => format!("lp_ball(p={p})"),
            BodyKind::Simplex => "simplex".into(),
            BodyKind::Cone { base, .. } => format!("cone({})", base.name()),
            BodyKind::OraclePolytope { halfspaces } => {
                format!("polytope({} facets)", halfspaces.len())
            }
        }
    }

    /// Index of the cone axis coordinate.
    pub fn axis(&self) -> Option<usize> {
        matches!(self.kind, BodyKind::Cone { .. }).then(|| self.dim - 1)
    }

    pub fn to_raw(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center_shift)
            .map(|(xi, c)| xi / self.scale + c)
            .collect()
    }

    pub fn from_raw(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.center_shift)
            .map(|(yi, c)| self.scale * (yi - c))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.contains_raw(&self.to_raw(x)))
    }

    pub(crate) fn contains_raw(&self, y: &[f64]) -> bool {
        match &self.kind {
            BodyKind::Cube => y.iter().all(|v| v.abs() <= 0.5),
            BodyKind::EuclideanBall => y.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            BodyKind::LpBall { p } => {
                if p.is_infinite() {
                    y.iter().all(|v| v.abs() <= 1.0)
                } else {
                    y.iter().map(|v| v.abs().powf(*p)).sum::<f64>() <= 1.0
                }
            }
            BodyKind::Simplex => y.iter().all(|v| *v >= 0.0) && y.iter().sum::<f64>() <= 1.0,
            BodyKind::Cone { base, height } => {
                let n = y.len();
                let s = y[n - 1];
                if !(0.0..=*height).contains(&s) {
                    return false;
                }
                let f = 1.0 - s / height;
                if f <= 0.0 {
                    return y[..n - 1].iter().all(|v| *v == 0.0);
                }
                let scaled: Vec<f64> = y[..n - 1].iter().map(|v| v / f).collect();
                base.contains(&scaled).unwrap_or(false)
            }
            BodyKind::OraclePolytope { halfspaces } => halfspaces.iter().all(|h| h.slack(y) >= 0.0),
        }
    }

    /// `h_K(theta) = max_{x in K} <x, theta>` in the normalized frame.
    pub fn support(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        Ok(self.scale * (self.support_raw(theta)? - dot(&self.center_shift, theta)))
    }

    fn support_raw(&self, theta: &[f64]) -> Result<f64> {
        Ok(match &self.kind {
            BodyKind::Cube => 0.5 * theta.iter().map(|t| t.abs()).sum::<f64>(),
            BodyKind::EuclideanBall => norm(theta),
            BodyKind::LpBall { p } => dual_norm(theta, *p),
            BodyKind::Simplex => theta.iter().copied().fold(0.0, f64::max),
            BodyKind::Cone { base, height } => {
                let n = theta.len();
                (theta[n - 1] * height).max(base.support(&theta[..n - 1])?)
            }
            BodyKind::OraclePolytope { halfspaces } => polytope::support_value(halfspaces, theta)?,
        })
    }

    /// Whether `support` is available without a linear program.
    pub fn has_closed_form_support(&self) -> bool {
        match &self.kind {
            BodyKind::OraclePolytope { .. } => false,
            BodyKind::Cone { base, .. } => base.has_closed_form_support(),
            _ => true,
        }
    }

    /// Support radius `max_K |<x, theta>|`.
    pub fn support_radius(&self, theta: &[f64]) -> Result<f64> {
        let minus: Vec<f64> = theta.iter().map(|t| -t).collect();
        Ok(self.support(theta)?.max(self.support(&minus)?))
    }

    /// Coordinate-wise bounding box `[lo_i, hi_i]` in the normalized frame.
    pub fn bounding_box(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.dim)
            .map(|i| {
                let mut e = vec![0.0; self.dim];
                e[i] = 1.0;
                let hi = self.support(&e)?;
                e[i] = -1.0;
                let lo = -self.support(&e)?;
                Ok((lo, hi))
            })
            .collect()
    }

    /// Radius of a Euclidean ball around the origin containing the body.
    pub fn bounding_radius(&self) -> Result<f64> {
        Ok(self
            .bounding_box()?
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// Whether the body is symmetric about its center.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self.kind,
            BodyKind::Cube | BodyKind::EuclideanBall | BodyKind::LpBall { .. }
        )
    }

    /// Closed-form law of `<X, y>` for `X` uniform on the body, where one is
    /// known for this kind and direction.
    pub fn marginal_density(&self, y: &[f64]) -> Result<MarginalDensity> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let len = norm(y);
        if len == 0.0 {
            return Err(Error::invalid("zero direction"));
        }
        let n = self.dim as f64;
        let s = self.scale;
        let single = single_coordinate(y);
        let law = match (&self.kind, single) {
            (BodyKind::Cube, Some((_, a))) => Some(Law::Uniform {
                lo: -0.5 * s * a.abs(),
                hi: 0.5 * s * a.abs(),
            }),
            (BodyKind::EuclideanBall, _) => Some(Law::PowerSlice {
                radius: s * len,
                p: 2.0,
                k: n - 1.0,
            }),
            (BodyKind::LpBall { p }, _) if *p == 2.0 => Some(Law::PowerSlice {
                radius: s * len,
                p: 2.0,
                k: n - 1.0,
            }),
            (BodyKind::LpBall { p }, Some((_, a))) => Some(Law::PowerSlice {
                radius: s * a.abs(),
                p: *p,
                k: n - 1.0,
            }),
            (BodyKind::Simplex, _) => {
                let shift = dot(&self.center_shift, y);
                let mut knots = vec![-s * shift];
                knots.extend(y.iter().map(|v| s * (v - shift)));
                Some(Law::BSpline { knots })
            }
            (BodyKind::Cone { height, .. }, Some((i, a))) if i == self.dim - 1 => {
                let mean = self.center_shift[i];
                Some(Law::PowerRamp {
                    zero_end: a * s * (height - mean),
                    max_end: -a * s * mean,
                    k: n - 1.0,
                })
            }
            _ => None,
        };
        law.map(|l| MarginalDensity::new(y.to_vec(), l))
            .ok_or_else(|| {
                Error::Unsupported(format!(
                    "no closed-form marginal for {} along this direction",
                    self.name()
                ))
            })
    }

    /// Closed form when available, otherwise a kernel density estimate of
    /// the projected sample.
    pub fn marginal_density_or_projection(
        &self,
        y: &[f64],
        points: &[f64],
    ) -> Result<MarginalDensity> {
        match self.marginal_density(y) {
            Ok(d) => Ok(d),
            Err(Error::Unsupported(_)) => {
                let values: Vec<f64> = points.chunks_exact(self.dim).map(|x| dot(x, y)).collect();
                if values.len() < 2 {
                    return Err(Error::InsufficientSamples {
                        needed: 2,
                        got: values.len(),
                    });
                }
                Ok(MarginalDensity::from_projection(y.to_vec(), &values))
            }
            Err(e) => Err(e),
        }
    }

    /// Exact `E <X, y>^{2j}` for kinds with a series or product formula.
    pub fn even_moment(&self, y: &[f64], j: usize) -> Option<f64> {
        if j == 0 {
            return Some(1.0);
        }
        let n = self.dim;
        let s = self.scale;
        let two_j = 2 * j;
        let ln_fact = ln_gamma(two_j as f64 + 1.0);
        match &self.kind {
            BodyKind::Cube => Some(uniform_sum_moment(
                y.iter().map(|v| 0.5 * s * v),
                j,
                ln_fact,
            )),
            BodyKind::LpBall { p } if p.is_infinite() => {
                Some(uniform_sum_moment(y.iter().map(|v| s * v), j, ln_fact))
            }
            BodyKind::LpBall { p } if *p == 1.0 => {
                // uniform on the l1 ball is a signed Dirichlet point; its
                // projection times an independent Gamma(n + 1) is a Laplace sum
                let coeffs = series_product(y.iter().map(|v| (s * v).powi(2)), j, |b, k| {
                    b.powi(k as i32)
                });
                let nf = n as f64;
                Some(
                    (ln_fact + coeffs[j].ln() + ln_gamma(nf + 1.0)
                        - ln_gamma(nf + 1.0 + two_j as f64))
                    .exp(),
                )
            }
            BodyKind::EuclideanBall => Some(ball_moment(s * norm(y), n, j)),
            BodyKind::LpBall { p } if *p == 2.0 => Some(ball_moment(s * norm(y), n, j)),
            BodyKind::Cone { base, height } if base.is_symmetric() => {
                let h = *height;
                let nf = n as f64;
                let a = nf / (nf + 1.0);
                let yn = y[n - 1] * h;
                let yb = &y[..n - 1];
                let mut total = 0.0;
                for k in (0..=two_j).step_by(2) {
                    let r = two_j - k;
                    let w = base.even_moment(yb, k / 2)?;
                    if w == 0.0 {
                        continue;
                    }
                    // E[V^k (a - V)^r], V ~ Beta(n, 1)
                    let kf = k as f64;
                    let rf = r as f64;
                    let ln_g =
                        |v: f64| nf.ln() + (nf - 1.0 + kf) * v.ln() + rf * (a - v).abs().ln();
                    let ln_v = log_integrate(&ln_g, 0.0, 1.0, &[a], 1e-12).ln_value;
                    let ln_binom =
                        ln_gamma(two_j as f64 + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(rf + 1.0);
                    let yn_part = if r == 0 { 1.0 } else { yn.abs().powi(r as i32) };
                    if yn_part == 0.0 {
                        continue;
                    }
                    total += (ln_binom + ln_v).exp() * w * yn_part;
                }
                Some(s.powi(two_j as i32) * total)
            }
            _ => None,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn single_coordinate(y: &[f64]) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, v) in y.iter().enumerate() {
        if *v != 0.0 {
            if found.is_some() {
                return None;
            }
            found = Some((i, *v));
        }
    }
    found
}

fn dual_norm(theta: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        theta.iter().map(|t| t.abs()).sum()
    } else if p == 1.0 {
        theta.iter().fold(0.0, |m, t| m.max(t.abs()))
    } else {
        let q = p / (p - 1.0);
        theta
            .iter()
            .map(|t| t.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Coefficients `[u^0..u^j]` of `prod_i sum_k term(b_i, k) u^k`.
fn series_product<I, F>(bs: I, j: usize, term: F) -> Vec<f64>
where
    I: Iterator<Item = f64>,
    F: Fn(f64, usize) -> f64,
{
    let mut acc = vec![0.0; j + 1];
    acc[0] = 1.0;
    for b in bs {
        if b == 0.0 {
            continue;
        }
        let factor: Vec<f64> = (0..=j).map(|k| term(b, k)).collect();
        let mut next = vec![0.0; j + 1];
        for (d, slot) in next.iter_mut().enumerate() {
            *slot = (0..=d).map(|k| acc[d - k] * factor[k]).sum();
        }
        acc = next;
    }
    acc
}

/// `E (sum_i a_i U_i)^{2j}` for independent `U_i` uniform on `[-1, 1]`.
fn uniform_sum_moment<I: Iterator<Item = f64>>(halfwidths: I, j: usize, ln_fact: f64) -> f64 {
    // E e^{t a U} = sinh(a t) / (a t) = sum_k (a t)^{2k} / (2k + 1)!
    let coeffs = series_product(halfwidths.map(|a| a * a), j, |b, k| {
        (k as f64 * b.ln() - ln_gamma(2.0 * k as f64 + 2.0)).exp()
    });
    (ln_fact + coeffs[j].ln()).exp()
}

/// `E <X, e>^{2j}` for `X` uniform on a ball of radius `r` in dimension `n`.
fn ball_moment(r: f64, n: usize, j: usize) -> f64 {
    let k2 = (n as f64 + 1.0) / 2.0;
    let jf = j as f64;
    (2.0 * jf * r.ln() + ln_beta(jf + 0.5, k2) - ln_beta(0.5, k2)).exp()
}

/// `ln |B|` for the unit ball of the given kind in dimension `n`.
fn ln_raw_volume(kind: &BodyKind, n: usize) -> Option<f64> {
    let nf = n as f64;
    match kind {
        BodyKind::Cube => Some(0.0),
        BodyKind::EuclideanBall => {
            Some(0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf + 1.0))
        }
        BodyKind::LpBall { p } if p.is_infinite() => Some(nf * 2f64.ln()),
        BodyKind::LpBall { p } => {
            Some(nf * (2.0f64.ln() + ln_gamma(1.0 + 1.0 / p)) - ln_gamma(1.0 + nf / p))
        }
        BodyKind::Simplex => Some(-ln_gamma(nf + 1.0)),
        BodyKind::Cone { height, .. } => Some(height.ln() - nf.ln()),
        BodyKind::OraclePolytope { .. } => None,
    }
}

fn raw_center(kind: &BodyKind, n: usize) -> Vec<f64> {
    match kind {
        BodyKind::Simplex => vec![1.0 / (n as f64 + 1.0); n],
        BodyKind::Cone { height, .. } => {
            let mut c = vec![0.0; n];
            c[n - 1] = height / (n as f64 + 1.0);
            c
        }
        _ => vec![0.0; n],
    }
}

fn validate(kind: &BodyKind, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    match kind {
        BodyKind::LpBall { p } if !(*p >= 1.0) => {
            Err(Error::invalid(format!("l_p ball needs p >= 1, got {p}")))
        }
        BodyKind::Cone { height, .. } if !(*height > 0.0) => Err(Error::invalid(format!(
            "cone height must be positive, got {height}"
        ))),
        BodyKind::Cone { base, .. } if base.dim + 1 != n => Err(Error::invalid(format!(
            "cone base has dimension {}, expected {}",
            base.dim,
            n - 1
        ))),
        BodyKind::Cone { .. } if n < 2 => Err(Error::invalid("cone needs n >= 2")),
        BodyKind::OraclePolytope { halfspaces } => {
            if halfspaces.iter().any(|h| h.normal.len() != n) {
                return Err(Error::invalid("halfspace normal length differs from n"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// The kind's reference shape without centering or rescaling.
pub fn raw_body(kind: BodyKind, n: usize) -> Result<BodySpec> {
    validate(&kind, n)?;
    if let BodyKind::OraclePolytope { halfspaces } = &kind {
        polytope::chebyshev_center(halfspaces, n)?;
    }
    Ok(BodySpec {
        kind,
        dim: n,
        normalization: Normalization::Raw,
        center_shift: vec![0.0; n],
        scale: 1.0,
        volume: None,
    })
}

/// Centered, volume-one body of the given kind. Polytopes use the default
/// Monte Carlo budget and seed 0; see [`make_polytope`].
pub fn make_body(kind: BodyKind, n: usize) -> Result<BodySpec> {
    if let BodyKind::OraclePolytope { halfspaces } = kind {
        return make_polytope(halfspaces, n, DEFAULT_VOLUME_SAMPLES, 0);
    }
    validate(&kind, n)?;
    let ln_vol = ln_raw_volume(&kind, n).expect("closed-form volume");
    let center_shift = raw_center(&kind, n);
    Ok(BodySpec {
        kind,
        dim: n,
        normalization: Normalization::VolumeOne,
        center_shift,
        scale: (-ln_vol / n as f64).exp(),
        volume: None,
    })
}

/// Centered, volume-one polytope. Volume and barycenter come from `samples`
/// uniform points in the bounding box found by linear programming.
pub fn make_polytope(
    halfspaces: Vec<Halfspace>,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<BodySpec> {
    let raw = raw_body(BodyKind::OraclePolytope { halfspaces }, n)?;
    let bbox = raw.bounding_box()?;
    let box_vol: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let streams = Streams::new(seed, Domain::PolytopeVolume);
    let blocks = block_ranges(samples, samples.div_ceil(VOLUME_BLOCK));
    let partial: Vec<(usize, Vec<f64>)> = blocks
        .into_par_iter()
        .enumerate()
        .map(|(b, range)| {
            let mut rng = streams.stream(b as u64);
            let mut hits = 0;
            let mut sum = vec![0.0; n];
            let mut y = vec![0.0; n];
            for _ in range {
                for (yi, (lo, hi)) in y.iter_mut().zip(&bbox) {
                    *yi = lo + (hi - lo) * rng.random::<f64>();
                }
                if raw.contains_raw(&y) {
                    hits += 1;
                    sum.iter_mut().zip(&y).for_each(|(s, v)| *s += v);
                }
            }
            (hits, sum)
        })
        .collect();
    let mut hits = 0;
    let mut sum = vec![0.0; n];
    for (h, s) in partial {
        hits += h;
        sum.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
    }
    if hits == 0 {
        return Err(Error::UnresolvableMass(
            "no box sample fell inside the polytope".into(),
        ));
    }
    let (lo, hi) = wilson_interval(hits, samples);
    let value = box_vol * hits as f64 / samples as f64;
    let center: Vec<f64> = sum.iter().map(|s| s / hits as f64).collect();
    let BodyKind::OraclePolytope { halfspaces } = raw.kind else {
        unreachable!()
    };
    Ok(BodySpec {
        kind: BodyKind::OraclePolytope { halfspaces },
        dim: n,
        normalization: Normalization::VolumeOne,
        center_shift: center,
        scale: value.powf(-1.0 / n as f64),
        volume: Some(VolumeEstimate {
            value,
            ci_low: box_vol * lo,
            ci_high: box_vol * hi,
            samples,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cube_is_unit_edge() {
        let k = BodySpec::cube(3).unwrap();
        assert_eq!(k.scale, 1.0);
        assert!(k.contains(&[0.0, 0.0, 0.0]).unwrap());
        assert!(k.contains(&[0.49, -0.5, 0.5]).unwrap());
        assert!(!k.contains(&[0.6, 0.0, 0.0]).unwrap());
        assert!(matches!(
            k.contains(&[0.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn ball_radius_in_the_plane() {
        let k = BodySpec::ball(2).unwrap();
        assert_relative_eq!(
            k.scale,
            1.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
        assert!(k.contains(&[0.5, 0.2]).unwrap());
        assert!(!k.contains(&[0.5, 0.3]).unwrap());
    }

    #[test]
    fn cone_height_three_has_unit_volume() {
        let k = BodySpec::cone(3).unwrap();
        assert_relative_eq!(k.scale, 1.0, max_relative = 1e-14);
        assert_relative_eq!(k.center_shift[2], 0.75);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            BodySpec::lp_ball(3, 0.5),
            Err(Error::InvalidParam(_))
        ));
        let base = Box::new(BodySpec::cube(2).unwrap());
        let bad = make_body(BodyKind::Cone { base, height: -1.0 }, 3);
        assert!(matches!(bad, Err(Error::InvalidParam(_))));
    }

    #[test]
    fn lp_volume_matches_special_cases() {
        // l_1 ball volume 2^n / n!, l_2 matches the ball
        let l1 = BodySpec::lp_ball(4, 1.0).unwrap();
        assert_relative_eq!(l1.scale, (24.0f64 / 16.0).powf(0.25), max_relative = 1e-12);
        let l2 = BodySpec::lp_ball(5, 2.0).unwrap();
        let b = BodySpec::ball(5).unwrap();
        assert_relative_eq!(l2.scale, b.scale, max_relative = 1e-12);
        let linf = BodySpec::lp_ball(5, f64::INFINITY).unwrap();
        assert_relative_eq!(linf.scale, 0.5);
    }

    #[test]
    fn support_functions() {
        let k = BodySpec::cube(3).unwrap();
        assert_relative_eq!(k.support(&[1.0, 0.0, 0.0]).unwrap(), 0.5);
        let s = BodySpec::simplex(2).unwrap();
        // vertex (1, 0) of the raw simplex, centroid 1/3, scale sqrt(2)
        let h = s.support(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(h, 2f64.sqrt() * (1.0 - 1.0 / 3.0), max_relative = 1e-14);
        let c = BodySpec::cone(4).unwrap();
        let top = c.support(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(top, 4.0 - 0.8, max_relative = 1e-14);
    }

    #[test]
    fn cone_axis_marginal_is_power_ramp() {
        let n = 6;
        let raw = raw_body(
            BodyKind::Cone {
                base: Box::new(BodySpec::cube(n - 1).unwrap()),
                height: 2.0,
            },
            n,
        )
        .unwrap();
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        let d = raw.marginal_density(&e).unwrap();
        for &s in &[0.1, 0.7, 1.5] {
            let expected: f64 = (n as f64 / 2.0) * (1.0 - s / 2.0f64).powi(n as i32 - 1);
            assert_relative_eq!(d.pdf(s), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn even_moments_match_quadrature() {
        let k = BodySpec::ball(5).unwrap();
        let y = [0.3, -0.2, 0.5, 0.1, 0.7];
        let d = k.marginal_density(&y).unwrap();
        for j in 1..4 {
            let exact = k.even_moment(&y, j).unwrap();
            let quad = d.ln_abs_moment(2.0 * j as f64).ln_value.exp();
            assert_relative_eq!(exact, quad, max_relative = 1e-9);
        }
        let cube = BodySpec::cube(3).unwrap();
        // E (U1 + U2)^2 = 2/12, E (U1 + U2)^4 = 2/80 + 6/144
        assert_relative_eq!(
            cube.even_moment(&[1.0, 1.0, 0.0], 1).unwrap(),
            1.0 / 6.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            cube.even_moment(&[1.0, 1.0, 0.0], 2).unwrap(),
            2.0 / 80.0 + 6.0 / 144.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn l1_even_moments_match_coordinate_marginal() {
        let k = BodySpec::lp_ball(6, 1.0).unwrap();
        let e = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let d = k.marginal_density(&e).unwrap();
        for j in 1..4 {
            let exact = k.even_moment(&e, j).unwrap();
            let quad = d.ln_abs_moment(2.0 * j as f64).ln_value.exp();
            assert_relative_eq!(exact, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn cone_even_moments_on_axis() {
        let k = BodySpec::cone(5).unwrap();
        let e = [0.0, 0.0, 0.0, 0.0, 1.0];
        let d = k.marginal_density(&e).unwrap();
        for j in 1..4 {
            let exact = k.even_moment(&e, j).unwrap();
            let quad = d.ln_abs_moment(2.0 * j as f64).ln_value.exp();
            assert_relative_eq!(exact, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn polytope_square_normalizes() {
        let mut hs = Vec::new();
        for i in 0..2 {
            for s in [-1.0, 1.0] {
                let mut normal = vec![0.0; 2];
                normal[i] = s;
                hs.push(Halfspace {
                    normal,
                    offset: if i == 0 { 1.0 } else { 2.0 },
                });
            }
        }
        let k = make_polytope(hs, 2, 100_000, 3).unwrap();
        let v = k.volume.unwrap();
        assert!(v.ci_low <= 8.0 && 8.0 <= v.ci_high);
        assert!((k.scale - 8f64.sqrt().recip()).abs() < 0.01);
        assert!(k.contains(&[0.0, 0.0]).unwrap());
    }
}
