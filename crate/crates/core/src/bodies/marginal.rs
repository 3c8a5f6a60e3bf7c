//! One-dimensional marginal laws of uniform measures on bodies.

use serde::Serialize;
use statrs::function::beta::ln_beta;

use crate::numerics::{log_integrate, tail_cutoff, LogQuad};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Closed-form or reconstructed density of a scalar random variable.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density proportional to `(R^p - |t|^p)^(k/p)` on `[-R, R]`: the
    /// coordinate marginal of an `l_p` ball in dimension `k + 1`.
    PowerSlice {
        radius: f64,
        p: f64,
        k: f64,
    },
    /// Density proportional to `|t - zero_end|^k` between the two ends: the
    /// height marginal of a cone, `zero_end` being the apex side.
    PowerRamp {
        zero_end: f64,
        max_end: f64,
        k: f64,
    },
    /// Normalized B-spline with the given knots: the projection of a uniform
    /// simplex whose vertices project onto the knots.
    BSpline {
        knots: Vec<f64>,
    },
    Normal {
        sigma: f64,
    },
    /// `e^{-(t - lo)}` on `[lo, inf)`.
    ShiftedExponential {
        lo: f64,
    },
    Laplace {
        scale: f64,
    },
    /// Gaussian kernel density estimate.
    Kde {
        points: Vec<f64>,
        bandwidth: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityForm {
    ClosedForm,
    NumericalProjection { bandwidth: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalDensity {
    pub direction: Vec<f64>,
    pub form: DensityForm,
    pub law: Law,
    #[serde(skip)]
    ln_norm: f64,
}

impl MarginalDensity {
    pub fn new(direction: Vec<f64>, law: Law) -> Self {
        let law = match law {
            Law::PowerSlice { radius, p, .. } if p.is_infinite() => Law::Uniform {
                lo: -radius,
                hi: radius,
            },
            Law::BSpline { knots } => Law::BSpline {
                knots: snap_knots(knots),
            },
            other => other,
        };
        let form = match &law {
            Law::Kde { bandwidth, .. } => DensityForm::NumericalProjection {
                bandwidth: *bandwidth,
            },
            _ => DensityForm::ClosedForm,
        };
        let ln_norm = match &law {
            Law::Uniform { lo, hi } => -(hi - lo).ln(),
            Law::PowerSlice { radius, p, k } => {
                -(radius.ln() + 2f64.ln() - p.ln() + ln_beta(1.0 / p, k / p + 1.0))
            }
            Law::PowerRamp {
                zero_end,
                max_end,
                k,
            } => (k + 1.0).ln() - (max_end - zero_end).abs().ln(),
            Law::Normal { sigma } => -LN_SQRT_2PI - sigma.ln(),
            Law::Laplace { scale } => -(2.0 * scale).ln(),
            Law::ShiftedExponential { .. } | Law::BSpline { .. } => 0.0,
            Law::Kde { points, bandwidth } => {
                -LN_SQRT_2PI - bandwidth.ln() - (points.len() as f64).ln()
            }
        };
        MarginalDensity {
            direction,
            form,
            law,
            ln_norm,
        }
    }

    /// A standalone law with no ambient direction.
    pub fn scalar(law: Law) -> Self {
        Self::new(vec![1.0], law)
    }

    /// Gaussian KDE of projected sample values with Silverman's bandwidth.
    pub fn from_projection(direction: Vec<f64>, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let iqr =
            crate::numerics::percentile(&sorted, 0.75) - crate::numerics::percentile(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let bandwidth = 0.9 * spread * n.powf(-0.2);
        Self::new(
            direction,
            Law::Kde {
                points: sorted,
                bandwidth,
            },
        )
    }

    pub fn is_closed_form(&self) -> bool {
        self.form == DensityForm::ClosedForm
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.law {
            Law::Uniform { lo, hi } => (*lo, *hi),
            Law::PowerSlice { radius, .. } => (-radius, *radius),
            Law::PowerRamp {
                zero_end, max_end, ..
            } => (zero_end.min(*max_end), zero_end.max(*max_end)),
            Law::BSpline { knots } => (knots[0], knots[knots.len() - 1]),
            Law::Normal { .. } | Law::Laplace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Law::ShiftedExponential { lo } => (*lo, f64::INFINITY),
            Law::Kde { points, bandwidth } => (
                points[0] - 10.0 * bandwidth,
                points[points.len() - 1] + 10.0 * bandwidth,
            ),
        }
    }

    fn scale_hint(&self) -> f64 {
        match &self.law {
            Law::Normal { sigma } => *sigma,
            Law::Laplace { scale } => *scale,
            Law::ShiftedExponential { .. } => 1.0,
            _ => {
                let (a, b) = self.support();
                (b - a) / 16.0
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        match &self.law {
            Law::BSpline { knots } => out.extend(knots.iter().copied()),
            Law::ShiftedExponential { lo } => out.push(*lo),
            _ => {}
        }
        out
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        match &self.law {
            Law::Uniform { lo, hi } => {
                if t >= *lo && t <= *hi {
                    self.ln_norm
                } else {
                    f64::NEG_INFINITY
                }
            }
            Law::PowerSlice { radius, p, k } => {
                let u = t.abs() / radius;
                if u >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                if *k == 0.0 {
                    return self.ln_norm;
                }
                self.ln_norm + (k / p) * (-(u.powf(*p))).ln_1p()
            }
            Law::PowerRamp {
                zero_end,
                max_end,
                k,
            } => {
                let (lo, hi) = (zero_end.min(*max_end), zero_end.max(*max_end));
                if t < lo || t > hi {
                    return f64::NEG_INFINITY;
                }
                let len = (max_end - zero_end).abs();
                self.ln_norm + k * ((t - zero_end).abs() / len).ln()
            }
            Law::BSpline { knots } => bspline_density(knots, t).ln(),
            Law::Normal { sigma } => self.ln_norm - 0.5 * (t / sigma).powi(2),
            Law::Laplace { scale } => self.ln_norm - t.abs() / scale,
            Law::ShiftedExponential { lo } => {
                if t >= *lo {
                    -(t - lo)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Law::Kde { points, bandwidth } => {
                let lo = points.partition_point(|x| *x < t - 12.0 * bandwidth);
                let hi = points.partition_point(|x| *x <= t + 12.0 * bandwidth);
                let mut acc = crate::numerics::LogSumExp::default();
                for x in &points[lo..hi] {
                    acc.push(-0.5 * ((t - x) / bandwidth).powi(2));
                }
                self.ln_norm + acc.value()
            }
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    /// `ln` of `int_lo^hi exp(ln_w(t)) f(t) dt`, with the interval clipped to
    /// the support and infinite ends truncated where the integrand has become
    /// negligible.
    pub fn ln_integral_over<W: Fn(f64) -> f64>(
        &self,
        ln_w: W,
        lo: f64,
        hi: f64,
        rel_tol: f64,
    ) -> LogQuad {
        let (sa, sb) = self.support();
        let mut a = lo.max(sa);
        let mut b = hi.min(sb);
        if b <= a {
            return LogQuad {
                ln_value: f64::NEG_INFINITY,
                rel_error: 0.0,
            };
        }
        let ln_g = |t: f64| ln_w(t) + self.ln_pdf(t);
        let scale = self.scale_hint();
        if a == f64::NEG_INFINITY {
            let anchor = if b.is_finite() { b.min(0.0) } else { 0.0 };
            a = tail_cutoff(&ln_g, anchor, -1.0, scale, 90.0);
        }
        if b == f64::INFINITY {
            let anchor = a.max(0.0);
            b = tail_cutoff(&ln_g, anchor, 1.0, scale, 90.0);
        }
        log_integrate(&ln_g, a, b, &self.breakpoints(), rel_tol)
    }

    pub fn ln_integral<W: Fn(f64) -> f64>(&self, ln_w: W, rel_tol: f64) -> LogQuad {
        self.ln_integral_over(ln_w, f64::NEG_INFINITY, f64::INFINITY, rel_tol)
    }

    /// Total mass; 1 up to quadrature error for a valid density.
    pub fn mass(&self) -> f64 {
        self.ln_integral(|_| 0.0, 1e-13).ln_value.exp()
    }

    /// `ln E|X|^p` by quadrature.
    pub fn ln_abs_moment(&self, p: f64) -> LogQuad {
        self.ln_integral(|t: f64| p * t.abs().ln(), 1e-13)
    }

    pub fn mean(&self) -> f64 {
        let pos = self
            .ln_integral_over(|t: f64| t.ln(), 0.0, f64::INFINITY, 1e-13)
            .ln_value
            .exp();
        let neg = self
            .ln_integral_over(|t: f64| (-t).ln(), f64::NEG_INFINITY, 0.0, 1e-13)
            .ln_value
            .exp();
        pos - neg
    }

    /// `P(|X| >= c)` by quadrature.
    pub fn two_sided_tail(&self, c: f64) -> f64 {
        let right = self
            .ln_integral_over(|_| 0.0, c, f64::INFINITY, 1e-13)
            .ln_value
            .exp();
        let left = self
            .ln_integral_over(|_| 0.0, f64::NEG_INFINITY, -c, 1e-13)
            .ln_value
            .exp();
        right + left
    }

    /// `E e^{tX}`, infinite when the integrand does not decay.
    pub fn mgf(&self, t: f64) -> f64 {
        self.ln_integral(|x| t * x, 1e-13).ln_value.exp()
    }
}

fn snap_knots(mut knots: Vec<f64>) -> Vec<f64> {
    knots.sort_by(|a, b| a.total_cmp(b));
    let span = knots[knots.len() - 1] - knots[0];
    let tol = 1e-12 * span.max(f64::MIN_POSITIVE);
    for i in 1..knots.len() {
        if knots[i] - knots[i - 1] < tol {
            knots[i] = knots[i - 1];
        }
    }
    knots
}

/// Normalized B-spline `M(t; knots)` (integral one) by the Curry–Schoenberg
/// recurrence. The order is `knots.len() - 1`.
pub fn bspline_density(knots: &[f64], t: f64) -> f64 {
    let order = knots.len() - 1;
    if t < knots[0] || t >= knots[order] {
        return 0.0;
    }
    let mut m: Vec<f64> = (0..order)
        .map(|i| {
            let w = knots[i + 1] - knots[i];
            if w > 0.0 && t >= knots[i] && t < knots[i + 1] {
                1.0 / w
            } else {
                0.0
            }
        })
        .collect();
    for k in 2..=order {
        let kf = k as f64;
        for i in 0..=(order - k) {
            let w = knots[i + k] - knots[i];
            m[i] = if w > 0.0 {
                kf / (kf - 1.0) * ((t - knots[i]) * m[i] + (knots[i + k] - t) * m[i + 1]) / w
            } else {
                0.0
            };
        }
    }
    m[0].max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_unit_mass(d: &MarginalDensity) {
        let m = d.mass();
        assert!((m - 1.0).abs() < 1e-8, "mass {m} for {:?}", d.law);
    }

    #[test]
    fn closed_forms_integrate_to_one() {
        let laws = vec![
            Law::Uniform { lo: -0.5, hi: 0.5 },
            Law::PowerSlice {
                radius: 0.7,
                p: 2.0,
                k: 4.0,
            },
            Law::PowerSlice {
                radius: 1.3,
                p: 1.0,
                k: 9.0,
            },
            Law::PowerSlice {
                radius: 1.0,
                p: 3.5,
                k: 2.0,
            },
            Law::PowerRamp {
                zero_end: 3.0,
                max_end: -0.2,
                k: 19.0,
            },
            Law::BSpline {
                knots: vec![-0.4, -0.1, 0.05, 0.3, 0.9],
            },
            Law::Normal { sigma: 1.0 },
            Law::ShiftedExponential { lo: -1.0 },
            Law::Laplace { scale: 0.5 },
        ];
        for law in laws {
            assert_unit_mass(&MarginalDensity::scalar(law));
        }
    }

    #[test]
    fn bspline_with_repeated_knots_is_simplex_coordinate() {
        // coordinate marginal of the standard 3-simplex: 3 (1 - t)^2 on [0, 1]
        let knots = vec![0.0, 0.0, 0.0, 1.0];
        for &t in &[0.1, 0.5, 0.9] {
            let expected = 3.0 * (1.0 - t) * (1.0 - t);
            assert!((bspline_density(&knots, t) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn bspline_triangle_is_hat() {
        let knots = vec![0.0, 1.0, 2.0];
        assert!((bspline_density(&knots, 0.5) - 0.5).abs() < 1e-15);
        assert!((bspline_density(&knots, 1.0) - 1.0).abs() < 1e-15);
        assert!((bspline_density(&knots, 1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_moments_match_closed_form() {
        let d = MarginalDensity::scalar(Law::Uniform { lo: -0.5, hi: 0.5 });
        for &p in &[1.0, 2.0, 4.0, 8.0] {
            let v = (d.ln_abs_moment(p).ln_value / p).exp();
            let exact = 0.5 * (p + 1.0f64).powf(-1.0 / p);
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_mgf() {
        let d = MarginalDensity::scalar(Law::ShiftedExponential { lo: -1.0 });
        let t: f64 = 0.5;
        assert!((d.mgf(t) - (-t).exp() / (1.0 - t)).abs() < 1e-10);
        assert!(d.mean().abs() < 1e-12);
    }

    #[test]
    fn kde_of_uniform_values() {
        let vals: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0 - 0.5).collect();
        let d = MarginalDensity::from_projection(vec![1.0], &vals);
        assert!(matches!(d.form, DensityForm::NumericalProjection { .. }));
        assert!((d.mass() - 1.0).abs() < 1e-6);
        assert!((d.pdf(0.0) - 1.0).abs() < 0.05);
    }
}
