//! Log-space accumulation, adaptive quadrature and small fitting helpers.

use std::ops::Range;

/// Streaming `ln(sum(exp(x_i)))` with running-max rescaling.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, ln_x: f64) {
        if ln_x == f64::NEG_INFINITY {
            return;
        }
        if ln_x > self.max {
            self.scaled = self.scaled * (self.max - ln_x).exp() + 1.0;
            self.max = ln_x;
        } else {
            self.scaled += (ln_x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSumExp::default();
    values.iter().for_each(|&v| acc.push(v));
    acc.value()
}

/// Splits `0..len` into `blocks` contiguous ranges of near-equal size.
/// The partition depends only on `len` and `blocks`.
pub fn block_ranges(len: usize, blocks: usize) -> Vec<Range<usize>> {
    let blocks = blocks.clamp(1, len.max(1));
    let base = len / blocks;
    let extra = len % blocks;
    let mut out = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let size = base + usize::from(b < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Linear interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

/// Adaptive integration: a double-exponential rule on each piece, bisecting
/// pieces whose error estimate misses their share of the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Quad {
    if b <= a {
        return Quad {
            value: 0.0,
            error: 0.0,
        };
    }
    bisect(f, a, b, abs_tol.max(1e-300), 0)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Quad {
    let out = quadrature::integrate(f, a, b, tol);
    // once the tolerance is below rounding level further splitting cannot help
    let floor = 1e-13 * out.integral.abs();
    if out.error_estimate <= tol.max(floor) || depth >= 48 {
        return Quad {
            value: out.integral,
            error: out.error_estimate.min(out.integral.abs().max(tol)),
        };
    }
    let m = 0.5 * (a + b);
    let l = bisect(f, a, m, 0.5 * tol, depth + 1);
    let r = bisect(f, m, b, 0.5 * tol, depth + 1);
    Quad {
        value: l.value + r.value,
        error: l.error + r.error,
    }
}

/// `ln` of an integral given the integrand in log form, evaluated with the
/// integrand rescaled by its peak so that large exponents cannot overflow.
#[derive(Clone, Copy, Debug)]
pub struct LogQuad {
    pub ln_value: f64,
    pub rel_error: f64,
}

const SCAN_POINTS: usize = 4096;

/// Integrates `exp(ln_g)` over `[a, b]` (finite), splitting at `breaks`.
pub fn log_integrate<G: Fn(f64) -> f64>(
    ln_g: &G,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> LogQuad {
    assert!(a.is_finite() && b.is_finite());
    if b <= a {
        return LogQuad {
            ln_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        };
    }
    let h = (b - a) / SCAN_POINTS as f64;
    let mut peak = f64::NEG_INFINITY;
    let mut arg = a;
    let mut grid = Vec::with_capacity(SCAN_POINTS + 1);
    for i in 0..=SCAN_POINTS {
        let x = a + h * i as f64;
        let v = ln_g(x);
        grid.push(v);
        if v > peak {
            peak = v;
            arg = x;
        }
    }
    for &x in breaks {
        if x > a && x < b {
            let v = ln_g(x);
            if v > peak {
                peak = v;
                arg = x;
            }
        }
    }
    if peak == f64::NEG_INFINITY || peak.is_nan() {
        return LogQuad {
            ln_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        };
    }
    let rough: f64 = grid.iter().map(|v| (v - peak).exp()).sum::<f64>() * h;
    let tol = rel_tol * rough.max(h * 1e-3);

    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    if arg > a && arg < b {
        cuts.push(arg);
    }
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));

    let f = |x: f64| (ln_g(x) - peak).exp();
    let pieces = (cuts.len() - 1) as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let q = integrate(&f, w[0], w[1], tol / pieces);
        total += q.value;
        err += q.error;
    }
    LogQuad {
        ln_value: peak + total.ln(),
        rel_error: if total > 0.0 { err / total } else { 0.0 },
    }
}

/// Walks outward from `start` in direction `dir` until `ln_g` has dropped
/// `drop` below the largest value seen; used to truncate infinite supports.
pub fn tail_cutoff<G: Fn(f64) -> f64>(
    ln_g: &G,
    start: f64,
    dir: f64,
    scale: f64,
    drop: f64,
) -> f64 {
    let mut x = start;
    let mut step = scale;
    let mut best = ln_g(start);
    for _ in 0..400 {
        x += dir * step;
        let v = ln_g(x);
        if v > best {
            best = v;
        } else if v < best - drop || v == f64::NEG_INFINITY {
            return x;
        }
        step *= 1.25;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [0.1, -2.0, 3.5, 1.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        let mut a = LogSumExp::default();
        let mut b = LogSumExp::default();
        a.push(xs[0]);
        a.push(xs[1]);
        b.push(xs[2]);
        b.push(xs[3]);
        a.merge(&b);
        assert!((a.value() - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_huge_exponents() {
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn block_ranges_cover_everything() {
        let r = block_ranges(10, 3);
        assert_eq!(r, vec![0..4, 4..7, 7..10]);
        assert_eq!(block_ranges(2, 5).len(), 2);
    }

    #[test]
    fn integrate_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let q = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((q.value - 2.0).abs() < 1e-9, "{}", q.value);
        // int_{-1}^{1} sqrt(1-x^2) dx = pi/2
        let q = integrate(&|x: f64| (1.0 - x * x).sqrt(), -1.0, 1.0, 1e-13);
        assert!((q.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn log_integrate_large_power() {
        // int_0^1 x^500 dx = 1/501
        let q = log_integrate(&|x: f64| 500.0 * x.ln(), 0.0, 1.0, &[], 1e-12);
        assert!((q.ln_value + 501f64.ln()).abs() < 1e-10);
        // int_0^200 x^300 e^{-x} dx = Gamma(301) (overflows in linear space)
        let q = log_integrate(&|x: f64| 300.0 * x.ln() - x, 0.0, 2000.0, &[], 1e-12);
        let expected = statrs::function::gamma::ln_gamma(301.0);
        assert!(
            (q.ln_value - expected).abs() < 1e-9,
            "{} vs {}",
            q.ln_value,
            expected
        );
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
    }
}
