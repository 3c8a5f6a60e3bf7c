//! Halfspace polytopes: linear programs for interior points and support values.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `normal · x <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Center and radius of the largest inscribed ball.
pub fn chebyshev_center(halfspaces: &[Halfspace], dim: usize) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..dim)
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let r = lp.add_var(1.0, (0.0, f64::INFINITY));
    for h in halfspaces {
        let norm = h.normal.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut terms: Vec<_> = xs.iter().zip(&h.normal).map(|(v, a)| (*v, *a)).collect();
        terms.push((r, norm));
        lp.add_constraint(terms, ComparisonOp::Le, h.offset);
    }
    let sol = lp.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::invalid("polytope is empty"),
        minilp::Error::Unbounded => Error::invalid("polytope is unbounded"),
    })?;
    let radius = *sol.var_value(r);
    if radius <= 1e-12 {
        return Err(Error::invalid("polytope has empty interior"));
    }
    let center = xs.iter().map(|v| *sol.var_value(*v)).collect();
    Ok((center, radius))
}

/// `max { theta · x : x in P }`.
pub fn support_value(halfspaces: &[Halfspace], theta: &[f64]) -> Result<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = theta
        .iter()
        .map(|c| lp.add_var(*c, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for h in halfspaces {
        let terms: Vec<_> = xs.iter().zip(&h.normal).map(|(v, a)| (*v, *a)).collect();
        lp.add_constraint(terms, ComparisonOp::Le, h.offset);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?;
    Ok(sol.objective())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Halfspace> {
        let mut hs = Vec::new();
        for i in 0..2 {
            for s in [-1.0, 1.0] {
                let mut normal = vec![0.0; 2];
                normal[i] = s;
                hs.push(Halfspace {
                    normal,
                    offset: 1.0,
                });
            }
        }
        hs
    }

    #[test]
    fn square_center_and_support() {
        let (c, r) = chebyshev_center(&square(), 2).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-9));
        assert!((r - 1.0).abs() < 1e-9);
        let h = support_value(&square(), &[1.0, 1.0]).unwrap();
        assert!((h - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_polytope_is_rejected() {
        let hs = vec![
            Halfspace {
                normal: vec![1.0],
                offset: -1.0,
            },
            Halfspace {
                normal: vec![-1.0],
                offset: -1.0,
            },
        ];
        assert!(matches!(
            chebyshev_center(&hs, 1),
            Err(Error::InvalidParam(_))
        ));
    }
}
