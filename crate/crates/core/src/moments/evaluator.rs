//! Sources of `||<X, y>||_p`, all expressed in the isotropic frame: with a
//! transform `T`, the norm of `y` is that of `<T X, y> = <X, T y>`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::{marginal_lp_density, p_max, LpEstimate, ProjectedSample};
use crate::bodies::BodySpec;
use crate::error::{Error, Result};
use crate::isotropy::IsotropicTransform;
use crate::rng::derive_seed;
use crate::sampling::{sample_uniform, Method, SampleBatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    #[serde(rename = "mc")]
    MonteCarlo,
    #[serde(rename = "quad")]
    Quadrature,
    Auto,
}

pub trait LpEvaluator: Send + Sync {
    fn dim(&self) -> usize;

    /// `||<., y>||_p` for every `p` in `ps`.
    fn norms(&self, y: &[f64], ps: &[f64]) -> Result<Vec<LpEstimate>>;

    /// Largest `p` this evaluator accepts along `y`.
    fn max_p(&self, y: &[f64]) -> f64;

    /// The same evaluator with twice the sample budget, when that means
    /// anything.
    fn refined(&self) -> Option<&dyn LpEvaluator>;
}

fn check_dim(expected: usize, y: &[f64]) -> Result<()> {
    if y.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: y.len(),
        });
    }
    Ok(())
}

/// Monte Carlo over a (transformed) uniform sample.
pub struct SampleEvaluator {
    points: Arc<Vec<f64>>,
    dim: usize,
    seed: u64,
    source: Option<(BodySpec, Method, Option<IsotropicTransform>)>,
    refined: OnceLock<Option<Box<SampleEvaluator>>>,
}

impl SampleEvaluator {
    /// Evaluator over `T X` for the points of `batch`.
    pub fn new(batch: &SampleBatch, transform: Option<&IsotropicTransform>) -> Self {
        let points = match transform {
            Some(t) => t.apply_batch(batch).points,
            None => batch.points.clone(),
        };
        SampleEvaluator {
            points: Arc::new(points),
            dim: batch.dim,
            seed: batch.seed,
            source: None,
            refined: OnceLock::new(),
        }
    }

    /// As `new`, remembering the body so that `refined` can draw a second
    /// batch of the same size.
    pub fn with_body(
        body: &BodySpec,
        batch: &SampleBatch,
        transform: Option<&IsotropicTransform>,
    ) -> Self {
        let mut e = Self::new(batch, transform);
        e.source = Some((body.clone(), batch.method, transform.cloned()));
        e
    }

    pub fn samples(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn make_refined(&self) -> Option<Box<SampleEvaluator>> {
        let (body, method, transform) = self.source.as_ref()?;
        let seed = derive_seed(self.seed, self.samples() as u64);
        let extra = sample_uniform(body, self.samples(), seed, *method).ok()?;
        let extra = match transform {
            Some(t) => t.apply_batch(&extra).points,
            None => extra.points,
        };
        let mut points = self.points.as_ref().clone();
        points.extend(extra);
        Some(Box::new(SampleEvaluator {
            points: Arc::new(points),
            dim: self.dim,
            seed,
            source: self.source.clone(),
            refined: OnceLock::new(),
        }))
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.points
            .chunks_exact(self.dim)
            .map(|x| x.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl LpEvaluator for SampleEvaluator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn norms(&self, y: &[f64], ps: &[f64]) -> Result<Vec<LpEstimate>> {
        check_dim(self.dim, y)?;
        let sample = ProjectedSample::new(&self.project(y), self.seed);
        ps.iter().map(|p| sample.lp(*p)).collect()
    }

    fn max_p(&self, _y: &[f64]) -> f64 {
        p_max(self.samples())
    }

    fn refined(&self) -> Option<&dyn LpEvaluator> {
        self.refined
            .get_or_init(|| self.make_refined())
            .as_deref()
            .map(|e| e as &dyn LpEvaluator)
    }
}

/// Quadrature of closed-form marginal densities.
#[derive(Clone)]
pub struct QuadratureEvaluator {
    body: BodySpec,
    transform: Option<IsotropicTransform>,
}

impl QuadratureEvaluator {
    pub fn new(body: &BodySpec, transform: Option<&IsotropicTransform>) -> Self {
        QuadratureEvaluator {
            body: body.clone(),
            transform: transform.cloned(),
        }
    }

    pub fn body(&self) -> &BodySpec {
        &self.body
    }

    fn body_direction(&self, y: &[f64]) -> Vec<f64> {
        match &self.transform {
            Some(t) => t.apply(y),
            None => y.to_vec(),
        }
    }

    pub fn supports(&self, y: &[f64]) -> bool {
        y.len() == self.body.dim && self.body.marginal_density(&self.body_direction(y)).is_ok()
    }
}

impl LpEvaluator for QuadratureEvaluator {
    fn dim(&self) -> usize {
        self.body.dim
    }

    fn norms(&self, y: &[f64], ps: &[f64]) -> Result<Vec<LpEstimate>> {
        check_dim(self.body.dim, y)?;
        let d = self.body.marginal_density(&self.body_direction(y))?;
        Ok(ps.iter().map(|p| marginal_lp_density(&d, *p)).collect())
    }

    fn max_p(&self, y: &[f64]) -> f64 {
        if self.supports(y) {
            f64::INFINITY
        } else {
            0.0
        }
    }

    fn refined(&self) -> Option<&dyn LpEvaluator> {
        None
    }
}

/// Quadrature where a closed-form marginal exists, Monte Carlo otherwise.
pub struct AutoEvaluator {
    quad: QuadratureEvaluator,
    mc: SampleEvaluator,
    refined: OnceLock<Option<Box<AutoEvaluator>>>,
}

impl AutoEvaluator {
    pub fn new(quad: QuadratureEvaluator, mc: SampleEvaluator) -> Self {
        AutoEvaluator {
            quad,
            mc,
            refined: OnceLock::new(),
        }
    }
}

impl LpEvaluator for AutoEvaluator {
    fn dim(&self) -> usize {
        self.quad.dim()
    }

    fn norms(&self, y: &[f64], ps: &[f64]) -> Result<Vec<LpEstimate>> {
        if self.quad.supports(y) {
            self.quad.norms(y, ps)
        } else {
            self.mc.norms(y, ps)
        }
    }

    fn max_p(&self, y: &[f64]) -> f64 {
        if self.quad.supports(y) {
            f64::INFINITY
        } else {
            self.mc.max_p(y)
        }
    }

    fn refined(&self) -> Option<&dyn LpEvaluator> {
        self.refined
            .get_or_init(|| {
                let mc = self.mc.make_refined()?;
                Some(Box::new(AutoEvaluator::new(self.quad.clone(), *mc)))
            })
            .as_deref()
            .map(|e| e as &dyn LpEvaluator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotropy::isotropize;

    #[test]
    fn linear_invariance_on_transformed_batch() {
        let k = BodySpec::simplex(4).unwrap();
        let b = sample_uniform(&k, 20_000, 1, Method::Direct).unwrap();
        let (_, t) = isotropize(&b).unwrap();
        let e = SampleEvaluator::new(&b, Some(&t));
        let plain = SampleEvaluator::new(&b, None);
        let y = [0.3, -0.1, 0.7, 0.2];
        let ty = t.apply(&y);
        for p in [1.0, 2.0, 4.0] {
            let a = e.norms(&y, &[p]).unwrap()[0].value;
            let c = plain.norms(&ty, &[p]).unwrap()[0].value;
            assert!((a - c).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn auto_prefers_quadrature() {
        let k = BodySpec::cube(3).unwrap();
        let b = sample_uniform(&k, 5000, 1, Method::Direct).unwrap();
        let auto = AutoEvaluator::new(
            QuadratureEvaluator::new(&k, None),
            SampleEvaluator::with_body(&k, &b, None),
        );
        let e = auto.norms(&[1.0, 0.0, 0.0], &[30.0]).unwrap();
        assert_eq!(e[0].method, super::super::EstimateMethod::Quadrature);
        assert!(auto.norms(&[1.0, 1.0, 0.0], &[30.0]).is_err());
        assert!(auto.norms(&[1.0, 1.0, 0.0], &[2.0]).is_ok());
        let r = auto.refined().unwrap();
        assert!(r.max_p(&[1.0, 1.0, 0.0]) > auto.max_p(&[1.0, 1.0, 0.0]));
    }
}
