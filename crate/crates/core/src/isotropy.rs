//! Covariance estimation, the volume-preserving isotropic map and
//! orthogonal complements.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::block_ranges;
use crate::rng::{Domain, Streams};
use crate::sampling::{sphere_point, SampleBatch};
use crate::stats::{block_bootstrap, BOOTSTRAP_BLOCKS, BOOTSTRAP_SEED};

const SINGULAR_RATIO: f64 = 1e-12;
const CROSS_CHECK_DIRECTIONS: usize = 10;

#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    pub sigma: DMatrix<f64>,
    pub mean: Vec<f64>,
    /// 97.5th bootstrap percentile of `||Sigma* - Sigma||_F`.
    pub frobenius_ci: f64,
    pub samples: usize,
}

struct BlockMoments {
    count: f64,
    sum: DVector<f64>,
    outer: DMatrix<f64>,
}

fn block_moments(batch: &SampleBatch) -> Vec<BlockMoments> {
    let n = batch.dim;
    block_ranges(batch.len, BOOTSTRAP_BLOCKS)
        .into_par_iter()
        .map(|range| {
            let mut sum = DVector::zeros(n);
            let mut outer = DMatrix::zeros(n, n);
            for i in range.clone() {
                let x = DVector::from_column_slice(batch.point(i));
                outer.ger(1.0, &x, &x, 1.0);
                sum += x;
            }
            BlockMoments {
                count: range.len() as f64,
                sum,
                outer,
            }
        })
        .collect()
}

fn weighted_covariance(blocks: &[BlockMoments], weights: Option<&[u32]>) -> DMatrix<f64> {
    let n = blocks[0].sum.len();
    let mut count = 0.0;
    let mut sum = DVector::zeros(n);
    let mut outer = DMatrix::zeros(n, n);
    for (i, b) in blocks.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i] as f64);
        if w == 0.0 {
            continue;
        }
        count += w * b.count;
        sum.axpy(w, &b.sum, 1.0);
        outer += w * &b.outer;
    }
    let mean = sum / count;
    let mut sigma = (outer - count * &mean * mean.transpose()) / (count - 1.0);
    sigma = 0.5 * (&sigma + sigma.transpose());
    sigma
}

/// Sample covariance with a block-bootstrap Frobenius confidence bound.
/// Needs at least `10 n^2` points.
pub fn estimate_covariance(batch: &SampleBatch) -> Result<CovarianceEstimate> {
    let n = batch.dim;
    let needed = 10 * n * n;
    if batch.len < needed.max(2) {
        return Err(Error::InsufficientSamples {
            needed: needed.max(2),
            got: batch.len,
        });
    }
    let blocks = block_moments(batch);
    let sigma = weighted_covariance(&blocks, None);
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > SINGULAR_RATIO * max) {
        return Err(Error::SingularCovariance { ratio: min / max });
    }
    let boot = block_bootstrap(blocks.len(), BOOTSTRAP_SEED ^ batch.seed, |w| {
        (weighted_covariance(&blocks, Some(w)) - &sigma).norm()
    });
    let mut total = DVector::zeros(n);
    for b in &blocks {
        total += &b.sum;
    }
    Ok(CovarianceEstimate {
        sigma,
        mean: (total / batch.len as f64).iter().copied().collect(),
        frobenius_ci: boot.high,
        samples: batch.len,
    })
}

/// `T = (det Sigma)^{1/(2n)} Sigma^{-1/2}` and diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct IsotropicTransform {
    pub n: usize,
    /// Row-major `n x n`.
    pub t: Vec<f64>,
    pub lk: f64,
    pub det_check: f64,
    /// `||Cov(T X) - L_K^2 I||_F`, when computed from a batch.
    pub cov_residual: Option<f64>,
    /// Bootstrap bound the residual is compared against.
    pub cov_ci: Option<f64>,
    /// Mean of `||<T X, theta>||_2` over random unit `theta`.
    pub lk_cross_check: Option<f64>,
}

impl IsotropicTransform {
    pub fn identity(n: usize, lk: f64) -> Self {
        let mut t = vec![0.0; n * n];
        (0..n).for_each(|i| t[i * n + i] = 1.0);
        IsotropicTransform {
            n,
            t,
            lk,
            det_check: 1.0,
            cov_residual: None,
            cov_ci: None,
            lk_cross_check: None,
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.t)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.t[i * n + j] * v[j]).sum())
            .collect()
    }

    pub fn apply_batch(&self, batch: &SampleBatch) -> SampleBatch {
        batch.transformed(&self.t)
    }
}

pub fn isotropic_transform(sigma: &DMatrix<f64>) -> Result<IsotropicTransform> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sigma.ncols(),
        });
    }
    let sym = 0.5 * (sigma + sigma.transpose());
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > SINGULAR_RATIO * max) {
        return Err(Error::SingularCovariance { ratio: min / max });
    }
    let ln_det: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    let ln_lk = ln_det / (2.0 * n as f64);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (ln_lk - 0.5 * l.ln()).exp()));
    let v = &eig.eigenvectors;
    let mut t = v * d * v.transpose();
    t = 0.5 * (&t + t.transpose());
    let det_check = t.clone().determinant();
    Ok(IsotropicTransform {
        n,
        t: t.transpose().as_slice().to_vec(),
        lk: ln_lk.exp(),
        det_check,
        cov_residual: None,
        cov_ci: None,
        lk_cross_check: None,
    })
}

/// Covariance, transform and the post-transform diagnostics of one batch.
pub fn isotropize(batch: &SampleBatch) -> Result<(CovarianceEstimate, IsotropicTransform)> {
    let cov = estimate_covariance(batch)?;
    let mut tr = isotropic_transform(&cov.sigma)?;
    let t = tr.matrix();
    let post = &t * &cov.sigma * t.transpose();
    let target = DMatrix::identity(tr.n, tr.n) * (tr.lk * tr.lk);
    tr.cov_residual = Some((post - target).norm());
    // ||T A T||_F <= ||T||_2^2 ||A||_F
    let spectral = t.clone().symmetric_eigenvalues().amax();
    tr.cov_ci = Some(cov.frobenius_ci * spectral * spectral);
    let streams = Streams::new(batch.seed, Domain::Check);
    let cross: f64 = (0..CROSS_CHECK_DIRECTIONS)
        .map(|i| {
            let theta = sphere_point(tr.n, &mut streams.stream(i as u64));
            let y = tr.apply(&theta);
            let m2 = batch.project(&y).iter().map(|v| v * v).sum::<f64>() / batch.len as f64;
            m2.sqrt()
        })
        .sum::<f64>()
        / CROSS_CHECK_DIRECTIONS as f64;
    tr.lk_cross_check = Some(cross);
    Ok((cov, tr))
}

/// Orthonormal columns spanning a subspace of `R^n`.
#[derive(Clone, Debug, Serialize)]
pub struct Subspace {
    pub n: usize,
    pub basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn full(n: usize) -> Self {
        Subspace {
            n,
            basis: (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `sum_k c_k b_k`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.iter_mut().zip(b).for_each(|(o, v)| *o += c * v);
        }
        out
    }

    /// Orthogonal projection of `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let coeffs: Vec<f64> = self.basis.iter().map(|b| dot(b, v)).collect();
        self.combine(&coeffs)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_components(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Orthonormal basis of the complement of `span(vectors)` in `R^n`.
pub fn orth_complement(vectors: &[Vec<f64>], n: usize) -> Result<Subspace> {
    let mut span: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let scale = dot(v, v).sqrt();
        let mut w = v.clone();
        remove_components(&mut w, &span);
        let r = dot(&w, &w).sqrt();
        if !(r > 1e-10 * scale) {
            return Err(Error::DependentInput);
        }
        span.push(w.into_iter().map(|x| x / r).collect());
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while span.len() + basis.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            remove_components(&mut e, &span);
            remove_components(&mut e, &basis);
            let r = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, e));
            }
        }
        let (r, e) = best.expect("n > 0");
        basis.push(e.into_iter().map(|x| x / r).collect());
    }
    Ok(Subspace { n, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::BodySpec;
    use crate::sampling::{sample_uniform, Method};
    use approx::assert_relative_eq;

    #[test]
    fn identity_and_diagonal_cases() {
        let t = isotropic_transform(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(t.lk, 1.0, max_relative = 1e-14);
        let t = isotropic_transform(&DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])))
            .unwrap();
        assert_relative_eq!(t.t[0], 0.5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(t.t[3], 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(t.lk, 2f64.sqrt(), max_relative = 1e-12);
        assert!((t.det_check - 1.0).abs() < 1e-12);
        let t = isotropic_transform(&(DMatrix::identity(2, 2) / 12.0)).unwrap();
        assert_relative_eq!(t.lk, 12f64.sqrt().recip(), max_relative = 1e-12);
        assert_relative_eq!(t.t[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(
            isotropic_transform(&s),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn too_few_samples() {
        let k = BodySpec::cube(3).unwrap();
        let b = sample_uniform(&k, 1, 0, Method::Direct).unwrap();
        assert!(matches!(
            estimate_covariance(&b),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn cube_covariance_is_a_twelfth() {
        let k = BodySpec::cube(2).unwrap();
        let b = sample_uniform(&k, 200_000, 4, Method::Direct).unwrap();
        let c = estimate_covariance(&b).unwrap();
        let exact = DMatrix::identity(2, 2) / 12.0;
        let err = (&c.sigma - exact).norm();
        assert!(err < 2.0 * c.frobenius_ci, "{err} vs {}", c.frobenius_ci);
        let (_, t) = isotropize(&b).unwrap();
        assert!(t.cov_residual.unwrap() < 1e-12);
        assert!((t.lk_cross_check.unwrap() - t.lk).abs() < 0.01);
    }

    #[test]
    fn complements() {
        let s = orth_complement(&[vec![1.0, 0.0, 0.0]], 3).unwrap();
        assert_eq!(s.dim(), 2);
        for b in &s.basis {
            assert!(b[0].abs() < 1e-15);
        }
        let s = orth_complement(&[vec![1.0, 1.0]], 2).unwrap();
        assert_relative_eq!(s.basis[0][0].abs(), 0.5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(s.basis[0][0], -s.basis[0][1], max_relative = 1e-12);
        assert!(matches!(
            orth_complement(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], 3),
            Err(Error::DependentInput)
        ));
    }
}
