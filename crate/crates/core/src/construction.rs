//! Dyadic moment grid, the outer/inner sublevel sets `A_p` and `B_p`, greedy
//! selection of directions with two-sided moment bounds, and certification
//! of the result on a denser grid.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::BodySpec;
use crate::error::{Error, Result};
use crate::isotropy::{isotropize, orth_complement, IsotropicTransform};
use crate::moments::{
    marginal_lp_density, AutoEvaluator, EstimateMethod, EvaluatorKind, LpEstimate, LpEvaluator,
    MomentProfile, QuadratureEvaluator, SampleEvaluator,
};
use crate::numerics::linear_fit;
use crate::rng::{derive_seed, Domain, Streams};
use crate::sampling::{default_method, sample_uniform, SampleBatch};

pub const DEFAULT_C0: f64 = 0.25;
pub const DEFAULT_C_OUTER: f64 = 4.0;
pub const DEFAULT_EPS: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 0.9;
/// Lower flag constant `c1` for `||.||_p / (sqrt(p) ||.||_2)`.
pub const FLAG_LOWER: f64 = 0.2;
/// Upper flag constant `C1`.
pub const FLAG_UPPER: f64 = 3.0;
/// Largest accepted log-log slope of the ratio over `[sqrt(n), n]`.
pub const GROWTH_SLOPE_MAX: f64 = 0.25;
pub const ENDPOINT_CONSTANT: f64 = 8.0;
pub const FALLBACK_ITERATIONS: usize = 200;

/// Moment orders `p = 2^j <= c0 n` with the two threshold constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridD {
    pub n: usize,
    pub c0: f64,
    #[serde(rename = "C0")]
    pub c_outer: f64,
    pub eps: f64,
    pub exponents: Vec<f64>,
}

pub fn make_grid(n: usize, c0: f64, c_outer: f64, eps: f64) -> Result<GridD> {
    if !(c0 > 0.0 && c0 <= 0.25) {
        return Err(Error::invalid(format!("c0 must lie in (0, 1/4], got {c0}")));
    }
    if !(c_outer > 0.0 && eps > 0.0) {
        return Err(Error::invalid(format!(
            "C0 and eps must be positive, got {c_outer} and {eps}"
        )));
    }
    let limit = c0 * n as f64;
    if limit < 1.0 {
        return Err(Error::DimensionTooSmall { product: limit });
    }
    let mut exponents = Vec::new();
    let mut p = 1.0;
    while p <= limit {
        exponents.push(p);
        p *= 2.0;
    }
    Ok(GridD {
        n,
        c0,
        c_outer,
        eps,
        exponents,
    })
}

impl GridD {
    pub fn defaults(n: usize) -> Result<Self> {
        make_grid(n, DEFAULT_C0, DEFAULT_C_OUTER, DEFAULT_EPS)
    }

    /// `C0 sqrt(n p) L_K`.
    pub fn outer_threshold(&self, p: f64, lk: f64) -> f64 {
        self.c_outer * (self.n as f64 * p).sqrt() * lk
    }

    /// `eps sqrt(n p) L_K`.
    pub fn inner_threshold(&self, p: f64, lk: f64) -> f64 {
        self.eps * (self.n as f64 * p).sqrt() * lk
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Indeterminate,
}

/// Compares an interval estimate against `value <= threshold`.
pub fn classify(e: &LpEstimate, threshold: f64) -> Membership {
    if e.ci_high <= threshold {
        Membership::In
    } else if e.ci_low > threshold {
        Membership::Out
    } else {
        Membership::Indeterminate
    }
}

fn norms_with_refinement(
    evaluator: &dyn LpEvaluator,
    y: &[f64],
    ps: &[f64],
) -> Result<(Vec<LpEstimate>, bool)> {
    match evaluator.norms(y, ps) {
        Ok(v) => Ok((v, false)),
        Err(Error::PTooLargeForBudget { .. }) if evaluator.refined().is_some() => {
            Ok((evaluator.refined().expect("checked").norms(y, ps)?, true))
        }
        Err(e) => Err(e),
    }
}

/// Tri-state membership with one refinement; `None` if still undecided.
fn membership(
    evaluator: &dyn LpEvaluator,
    y: &[f64],
    p: f64,
    threshold: f64,
) -> Result<Option<bool>> {
    if y.iter().all(|v| *v == 0.0) {
        return Ok(Some(true));
    }
    let (e, _) = norms_with_refinement(evaluator, y, &[p])?;
    match classify(&e[0], threshold) {
        Membership::In => return Ok(Some(true)),
        Membership::Out => return Ok(Some(false)),
        Membership::Indeterminate => {}
    }
    let Some(r) = evaluator.refined() else {
        return Ok(None);
    };
    let e = r.norms(y, &[p])?;
    Ok(match classify(&e[0], threshold) {
        Membership::In => Some(true),
        Membership::Out => Some(false),
        Membership::Indeterminate => None,
    })
}

/// `y in A_p`, with an undecided comparison counted as outside.
pub fn in_outer_set(
    evaluator: &dyn LpEvaluator,
    y: &[f64],
    p: f64,
    grid: &GridD,
    lk: f64,
) -> Result<bool> {
    Ok(membership(evaluator, y, p, grid.outer_threshold(p, lk))?.unwrap_or(false))
}

/// `y in B_p`, with an undecided comparison counted as inside.
pub fn in_inner_set(
    evaluator: &dyn LpEvaluator,
    y: &[f64],
    p: f64,
    grid: &GridD,
    lk: f64,
) -> Result<bool> {
    Ok(membership(evaluator, y, p, grid.inner_threshold(p, lk))?.unwrap_or(true))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    /// Outside some `A_p`.
    RejectOuter,
    /// Inside some `B_p`.
    RejectInner,
    Indeterminate,
}

/// Joint verdict over the grid: inside every `A_p` and outside every `B_p`.
pub fn verdict(estimates: &[LpEstimate], grid: &GridD, lk: f64) -> Verdict {
    let mut undecided = false;
    for e in estimates {
        match classify(e, grid.outer_threshold(e.p, lk)) {
            Membership::Out => return Verdict::RejectOuter,
            Membership::Indeterminate => undecided = true,
            Membership::In => {}
        }
    }
    for e in estimates {
        match classify(e, grid.inner_threshold(e.p, lk)) {
            Membership::In => return Verdict::RejectInner,
            Membership::Indeterminate => undecided = true,
            Membership::Out => {}
        }
    }
    if undecided {
        Verdict::Indeterminate
    } else {
        Verdict::Accept
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FindOptions {
    pub beta: f64,
    /// Upper bound on single `L^p` evaluations; `None` picks a default
    /// proportional to `m |D|`.
    pub budget: Option<usize>,
    pub seed: u64,
    pub candidates_per_round: usize,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions {
            beta: DEFAULT_BETA,
            budget: None,
            seed: 0,
            candidates_per_round: 8,
        }
    }
}

/// Number of directions sought: `ceil(beta n)`.
pub fn target_count(n: usize, beta: f64) -> usize {
    ((beta * n as f64) - 1e-9).ceil().max(0.0) as usize
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub candidates: usize,
    pub evaluations: usize,
    pub accepted: usize,
    pub rejected_outer: usize,
    pub rejected_inner: usize,
    pub indeterminate: usize,
    pub refinements: usize,
    pub fallback_runs: usize,
    pub fallback_accepts: usize,
    pub budget: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionFlag {
    pub theta_id: usize,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub pass: bool,
    /// The direction came out of the optimization fallback.
    pub from_fallback: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    pub c0: f64,
    #[serde(rename = "C0")]
    pub c_outer: f64,
    pub eps: f64,
    pub beta: f64,
    pub c1: f64,
    #[serde(rename = "C1")]
    pub c_upper: f64,
    pub lk: f64,
    pub exponents: Vec<f64>,
}

/// Orthonormal directions in the original frame with their profiles.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionSet {
    pub n: usize,
    pub thetas: Vec<Vec<f64>>,
    /// Accepted vectors in the isotropic frame, `|v| = sqrt(n)`.
    pub isotropic: Vec<Vec<f64>>,
    pub profiles: Vec<MomentProfile>,
    pub flags: Vec<DirectionFlag>,
    pub target_m: usize,
    pub constants: Constants,
    pub stats: SearchStats,
}

impl DirectionSet {
    pub fn is_complete(&self) -> bool {
        self.thetas.len() >= self.target_m
    }

    /// Largest `|<theta_i, theta_j>|` for `i != j` and largest `||theta_i| - 1|`.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for (i, a) in self.thetas.iter().enumerate() {
            diag = diag.max((dot(a, a).sqrt() - 1.0).abs());
            for b in &self.thetas[..i] {
                off = off.max(dot(a, b).abs());
            }
        }
        (off, diag)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn rescale(v: &[f64], length: f64) -> Vec<f64> {
    let r = norm(v);
    v.iter().map(|x| x * length / r).collect()
}

/// Ratios `||.||_p / (sqrt(p) ||.||_2)` of a profile that contains `p = 2`.
fn ratios(profile: &MomentProfile) -> Vec<(f64, f64)> {
    let Some(l2) = profile.value_at(2.0) else {
        return Vec::new();
    };
    profile
        .entries
        .iter()
        .map(|e| (e.p, e.value / (e.p.sqrt() * l2)))
        .collect()
}

fn ratio_extremes(r: &[(f64, f64)]) -> (f64, f64) {
    let sup = r.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let inf = r.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    (sup, inf)
}

struct Search<'a> {
    evaluator: &'a dyn LpEvaluator,
    grid: &'a GridD,
    lk: f64,
    stats: SearchStats,
}

impl Search<'_> {
    fn over_budget(&self) -> bool {
        self.stats.evaluations >= self.stats.budget
    }

    fn score(&self, est: &[LpEstimate]) -> f64 {
        let n = self.grid.n as f64;
        est.iter()
            .map(|e| e.value / ((n * e.p).sqrt() * self.lk))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Full test of one candidate, refining once when undecided. Also
    /// returns the fallback objective at `y`.
    fn test(&self, y: &[f64]) -> Result<(Verdict, bool, f64)> {
        let ps = &self.grid.exponents;
        let (est, refined) = norms_with_refinement(self.evaluator, y, ps)?;
        let v = verdict(&est, self.grid, self.lk);
        if v != Verdict::Indeterminate {
            return Ok((v, refined, self.score(&est)));
        }
        let Some(r) = self.evaluator.refined() else {
            return Ok((v, refined, self.score(&est)));
        };
        let est = r.norms(y, ps)?;
        Ok((verdict(&est, self.grid, self.lk), true, self.score(&est)))
    }

    fn record(&mut self, v: Verdict, refined: bool) {
        self.stats.candidates += 1;
        self.stats.evaluations += self.grid.exponents.len() * if refined { 2 } else { 1 };
        self.stats.refinements += refined as usize;
        match v {
            Verdict::Accept => {}
            Verdict::RejectOuter => self.stats.rejected_outer += 1,
            Verdict::RejectInner => self.stats.rejected_inner += 1,
            Verdict::Indeterminate => self.stats.indeterminate += 1,
        }
    }

    /// `max_p ||<., y>||_p / (sqrt(n p) L_K)` for `|y| = sqrt(n)`.
    fn objective(&mut self, y: &[f64]) -> Result<f64> {
        let (est, refined) = norms_with_refinement(self.evaluator, y, &self.grid.exponents)?;
        self.stats.evaluations += self.grid.exponents.len() * if refined { 2 } else { 1 };
        Ok(self.score(&est))
    }

    /// Projected coordinate descent on the unit sphere of `F` from `start`.
    fn descend(&mut self, basis: &[Vec<f64>], start: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n;
        let len = (n as f64).sqrt();
        let combine = |c: &[f64]| {
            let mut y = vec![0.0; n];
            for (ck, b) in c.iter().zip(basis) {
                y.iter_mut().zip(b).for_each(|(o, v)| *o += ck * v);
            }
            rescale(&y, len)
        };
        let mut coeffs: Vec<f64> = basis.iter().map(|b| dot(b, start)).collect();
        let mut best = self.objective(&combine(&coeffs))?;
        let mut step = 0.5;
        let mut sweep_improved = false;
        for it in 0..FALLBACK_ITERATIONS {
            if self.over_budget() {
                break;
            }
            let k = it % coeffs.len();
            let scale = norm(&coeffs);
            for sign in [1.0, -1.0] {
                let mut trial = coeffs.clone();
                trial[k] += sign * step * scale;
                let value = self.objective(&combine(&trial))?;
                if value < best {
                    best = value;
                    coeffs = trial;
                    sweep_improved = true;
                    break;
                }
            }
            if k + 1 == coeffs.len() {
                if !sweep_improved {
                    step *= 0.5;
                }
                sweep_improved = false;
            }
        }
        Ok(combine(&coeffs))
    }
}

/// Greedy selection in the isotropic frame.
///
/// `evaluator` returns `||<T X, y>||_p` and `transform` is the map `T`
/// with its isotropic constant. Each step draws Gaussian candidates in
/// `F_j = {y : <T y, T v_i> = 0}`, rescales them to length `sqrt(n)` and
/// keeps the lowest-indexed one lying in every `A_p` and in no `B_p`. The
/// returned directions are `T v_i / |T v_i|`.
pub fn find_directions(
    evaluator: &dyn LpEvaluator,
    transform: &IsotropicTransform,
    grid: &GridD,
    options: &FindOptions,
) -> Result<DirectionSet> {
    let n = grid.n;
    if evaluator.dim() != n || transform.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: evaluator.dim(),
        });
    }
    if !(options.beta > 0.0 && options.beta < 1.0) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, 1), got {}",
            options.beta
        )));
    }
    let m = target_count(n, options.beta);
    let budget = options
        .budget
        .unwrap_or(200 * m.max(1) * grid.exponents.len());
    let per_step = (budget / m.max(1)).max(grid.exponents.len());
    let round = options.candidates_per_round.max(1);
    let len = (n as f64).sqrt();
    let lk = transform.lk;
    let mut search = Search {
        evaluator,
        grid,
        lk,
        stats: SearchStats {
            budget,
            ..SearchStats::default()
        },
    };
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let mut constraints: Vec<Vec<f64>> = Vec::new();
    let mut from_fallback = Vec::new();
    let mut exhausted = false;

    'steps: for j in 0..m {
        let f = orth_complement(&constraints, n)?;
        let streams = Streams::new(derive_seed(options.seed, j as u64), Domain::Candidates);
        let step_start = search.stats.evaluations;
        let mut best_rejected: Option<(f64, Vec<f64>)> = None;
        let mut next_index = 0u64;
        loop {
            if search.over_budget() {
                exhausted = true;
                break 'steps;
            }
            if search.stats.evaluations - step_start >= per_step {
                search.stats.fallback_runs += 1;
                let start = best_rejected
                    .take()
                    .map(|b| b.1)
                    .unwrap_or_else(|| f.basis[0].clone());
                let y = search.descend(&f.basis, &start)?;
                let (v, refined, _) = search.test(&y)?;
                search.record(v, refined);
                if v == Verdict::Accept {
                    search.stats.fallback_accepts += 1;
                    search.stats.accepted += 1;
                    constraints.push(transform.apply(&transform.apply(&y)));
                    accepted.push(y);
                    from_fallback.push(true);
                    continue 'steps;
                }
                exhausted = true;
                break 'steps;
            }
            let ids: Vec<u64> = (next_index..next_index + round as u64).collect();
            next_index += round as u64;
            let candidates: Vec<Vec<f64>> = ids
                .iter()
                .map(|k| {
                    let mut rng = streams.stream(*k);
                    let g: Vec<f64> = (0..f.dim())
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect();
                    rescale(&f.combine(&g), len)
                })
                .collect();
            let outcomes: Vec<Result<(Verdict, bool, f64)>> =
                candidates.par_iter().map(|y| search.test(y)).collect();
            let mut winner = None;
            for (y, outcome) in candidates.into_iter().zip(outcomes) {
                let (v, refined, score) = outcome?;
                search.record(v, refined);
                if v == Verdict::Accept {
                    winner = Some(y);
                    break;
                }
                if best_rejected.as_ref().is_none_or(|b| score < b.0) {
                    best_rejected = Some((score, y));
                }
            }
            if let Some(y) = winner {
                search.stats.accepted += 1;
                constraints.push(transform.apply(&transform.apply(&y)));
                accepted.push(y);
                from_fallback.push(false);
                continue 'steps;
            }
        }
    }

    let constants = Constants {
        c0: grid.c0,
        c_outer: grid.c_outer,
        eps: grid.eps,
        beta: options.beta,
        c1: FLAG_LOWER,
        c_upper: FLAG_UPPER,
        lk,
        exponents: grid.exponents.clone(),
    };
    let mut set = DirectionSet {
        n,
        thetas: Vec::with_capacity(accepted.len()),
        isotropic: accepted.clone(),
        profiles: Vec::new(),
        flags: Vec::new(),
        target_m: m,
        constants,
        stats: search.stats,
    };
    let mut ps = grid.exponents.clone();
    if !ps.contains(&2.0) {
        ps.push(2.0);
        ps.sort_by(f64::total_cmp);
    }
    for (i, v) in accepted.iter().enumerate() {
        let a = transform.apply(v);
        let a_len = norm(&a);
        let theta: Vec<f64> = a.iter().map(|x| x / a_len).collect();
        let (est, _) = norms_with_refinement(evaluator, v, &ps)?;
        let profile = MomentProfile {
            theta_id: i,
            theta: theta.clone(),
            n,
            lk,
            entries: est.iter().map(|e| e.scaled(1.0 / a_len)).collect(),
            truncated: false,
        };
        let (sup, inf) = ratio_extremes(&ratios(&profile));
        set.flags.push(DirectionFlag {
            theta_id: i,
            sup_ratio: sup,
            inf_ratio: inf,
            pass: sup <= FLAG_UPPER && inf >= FLAG_LOWER,
            from_fallback: from_fallback[i],
        });
        set.thetas.push(theta);
        set.profiles.push(profile);
    }
    if exhausted && !set.is_complete() {
        return Err(Error::BudgetExhausted {
            partial: Box::new(set),
        });
    }
    Ok(set)
}

/// Body, sample, isotropic map and the two evaluators used by the pipeline.
pub struct Prepared {
    pub body: BodySpec,
    pub batch: SampleBatch,
    pub transform: IsotropicTransform,
    /// `||<T X, y>||_p`.
    pub isotropic: Box<dyn LpEvaluator>,
    /// `||<X, theta>||_p` in the original frame.
    pub original: Box<dyn LpEvaluator>,
}

fn build_evaluator(
    kind: EvaluatorKind,
    body: &BodySpec,
    batch: &SampleBatch,
    transform: Option<&IsotropicTransform>,
) -> Box<dyn LpEvaluator> {
    match kind {
        EvaluatorKind::MonteCarlo => Box::new(SampleEvaluator::with_body(body, batch, transform)),
        EvaluatorKind::Quadrature => Box::new(QuadratureEvaluator::new(body, transform)),
        EvaluatorKind::Auto => Box::new(AutoEvaluator::new(
            QuadratureEvaluator::new(body, transform),
            SampleEvaluator::with_body(body, batch, transform),
        )),
    }
}

/// Samples the body, estimates `T` and builds the evaluators.
pub fn prepare(
    body: &BodySpec,
    samples: usize,
    seed: u64,
    kind: EvaluatorKind,
) -> Result<Prepared> {
    let batch = sample_uniform(
        body,
        samples,
        derive_seed(seed, Domain::BodySampling as u64),
        default_method(body),
    )?;
    let (_, transform) = isotropize(&batch)?;
    Ok(Prepared {
        isotropic: build_evaluator(kind, body, &batch, Some(&transform)),
        original: build_evaluator(kind, body, &batch, None),
        body: body.clone(),
        batch,
        transform,
    })
}

impl Prepared {
    pub fn find(&self, grid: &GridD, options: &FindOptions) -> Result<DirectionSet> {
        find_directions(self.isotropic.as_ref(), &self.transform, grid, options)
    }

    pub fn certify(&self, set: &DirectionSet, full_grid: bool) -> Certificate {
        certify(set, &self.body, Some(self.original.as_ref()), full_grid)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointCheck {
    /// `max_K |<x, theta>|`.
    pub support_radius: f64,
    /// Order of the moment used: `n`, or `n - 1` as a lower bound for odd `n`.
    pub order: f64,
    pub norm: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionCertificate {
    pub theta_id: usize,
    pub profile: MomentProfile,
    pub ratios: Vec<(f64, f64)>,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    /// Log-log slope of the ratio against `p` over `[sqrt(n), n]`.
    pub growth_slope: Option<f64>,
    pub endpoint: Option<EndpointCheck>,
    pub pass: bool,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub directions: Vec<DirectionCertificate>,
    /// Smallest observed ratio.
    pub empirical_c: f64,
    /// Largest observed ratio.
    pub empirical_upper: f64,
    pub all_pass: bool,
}

/// `q = 2^{j/2} <= n`, or the dyadic orders `2^j <= n` when not `full`.
pub fn certification_grid(n: usize, full: bool) -> Vec<f64> {
    let per_octave = if full { 2 } else { 1 };
    (0..)
        .map(|k: i32| {
            if k % per_octave == 0 {
                2f64.powi(k / per_octave)
            } else {
                2f64.powf(k as f64 / per_octave as f64)
            }
        })
        .take_while(|q| *q <= n as f64 + 1e-9)
        .collect()
}

fn is_even_integer(q: f64) -> bool {
    q.fract() == 0.0 && (q as u64).is_multiple_of(2)
}

/// `||<X, theta>||_q`, preferring closed forms, then exact even moments,
/// then the sample evaluator within its `p` limit.
pub fn direction_norm(
    body: &BodySpec,
    theta: &[f64],
    q: f64,
    mc: Option<&dyn LpEvaluator>,
) -> Result<Option<LpEstimate>> {
    if let Ok(d) = body.marginal_density(theta) {
        return Ok(Some(marginal_lp_density(&d, q)));
    }
    if is_even_integer(q) {
        if let Some(m) = body.even_moment(theta, (q / 2.0) as usize) {
            let value = m.powf(1.0 / q);
            return Ok(Some(LpEstimate {
                p: q,
                value,
                ci_low: value,
                ci_high: value,
                std_err: 0.0,
                method: EstimateMethod::Exact,
            }));
        }
    }
    match mc {
        Some(e) if q <= e.max_p(theta) => Ok(Some(e.norms(theta, &[q])?[0])),
        _ => Ok(None),
    }
}

/// `R <= 8 ||<X, theta>||_n` when the support function is closed form.
pub fn endpoint_check(
    body: &BodySpec,
    theta: &[f64],
    mc: Option<&dyn LpEvaluator>,
) -> Result<Option<EndpointCheck>> {
    if !body.has_closed_form_support() {
        return Ok(None);
    }
    let r = body.support_radius(theta)?;
    let n = body.dim as f64;
    let mut orders = vec![n];
    if body.dim % 2 == 1 && body.dim > 1 {
        orders.push(n - 1.0);
    }
    for q in orders {
        if let Some(e) = direction_norm(body, theta, q, mc)? {
            return Ok(Some(EndpointCheck {
                support_radius: r,
                order: q,
                norm: e.value,
                holds: r <= ENDPOINT_CONSTANT * e.value,
            }));
        }
    }
    Ok(None)
}

/// Re-estimates each direction's profile on a denser grid in the original
/// frame and checks the two-sided bounds, the growth of the ratio and the
/// endpoint inequality.
pub fn certify(
    set: &DirectionSet,
    body: &BodySpec,
    mc: Option<&dyn LpEvaluator>,
    full_grid: bool,
) -> Certificate {
    let n = body.dim;
    let grid = certification_grid(n, full_grid);
    let directions: Vec<DirectionCertificate> = set
        .thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| certify_direction(i, theta, body, mc, &grid, set.constants.lk))
        .collect();
    let empirical_c = directions
        .iter()
        .map(|d| d.inf_ratio)
        .fold(f64::INFINITY, f64::min);
    let empirical_upper = directions
        .iter()
        .map(|d| d.sup_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Certificate {
        all_pass: directions.iter().all(|d| d.pass),
        directions,
        empirical_c,
        empirical_upper,
    }
}

fn certify_direction(
    id: usize,
    theta: &[f64],
    body: &BodySpec,
    mc: Option<&dyn LpEvaluator>,
    grid: &[f64],
    lk: f64,
) -> DirectionCertificate {
    let n = body.dim;
    let mut reasons = Vec::new();
    let mut entries = Vec::new();
    let mut truncated = false;
    for q in grid {
        match direction_norm(body, theta, *q, mc) {
            Ok(Some(e)) => entries.push(e),
            Ok(None) => truncated = true,
            Err(e) => {
                truncated = true;
                reasons.push(format!("p = {q}: {e}"));
            }
        }
    }
    let profile = MomentProfile {
        theta_id: id,
        theta: theta.to_vec(),
        n,
        lk,
        entries,
        truncated,
    };
    let r = ratios(&profile);
    let (sup, inf) = ratio_extremes(&r);
    if r.is_empty() {
        reasons.push("no second moment".to_string());
    }
    if sup > FLAG_UPPER {
        reasons.push(format!("sup ratio {sup:.4} > {FLAG_UPPER}"));
    }
    if inf < FLAG_LOWER {
        reasons.push(format!("inf ratio {inf:.4} < {FLAG_LOWER}"));
    }
    let lo = (n as f64).sqrt();
    let (xs, ys): (Vec<f64>, Vec<f64>) = r
        .iter()
        .filter(|(p, _)| *p >= lo - 1e-9)
        .map(|(p, v)| (p.ln(), v.ln()))
        .unzip();
    let growth_slope = (xs.len() >= 2).then(|| linear_fit(&xs, &ys).0);
    if let Some(s) = growth_slope {
        if s > GROWTH_SLOPE_MAX {
            reasons.push(format!(
                "ratio grows with slope {s:.3} > {GROWTH_SLOPE_MAX}"
            ));
        }
    }
    let endpoint = match endpoint_check(body, theta, mc) {
        Ok(e) => e,
        Err(e) => {
            reasons.push(format!("endpoint: {e}"));
            None
        }
    };
    if let Some(e) = &endpoint {
        if !e.holds {
            reasons.push(format!(
                "endpoint R = {:.4} > 8 ||.||_{}",
                e.support_radius, e.order
            ));
        }
    }
    DirectionCertificate {
        theta_id: id,
        profile,
        ratios: r,
        sup_ratio: sup,
        inf_ratio: inf,
        growth_slope,
        endpoint,
        pass: reasons.is_empty(),
        reasons,
    }
}

/// A single direction wrapped as a set, for certifying chosen directions.
pub fn injected_set(n: usize, thetas: Vec<Vec<f64>>, lk: f64) -> DirectionSet {
    DirectionSet {
        n,
        isotropic: Vec::new(),
        profiles: Vec::new(),
        flags: Vec::new(),
        target_m: thetas.len(),
        thetas,
        constants: Constants {
            c0: DEFAULT_C0,
            c_outer: DEFAULT_C_OUTER,
            eps: DEFAULT_EPS,
            beta: DEFAULT_BETA,
            c1: FLAG_LOWER,
            c_upper: FLAG_UPPER,
            lk,
            exponents: Vec::new(),
        },
        stats: SearchStats::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_grid() {
        assert_eq!(
            make_grid(64, 0.25, 4.0, 0.05).unwrap().exponents,
            vec![1.0, 2.0, 4.0, 8.0, 16.0]
        );
        assert_eq!(
            make_grid(8, 0.25, 4.0, 0.05).unwrap().exponents,
            vec![1.0, 2.0]
        );
        assert!(matches!(
            make_grid(2, 0.25, 4.0, 0.05),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(make_grid(64, 0.3, 4.0, 0.05).is_err());
        let g = make_grid(1000, 0.25, 4.0, 0.05).unwrap();
        assert!(g.exponents.iter().sum::<f64>() <= 2.0 * 250.0);
    }

    #[test]
    fn certification_grid_is_half_dyadic() {
        let g = certification_grid(8, true);
        assert_eq!(g.len(), 7);
        assert_eq!(g[2], 2.0);
        assert_eq!(g[6], 8.0);
        assert_eq!(certification_grid(8, false), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn isotropic_thresholds() {
        let k = BodySpec::ball(8).unwrap();
        let q = QuadratureEvaluator::new(&k, None);
        let lk = q
            .norms(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[2.0])
            .unwrap()[0]
            .value;
        let grid = make_grid(8, 0.25, 4.0, 0.05).unwrap();
        let zero = vec![0.0; 8];
        assert!(in_outer_set(&q, &zero, 1.0, &grid, lk).unwrap());
        assert!(in_inner_set(&q, &zero, 1.0, &grid, lk).unwrap());
        let mut y = vec![0.0; 8];
        y[0] = 8f64.sqrt();
        assert!(in_outer_set(&q, &y, 2.0, &grid, lk).unwrap());
        assert!(!in_inner_set(&q, &y, 2.0, &grid, lk).unwrap());
        let mut small = vec![0.0; 8];
        small[0] = 0.05 * 8f64.sqrt() / 2.0;
        assert!(in_inner_set(&q, &small, 2.0, &grid, lk).unwrap());
        y[0] = 1e6;
        assert!(!in_outer_set(&q, &y, 1.0, &grid, lk).unwrap());
    }

    #[test]
    fn ball_accepts_first_candidates() {
        let k = BodySpec::ball(20).unwrap();
        let prep = prepare(&k, 20_000, 3, EvaluatorKind::Auto).unwrap();
        let grid = GridD::defaults(20).unwrap();
        let set = prep.find(&grid, &FindOptions::default()).unwrap();
        assert_eq!(set.thetas.len(), 18);
        assert_eq!(set.stats.candidates, 18);
        let (off, diag) = set.orthonormality_error();
        assert!(off < 1e-10 && diag < 1e-12, "{off} {diag}");
        assert!(set.flags.iter().all(|f| f.pass));
    }

    #[test]
    fn cube_axis_certifies_and_cone_axis_is_flagged() {
        let cube = BodySpec::cube(10).unwrap();
        let mut e1 = vec![0.0; 10];
        e1[0] = 1.0;
        let c = certify(&injected_set(10, vec![e1], 0.0), &cube, None, true);
        let d = &c.directions[0];
        assert!(c.all_pass, "{:?}", d.reasons);
        assert!((d.sup_ratio - 0.866_025).abs() < 1e-5);
        assert!(d.inf_ratio >= 0.40);
        let cone = BodySpec::cone(50).unwrap();
        let mut axis = vec![0.0; 50];
        axis[49] = 1.0;
        let c = certify(&injected_set(50, vec![axis], 0.0), &cone, None, true);
        assert!(!c.all_pass);
        assert!(c.directions[0].growth_slope.unwrap() > GROWTH_SLOPE_MAX);
    }

    #[test]
    fn budget_exhaustion_returns_partial() {
        let k = BodySpec::cube(12).unwrap();
        let prep = prepare(&k, 20_000, 1, EvaluatorKind::MonteCarlo).unwrap();
        let grid = make_grid(12, 0.25, 0.3, 0.05).unwrap();
        let opts = FindOptions {
            budget: Some(60),
            ..FindOptions::default()
        };
        match prep.find(&grid, &opts) {
            Err(Error::BudgetExhausted { partial }) => {
                assert!(partial.thetas.len() < partial.target_m);
                assert!(partial.stats.evaluations >= 60);
            }
            other => panic!(
                "expected exhaustion, got {:?}",
                other.map(|s| s.thetas.len())
            ),
        }
    }
}
