//! Numerical certificates for the inequalities behind the convergence of the
//! proximal iterations.
//!
//! Every check returns a residual oriented so that a nonnegative value means
//! the inequality holds. Inequalities involving `1/kappa`-scaled penalties
//! are written in the form that is invariant under rescaling the metric.

use serde::Serialize;

use crate::algorithms::{
    minimize, proximal_point, splitting_proximal_point, RunSettings, Schedule, Trace,
};
use crate::error::{ProxError, Result};
use crate::geometry::{polar_point, GeodesicBall, PointSampler, SpaceConfig, SpherePoint};
use crate::objectives::Objective;
use crate::penalties::{penalty_value, psi1, psi2, uniform_convexity_gap, PenaltyKind};
use crate::resolvent::{fixed_point_residual, resolve, ResolventParams};

/// Tolerance for identities evaluated in closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Tolerance for inequalities involving a computed resolvent.
pub const SOLVER_TOL: f64 = 1e-7;
pub const FEJER_TOL: f64 = 1e-8;
pub const MONOTONE_TOL: f64 = 1e-9;
pub const STEP_BOUND_TOL: f64 = 1e-8;
pub const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub name: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

impl CertificateReport {
    pub fn new(name: &str, residuals: &[f64], tolerance: f64, seed: u64) -> Self {
        let worst = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            name: name.to_string(),
            samples: residuals.len(),
            worst_residual: worst,
            tolerance,
            pass: worst >= -tolerance,
            seed,
        }
    }
}

fn cosd(cfg: &SpaceConfig, x: &SpherePoint, y: &SpherePoint) -> f64 {
    (cfg.sqrt_kappa() * cfg.distance(x, y)).cos()
}

struct LemmaTerms {
    lhs: f64,
    weight: f64,
    gap: f64,
    c: f64,
}

fn lemma_terms(obj: &Objective, x: &SpherePoint, z: &SpherePoint, params: &ResolventParams, cfg: &SpaceConfig) -> Result<LemmaTerms> {
    let fz = obj.value(z, cfg).finite().ok_or(ProxError::NonFiniteObjective)?;
    let j = resolve(obj, x, params, cfg)?.point;
    let fj = obj.value(&j, cfg).to_f64();
    let sk = cfg.sqrt_kappa();
    let b = sk * cfg.distance(x, &j);
    let c = sk * cfg.distance(z, &j);
    let a = sk * cfg.distance(z, x);
    Ok(LemmaTerms {
        lhs: params.lambda * cfg.kappa() * (fj - fz),
        weight: 1.0 + 1.0 / b.cos().powi(2),
        gap: c.cos() * b.cos() - a.cos(),
        c,
    })
}

/// `2 (1 + 1/cos^2 b)(cos c cos b - cos a) - lambda kappa (f(J x) - f(z))`
/// with `a, b, c` the scaled distances `x z`, `x Jx`, `z Jx`.
pub fn check_lemma_inequality(
    obj: &Objective,
    x: &SpherePoint,
    z: &SpherePoint,
    params: &ResolventParams,
    cfg: &SpaceConfig,
) -> Result<f64> {
    let t = lemma_terms(obj, x, z, params, cfg)?;
    Ok(2.0 * t.weight * t.gap - t.lhs)
}

/// As [`check_lemma_inequality`] with the factor 2 replaced by `c / sin c`.
pub fn check_lemma_inequality_sharp(
    obj: &Objective,
    x: &SpherePoint,
    z: &SpherePoint,
    params: &ResolventParams,
    cfg: &SpaceConfig,
) -> Result<f64> {
    let t = lemma_terms(obj, x, z, params, cfg)?;
    let ratio = if t.c == 0.0 { 1.0 } else { t.c / t.c.sin() };
    Ok(ratio * t.weight * t.gap - t.lhs)
}

/// Firm spherical nonspreading of `J_lambda` on the pair `(x, z)`:
/// `(cos|x Jx| + cos|z Jz|) cos^2|Jx Jz| - 2 cos|Jx z| cos|x Jz|`.
pub fn check_nonspreading(
    obj: &Objective,
    x: &SpherePoint,
    z: &SpherePoint,
    params: &ResolventParams,
    cfg: &SpaceConfig,
) -> Result<f64> {
    let jx = resolve(obj, x, params, cfg)?.point;
    let jz = resolve(obj, z, params, cfg)?.point;
    let lhs = (cosd(cfg, x, &jx) + cosd(cfg, z, &jz)) * cosd(cfg, &jx, &jz).powi(2);
    Ok(lhs - 2.0 * cosd(cfg, &jx, z) * cosd(cfg, x, &jz))
}

/// `cos|Jx z| cos|x Jx| - cos|x z|` for a fixed point `z` of `J_lambda`.
pub fn check_fixed_point_inequality(
    obj: &Objective,
    x: &SpherePoint,
    z_min: &SpherePoint,
    params: &ResolventParams,
    cfg: &SpaceConfig,
) -> Result<f64> {
    let r = fixed_point_residual(obj, z_min, params, cfg)?;
    if r > FIXED_POINT_TOL {
        return Err(ProxError::NotAFixedPoint(r));
    }
    let jx = resolve(obj, x, params, cfg)?.point;
    Ok(cosd(cfg, &jx, z_min) * cosd(cfg, x, &jx) - cosd(cfg, x, z_min))
}

/// `min_n d(z, x_n) - d(z, x_{n+1})`; `0` for a single-point trace.
pub fn check_fejer(trace: &Trace, z: &SpherePoint, cfg: &SpaceConfig) -> f64 {
    if trace.records.len() < 2 {
        return 0.0;
    }
    trace
        .records
        .windows(2)
        .map(|w| cfg.distance(z, &w[0].point) - cfg.distance(z, &w[1].point))
        .fold(f64::INFINITY, f64::min)
}

/// `min_n f(x_n) - f(x_{n+1})`.
pub fn check_monotone_values(trace: &Trace) -> f64 {
    trace
        .records
        .windows(2)
        .map(|w| w[0].f_value - w[1].f_value)
        .fold(f64::INFINITY, f64::min)
}

/// First index `n0` from which every step satisfies `1/cos^2(sqrt(kappa) step) < 2`.
pub fn rate_bound_start(trace: &Trace, cfg: &SpaceConfig) -> usize {
    let steps: Vec<f64> = trace.records.iter().filter_map(|r| r.step).collect();
    let ok = |s: f64| 1.0 / (cfg.sqrt_kappa() * s).cos().powi(2) < 2.0;
    steps.iter().rposition(|&s| !ok(s)).map_or(0, |i| i + 1)
}

/// `min_{m >= n0} f_min + 6 / (kappa sum_{n=n0}^m lambda_n) - f(x_{m+1})`.
/// `+inf` when the trace has no step from `n0` on.
pub fn check_rate_bound(trace: &Trace, f_min: f64, cfg: &SpaceConfig) -> f64 {
    let n0 = rate_bound_start(trace, cfg);
    let mut sum = 0.0;
    let mut worst = f64::INFINITY;
    for (m, rec) in trace.records.iter().enumerate().skip(n0) {
        let Some(lambda) = rec.lambda else { break };
        sum += lambda;
        let next = trace.records[m + 1].f_value;
        worst = worst.min(f_min + 6.0 / (cfg.kappa() * sum) - next);
    }
    worst
}

/// `min_{j,m} 4 lambda_j L - d(x_{jN+m-1}, x_{jN+m})` over a splitting trace.
pub fn check_splitting_step_bound(trace: &Trace, lipschitz: f64, sched: &Schedule, _cfg: &SpaceConfig) -> Result<f64> {
    let n_comp = trace.meta.components.max(1);
    let mut worst = f64::INFINITY;
    for rec in &trace.records {
        let (Some(step), Some(lambda)) = (rec.step, rec.lambda) else { continue };
        let expected = sched
            .lambda(rec.n / n_comp)
            .ok_or_else(|| ProxError::InvalidSchedule(format!("no step size for cycle {}", rec.n / n_comp)))?;
        if expected != lambda {
            return Err(ProxError::InvalidInput(format!(
                "trace record {} used lambda {lambda}, schedule gives {expected}",
                rec.n
            )));
        }
        worst = worst.min(4.0 * lambda * lipschitz - step);
    }
    Ok(worst)
}

/// Checks `a_{n+1} >= a_m - sum_{j=m}^n b_j` for all `n >= m >= j0` and
/// returns the smallest margin (`+inf` when there is no pair to test).
pub fn check_sequence_lemma(a: &[f64], b: &[f64], j0: usize) -> Result<f64> {
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(ProxError::InvalidInput("sequences must be finite".into()));
    }
    if let Some(v) = b.iter().find(|v| **v < 0.0) {
        return Err(ProxError::InvalidInput(format!("b must be nonnegative, found {v}")));
    }
    if a.len() > b.len() + 1 {
        return Err(ProxError::InvalidInput(format!(
            "need at least {} terms of b, got {}",
            a.len() - 1,
            b.len()
        )));
    }
    // With B_k = sum_{j<k} b_j the margin is (a_{n+1} + B_{n+1}) - (a_m + B_m).
    let mut prefix = Vec::with_capacity(a.len());
    let mut acc = 0.0;
    for (k, ak) in a.iter().enumerate() {
        prefix.push(ak + acc);
        if k < b.len() {
            acc += b[k];
        }
    }
    let mut worst = f64::INFINITY;
    let mut suffix_min = f64::INFINITY;
    for m in (j0..a.len().saturating_sub(1)).rev() {
        suffix_min = suffix_min.min(prefix[m + 1]);
        worst = worst.min(suffix_min - prefix[m]);
    }
    Ok(worst)
}

/// The sequences of the splitting convergence argument, extracted from a
/// trace: `a_j = cos(sqrt(kappa) d(z, x_{jN}))`,
/// `b_j = kappa N (N+1) lambda_j^2 L^2 / alpha` with
/// `alpha = 1 + 1/cos^2(4 lambda_{j0} L sqrt(kappa))`, and the first cycle `j0`
/// with `lambda_j <= 1` and `4 lambda_j L sqrt(kappa) < pi/2`.
pub fn splitting_sequence(trace: &Trace, z: &SpherePoint, cfg: &SpaceConfig) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n_comp = trace.meta.components.max(1);
    let lip = trace
        .meta
        .lipschitz
        .ok_or(ProxError::MissingLipschitzBound(0))?;
    let sk = cfg.sqrt_kappa();
    let cycle_records: Vec<_> = trace.records.iter().filter(|r| r.n % n_comp == 0).collect();
    let a: Vec<f64> = cycle_records.iter().map(|r| cosd(cfg, z, &r.point)).collect();
    let lambdas: Vec<f64> = cycle_records.iter().filter_map(|r| r.lambda).collect();
    let j0 = lambdas
        .iter()
        .position(|&l| l <= 1.0 && 4.0 * l * lip * sk < std::f64::consts::FRAC_PI_2)
        .unwrap_or(lambdas.len());
    let alpha = lambdas
        .get(j0)
        .map_or(2.0, |l| 1.0 + 1.0 / (4.0 * l * lip * sk).cos().powi(2));
    let nn = (n_comp * (n_comp + 1)) as f64;
    let b = lambdas
        .iter()
        .map(|l| cfg.kappa() * nn * l * l * lip * lip / alpha)
        .collect();
    Ok((a, b, j0))
}

/// The three anchors of the shipped test objectives, placed around the base
/// point and scaled to the admissible radius.
pub fn standard_anchors(cfg: &SpaceConfig) -> Vec<SpherePoint> {
    let scale = cfg.admissible_radius() / 0.7;
    [(0.4, 0.0), (0.35, 2.0), (0.45, 4.2)]
        .iter()
        .map(|&(r, phi)| polar_point(cfg, cfg.base(), r * scale, phi).expect("anchor inside the admissible ball"))
        .collect()
}

pub fn standard_median(cfg: &SpaceConfig) -> Objective {
    Objective::geometric_median(standard_anchors(cfg)).expect("valid anchors")
}

pub fn standard_frechet(cfg: &SpaceConfig) -> Objective {
    Objective::frechet_mean(standard_anchors(cfg)).expect("valid anchors")
}

pub fn standard_ball(cfg: &SpaceConfig) -> GeodesicBall {
    let center = polar_point(cfg, cfg.base(), 0.2 * cfg.admissible_radius() / 0.7, 1.0).expect("inside");
    GeodesicBall::new(center, 0.3 * cfg.admissible_radius() / 0.7, cfg).expect("valid radius")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCounts {
    /// Random samples per pointwise inequality.
    pub pointwise: usize,
    /// Algorithm runs per trajectory certificate.
    pub trajectories: usize,
}

impl SampleCounts {
    /// `n` pointwise samples and one trajectory per hundred of them.
    pub fn new(n: usize) -> Self {
        Self {
            pointwise: n,
            trajectories: if n == 0 { 0 } else { n.div_ceil(100) },
        }
    }
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self::new(1000)
    }
}

const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

fn pointwise<F>(name: &str, n: usize, tol: f64, seed: u64, mut sample: F) -> Result<Option<CertificateReport>>
where
    F: FnMut(&mut PointSampler) -> Result<f64>,
{
    if n == 0 {
        return Ok(None);
    }
    let mut rng = PointSampler::new(seed);
    let residuals = (0..n).map(|_| sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    Ok(Some(CertificateReport::new(name, &residuals, tol, seed)))
}

/// Runs every certificate on the shipped objectives. Deterministic in `seed`;
/// certificates with zero samples are omitted. Tolerances are multiplied by
/// `tolerance_scale`.
pub fn run_certificate_suite(
    seed: u64,
    cfg: &SpaceConfig,
    counts: SampleCounts,
    tolerance_scale: f64,
) -> Result<Vec<CertificateReport>> {
    let n = counts.pointwise;
    let ts = tolerance_scale;
    let median = standard_median(cfg);
    let frechet = standard_frechet(cfg);
    let ball = standard_ball(cfg);
    let indicator = Objective::indicator_ball(ball.clone());
    let start = cfg.base().clone();
    let minimizers = if n > 0 || counts.trajectories > 0 {
        vec![minimize(&median, &start, cfg)?, minimize(&frechet, &start, cfg)?]
    } else {
        Vec::new()
    };
    let smooth = [&median, &frechet];
    let params = |lambda| ResolventParams::new(lambda);
    let mut reports = Vec::new();
    let mut push = |r: Option<CertificateReport>| reports.extend(r);

    push(pointwise("comparison_equality", n, CLOSED_FORM_TOL * ts, seed, |rng| {
        let (x, y, z) = (rng.admissible(cfg), rng.admissible(cfg), rng.admissible(cfg));
        let t = rng.uniform(0.0, 1.0);
        Ok(-cfg.cat_comparison_residual(&y, &z, &x, t)?.abs())
    })?);
    push(pointwise("penalty_identity", n, 1e-12 * ts, seed.wrapping_add(1), |rng| {
        let (x, y) = (rng.admissible(cfg), rng.admissible(cfg));
        let full = penalty_value(PenaltyKind::Full, &x, &y, cfg)?;
        let theta = cfg.sqrt_kappa() * cfg.distance(&x, &y);
        let closed = theta.sin().powi(2) / (cfg.kappa() * theta.cos());
        Ok(-(full - psi1(&x, &y, cfg)? - psi2(&x, &y, cfg)?).abs().max((full - closed).abs()))
    })?);
    push(pointwise("uniform_convexity", n, CLOSED_FORM_TOL * ts, seed.wrapping_add(2), |rng| {
        let (x, y, z) = (rng.admissible(cfg), rng.admissible(cfg), rng.admissible(cfg));
        let dyz = cfg.distance(&y, &z);
        if dyz < 1e-12 {
            return Ok(0.0);
        }
        Ok(uniform_convexity_gap(&x, &y, &z, cfg)? - dyz * dyz / 32.0)
    })?);
    push(pointwise("lemma_inequality", n, SOLVER_TOL * ts, seed.wrapping_add(3), |rng| {
        // z between J x and a minimizer, so that f(z) <= f(J x).
        let k = *rng.pick(&[0usize, 1]);
        let params = params(*rng.pick(&LAMBDAS));
        let x = rng.admissible(cfg);
        let j = resolve(smooth[k], &x, &params, cfg)?.point;
        let z = cfg.geodesic_point(&j, &minimizers[k], rng.uniform(0.0, 1.0))?;
        check_lemma_inequality(smooth[k], &x, &z, &params, cfg)
    })?);
    push(pointwise("lemma_inequality_sharp", n, SOLVER_TOL * ts, seed.wrapping_add(4), |rng| {
        let k = *rng.pick(&[0usize, 1]);
        let params = params(*rng.pick(&LAMBDAS));
        let (x, z) = (rng.admissible(cfg), rng.admissible(cfg));
        check_lemma_inequality_sharp(smooth[k], &x, &z, &params, cfg)
    })?);
    let all = [&median, &frechet, &indicator];
    push(pointwise("nonspreading", n, SOLVER_TOL * ts, seed.wrapping_add(5), |rng| {
        let obj = *rng.pick(&all);
        let params = params(*rng.pick(&LAMBDAS));
        let (x, z) = (rng.admissible(cfg), rng.admissible(cfg));
        check_nonspreading(obj, &x, &z, &params, cfg)
    })?);
    push(pointwise("fixed_point_inequality", n, SOLVER_TOL * ts, seed.wrapping_add(6), |rng| {
        let k = *rng.pick(&[0usize, 1, 2]);
        let params = params(*rng.pick(&LAMBDAS));
        let x = rng.admissible(cfg);
        let z = if k == 2 {
            rng.sample_in_ball(cfg, &ball.center, ball.radius)?
        } else {
            minimizers[k].clone()
        };
        check_fixed_point_inequality(all[k], &x, &z, &params, cfg)
    })?);

    if counts.trajectories > 0 {
        let settings = RunSettings::default();
        let mut rng = PointSampler::new(seed.wrapping_add(7));
        let (mut fejer, mut monotone, mut rate) = (Vec::new(), Vec::new(), Vec::new());
        let (mut step_bound, mut sequence) = (Vec::new(), Vec::new());
        for run in 0..counts.trajectories {
            let k = run % 2;
            let x0 = rng.admissible(cfg);
            let sched = if run % 4 < 2 {
                Schedule::constant(*rng.pick(&LAMBDAS), 200)?
            } else {
                Schedule::harmonic(1.0, 200)?
            };
            let trace = proximal_point(smooth[k], &x0, &sched, &settings, cfg)?;
            let z = &minimizers[k];
            fejer.push(check_fejer(&trace, z, cfg));
            monotone.push(check_monotone_values(&trace));
            rate.push(check_rate_bound(&trace, smooth[k].value(z, cfg).to_f64(), cfg));

            let anchors = standard_anchors(cfg);
            let parts: Vec<Objective> = if k == 0 {
                anchors.into_iter().map(|a| Objective::geometric_median(vec![a])).collect::<Result<_>>()?
            } else {
                anchors.into_iter().map(|a| Objective::frechet_mean(vec![a])).collect::<Result<_>>()?
            };
            let sched = Schedule::harmonic(1.0, 100)?;
            let split = splitting_proximal_point(&parts, &x0, &sched, 100, &settings, false, cfg)?;
            let lip = split.meta.lipschitz.ok_or(ProxError::MissingLipschitzBound(0))?;
            step_bound.push(check_splitting_step_bound(&split, lip, &sched, cfg)?);
            let (a, b, j0) = splitting_sequence(&split, z, cfg)?;
            sequence.push(check_sequence_lemma(&a, &b, j0)?);
        }
        let s = seed.wrapping_add(7);
        reports.push(CertificateReport::new("fejer_monotone", &fejer, FEJER_TOL * ts, s));
        reports.push(CertificateReport::new("monotone_values", &monotone, MONOTONE_TOL * ts, s));
        reports.push(CertificateReport::new("rate_bound", &rate, SOLVER_TOL * ts, s));
        reports.push(CertificateReport::new("splitting_step_bound", &step_bound, STEP_BOUND_TOL * ts, s));
        reports.push(CertificateReport::new("sequence_lemma", &sequence, CLOSED_FORM_TOL * ts, s));
    }
    Ok(reports)
}
