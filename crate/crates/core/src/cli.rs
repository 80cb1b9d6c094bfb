//! Command-line front end: JSON run configurations, trace CSV output and the
//! certificate report.
//!
//! Trace CSV columns are `n,i,lambda,f_value,step,dist_to_reference,x_0..x_dim`
//! where `i` is the position within a splitting cycle (0 otherwise), `lambda`
//! and `step` refer to the move from `x_n` to `x_{n+1}` and are empty on the
//! last row, and `dist_to_reference` is empty unless a reference point is
//! configured. Floats are written with 17 significant digits.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{
    minimize, picard, proximal_point, splitting_proximal_point, RunSettings, Schedule, ScheduleKind, StopReason,
    Trace, DEFAULT_STOP_TOL,
};
use crate::diagnostics::{run_certificate_suite, CertificateReport, SampleCounts};
use crate::error::ProxError;
use crate::geometry::{GeodesicBall, PointSampler, SpaceConfig, SpherePoint};
use crate::objectives::{grid_minimize, Objective, ObjectiveKind};
use crate::penalties::PenaltyKind;
use crate::resolvent::{resolve, DEFAULT_INNER_MAX_ITER, DEFAULT_INNER_TOL};

/// Grid resolution used for oracle reference points.
pub const ORACLE_RESOLUTION: f64 = 2e-3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_STALLED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Solver(#[from] ProxError),
}

fn field<T>(path: impl fmt::Display, message: impl fmt::Display) -> Result<T, CliError> {
    Err(CliError::Field {
        path: path.to_string(),
        message: message.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kappa: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKindSpec {
    DistanceSum {
        anchors: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    SquaredDistanceSum {
        anchors: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    CosineDistance {
        anchor: Vec<f64>,
    },
    IndicatorBall {
        center: Vec<f64>,
        radius: f64,
    },
    Composite {
        components: Vec<ObjectiveSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(flatten)]
    pub kind: ObjectiveKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ppa,
    Picard,
    Splitting,
    ResolventCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKindSpec {
    Constant,
    Harmonic,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKindSpec,
    /// `[lambda]` for constant, `[c]` for harmonic, the full list for explicit.
    pub parameters: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
}

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}

fn default_inner_tol() -> f64 {
    DEFAULT_INNER_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stop_tol: DEFAULT_STOP_TOL,
            inner_tol: DEFAULT_INNER_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    Coords(Vec<f64>),
    /// Grid minimizer over the admissible ball (dim 2), polished by proximal
    /// point iterations.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSpec,
    pub objective: ObjectiveSpec,
    pub algorithm: Algorithm,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub penalty: PenaltyKind,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Starting point; a seeded random admissible point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: SpaceConfig,
    pub objective: Objective,
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub settings: RunSettings,
    pub x0: SpherePoint,
    pub reference: Option<SpherePoint>,
    pub output_path: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Field {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and builds the objects a run needs.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let cfg = self.space_config()?;
        let objective = build_objective(&self.objective, "objective", &cfg)?;
        let schedule = self.build_schedule()?;
        let t = &self.tolerances;
        if !(t.stop_tol >= 0.0) || !t.stop_tol.is_finite() {
            return field("tolerances.stop_tol", format!("must be a nonnegative number, got {}", t.stop_tol));
        }
        if !(t.inner_tol > 0.0) || !t.inner_tol.is_finite() {
            return field("tolerances.inner_tol", format!("must be positive, got {}", t.inner_tol));
        }
        match self.algorithm {
            Algorithm::Picard if self.schedule.kind != ScheduleKindSpec::Constant => {
                return field("schedule.kind", "picard needs a constant schedule");
            }
            Algorithm::Splitting if !matches!(objective.kind(), ObjectiveKind::Composite { .. }) => {
                return field("objective.kind", "splitting needs a composite objective");
            }
            Algorithm::Splitting if self.schedule.kind == ScheduleKindSpec::Constant => {
                return field("schedule.kind", "splitting needs square-summable step sizes, not a constant schedule");
            }
            Algorithm::ResolventCurve if schedule.iter().collect::<Vec<_>>().windows(2).any(|w| w[1] <= w[0]) => {
                return field("schedule", "resolvent-curve needs strictly increasing lambdas");
            }
            _ => {}
        }
        let x0 = match &self.initial_point {
            Some(c) => admissible_point(c, "initial_point", &cfg)?,
            None => PointSampler::new(self.seed).admissible(&cfg),
        };
        let reference = match &self.reference {
            None => None,
            Some(ReferenceSpec::Coords(c)) => Some(admissible_point(c, "reference.coords", &cfg)?),
            Some(ReferenceSpec::Oracle) => Some(oracle_minimizer(&objective, &cfg)?),
        };
        Ok(Experiment {
            cfg,
            objective,
            algorithm: self.algorithm,
            schedule,
            settings: RunSettings {
                stop_tol: t.stop_tol,
                penalty: self.penalty,
                inner_tol: t.inner_tol,
                inner_max_iter: DEFAULT_INNER_MAX_ITER,
            },
            x0,
            reference,
            output_path: self.output_path.clone(),
        })
    }

    fn space_config(&self) -> Result<SpaceConfig, CliError> {
        let s = &self.space;
        if !(s.kappa > 0.0) || !s.kappa.is_finite() {
            return field("space.kappa", format!("must be a positive finite number, got {}", s.kappa));
        }
        if s.dim < 2 {
            return field("space.dim", format!("must be at least 2, got {}", s.dim));
        }
        let base = match &s.base_point {
            Some(c) => unit_point(c, "space.base_point", s.dim)?,
            None => SpherePoint::basis(s.dim + 1, 0),
        };
        let limit = SpaceConfig::radius_limit(s.kappa);
        let radius = s.admissible_radius.unwrap_or(SpaceConfig::default_radius(s.kappa));
        if !(radius > 0.0) || radius >= limit {
            return field(
                "space.admissible_radius",
                format!("must lie in (0, {limit}) for kappa = {}, got {radius}", s.kappa),
            );
        }
        SpaceConfig::new(s.kappa, s.dim, base, radius).or_else(|e| field("space", e))
    }

    fn build_schedule(&self) -> Result<Schedule, CliError> {
        let s = &self.schedule;
        let need_length = || match s.length {
            Some(n) => Ok(n),
            None => field("schedule.length", "required for constant and harmonic schedules"),
        };
        let one_parameter = || match s.parameters.as_slice() {
            [v] => Ok(*v),
            _ => field("schedule.parameters", format!("expected one value, got {}", s.parameters.len())),
        };
        let built = match s.kind {
            ScheduleKindSpec::Constant => Schedule::constant(one_parameter()?, need_length()?),
            ScheduleKindSpec::Harmonic => Schedule::harmonic(one_parameter()?, need_length()?),
            ScheduleKindSpec::Explicit => {
                if let Some(n) = s.length.filter(|n| *n != s.parameters.len()) {
                    return field(
                        "schedule.length",
                        format!("is {n} but {} parameters are listed", s.parameters.len()),
                    );
                }
                Schedule::new(ScheduleKind::Explicit(s.parameters.clone()), s.parameters.len())
            }
        };
        let sched = built.or_else(|e| field("schedule.parameters", e))?;
        if sched.is_empty() {
            return field("schedule.length", "must be at least 1");
        }
        Ok(sched)
    }
}

fn unit_point(coords: &[f64], path: &str, dim: usize) -> Result<SpherePoint, CliError> {
    if coords.len() != dim + 1 {
        return field(path, format!("expected {} coordinates, got {}", dim + 1, coords.len()));
    }
    let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return field(path, format!("must be a unit vector, norm is {norm}"));
    }
    SpherePoint::new(coords.to_vec()).or_else(|e| field(path, e))
}

fn admissible_point(coords: &[f64], path: &str, cfg: &SpaceConfig) -> Result<SpherePoint, CliError> {
    let p = unit_point(coords, path, cfg.dim())?;
    if !cfg.is_admissible(&p) {
        return field(
            path,
            format!(
                "lies at distance {} from the base point, outside the admissible radius {}",
                cfg.distance(cfg.base(), &p),
                cfg.admissible_radius()
            ),
        );
    }
    Ok(p)
}

fn build_objective(spec: &ObjectiveSpec, path: &str, cfg: &SpaceConfig) -> Result<Objective, CliError> {
    let anchors = |list: &[Vec<f64>]| -> Result<Vec<SpherePoint>, CliError> {
        if list.is_empty() {
            return field(format!("{path}.anchors"), "needs at least one anchor");
        }
        list.iter()
            .enumerate()
            .map(|(i, c)| admissible_point(c, &format!("{path}.anchors[{i}]"), cfg))
            .collect()
    };
    let weights = |w: &Option<Vec<f64>>, n: usize| -> Result<Vec<f64>, CliError> {
        let w = w.clone().unwrap_or_else(|| vec![1.0; n]);
        if w.len() != n {
            return field(format!("{path}.weights"), format!("expected {n} weights, got {}", w.len()));
        }
        if let Some(i) = w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return field(format!("{path}.weights[{i}]"), format!("must be positive, got {}", w[i]));
        }
        Ok(w)
    };
    let obj = match &spec.kind {
        ObjectiveKindSpec::DistanceSum { anchors: a, weights: w } => {
            let a = anchors(a)?;
            let w = weights(w, a.len())?;
            Objective::distance_sum(a, w)
        }
        ObjectiveKindSpec::SquaredDistanceSum { anchors: a, weights: w } => {
            let a = anchors(a)?;
            let w = weights(w, a.len())?;
            Objective::squared_distance_sum(a, w)
        }
        ObjectiveKindSpec::CosineDistance { anchor } => {
            Ok(Objective::cosine_distance(admissible_point(anchor, &format!("{path}.anchor"), cfg)?))
        }
        ObjectiveKindSpec::IndicatorBall { center, radius } => {
            let c = admissible_point(center, &format!("{path}.center"), cfg)?;
            let ball = GeodesicBall::new(c, *radius, cfg).or_else(|e| field(format!("{path}.radius"), e))?;
            Ok(Objective::indicator_ball(ball))
        }
        ObjectiveKindSpec::Composite { components } => {
            if components.is_empty() {
                return field(format!("{path}.components"), "needs at least one component");
            }
            let parts = components
                .iter()
                .enumerate()
                .map(|(i, c)| build_objective(c, &format!("{path}.components[{i}]"), cfg))
                .collect::<Result<Vec<_>, _>>()?;
            Objective::composite(parts)
        }
    };
    let obj = obj.or_else(|e| field(path, e))?;
    match spec.lipschitz_bound {
        Some(l) if !(l > 0.0) || !l.is_finite() => field(format!("{path}.lipschitz_bound"), format!("must be positive, got {l}")),
        Some(l) => Ok(obj.with_lipschitz_bound(l)),
        None => Ok(obj),
    }
}

/// Reference minimizer: grid search on the admissible ball (dim 2 only) then
/// proximal point refinement.
pub fn oracle_minimizer(obj: &Objective, cfg: &SpaceConfig) -> Result<SpherePoint, CliError> {
    let start = if cfg.dim() == 2 {
        grid_minimize(obj, &cfg.admissible_ball(), ORACLE_RESOLUTION, cfg)?
    } else {
        cfg.base().clone()
    };
    if obj.value(&start, cfg).is_finite() {
        Ok(minimize(obj, &start, cfg)?)
    } else {
        field("reference", "objective is +inf at the oracle starting point")
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn trace_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["n", "i", "lambda", "f_value", "step", "dist_to_reference"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..=dim).map(|k| format!("x_{k}")));
    h
}

fn trace_rows(trace: &Trace, reference: Option<&SpherePoint>, cfg: &SpaceConfig) -> Vec<Vec<String>> {
    trace
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.n.to_string(),
                r.cycle_pos.to_string(),
                opt_float(r.lambda),
                float(r.f_value),
                opt_float(r.step),
                opt_float(reference.map(|z| cfg.distance(z, &r.point))),
            ];
            row.extend(r.point.coords().iter().map(|c| float(*c)));
            row
        })
        .collect()
}

/// Writes a trace as CSV.
pub fn write_trace_csv<W: Write>(out: W, trace: &Trace, reference: Option<&SpherePoint>, cfg: &SpaceConfig) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(cfg.dim()))?;
    for row in trace_rows(trace, reference, cfg) {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes certificate reports as CSV, one row per certificate.
pub fn write_reports_csv<W: Write>(out: W, reports: &[CertificateReport]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "samples", "worst_residual", "tolerance", "pass", "seed"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.samples.to_string(),
            float(r.worst_residual),
            float(r.tolerance),
            r.pass.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the configured algorithm and returns its trace.
pub fn run_experiment(exp: &Experiment) -> Result<Trace, CliError> {
    let (obj, x0, cfg, s) = (&exp.objective, &exp.x0, &exp.cfg, &exp.settings);
    let trace = match exp.algorithm {
        Algorithm::Ppa => proximal_point(obj, x0, &exp.schedule, s, cfg)?,
        Algorithm::Picard => {
            let lambda = exp.schedule.lambda(0).expect("validated non-empty");
            picard(obj, x0, lambda, exp.schedule.len(), s, cfg)?
        }
        Algorithm::Splitting => {
            let parts: Vec<Objective> = obj.components().into_iter().cloned().collect();
            splitting_proximal_point(&parts, x0, &exp.schedule, exp.schedule.len(), s, false, cfg)?
        }
        Algorithm::ResolventCurve => resolvent_curve_trace(exp)?,
    };
    Ok(trace)
}

/// The resolvent curve as a trace: row `n` holds `J_{lambda_n} x0`.
fn resolvent_curve_trace(exp: &Experiment) -> Result<Trace, CliError> {
    let started = Instant::now();
    let cfg = &exp.cfg;
    let mut records = Vec::with_capacity(exp.schedule.len());
    for (n, lambda) in exp.schedule.iter().enumerate() {
        let r = resolve(&exp.objective, &exp.x0, &exp.settings.resolvent(lambda), cfg)?;
        records.push(crate::algorithms::TraceRecord {
            n,
            cycle_pos: 0,
            f_value: exp.objective.value(&r.point, cfg).to_f64(),
            point: r.point,
            lambda: Some(lambda),
            step: None,
            inner_iterations: r.iterations,
            stalled: r.stalled,
        });
    }
    Ok(Trace {
        records,
        meta: crate::algorithms::TraceMeta {
            objective: exp.objective.describe(),
            schedule: exp.schedule.to_string(),
            components: 1,
            lipschitz: exp.objective.lipschitz_bound(cfg),
            wall_time: started.elapsed(),
            stop: StopReason::ScheduleExhausted,
        },
    })
}

fn create_output(path: &Path) -> Result<std::fs::File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::fs::File::create(path)?)
}

fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::StepTolerance => "step_tolerance",
        StopReason::ScheduleExhausted => "schedule_exhausted",
    }
}

fn summary(trace: &Trace) -> String {
    format!(
        "final_f={} final_step={} iterations={} stalled={} stop={} wall_time={:.3}s",
        float(trace.final_value()),
        opt_float(trace.last_step()),
        trace.steps(),
        trace.stalled_steps(),
        stop_name(trace.meta.stop),
        trace.meta.wall_time.as_secs_f64()
    )
}

fn load_experiment(config: &Path, output: Option<&Path>) -> Result<Experiment, CliError> {
    let mut exp = RunConfig::load(config)?.validate()?;
    if let Some(o) = output {
        exp.output_path = o.to_path_buf();
    }
    Ok(exp)
}

/// `run`: writes the trace CSV and prints a one-line summary. Exit code 0 on
/// clean termination, 2 if any resolvent stalled, 1 on errors.
pub fn cmd_run<O: Write, E: Write>(config: &Path, output: Option<&Path>, out: &mut O, err: &mut E) -> i32 {
    let result = (|| {
        let exp = load_experiment(config, output)?;
        let trace = run_experiment(&exp)?;
        write_trace_csv(create_output(&exp.output_path)?, &trace, exp.reference.as_ref(), &exp.cfg)?;
        Ok::<_, CliError>(trace)
    })();
    match result {
        Ok(trace) => {
            let _ = writeln!(out, "{}", summary(&trace));
            if trace.stalled_steps() > 0 {
                EXIT_STALLED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Result of running the proximal point and splitting algorithms on the
/// same composite objective.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub ppa: Trace,
    pub splitting: Trace,
    pub final_distance: f64,
}

pub fn compare_experiment(exp: &Experiment) -> Result<Comparison, CliError> {
    if !matches!(exp.objective.kind(), ObjectiveKind::Composite { .. }) {
        return field("objective.kind", "compare needs a composite objective");
    }
    let cfg = &exp.cfg;
    let ppa = proximal_point(&exp.objective, &exp.x0, &exp.schedule, &exp.settings, cfg)?;
    let parts: Vec<Objective> = exp.objective.components().into_iter().cloned().collect();
    let splitting = splitting_proximal_point(&parts, &exp.x0, &exp.schedule, exp.schedule.len(), &exp.settings, false, cfg)?;
    let final_distance = cfg.distance(ppa.final_point(), splitting.final_point());
    Ok(Comparison {
        ppa,
        splitting,
        final_distance,
    })
}

pub fn write_comparison_csv<W: Write>(out: W, cmp: &Comparison, reference: Option<&SpherePoint>, cfg: &SpaceConfig) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["algorithm".to_string()];
    header.extend(trace_header(cfg.dim()));
    w.write_record(header)?;
    for (tag, trace) in [("ppa", &cmp.ppa), ("splitting", &cmp.splitting)] {
        for row in trace_rows(trace, reference, cfg) {
            w.write_record(std::iter::once(tag.to_string()).chain(row))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `compare`: proximal point vs splitting on a composite objective.
pub fn cmd_compare<O: Write, E: Write>(config: &Path, output: Option<&Path>, out: &mut O, err: &mut E) -> i32 {
    let result = (|| {
        let exp = load_experiment(config, output)?;
        let cmp = compare_experiment(&exp)?;
        write_comparison_csv(create_output(&exp.output_path)?, &cmp, exp.reference.as_ref(), &exp.cfg)?;
        Ok::<_, CliError>(cmp)
    })();
    match result {
        Ok(cmp) => {
            let _ = writeln!(
                out,
                "distance={} f_ppa={} f_splitting={}",
                float(cmp.final_distance),
                float(cmp.ppa.final_value()),
                float(cmp.splitting.final_value())
            );
            let _ = writeln!(out, "ppa: {}", summary(&cmp.ppa));
            let _ = writeln!(out, "splitting: {}", summary(&cmp.splitting));
            if cmp.ppa.stalled_steps() + cmp.splitting.stalled_steps() > 0 {
                EXIT_STALLED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

/// `verify`: runs the certificate suite on the default space. Exit code 0 if
/// every certificate passes, 3 otherwise, 1 on errors.
pub fn cmd_verify<O: Write, E: Write>(
    seed: u64,
    samples: usize,
    tolerance_scale: f64,
    output: Option<&Path>,
    out: &mut O,
    err: &mut E,
) -> i32 {
    if !(tolerance_scale > 0.0) || !tolerance_scale.is_finite() {
        let _ = writeln!(err, "error: --tolerance-scale: must be positive, got {tolerance_scale}");
        return EXIT_CONFIG;
    }
    let cfg = SpaceConfig::default();
    let reports = match run_certificate_suite(seed, &cfg, SampleCounts::new(samples), tolerance_scale) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if reports.is_empty() {
        let _ = writeln!(out, "no samples requested; nothing to check");
    }
    for r in &reports {
        let _ = writeln!(
            out,
            "{:<24} samples={:<5} worst_residual={:>24} tolerance={:e} {}",
            r.name,
            r.samples,
            float(r.worst_residual),
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(path) = output {
        if let Err(e) = create_output(path).and_then(|f| write_reports_csv(f, &reports)) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}
