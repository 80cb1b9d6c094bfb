//! Outer iterations built on the resolvent: the proximal point algorithm,
//! Picard iteration, the cyclic splitting proximal point algorithm and the
//! resolvent curve `lambda -> J_lambda x`.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{ProxError, Result};
use crate::geometry::{SpaceConfig, SpherePoint};
use crate::objectives::{ExtReal, Objective};
use crate::penalties::PenaltyKind;
use crate::resolvent::{resolve, ResolventParams, DEFAULT_INNER_MAX_ITER, DEFAULT_INNER_TOL};

pub const DEFAULT_STOP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant(f64),
    /// `lambda_j = c / (j + 1)`.
    Harmonic(f64),
    Explicit(Vec<f64>),
}

/// A finite sequence of positive step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    length: usize,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, length: usize) -> Result<Self> {
        let bad = |msg: String| Err(ProxError::InvalidSchedule(msg));
        match &kind {
            ScheduleKind::Constant(v) | ScheduleKind::Harmonic(v) if !(*v > 0.0) || !v.is_finite() => {
                return bad(format!("parameter must be positive, got {v}"))
            }
            ScheduleKind::Explicit(values) => {
                if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return bad(format!("all step sizes must be positive, got {v}"));
                }
                if values.len() != length {
                    return bad(format!("explicit list has {} entries, length is {length}", values.len()));
                }
            }
            _ => {}
        }
        Ok(Self { kind, length })
    }

    pub fn constant(lambda: f64, length: usize) -> Result<Self> {
        Self::new(ScheduleKind::Constant(lambda), length)
    }

    pub fn harmonic(c: f64, length: usize) -> Result<Self> {
        Self::new(ScheduleKind::Harmonic(c), length)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(ScheduleKind::Explicit(values), n)
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn lambda(&self, j: usize) -> Option<f64> {
        if j >= self.length {
            return None;
        }
        Some(match &self.kind {
            ScheduleKind::Constant(v) => *v,
            ScheduleKind::Harmonic(c) => c / (j + 1) as f64,
            ScheduleKind::Explicit(values) => values[j],
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.length).filter_map(|j| self.lambda(j))
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::Constant(v) => write!(f, "constant({v}) x {}", self.length),
            ScheduleKind::Harmonic(c) => write!(f, "harmonic({c}) x {}", self.length),
            ScheduleKind::Explicit(_) => write!(f, "explicit x {}", self.length),
        }
    }
}

/// Settings shared by the outer iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub stop_tol: f64,
    pub penalty: PenaltyKind,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            stop_tol: DEFAULT_STOP_TOL,
            penalty: PenaltyKind::Full,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }
}

impl RunSettings {
    pub fn resolvent(&self, lambda: f64) -> ResolventParams {
        ResolventParams {
            lambda,
            penalty: self.penalty,
            inner_tol: self.inner_tol,
            inner_max_iter: self.inner_max_iter,
        }
    }
}

/// One iterate `x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    /// Position within the splitting cycle (`n mod N`); 0 for unsplit runs.
    pub cycle_pos: usize,
    pub point: SpherePoint,
    /// Value of the full objective at `x_n`; `f64::INFINITY` for `+inf`.
    pub f_value: f64,
    /// `lambda` used to compute `x_{n+1}`; `None` on the last record.
    pub lambda: Option<f64>,
    /// `d(x_n, x_{n+1})`; `None` on the last record.
    pub step: Option<f64>,
    /// Inner iterations and stall flag of the resolvent producing `x_{n+1}`.
    pub inner_iterations: usize,
    pub stalled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    StepTolerance,
    ScheduleExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub objective: String,
    pub schedule: String,
    pub components: usize,
    /// Largest component Lipschitz bound, when every component has one.
    pub lipschitz: Option<f64>,
    pub wall_time: Duration,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn final_point(&self) -> &SpherePoint {
        &self.records.last().expect("traces are never empty").point
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().expect("traces are never empty").f_value
    }

    /// Number of resolvent applications.
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last_step(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.step)
    }

    pub fn stalled_steps(&self) -> usize {
        self.records.iter().filter(|r| r.stalled).count()
    }

    pub fn points(&self) -> impl Iterator<Item = &SpherePoint> {
        self.records.iter().map(|r| &r.point)
    }

    /// Records at cycle boundaries `x_{jN}`.
    pub fn cycle_starts(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.cycle_pos == 0)
    }
}

fn full_value(obj: &Objective, y: &SpherePoint, cfg: &SpaceConfig) -> f64 {
    obj.value(y, cfg).to_f64()
}

/// Proximal point algorithm `x_{n+1} = J_{lambda_n}(x_n)`.
///
/// Stops when a step is at most `settings.stop_tol` or the schedule runs out.
pub fn proximal_point(
    obj: &Objective,
    x0: &SpherePoint,
    sched: &Schedule,
    settings: &RunSettings,
    cfg: &SpaceConfig,
) -> Result<Trace> {
    let started = Instant::now();
    cfg.check_admissible(x0)?;
    if obj.value(x0, cfg) == ExtReal::PosInf {
        return Err(ProxError::NonFiniteObjective);
    }
    let mut records = Vec::with_capacity(sched.len() + 1);
    let mut x = x0.clone();
    let mut stop = StopReason::ScheduleExhausted;
    for (n, lambda) in sched.iter().enumerate() {
        let j = resolve(obj, &x, &settings.resolvent(lambda), cfg)?;
        let step = cfg.distance(&x, &j.point);
        records.push(TraceRecord {
            n,
            cycle_pos: 0,
            f_value: full_value(obj, &x, cfg),
            point: x,
            lambda: Some(lambda),
            step: Some(step),
            inner_iterations: j.iterations,
            stalled: j.stalled,
        });
        x = j.point;
        if step <= settings.stop_tol {
            stop = StopReason::StepTolerance;
            break;
        }
    }
    records.push(terminal_record(records.len(), 0, x, obj, cfg));
    Ok(Trace {
        records,
        meta: TraceMeta {
            objective: obj.describe(),
            schedule: sched.to_string(),
            components: 1,
            lipschitz: obj.lipschitz_bound(cfg),
            wall_time: started.elapsed(),
            stop,
        },
    })
}

fn terminal_record(n: usize, cycle_pos: usize, point: SpherePoint, obj: &Objective, cfg: &SpaceConfig) -> TraceRecord {
    TraceRecord {
        n,
        cycle_pos,
        f_value: full_value(obj, &point, cfg),
        point,
        lambda: None,
        step: None,
        inner_iterations: 0,
        stalled: false,
    }
}

/// Picard iterates `J_lambda^n(x0)`: the proximal point algorithm with a
/// constant schedule.
pub fn picard(
    obj: &Objective,
    x0: &SpherePoint,
    lambda: f64,
    n_iter: usize,
    settings: &RunSettings,
    cfg: &SpaceConfig,
) -> Result<Trace> {
    proximal_point(obj, x0, &Schedule::constant(lambda, n_iter)?, settings, cfg)
}

/// Cyclic splitting proximal point algorithm for `f = f_1 + ... + f_N`:
/// within cycle `j`, `x_{jN+i} = J^i_{lambda_j}(x_{jN+i-1})`.
///
/// Every component needs a Lipschitz bound unless `check_conditions` is set,
/// in which case the Lipschitz-type conditions are left to
/// [`crate::diagnostics::splitting_sequence`] on the trace.
pub fn splitting_proximal_point(
    components: &[Objective],
    x0: &SpherePoint,
    sched: &Schedule,
    cycles: usize,
    settings: &RunSettings,
    check_conditions: bool,
    cfg: &SpaceConfig,
) -> Result<Trace> {
    let started = Instant::now();
    if components.is_empty() {
        return Err(ProxError::InvalidInput("splitting needs at least one component".into()));
    }
    if matches!(sched.kind(), ScheduleKind::Constant(_)) {
        return Err(ProxError::InvalidSchedule(
            "splitting needs square-summable step sizes; a constant schedule is not".into(),
        ));
    }
    if sched.len() < cycles {
        return Err(ProxError::InvalidSchedule(format!(
            "schedule has {} entries, {cycles} cycles requested",
            sched.len()
        )));
    }
    let bounds: Vec<Option<f64>> = components.iter().map(|c| c.lipschitz_bound(cfg)).collect();
    if !check_conditions {
        if let Some(i) = bounds.iter().position(Option::is_none) {
            return Err(ProxError::MissingLipschitzBound(i));
        }
    }
    let full = Objective::composite(components.to_vec())?;
    cfg.check_admissible(x0)?;
    if full.value(x0, cfg) == ExtReal::PosInf {
        return Err(ProxError::NonFiniteObjective);
    }

    let n_comp = components.len();
    let mut records = Vec::with_capacity(cycles * n_comp + 1);
    let mut x = x0.clone();
    let mut stop = StopReason::ScheduleExhausted;
    for (j, lambda) in sched.iter().take(cycles).enumerate() {
        let mut cycle_max = 0.0f64;
        for (i, f_i) in components.iter().enumerate() {
            let r = resolve(f_i, &x, &settings.resolvent(lambda), cfg)?;
            let step = cfg.distance(&x, &r.point);
            cycle_max = cycle_max.max(step);
            records.push(TraceRecord {
                n: j * n_comp + i,
                cycle_pos: i,
                f_value: full_value(&full, &x, cfg),
                point: x,
                lambda: Some(lambda),
                step: Some(step),
                inner_iterations: r.iterations,
                stalled: r.stalled,
            });
            x = r.point;
        }
        if cycle_max <= settings.stop_tol {
            stop = StopReason::StepTolerance;
            break;
        }
    }
    records.push(terminal_record(records.len(), 0, x, &full, cfg));
    let lipschitz = bounds
        .iter()
        .copied()
        .sum::<Option<f64>>()
        .and_then(|_| bounds.iter().flatten().copied().reduce(f64::max));
    Ok(Trace {
        records,
        meta: TraceMeta {
            objective: full.describe(),
            schedule: sched.to_string(),
            components: n_comp,
            lipschitz,
            wall_time: started.elapsed(),
            stop,
        },
    })
}

/// `J_lambda x` for an increasing list of `lambda`s. As `lambda` grows the
/// points approach the minimizer of `f` closest to `x`.
pub fn resolvent_curve(
    obj: &Objective,
    x: &SpherePoint,
    lambdas: &[f64],
    settings: &RunSettings,
    cfg: &SpaceConfig,
) -> Result<Vec<(f64, SpherePoint)>> {
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProxError::InvalidSchedule("lambdas must be strictly increasing".into()));
    }
    lambdas
        .iter()
        .map(|&l| resolve(obj, x, &settings.resolvent(l), cfg).map(|r| (l, r.point)))
        .collect()
}

/// High-accuracy minimizer of `f` starting from `x0`: proximal point
/// iterations with a large constant step until the iterates stop moving.
pub fn minimize(obj: &Objective, x0: &SpherePoint, cfg: &SpaceConfig) -> Result<SpherePoint> {
    let settings = RunSettings {
        stop_tol: 1e-14,
        inner_tol: 1e-13,
        ..RunSettings::default()
    };
    let trace = proximal_point(obj, x0, &Schedule::constant(100.0, 2_000)?, &settings, cfg)?;
    Ok(trace.final_point().clone())
}
