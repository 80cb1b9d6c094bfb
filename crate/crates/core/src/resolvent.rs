//! The resolvent `J_lambda(x) = argmin_y f(y) + Psi_x(y) / lambda`.
//!
//! The inner problem is a sum of radial terms (see `radial`) plus at most one
//! ball constraint. It is solved in three stages:
//!
//! 1. every anchor of a distance term is tested as a candidate minimizer: the
//!    anchor `a` with total kink weight `w` is optimal iff the gradient of the
//!    remaining terms at `a` has norm at most `w`;
//! 2. otherwise a damped Riemannian Newton iteration with Armijo backtracking
//!    runs from the start point (the objective is smooth away from anchors);
//! 3. if a ball constraint is active and the unconstrained minimizer lies
//!    outside the ball, projected gradient steps finish the job.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{ProxError, Result};
use crate::geometry::{GeodesicBall, SpaceConfig, SpherePoint, TangentVector};
use crate::objectives::{grid_search, ExtReal, Objective};
use crate::penalties::PenaltyKind;
use crate::radial::{self, shrink, KinkSet, RadialTerm};

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_MAX_ITER: usize = 10_000;

const ARMIJO: f64 = 1e-4;
/// Relative rounding level of a sum of radial terms. Below it the Armijo test
/// cannot distinguish a decrease from noise, so full Newton steps are taken.
const ROUNDING_LEVEL: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventParams {
    pub lambda: f64,
    pub penalty: PenaltyKind,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl ResolventParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            penalty: PenaltyKind::Full,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_penalty(self, penalty: PenaltyKind) -> Self {
        Self { penalty, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(ProxError::InvalidInput(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(ProxError::InvalidInput(format!(
                "inner_tol must be positive, got {}",
                self.inner_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventResult {
    pub point: SpherePoint,
    /// `f + Psi_x / lambda` at `point`.
    pub inner_value: f64,
    pub iterations: usize,
    /// Length of the last Newton (or projected gradient) step.
    pub stationarity: f64,
    /// Set when the iteration budget ran out above `inner_tol`.
    pub stalled: bool,
}

impl ResolventResult {
    /// Turns a stalled result into an error.
    pub fn certified(self) -> Result<Self> {
        if self.stalled {
            Err(ProxError::InnerSolverStalled {
                iterations: self.iterations,
                stationarity: self.stationarity,
            })
        } else {
            Ok(self)
        }
    }
}

/// `f(y) + Psi_x(y) / lambda`, `+inf` outside the penalty's domain.
pub fn inner_objective(
    obj: &Objective,
    x: &SpherePoint,
    y: &SpherePoint,
    lambda: f64,
    penalty: PenaltyKind,
    cfg: &SpaceConfig,
) -> ExtReal {
    let d = cfg.distance(x, y);
    if penalty != PenaltyKind::SquaredDistance && d >= cfg.max_radius() - 1e-9 {
        return ExtReal::PosInf;
    }
    obj.value(y, cfg)
        .add(ExtReal::Finite(penalty.at_distance(d, cfg) / lambda))
}

struct InnerProblem<'a> {
    cfg: &'a SpaceConfig,
    x: &'a SpherePoint,
    terms: Vec<RadialTerm>,
    kinks: KinkSet,
    ball: Option<GeodesicBall>,
    spherical: bool,
    tol: f64,
    max_iter: usize,
}

struct Solved {
    point: SpherePoint,
    iterations: usize,
    stationarity: f64,
    stalled: bool,
}

impl<'a> InnerProblem<'a> {
    fn new(obj: &Objective, x: &'a SpherePoint, params: &ResolventParams, cfg: &'a SpaceConfig) -> Result<Self> {
        let mut parts = obj.decompose();
        if parts.balls.len() > 1 {
            return Err(ProxError::InvalidInput(
                "the inner solver supports at most one indicator constraint".into(),
            ));
        }
        let kinks = KinkSet::from_terms(&parts.terms);
        parts.terms.extend(params.penalty.terms(x, 1.0 / params.lambda));
        Ok(Self {
            cfg,
            x,
            terms: parts.terms,
            kinks,
            ball: parts.balls.pop(),
            spherical: params.penalty != PenaltyKind::SquaredDistance,
            tol: params.inner_tol,
            max_iter: params.inner_max_iter,
        })
    }

    /// Smooth-part value (the constraint is handled separately).
    fn value(&self, y: &SpherePoint) -> f64 {
        if self.spherical && self.cfg.distance(self.x, y) >= self.cfg.max_radius() - 1e-9 {
            return f64::INFINITY;
        }
        radial::sum_value(&self.terms, y, self.cfg)
    }

    /// Sum of the absolute term values, the scale of the rounding error in
    /// [`Self::value`].
    fn magnitude(&self, y: &SpherePoint) -> f64 {
        self.terms.iter().map(|t| t.value(y, self.cfg).abs()).sum()
    }

    /// Minimal-norm subgradient of the smooth part, with the Hessian of the
    /// differentiable terms.
    fn model(&self, y: &SpherePoint) -> (f64, DVector<f64>, DMatrix<f64>, bool) {
        let m = radial::local_model(&self.terms, y, self.cfg);
        let w = self.kinks.weight_at(y, self.cfg);
        if w > 0.0 {
            (m.value, shrink(&m.grad, w), m.hess, true)
        } else {
            (m.value, m.grad, m.hess, false)
        }
    }

    fn feasible(&self, y: &SpherePoint) -> bool {
        self.ball.as_ref().is_none_or(|b| b.contains(y, self.cfg))
    }

    fn kink_minimizer(&self) -> Option<SpherePoint> {
        self.kinks.anchors.iter().find_map(|(a, w)| {
            if !self.feasible(a) || !self.value(a).is_finite() {
                return None;
            }
            // Kinked terms contribute nothing at their own anchor.
            let rest = radial::sum_gradient(&self.terms, a, self.cfg);
            (rest.norm() <= *w * (1.0 + 1e-12)).then(|| a.clone())
        })
    }

    /// Kink anchor within `reach` of `y` with a strictly smaller value.
    fn snap_target(&self, y: &SpherePoint, value: f64, reach: f64) -> Option<SpherePoint> {
        self.kinks
            .anchors
            .iter()
            .filter(|(a, _)| self.cfg.distance(a, y) <= reach)
            .map(|(a, _)| (a, self.value(a)))
            .filter(|(_, v)| *v < value)
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .map(|(a, _)| a.clone())
    }

    fn step(&self, y: &SpherePoint, s: &DVector<f64>, t: f64) -> Option<SpherePoint> {
        self.cfg.exp(&TangentVector::new(y.clone(), s * t)).ok()
    }

    fn newton(&self, start: &SpherePoint) -> Solved {
        let mut y = start.clone();
        let mut stationarity = f64::INFINITY;
        let cap = 0.5 * self.cfg.max_radius();
        for it in 0..self.max_iter {
            let (value, g, hess, at_kink) = self.model(&y);
            if g.norm() == 0.0 {
                return Solved {
                    point: y,
                    iterations: it,
                    stationarity: 0.0,
                    stalled: false,
                };
            }
            let mut s = if at_kink {
                -&g
            } else {
                newton_direction(&hess, &g, &y).unwrap_or_else(|| -&g)
            };
            let len = s.norm();
            if len > cap {
                s *= cap / len;
            }
            stationarity = s.norm();
            // Near a cone tip the Newton model is poor and iterates creep
            // toward the anchor without reaching it. Jump onto it instead.
            if !at_kink {
                if let Some(a) = self.snap_target(&y, value, stationarity) {
                    y = a;
                    continue;
                }
            }
            let slope = g.dot(&s);

            let below_rounding = -slope <= ROUNDING_LEVEL * self.magnitude(&y);
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-12 && !below_rounding {
                if let Some(cand) = self.step(&y, &s, t) {
                    if cand != y && self.value(&cand) <= value + ARMIJO * t * slope {
                        accepted = Some(cand);
                        break;
                    }
                }
                t *= 0.5;
            }
            let next = match accepted {
                Some(p) => p,
                None if below_rounding && !at_kink => match self.step(&y, &s, 1.0) {
                    Some(p) => p,
                    None => break,
                },
                None => {
                    return Solved {
                        point: y,
                        iterations: it + 1,
                        stationarity,
                        stalled: stationarity > self.tol,
                    }
                }
            };
            y = next;
            if stationarity <= self.tol {
                return Solved {
                    point: y,
                    iterations: it + 1,
                    stationarity,
                    stalled: false,
                };
            }
        }
        Solved {
            point: y,
            iterations: self.max_iter,
            stationarity,
            stalled: stationarity > self.tol,
        }
    }

    fn projected_gradient(&self, start: &SpherePoint, ball: &GeodesicBall) -> Result<Solved> {
        let mut y = self.cfg.project_to_ball(start, ball)?;
        let mut stationarity = f64::INFINITY;
        for it in 0..self.max_iter {
            let (value, g, hess, _) = self.model(&y);
            let top = SymmetricEigen::new(hess).eigenvalues.max();
            let mut alpha = 1.0 / top.max(1e-12);
            let mut next = None;
            while alpha > 1e-14 {
                if let Some(p) = self.step(&y, &g, -alpha) {
                    let p = self.cfg.project_to_ball(&p, ball)?;
                    if self.value(&p) <= value + 1e-15 * value.abs().max(1.0) {
                        next = Some(p);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some(next) = next else {
                return Ok(Solved {
                    point: y,
                    iterations: it + 1,
                    stationarity,
                    stalled: stationarity > self.tol,
                });
            };
            stationarity = self.cfg.distance(&y, &next);
            y = next;
            if stationarity <= self.tol {
                return Ok(Solved {
                    point: y,
                    iterations: it + 1,
                    stationarity,
                    stalled: false,
                });
            }
        }
        Ok(Solved {
            point: y,
            iterations: self.max_iter,
            stationarity,
            stalled: true,
        })
    }

    fn solve(&self, start: &SpherePoint) -> Result<Solved> {
        if let Some(a) = self.kink_minimizer() {
            return Ok(Solved {
                point: a,
                iterations: 0,
                stationarity: 0.0,
                stalled: false,
            });
        }
        let free = self.newton(start);
        match &self.ball {
            Some(ball) if !ball.contains(&free.point, self.cfg) => {
                let mut constrained = self.projected_gradient(&free.point, ball)?;
                constrained.iterations += free.iterations;
                Ok(constrained)
            }
            _ => Ok(free),
        }
    }
}

/// Solves `(H + y y^T) s = -g` for the tangent Newton step.
fn newton_direction(hess: &DMatrix<f64>, g: &DVector<f64>, y: &SpherePoint) -> Option<DVector<f64>> {
    let u = y.as_vector();
    let m = hess + u * u.transpose();
    let chol = m.cholesky()?;
    let s = chol.solve(&(-g));
    let s = &s - u * s.dot(u);
    (s.iter().all(|c| c.is_finite()) && s.dot(g) < 0.0).then_some(s)
}

/// `J_lambda(x)`, with the inner solver started at `x`.
pub fn resolve(obj: &Objective, x: &SpherePoint, params: &ResolventParams, cfg: &SpaceConfig) -> Result<ResolventResult> {
    resolve_from(obj, x, x, params, cfg)
}

/// `J_lambda(x)` with an explicit inner starting point.
pub fn resolve_from(
    obj: &Objective,
    x: &SpherePoint,
    start: &SpherePoint,
    params: &ResolventParams,
    cfg: &SpaceConfig,
) -> Result<ResolventResult> {
    params.validate()?;
    cfg.check_point(x)?;
    let problem = InnerProblem::new(obj, x, params, cfg)?;
    let solved = problem.solve(start)?;
    cfg.check_admissible(&solved.point)?;
    let inner_value = inner_objective(obj, x, &solved.point, params.lambda, params.penalty, cfg).to_f64();
    Ok(ResolventResult {
        point: solved.point,
        inner_value,
        iterations: solved.iterations,
        stationarity: solved.stationarity,
        stalled: solved.stalled,
    })
}

/// Brute-force resolvent: grid minimization of `f + Psi_x / lambda` over the
/// admissible ball (dim 2 only).
pub fn resolve_oracle(
    obj: &Objective,
    x: &SpherePoint,
    lambda: f64,
    penalty: PenaltyKind,
    resolution: f64,
    cfg: &SpaceConfig,
) -> Result<SpherePoint> {
    let ball = cfg.admissible_ball();
    grid_search(&ball, resolution, cfg, |p| inner_objective(obj, x, p, lambda, penalty, cfg)).map(|(p, _)| p)
}

/// `d(x, J_lambda x)`; zero exactly at minimizers of `f`.
pub fn fixed_point_residual(obj: &Objective, x: &SpherePoint, params: &ResolventParams, cfg: &SpaceConfig) -> Result<f64> {
    let j = resolve(obj, x, params, cfg)?;
    Ok(cfg.distance(x, &j.point))
}
