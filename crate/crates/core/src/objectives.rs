//! Geodesically convex objectives on the admissible ball.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::error::{ProxError, Result};
use crate::geometry::{GeodesicBall, SpaceConfig, SpherePoint, TangentVector};
use crate::radial::{self, Profile, RadialTerm};

/// A value in `(-inf, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite values as-is, `+inf` as `f64::INFINITY`; for output only.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInf) => Some(Ordering::Less),
            (ExtReal::PosInf, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::PosInf, ExtReal::PosInf) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `sum_i w_i d(y, a_i)`; the geometric median problem.
    DistanceSum { anchors: Vec<SpherePoint>, weights: Vec<f64> },
    /// `sum_i w_i d(y, a_i)^2`; the Frechet mean problem.
    SquaredDistanceSum { anchors: Vec<SpherePoint>, weights: Vec<f64> },
    /// `-cos(sqrt(kappa) d(y, a)) / kappa`.
    CosineDistance { anchor: SpherePoint },
    /// 0 on the ball, `+inf` outside.
    IndicatorBall { ball: GeodesicBall },
    /// Sum of the components.
    Composite { components: Vec<Objective> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    lipschitz_bound: Option<f64>,
}

/// Radial terms plus indicator constraints making up an objective.
pub(crate) struct Decomposition {
    pub terms: Vec<RadialTerm>,
    pub balls: Vec<GeodesicBall>,
}

fn check_weighted(anchors: &[SpherePoint], weights: &[f64]) -> Result<()> {
    if anchors.is_empty() {
        return Err(ProxError::InvalidInput("at least one anchor is required".into()));
    }
    if anchors.len() != weights.len() {
        return Err(ProxError::InvalidInput(format!(
            "{} anchors but {} weights",
            anchors.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(ProxError::InvalidInput(format!("weights must be positive, got {w}")));
    }
    Ok(())
}

impl Objective {
    pub fn new(kind: ObjectiveKind) -> Result<Self> {
        match &kind {
            ObjectiveKind::DistanceSum { anchors, weights }
            | ObjectiveKind::SquaredDistanceSum { anchors, weights } => check_weighted(anchors, weights)?,
            ObjectiveKind::Composite { components } if components.is_empty() => {
                return Err(ProxError::InvalidInput("composite needs at least one component".into()))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            lipschitz_bound: None,
        })
    }

    pub fn distance_sum(anchors: Vec<SpherePoint>, weights: Vec<f64>) -> Result<Self> {
        Self::new(ObjectiveKind::DistanceSum { anchors, weights })
    }

    /// Unweighted geometric median objective.
    pub fn geometric_median(anchors: Vec<SpherePoint>) -> Result<Self> {
        let weights = vec![1.0; anchors.len()];
        Self::distance_sum(anchors, weights)
    }

    pub fn squared_distance_sum(anchors: Vec<SpherePoint>, weights: Vec<f64>) -> Result<Self> {
        Self::new(ObjectiveKind::SquaredDistanceSum { anchors, weights })
    }

    /// Unweighted Frechet mean objective.
    pub fn frechet_mean(anchors: Vec<SpherePoint>) -> Result<Self> {
        let weights = vec![1.0; anchors.len()];
        Self::squared_distance_sum(anchors, weights)
    }

    pub fn cosine_distance(anchor: SpherePoint) -> Self {
        Self {
            kind: ObjectiveKind::CosineDistance { anchor },
            lipschitz_bound: None,
        }
    }

    pub fn indicator_ball(ball: GeodesicBall) -> Self {
        Self {
            kind: ObjectiveKind::IndicatorBall { ball },
            lipschitz_bound: None,
        }
    }

    pub fn composite(components: Vec<Objective>) -> Result<Self> {
        Self::new(ObjectiveKind::Composite { components })
    }

    /// One distance term per anchor, as a composite; the usual splitting of a
    /// weighted geometric median.
    pub fn split_distance_sum(anchors: &[SpherePoint], weights: &[f64]) -> Result<Self> {
        check_weighted(anchors, weights)?;
        let parts = anchors
            .iter()
            .zip(weights)
            .map(|(a, w)| Self::distance_sum(vec![a.clone()], vec![*w]))
            .collect::<Result<Vec<_>>>()?;
        Self::composite(parts)
    }

    /// Overrides the analytic Lipschitz bound.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Components of a composite; a non-composite objective is its own single
    /// component.
    pub fn components(&self) -> Vec<&Objective> {
        match &self.kind {
            ObjectiveKind::Composite { components } => components.iter().collect(),
            _ => vec![self],
        }
    }

    /// All anchors and ball centers, for admissibility checks.
    pub fn anchors(&self) -> Vec<&SpherePoint> {
        match &self.kind {
            ObjectiveKind::DistanceSum { anchors, .. } | ObjectiveKind::SquaredDistanceSum { anchors, .. } => {
                anchors.iter().collect()
            }
            ObjectiveKind::CosineDistance { anchor } => vec![anchor],
            ObjectiveKind::IndicatorBall { ball } => vec![&ball.center],
            ObjectiveKind::Composite { components } => components.iter().flat_map(|c| c.anchors()).collect(),
        }
    }

    pub fn check_admissible(&self, cfg: &SpaceConfig) -> Result<()> {
        self.anchors().into_iter().try_for_each(|a| cfg.check_admissible(a))
    }

    /// A Lipschitz constant on the admissible ball: the explicit override if
    /// set, otherwise an analytic bound. `None` for indicators.
    pub fn lipschitz_bound(&self, cfg: &SpaceConfig) -> Option<f64> {
        if self.lipschitz_bound.is_some() {
            return self.lipschitz_bound;
        }
        let diameter = 2.0 * cfg.admissible_radius();
        match &self.kind {
            ObjectiveKind::DistanceSum { weights, .. } => Some(weights.iter().sum()),
            ObjectiveKind::SquaredDistanceSum { weights, .. } => Some(2.0 * diameter * weights.iter().sum::<f64>()),
            ObjectiveKind::CosineDistance { .. } => {
                Some((cfg.sqrt_kappa() * diameter).min(FRAC_PI_2).sin() / cfg.sqrt_kappa())
            }
            ObjectiveKind::IndicatorBall { .. } => None,
            ObjectiveKind::Composite { components } => {
                components.iter().map(|c| c.lipschitz_bound(cfg)).sum::<Option<f64>>()
            }
        }
    }

    pub(crate) fn decompose(&self) -> Decomposition {
        let mut out = Decomposition {
            terms: Vec::new(),
            balls: Vec::new(),
        };
        self.decompose_into(&mut out);
        out
    }

    fn decompose_into(&self, out: &mut Decomposition) {
        match &self.kind {
            ObjectiveKind::DistanceSum { anchors, weights } => out.terms.extend(
                anchors
                    .iter()
                    .zip(weights)
                    .map(|(a, w)| RadialTerm::new(a.clone(), *w, Profile::Distance)),
            ),
            ObjectiveKind::SquaredDistanceSum { anchors, weights } => out.terms.extend(
                anchors
                    .iter()
                    .zip(weights)
                    .map(|(a, w)| RadialTerm::new(a.clone(), *w, Profile::SquaredDistance)),
            ),
            ObjectiveKind::CosineDistance { anchor } => {
                out.terms.push(RadialTerm::new(anchor.clone(), 1.0, Profile::NegCosine))
            }
            ObjectiveKind::IndicatorBall { ball } => out.balls.push(ball.clone()),
            ObjectiveKind::Composite { components } => components.iter().for_each(|c| c.decompose_into(out)),
        }
    }

    pub fn value(&self, y: &SpherePoint, cfg: &SpaceConfig) -> ExtReal {
        match &self.kind {
            ObjectiveKind::IndicatorBall { ball } => {
                if ball.contains(y, cfg) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            ObjectiveKind::Composite { components } => components
                .iter()
                .fold(ExtReal::Finite(0.0), |acc, c| acc.add(c.value(y, cfg))),
            _ => ExtReal::Finite(radial::sum_value(&self.decompose().terms, y, cfg)),
        }
    }

    /// A subgradient at `y`. Distance terms contribute zero at their own
    /// anchor; indicators contribute zero on their ball.
    pub fn subgradient(&self, y: &SpherePoint, cfg: &SpaceConfig) -> Result<TangentVector> {
        let parts = self.decompose();
        if parts.balls.iter().any(|b| !b.contains(y, cfg)) {
            return Err(ProxError::NonsmoothAtInfeasible);
        }
        Ok(TangentVector::new(y.clone(), radial::sum_gradient(&parts.terms, y, cfg)))
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ObjectiveKind::DistanceSum { anchors, .. } => format!("distance_sum({} anchors)", anchors.len()),
            ObjectiveKind::SquaredDistanceSum { anchors, .. } => {
                format!("squared_distance_sum({} anchors)", anchors.len())
            }
            ObjectiveKind::CosineDistance { .. } => "cosine_distance".into(),
            ObjectiveKind::IndicatorBall { ball } => format!("indicator_ball(r={})", ball.radius),
            ObjectiveKind::Composite { components } => format!(
                "composite[{}]",
                components.iter().map(|c| c.describe()).collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

/// Brute-force minimization over a geodesic-polar grid of `ball` (dim 2).
///
/// Rings sit at radii `k * resolution` plus the boundary; each ring carries a
/// power-of-two number of equally spaced points with arc spacing at most
/// `resolution`. Halving the resolution therefore refines the grid without
/// dropping any of its points.
pub fn grid_search<F>(ball: &GeodesicBall, resolution: f64, cfg: &SpaceConfig, mut eval: F) -> Result<(SpherePoint, ExtReal)>
where
    F: FnMut(&SpherePoint) -> ExtReal,
{
    if cfg.dim() != 2 {
        return Err(ProxError::UnsupportedDimension(cfg.dim()));
    }
    if !(resolution > 0.0) {
        return Err(ProxError::InvalidInput(format!("resolution must be positive, got {resolution}")));
    }
    let center = ball.center.as_vector();
    let basis = cfg.tangent_basis(&ball.center);
    let sk = cfg.sqrt_kappa();

    let mut radii: Vec<f64> = (0..)
        .map(|k| k as f64 * resolution)
        .take_while(|r| *r <= ball.radius)
        .collect();
    if radii.last().is_none_or(|r| *r < ball.radius) {
        radii.push(ball.radius);
    }

    let mut best = (ball.center.clone(), ExtReal::PosInf);
    for r in radii {
        let circumference = 2.0 * PI * (sk * r).sin() / sk;
        let count = ((circumference / resolution).ceil() as usize).max(1).next_power_of_two();
        let (s, c) = (sk * r).sin_cos();
        for k in 0..count {
            let phi = 2.0 * PI * (k as f64) / (count as f64);
            let dir = &basis[0] * phi.cos() + &basis[1] * phi.sin();
            let p = SpherePoint::from_vector(center * c + dir * s)?;
            let v = eval(&p);
            if v < best.1 {
                best = (p, v);
            }
        }
    }
    Ok(best)
}

/// Grid minimizer of `obj` over `ball`; see [`grid_search`].
pub fn grid_minimize(obj: &Objective, ball: &GeodesicBall, resolution: f64, cfg: &SpaceConfig) -> Result<SpherePoint> {
    grid_search(ball, resolution, cfg, |p| obj.value(p, cfg)).map(|(p, _)| p)
}
