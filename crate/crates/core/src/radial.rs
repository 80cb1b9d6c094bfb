//! Functions of the distance to an anchor, `y -> w * phi(d(y, a))`.
//!
//! Every objective and penalty in this crate is a sum of such terms, plus at
//! most an indicator constraint. For a radial function the Riemannian
//! gradient is `phi'(d) e` with `e` the unit direction pointing away from the
//! anchor, and the Hessian is `phi''(d) e e^T + tau(d) (P - e e^T)` on the
//! tangent space, where `tau(d) = phi'(d) sqrt(kappa) cot(sqrt(kappa) d)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::geometry::{SpaceConfig, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Profile {
    /// `d`
    Distance,
    /// `d^2`
    SquaredDistance,
    /// `-cos(sqrt(kappa) d) / kappa`
    NegCosine,
    /// `1 / (kappa cos(sqrt(kappa) d))`
    Secant,
}

/// `phi'`, `phi''` and the tangential curvature `tau` at one distance.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub slope: f64,
    pub curvature: f64,
    pub tangential: f64,
}

impl Profile {
    /// Whether the profile has a kink at `d = 0`.
    pub fn is_kinked(self) -> bool {
        matches!(self, Profile::Distance)
    }

    pub fn value(self, d: f64, cfg: &SpaceConfig) -> f64 {
        let k = cfg.kappa();
        let theta = cfg.sqrt_kappa() * d;
        match self {
            Profile::Distance => d,
            Profile::SquaredDistance => d * d,
            Profile::NegCosine => -theta.cos() / k,
            Profile::Secant => {
                if theta >= FRAC_PI_2 {
                    f64::INFINITY
                } else {
                    1.0 / (k * theta.cos())
                }
            }
        }
    }

    pub fn jet(self, d: f64, cfg: &SpaceConfig) -> Jet {
        let sk = cfg.sqrt_kappa();
        let theta = sk * d;
        let (s, c) = theta.sin_cos();
        match self {
            Profile::Distance => Jet {
                slope: 1.0,
                curvature: 0.0,
                tangential: if theta > 0.0 { sk * c / s } else { f64::INFINITY },
            },
            Profile::SquaredDistance => Jet {
                slope: 2.0 * d,
                curvature: 2.0,
                tangential: if theta < 1e-8 { 2.0 } else { 2.0 * theta * c / s },
            },
            Profile::NegCosine => Jet {
                slope: s / sk,
                curvature: c,
                tangential: c,
            },
            Profile::Secant => Jet {
                slope: s / (sk * c * c),
                curvature: (1.0 + s * s) / (c * c * c),
                tangential: 1.0 / c,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RadialTerm {
    pub anchor: SpherePoint,
    pub weight: f64,
    pub profile: Profile,
}

/// Unit tangent direction at `y` pointing away from `anchor`, or `None` when
/// the two coincide.
pub(crate) fn away_direction(cfg: &SpaceConfig, y: &SpherePoint, anchor: &SpherePoint) -> Option<DVector<f64>> {
    let v = cfg.log(y, anchor).ok()?;
    let n = v.norm();
    if n == 0.0 {
        None
    } else {
        Some(v.vector() * (-1.0 / n))
    }
}

impl RadialTerm {
    pub fn new(anchor: SpherePoint, weight: f64, profile: Profile) -> Self {
        Self { anchor, weight, profile }
    }

    pub fn value(&self, y: &SpherePoint, cfg: &SpaceConfig) -> f64 {
        self.weight * self.profile.value(cfg.distance(y, &self.anchor), cfg)
    }

    /// Adds this term's gradient (and optionally Hessian) at `y` in ambient
    /// coordinates. A kinked term evaluated exactly at its anchor contributes
    /// nothing; callers handle that case through [`KinkSet`].
    pub fn accumulate(
        &self,
        y: &SpherePoint,
        cfg: &SpaceConfig,
        grad: &mut DVector<f64>,
        hess: Option<&mut DMatrix<f64>>,
    ) {
        let d = cfg.distance(y, &self.anchor);
        let jet = self.profile.jet(d, cfg);
        match away_direction(cfg, y, &self.anchor) {
            Some(e) => {
                grad.axpy(self.weight * jet.slope, &e, 1.0);
                if let Some(h) = hess {
                    let p = tangent_projector(y);
                    let eet = &e * e.transpose();
                    *h += (&eet * jet.curvature + (p - &eet) * jet.tangential) * self.weight;
                }
            }
            None => {
                if let (Some(h), false) = (hess, self.profile.is_kinked()) {
                    *h += tangent_projector(y) * (self.weight * jet.curvature);
                }
            }
        }
    }
}

pub(crate) fn tangent_projector(y: &SpherePoint) -> DMatrix<f64> {
    let u = y.as_vector();
    DMatrix::identity(u.len(), u.len()) - u * u.transpose()
}

/// Value, gradient and Hessian of a sum of radial terms.
pub(crate) struct LocalModel {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub(crate) fn sum_value(terms: &[RadialTerm], y: &SpherePoint, cfg: &SpaceConfig) -> f64 {
    terms.iter().map(|t| t.value(y, cfg)).sum()
}

pub(crate) fn sum_gradient(terms: &[RadialTerm], y: &SpherePoint, cfg: &SpaceConfig) -> DVector<f64> {
    let mut g = DVector::zeros(y.ambient_dim());
    for t in terms {
        t.accumulate(y, cfg, &mut g, None);
    }
    g
}

pub(crate) fn local_model(terms: &[RadialTerm], y: &SpherePoint, cfg: &SpaceConfig) -> LocalModel {
    let n = y.ambient_dim();
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for t in terms {
        t.accumulate(y, cfg, &mut grad, Some(&mut hess));
    }
    LocalModel {
        value: sum_value(terms, y, cfg),
        grad,
        hess,
    }
}

/// Kinked terms grouped by anchor, used to detect minimizers that sit exactly
/// on an anchor and to form minimal-norm subgradients there.
pub(crate) struct KinkSet {
    pub anchors: Vec<(SpherePoint, f64)>,
}

impl KinkSet {
    pub fn from_terms(terms: &[RadialTerm]) -> Self {
        let mut anchors: Vec<(SpherePoint, f64)> = Vec::new();
        for t in terms.iter().filter(|t| t.profile.is_kinked()) {
            match anchors.iter_mut().find(|(a, _)| *a == t.anchor) {
                Some((_, w)) => *w += t.weight,
                None => anchors.push((t.anchor.clone(), t.weight)),
            }
        }
        Self { anchors }
    }

    /// Total kink weight located at `y` (exact coincidence).
    pub fn weight_at(&self, y: &SpherePoint, cfg: &SpaceConfig) -> f64 {
        self.anchors
            .iter()
            .filter(|(a, _)| cfg.distance(a, y) == 0.0)
            .map(|(_, w)| *w)
            .sum()
    }
}

/// Minimal-norm element of `g + w B` where `B` is the closed unit ball of the
/// tangent space.
pub(crate) fn shrink(g: &DVector<f64>, w: f64) -> DVector<f64> {
    let n = g.norm();
    if n <= w {
        DVector::zeros(g.len())
    } else {
        g * (1.0 - w / n)
    }
}
