//! Regularization penalties `Psi_x(y)` used in the resolvent.
//!
//! With `theta = sqrt(kappa) d(x, y)`:
//!
//! | kind              | value                          |
//! |-------------------|--------------------------------|
//! | `PsiOne`          | `1 / (kappa cos theta)`        |
//! | `PsiTwo`          | `-cos theta / kappa`           |
//! | `Full`            | `PsiOne + PsiTwo = sin^2 theta / (kappa cos theta)` |
//! | `SquaredDistance` | `d(x, y)^2` (flat reference)   |
//!
//! `Full` tends to `SquaredDistance` as `kappa -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{ProxError, Result};
use crate::geometry::{SpaceConfig, SpherePoint, TangentVector};
use crate::radial::{self, Profile, RadialTerm};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    #[default]
    Full,
    PsiOne,
    PsiTwo,
    SquaredDistance,
}

impl PenaltyKind {
    /// The penalty `scale * Psi_x` as a list of radial terms around `x`.
    pub(crate) fn terms(self, x: &SpherePoint, scale: f64) -> Vec<RadialTerm> {
        let term = |p| RadialTerm::new(x.clone(), scale, p);
        match self {
            PenaltyKind::Full => vec![term(Profile::Secant), term(Profile::NegCosine)],
            PenaltyKind::PsiOne => vec![term(Profile::Secant)],
            PenaltyKind::PsiTwo => vec![term(Profile::NegCosine)],
            PenaltyKind::SquaredDistance => vec![term(Profile::SquaredDistance)],
        }
    }

    fn is_spherical(self) -> bool {
        !matches!(self, PenaltyKind::SquaredDistance)
    }

    /// Penalty value as a function of the distance `d = d(x, y)`.
    pub fn at_distance(self, d: f64, cfg: &SpaceConfig) -> f64 {
        let theta = cfg.sqrt_kappa() * d;
        match self {
            PenaltyKind::Full => {
                let (s, c) = theta.sin_cos();
                s * s / (cfg.kappa() * c)
            }
            PenaltyKind::PsiOne => Profile::Secant.value(d, cfg),
            PenaltyKind::PsiTwo => Profile::NegCosine.value(d, cfg),
            PenaltyKind::SquaredDistance => d * d,
        }
    }
}

fn checked_distance(x: &SpherePoint, y: &SpherePoint, cfg: &SpaceConfig) -> Result<f64> {
    let d = cfg.distance(x, y);
    let limit = cfg.max_radius();
    if d >= limit - 1e-9 {
        return Err(ProxError::DomainViolation { distance: d, limit });
    }
    Ok(d)
}

/// `1 / (kappa cos(sqrt(kappa) d(y, x)))`, in `[1/kappa, inf)`.
pub fn psi1(x: &SpherePoint, y: &SpherePoint, cfg: &SpaceConfig) -> Result<f64> {
    let d = checked_distance(x, y, cfg)?;
    Ok(PenaltyKind::PsiOne.at_distance(d, cfg))
}

/// `-cos(sqrt(kappa) d(y, x)) / kappa`, in `[-1/kappa, 0)`.
pub fn psi2(x: &SpherePoint, y: &SpherePoint, cfg: &SpaceConfig) -> Result<f64> {
    let d = checked_distance(x, y, cfg)?;
    Ok(PenaltyKind::PsiTwo.at_distance(d, cfg))
}

pub fn penalty_value(kind: PenaltyKind, x: &SpherePoint, y: &SpherePoint, cfg: &SpaceConfig) -> Result<f64> {
    let d = if kind.is_spherical() {
        checked_distance(x, y, cfg)?
    } else {
        cfg.distance(x, y)
    };
    Ok(kind.at_distance(d, cfg))
}

/// Riemannian gradient of `y -> Psi_x(y)`, as a tangent vector at `y`.
/// Exactly zero at `y = x`.
pub fn penalty_gradient(
    kind: PenaltyKind,
    x: &SpherePoint,
    y: &SpherePoint,
    cfg: &SpaceConfig,
) -> Result<TangentVector> {
    if kind.is_spherical() {
        checked_distance(x, y, cfg)?;
    }
    let g = radial::sum_gradient(&kind.terms(x, 1.0), y, cfg);
    Ok(TangentVector::new(y.clone(), g))
}

/// Midpoint convexity gap of `Psi^1_x` on the pair `(y, z)`:
/// `Psi^1_x(y)/2 + Psi^1_x(z)/2 - Psi^1_x(m)` with `m` the geodesic midpoint.
/// Bounded below by `d(y, z)^2 / 32`.
pub fn uniform_convexity_gap(x: &SpherePoint, y: &SpherePoint, z: &SpherePoint, cfg: &SpaceConfig) -> Result<f64> {
    let dyz = cfg.distance(y, z);
    if dyz < 1e-12 {
        return Err(ProxError::DegenerateEdge(dyz));
    }
    let m = cfg.geodesic_point(y, z, 0.5)?;
    Ok(0.5 * psi1(x, y, cfg)? + 0.5 * psi1(x, z, cfg)? - psi1(x, &m, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polar_point;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pair(d: f64) -> (SpaceConfig, SpherePoint, SpherePoint) {
        let cfg = SpaceConfig::default();
        let x = SpherePoint::basis(3, 0);
        let y = SpherePoint::new(vec![d.cos(), d.sin(), 0.0]).unwrap();
        (cfg, x, y)
    }

    #[test]
    fn psi_values_at_reference_distances() {
        let (cfg, x, _) = pair(0.0);
        assert_eq!(psi1(&x, &x, &cfg).unwrap(), 1.0);
        assert_eq!(psi2(&x, &x, &cfg).unwrap(), -1.0);
        assert_eq!(penalty_value(PenaltyKind::Full, &x, &x, &cfg).unwrap(), 0.0);

        // Scalar evaluations of the defining formulas.
        let (cfg, x, y) = pair(0.5);
        assert_abs_diff_eq!(psi1(&x, &y, &cfg).unwrap(), 1.0 / 0.5f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(psi1(&x, &y, &cfg).unwrap(), 1.139493927, epsilon = 1e-9);
        assert_abs_diff_eq!(psi2(&x, &y, &cfg).unwrap(), -0.877582562, epsilon = 1e-9);
        assert_abs_diff_eq!(
            penalty_value(PenaltyKind::Full, &x, &y, &cfg).unwrap(),
            0.261911365,
            epsilon = 1e-9
        );
        let (cfg, x, y) = pair(PI / 3.0);
        assert_abs_diff_eq!(psi1(&x, &y, &cfg).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi2(&x, &y, &cfg).unwrap(), -0.5, epsilon = 1e-14);
    }

    #[test]
    fn domain_violation_near_quarter_circle() {
        let (cfg, x, y) = pair(PI / 2.0 - 1e-10);
        assert!(matches!(psi1(&x, &y, &cfg), Err(ProxError::DomainViolation { .. })));
        assert!(penalty_value(PenaltyKind::SquaredDistance, &x, &y, &cfg).is_ok());
    }

    #[test]
    fn flat_limit_recovers_squared_distance() {
        let cfg = SpaceConfig::with_kappa(1e-6).unwrap();
        let x = SpherePoint::basis(3, 0);
        let y = polar_point(&cfg, &x, 0.5, 0.3).unwrap();
        let full = penalty_value(PenaltyKind::Full, &x, &y, &cfg).unwrap();
        assert!((full - 0.25).abs() / 0.25 <= 1e-6, "{full}");
    }

    #[test]
    fn radial_derivative_along_geodesic() {
        let (cfg, x, y) = pair(0.5);
        let g = penalty_gradient(PenaltyKind::Full, &x, &y, &cfg).unwrap();
        // Scalar derivative of sec t - cos t at t = 0.5.
        let expected = 0.5f64.sin() * (1.0 / 0.5f64.cos().powi(2) + 1.0);
        assert_abs_diff_eq!(g.norm(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(g.norm(), 1.1019339, epsilon = 1e-7);
        // Points away from x, i.e. along +e_1 here.
        assert!(g.vector()[1] > 0.0);
        assert!(penalty_gradient(PenaltyKind::Full, &x, &x, &cfg).unwrap().is_zero());
    }

    #[test]
    fn convexity_gap_example() {
        let cfg = SpaceConfig::default();
        let x = SpherePoint::basis(3, 0);
        // Two points at distance 0.5 from x, 0.4 from each other:
        // cos 0.4 = cos^2 0.5 + sin^2 0.5 cos(2 phi).
        let two_phi = ((0.4f64.cos() - 0.5f64.cos().powi(2)) / 0.5f64.sin().powi(2)).acos();
        let y = polar_point(&cfg, &x, 0.5, 0.5 * two_phi).unwrap();
        let z = polar_point(&cfg, &x, 0.5, -0.5 * two_phi).unwrap();
        assert_abs_diff_eq!(cfg.distance(&y, &z), 0.4, epsilon = 1e-12);
        let gap = uniform_convexity_gap(&x, &y, &z, &cfg).unwrap();
        assert!(gap >= 0.4f64.powi(2) / 32.0, "{gap}");
        assert!(matches!(
            uniform_convexity_gap(&x, &y, &y, &cfg),
            Err(ProxError::DegenerateEdge(_))
        ));
    }
}
