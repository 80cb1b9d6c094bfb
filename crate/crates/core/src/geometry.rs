//! The model space of constant curvature `kappa > 0`: the sphere of radius
//! `1/sqrt(kappa)` in `R^(dim+1)`.
//!
//! Points are stored as unit directions. Curvature only enters through
//! [`SpaceConfig::distance`], [`SpaceConfig::exp`] and [`SpaceConfig::log`],
//! so the same representation serves every `kappa`. Tangent vectors are
//! ambient vectors orthogonal to their base direction whose Euclidean norm is
//! the intrinsic length of the step.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ProxError, Result};

/// Inner products at or below `-1 + ANTIPODAL_EPS` are treated as antipodal.
const ANTIPODAL_EPS: f64 = 1e-12;

/// A point of the model space, stored as a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    u: DVector<f64>,
}

impl SpherePoint {
    /// Builds a point from ambient coordinates, renormalizing to unit length.
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords.into()))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(ProxError::InvalidInput(format!(
                "a sphere point needs at least 2 coordinates, got {}",
                v.len()
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(ProxError::InvalidInput("non-finite coordinate".into()));
        }
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(ProxError::InvalidInput("zero vector is not a direction".into()));
        }
        Ok(Self { u: v / norm })
    }

    /// The `axis`-th standard basis direction of `R^ambient`.
    pub fn basis(ambient: usize, axis: usize) -> Self {
        assert!(axis < ambient, "axis {axis} out of range for R^{ambient}");
        let mut u = DVector::zeros(ambient);
        u[axis] = 1.0;
        Self { u }
    }

    pub fn coords(&self) -> &[f64] {
        self.u.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn ambient_dim(&self) -> usize {
        self.u.len()
    }

    pub(crate) fn dot(&self, other: &SpherePoint) -> f64 {
        self.u.dot(&other.u)
    }
}

/// A tangent vector at `base`; the Euclidean norm of `vector` is the intrinsic
/// length of the step it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    v: DVector<f64>,
}

impl TangentVector {
    /// Projects `v` onto the tangent space at `base`.
    pub fn new(base: SpherePoint, v: DVector<f64>) -> Self {
        let normal = v.dot(&base.u);
        let v = v - &base.u * normal;
        Self { base, v }
    }

    pub fn zero(base: SpherePoint) -> Self {
        let n = base.ambient_dim();
        Self {
            base,
            v: DVector::zeros(n),
        }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    pub fn dot(&self, other: &DVector<f64>) -> f64 {
        self.v.dot(other)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            v: &self.v * s,
        }
    }

    /// Sum of two vectors; `other` is assumed to live at the same base.
    pub fn plus(&self, other: &TangentVector) -> Self {
        debug_assert!(self.base == other.base, "adding tangent vectors at different points");
        Self {
            base: self.base.clone(),
            v: &self.v + &other.v,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|c| *c == 0.0)
    }
}

/// Closed geodesic ball `{ y : d(center, y) <= radius }`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall {
    pub center: SpherePoint,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: SpherePoint, radius: f64, cfg: &SpaceConfig) -> Result<Self> {
        if !(radius >= 0.0) || radius >= cfg.max_radius() {
            return Err(ProxError::InvalidInput(format!(
                "ball radius {radius} must lie in [0, {})",
                cfg.max_radius()
            )));
        }
        cfg.check_point(&center)?;
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &SpherePoint, cfg: &SpaceConfig) -> bool {
        cfg.distance(&self.center, p) <= self.radius
    }
}

/// The model space `M^dim_kappa` together with the admissible ball all data of
/// a run must stay in.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceConfig {
    kappa: f64,
    dim: usize,
    base: SpherePoint,
    admissible_radius: f64,
}

impl Default for SpaceConfig {
    /// Unit curvature, the 2-sphere, admissible ball of radius 0.7 around `e_0`.
    fn default() -> Self {
        Self {
            kappa: 1.0,
            dim: 2,
            base: SpherePoint::basis(3, 0),
            admissible_radius: 0.7,
        }
    }
}

impl SpaceConfig {
    pub fn new(kappa: f64, dim: usize, base: SpherePoint, admissible_radius: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(ProxError::InvalidInput(format!(
                "kappa must be a positive finite number, got {kappa}"
            )));
        }
        if dim < 2 {
            return Err(ProxError::InvalidInput(format!("dim must be at least 2, got {dim}")));
        }
        if base.ambient_dim() != dim + 1 {
            return Err(ProxError::InvalidInput(format!(
                "base point has {} coordinates, expected {}",
                base.ambient_dim(),
                dim + 1
            )));
        }
        // Any two points of the ball must stay closer than pi/(2 sqrt(kappa)).
        let limit = Self::radius_limit(kappa);
        if !(admissible_radius > 0.0) || admissible_radius >= limit {
            return Err(ProxError::InvalidInput(format!(
                "admissible_radius must lie in (0, {limit}), got {admissible_radius}"
            )));
        }
        Ok(Self {
            kappa,
            dim,
            base,
            admissible_radius,
        })
    }

    /// Default space with a different curvature; the admissible radius is
    /// shrunk if needed to stay below `pi/(4 sqrt(kappa))`.
    pub fn with_kappa(kappa: f64) -> Result<Self> {
        Self::new(kappa, 2, SpherePoint::basis(3, 0), Self::default_radius(kappa))
    }

    /// Upper bound (exclusive) on the admissible radius: `pi/(4 sqrt(kappa))`,
    /// so that the ball has diameter below `pi/(2 sqrt(kappa))`.
    pub fn radius_limit(kappa: f64) -> f64 {
        PI / (4.0 * kappa.sqrt())
    }

    /// `min(0.7, 0.9 * radius_limit(kappa))`.
    pub fn default_radius(kappa: f64) -> f64 {
        0.7f64.min(0.9 * Self::radius_limit(kappa))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sqrt_kappa(&self) -> f64 {
        self.kappa.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn admissible_radius(&self) -> f64 {
        self.admissible_radius
    }

    pub fn admissible_ball(&self) -> GeodesicBall {
        GeodesicBall {
            center: self.base.clone(),
            radius: self.admissible_radius,
        }
    }

    /// `pi / (2 sqrt(kappa))`, the bound on all pairwise distances.
    pub fn max_radius(&self) -> f64 {
        PI / (2.0 * self.sqrt_kappa())
    }

    /// `pi / sqrt(kappa)`, the distance to the cut locus.
    pub fn cut_distance(&self) -> f64 {
        PI / self.sqrt_kappa()
    }

    pub fn check_point(&self, p: &SpherePoint) -> Result<()> {
        if p.ambient_dim() != self.dim + 1 {
            return Err(ProxError::InvalidInput(format!(
                "point has {} coordinates, expected {}",
                p.ambient_dim(),
                self.dim + 1
            )));
        }
        Ok(())
    }

    pub fn is_admissible(&self, p: &SpherePoint) -> bool {
        self.distance(&self.base, p) <= self.admissible_radius + 1e-12
    }

    pub fn check_admissible(&self, p: &SpherePoint) -> Result<()> {
        self.check_point(p)?;
        let d = self.distance(&self.base, p);
        if d > self.admissible_radius + 1e-12 {
            return Err(ProxError::DomainViolation {
                distance: d,
                limit: self.admissible_radius,
            });
        }
        Ok(())
    }

    /// Central angle between two directions, `sqrt(kappa) * d(x, y)`.
    ///
    /// Uses the chord length instead of `acos` of the inner product, which
    /// keeps full relative precision for nearby points.
    pub fn angle(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        let dot = x.dot(y);
        if dot >= 0.0 {
            let chord = (&x.u - &y.u).norm();
            2.0 * (0.5 * chord).min(1.0).asin()
        } else {
            let chord = (&x.u + &y.u).norm();
            PI - 2.0 * (0.5 * chord).min(1.0).asin()
        }
    }

    /// Intrinsic geodesic distance.
    pub fn distance(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        self.angle(x, y) / self.sqrt_kappa()
    }

    /// Initial velocity of the geodesic from `x` reaching `y` at time 1.
    pub fn log(&self, x: &SpherePoint, y: &SpherePoint) -> Result<TangentVector> {
        if x.dot(y) <= -1.0 + ANTIPODAL_EPS {
            return Err(ProxError::AntipodalPoints);
        }
        let diff = &y.u - &x.u;
        let w = &diff - &x.u * diff.dot(&x.u);
        let n = w.norm();
        if n == 0.0 {
            return Ok(TangentVector::zero(x.clone()));
        }
        let len = self.distance(x, y);
        Ok(TangentVector {
            base: x.clone(),
            v: w * (len / n),
        })
    }

    /// Geodesic shooting from `v.base()`.
    pub fn exp(&self, v: &TangentVector) -> Result<SpherePoint> {
        let n = v.norm();
        if n >= self.cut_distance() {
            return Err(ProxError::StepTooLong {
                length: n,
                limit: self.cut_distance(),
            });
        }
        if n == 0.0 {
            return Ok(v.base.clone());
        }
        let theta = self.sqrt_kappa() * n;
        let u = &v.base.u * theta.cos() + &v.v * (theta.sin() / n);
        let norm = u.norm();
        Ok(SpherePoint { u: u / norm })
    }

    /// The point `(1-t)x + ty` of the geodesic segment from `x` to `y`.
    pub fn geodesic_point(&self, x: &SpherePoint, y: &SpherePoint, t: f64) -> Result<SpherePoint> {
        if x.dot(y) <= -1.0 + ANTIPODAL_EPS {
            return Err(ProxError::AntipodalPoints);
        }
        if t == 0.0 {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        let v = self.log(x, y)?;
        self.exp(&v.scaled(t))
    }

    /// Metric projection onto a geodesic ball.
    pub fn project_to_ball(&self, x: &SpherePoint, ball: &GeodesicBall) -> Result<SpherePoint> {
        let d = self.distance(&ball.center, x);
        if d <= ball.radius {
            return Ok(x.clone());
        }
        self.geodesic_point(&ball.center, x, ball.radius / d)
    }

    /// Left side minus right side of the spherical comparison inequality
    /// for the point `(1-t)y + tz` seen from `x`.
    ///
    /// Nonnegative in any CAT(kappa) space; zero up to rounding in the model
    /// space itself.
    pub fn cat_comparison_residual(
        &self,
        y: &SpherePoint,
        z: &SpherePoint,
        x: &SpherePoint,
        t: f64,
    ) -> Result<f64> {
        let dyz = self.distance(y, z);
        if dyz < 1e-12 {
            return Err(ProxError::DegenerateEdge(dyz));
        }
        let sk = self.sqrt_kappa();
        let c = sk * dyz;
        let w = self.geodesic_point(y, z, t)?;
        let lhs = (sk * self.distance(&w, x)).cos();
        let rhs = ((1.0 - t) * c).sin() / c.sin() * (sk * self.distance(y, x)).cos()
            + (t * c).sin() / c.sin() * (sk * self.distance(z, x)).cos();
        Ok(lhs - rhs)
    }

    /// Orthonormal basis of the tangent space at `p` (Gram-Schmidt on the
    /// standard basis, so the result is deterministic).
    pub fn tangent_basis(&self, p: &SpherePoint) -> Vec<DVector<f64>> {
        let n = p.ambient_dim();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
        let mut axes: Vec<usize> = (0..n).collect();
        // Start from the axes least aligned with p for better conditioning.
        axes.sort_by(|a, b| p.u[*a].abs().total_cmp(&p.u[*b].abs()));
        for axis in axes {
            if basis.len() == n - 1 {
                break;
            }
            let mut v = DVector::zeros(n);
            v[axis] = 1.0;
            v -= &p.u * p.u[axis];
            for b in &basis {
                let proj = v.dot(b);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
        basis
    }

    /// Deterministic sample in `ball(center, radius)`.
    pub fn random_point_in_ball(&self, center: &SpherePoint, radius: f64, seed: u64) -> Result<SpherePoint> {
        PointSampler::new(seed).sample_in_ball(self, center, radius)
    }
}

/// Seeded generator of points in geodesic balls: a uniform direction in the
/// tangent space at the center, a radius drawn so that the tangent-space
/// density is uniform, then the exponential map.
#[derive(Debug, Clone)]
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample_in_ball(&mut self, cfg: &SpaceConfig, center: &SpherePoint, radius: f64) -> Result<SpherePoint> {
        if !(radius >= 0.0) || radius >= cfg.max_radius() {
            return Err(ProxError::InvalidInput(format!(
                "sampling radius {radius} must lie in [0, {})",
                cfg.max_radius()
            )));
        }
        if radius == 0.0 {
            return Ok(center.clone());
        }
        let n = center.ambient_dim();
        let raw = DVector::from_fn(n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let dir = TangentVector::new(center.clone(), raw);
        let norm = dir.norm();
        if norm == 0.0 {
            return Ok(center.clone());
        }
        let u: f64 = self.rng.random();
        let r = radius * u.powf(1.0 / (n - 1) as f64);
        cfg.exp(&dir.scaled(r / norm))
    }

    /// A sample in the admissible ball of `cfg`.
    pub fn admissible(&mut self, cfg: &SpaceConfig) -> SpherePoint {
        self.sample_in_ball(cfg, cfg.base(), cfg.admissible_radius())
            .expect("admissible radius is below the domain bound")
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.random_range(0..items.len())]
    }

    /// Uniform direction in the tangent space at `p`, unit length.
    pub fn unit_tangent(&mut self, p: &SpherePoint) -> TangentVector {
        loop {
            let raw = DVector::from_fn(p.ambient_dim(), |_, _| self.rng.sample::<f64, _>(StandardNormal));
            let v = TangentVector::new(p.clone(), raw);
            let n = v.norm();
            if n > 1e-8 {
                return v.scaled(1.0 / n);
            }
        }
    }
}

/// The point `exp_center(r (cos phi e1 + sin phi e2))` in the first two
/// tangent-basis directions at `center`. Handy for building planar instances.
pub fn polar_point(cfg: &SpaceConfig, center: &SpherePoint, r: f64, phi: f64) -> Result<SpherePoint> {
    let basis = cfg.tangent_basis(center);
    let v = &basis[0] * (r * phi.cos()) + &basis[1] * (r * phi.sin());
    cfg.exp(&TangentVector::new(center.clone(), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(c: &[f64]) -> SpherePoint {
        SpherePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_along_great_circle() {
        let cfg = SpaceConfig::default();
        let x = pt(&[1.0, 0.0, 0.0]);
        let y = pt(&[0.5f64.cos(), 0.5f64.sin(), 0.0]);
        assert_abs_diff_eq!(cfg.distance(&x, &y), 0.5, epsilon = 1e-15);
        assert_eq!(cfg.distance(&x, &x), 0.0);
        let cfg4 = SpaceConfig::with_kappa(4.0).unwrap();
        assert_abs_diff_eq!(cfg4.distance(&x, &y), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn geodesic_midpoint_and_endpoints() {
        let cfg = SpaceConfig::default();
        let x = pt(&[1.0, 0.0, 0.0]);
        let y = pt(&[0.5f64.cos(), 0.5f64.sin(), 0.0]);
        assert_eq!(cfg.geodesic_point(&x, &y, 0.0).unwrap(), x);
        assert_eq!(cfg.geodesic_point(&x, &y, 1.0).unwrap(), y);
        let m = cfg.geodesic_point(&x, &y, 0.5).unwrap();
        let expected = [0.25f64.cos(), 0.25f64.sin(), 0.0];
        for (a, b) in m.coords().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn antipodal_points_are_rejected() {
        let cfg = SpaceConfig::default();
        let x = pt(&[1.0, 0.0, 0.0]);
        let y = pt(&[-1.0, 0.0, 0.0]);
        assert_eq!(cfg.geodesic_point(&x, &y, 0.3), Err(ProxError::AntipodalPoints));
        assert_eq!(cfg.log(&x, &y), Err(ProxError::AntipodalPoints));
    }

    #[test]
    fn log_and_exp_on_axes() {
        let cfg = SpaceConfig::default();
        let x = pt(&[1.0, 0.0, 0.0]);
        let y = pt(&[0.5f64.cos(), 0.5f64.sin(), 0.0]);
        let v = cfg.log(&x, &y).unwrap();
        assert_abs_diff_eq!(v.vector()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.vector()[1], 0.5, epsilon = 1e-15);
        assert!(cfg.log(&x, &x).unwrap().is_zero());

        let step = TangentVector::new(x.clone(), DVector::from_vec(vec![0.0, 0.0, 0.3]));
        let z = cfg.exp(&step).unwrap();
        assert_abs_diff_eq!(z.coords()[0], 0.3f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(z.coords()[2], 0.3f64.sin(), epsilon = 1e-15);
        assert_eq!(cfg.exp(&TangentVector::zero(x.clone())).unwrap(), x);

        let long = TangentVector::new(x, DVector::from_vec(vec![0.0, 4.0, 0.0]));
        assert!(matches!(cfg.exp(&long), Err(ProxError::StepTooLong { .. })));
    }

    #[test]
    fn projection_onto_ball() {
        let cfg = SpaceConfig::default();
        let c = pt(&[1.0, 0.0, 0.0]);
        let ball = GeodesicBall::new(c.clone(), 0.3, &cfg).unwrap();
        let x = pt(&[0.5f64.cos(), 0.5f64.sin(), 0.0]);
        let p = cfg.project_to_ball(&x, &ball).unwrap();
        assert_abs_diff_eq!(p.coords()[0], 0.3f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(p.coords()[1], 0.3f64.sin(), epsilon = 1e-14);
        let inside = pt(&[0.1f64.cos(), 0.0, 0.1f64.sin()]);
        assert_eq!(cfg.project_to_ball(&inside, &ball).unwrap(), inside);
    }

    #[test]
    fn projection_beats_dense_grid() {
        let cfg = SpaceConfig::default();
        let c = cfg.base().clone();
        let ball = GeodesicBall::new(c.clone(), 0.25, &cfg).unwrap();
        let mut s = PointSampler::new(3);
        for _ in 0..5 {
            let x = s.admissible(&cfg);
            let p = cfg.project_to_ball(&x, &ball).unwrap();
            let best = cfg.distance(&x, &p);
            let mut grid_best = f64::INFINITY;
            for i in 0..=60 {
                let r = 0.25 * i as f64 / 60.0;
                for k in 0..360 {
                    let g = polar_point(&cfg, &c, r, k as f64 * PI / 180.0).unwrap();
                    grid_best = grid_best.min(cfg.distance(&x, &g));
                }
            }
            assert!(best <= grid_best + 1e-12, "{best} vs grid {grid_best}");
        }
    }

    #[test]
    fn comparison_residual_vanishes_at_endpoints() {
        let cfg = SpaceConfig::default();
        let y = pt(&[1.0, 0.1, 0.0]);
        let z = pt(&[1.0, -0.2, 0.3]);
        let x = pt(&[1.0, 0.3, -0.1]);
        assert_eq!(cfg.cat_comparison_residual(&y, &z, &x, 0.0).unwrap(), 0.0);
        assert!(cfg.cat_comparison_residual(&y, &z, &x, 1.0).unwrap().abs() < 1e-15);
        assert!(matches!(
            cfg.cat_comparison_residual(&y, &y, &x, 0.5),
            Err(ProxError::DegenerateEdge(_))
        ));
    }

    #[test]
    fn sampler_is_deterministic_and_bounded() {
        let cfg = SpaceConfig::default();
        let c = cfg.base().clone();
        assert_eq!(cfg.random_point_in_ball(&c, 0.0, 1).unwrap(), c);
        assert_eq!(
            cfg.random_point_in_ball(&c, 0.4, 11).unwrap(),
            cfg.random_point_in_ball(&c, 0.4, 11).unwrap()
        );
        let mut s = PointSampler::new(5);
        let worst = (0..10_000)
            .map(|_| cfg.distance(&c, &s.sample_in_ball(&cfg, &c, 0.5).unwrap()))
            .fold(0.0, f64::max);
        assert!(worst <= 0.5 + 1e-12);
        assert!(worst > 0.49);
    }

    #[test]
    fn config_validation() {
        let base = SpherePoint::basis(3, 0);
        assert!(SpaceConfig::new(0.0, 2, base.clone(), 0.5).is_err());
        assert!(SpaceConfig::new(1.0, 2, base.clone(), PI / 4.0).is_err());
        assert!(SpaceConfig::new(1.0, 3, base.clone(), 0.5).is_err());
        assert!(SpaceConfig::new(1.0, 2, base, 0.5).is_ok());
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let cfg = SpaceConfig::default();
        let p = pt(&[0.3, -0.4, 0.8]);
        let b = cfg.tangent_basis(&p);
        assert_eq!(b.len(), 2);
        for (i, v) in b.iter().enumerate() {
            assert_abs_diff_eq!(v.dot(p.as_vector()), 0.0, epsilon = 1e-14);
            for (j, w) in b.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v.dot(w), expected, epsilon = 1e-14);
            }
        }
    }
}
