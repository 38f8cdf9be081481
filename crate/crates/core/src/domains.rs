//! Planar computational domains in the (x2, x3) plane.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// A point of the (x2, x3) plane; the graph value plays the role of x1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x2: f64,
    pub x3: f64,
}

impl Point2 {
    pub const fn new(x2: f64, x3: f64) -> Self {
        Point2 { x2, x3 }
    }

    pub fn norm(self) -> f64 {
        self.x2.hypot(self.x3)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x2 - other.x2).hypot(self.x3 - other.x3)
    }

    pub fn is_finite(self) -> bool {
        self.x2.is_finite() && self.x3.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x2 - o.x2, self.x3 - o.x3)
    }
}

/// Axis-aligned box `[x2_min, x2_max] × [x3_min, x3_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x2_min: f64,
    pub x2_max: f64,
    pub x3_min: f64,
    pub x3_max: f64,
}

impl Rect {
    pub fn new(x2_min: f64, x2_max: f64, x3_min: f64, x3_max: f64) -> Self {
        Rect { x2_min, x2_max, x3_min, x3_max }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x2_min, self.x2_max, self.x3_min, self.x3_max].iter().all(|v| v.is_finite());
        if !ok || self.x2_min >= self.x2_max || self.x3_min >= self.x3_max {
            return config(format!("degenerate rectangle {self:?}"));
        }
        Ok(())
    }

    pub fn contains_closed(&self, p: Point2) -> bool {
        p.x2 >= self.x2_min && p.x2 <= self.x2_max && p.x3 >= self.x3_min && p.x3 <= self.x3_max
    }
}

/// The domain kinds used by the experiments.
///
/// Wedges are open and measured by the half-angle from `+e3`; sausages are
/// the open stadium swept by `B_ρ(base)` moving up a height `ρ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DomainSpec {
    WholePlane,
    Wedge {
        apex: Point2,
        half_angle: f64,
    },
    /// `{x3 > slope·x2 + offset}`
    SlantedUpperHalfPlane {
        slope: f64,
        offset: f64,
    },
    /// `{x3 < b}`
    LowerHalfPlane {
        b: f64,
    },
    /// Plane minus the closed upward rectangle `[-t, t] × [-s, ∞)`.
    UShape {
        t: f64,
        s: f64,
    },
    Sausage {
        base: Point2,
        width: f64,
    },
    /// `{|p| > radius}`
    ExteriorDisk {
        radius: f64,
    },
    /// Open box.
    Rectangle {
        bounds: Rect,
    },
}

/// A point whose upward sausage leaves the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SausageWitness {
    pub point: Point2,
    pub radius: f64,
    /// A point of `S⁺_ρ(point)` outside the domain.
    pub escape: Point2,
}

/// Wedge slope `α` with `V = {x3 > α|x2|}` for the given half-angle.
pub fn wedge_slope(half_angle: f64) -> f64 {
    1.0 / half_angle.tan()
}

/// Inverse of [`wedge_slope`].
pub fn wedge_half_angle(slope: f64) -> f64 {
    (1.0 / slope).atan()
}

fn dist_to_ray(p: Point2, origin: Point2, dir: Point2) -> f64 {
    let d = p - origin;
    let s = d.x2 * dir.x2 + d.x3 * dir.x3;
    if s <= 0.0 {
        d.norm()
    } else {
        (d.x2 * dir.x3 - d.x3 * dir.x2).abs()
    }
}

fn dist_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.x2 * ab.x2 + ab.x3 * ab.x3;
    let ap = p - a;
    let s = ((ap.x2 * ab.x2 + ap.x3 * ab.x3) / len2).clamp(0.0, 1.0);
    p.dist(Point2::new(a.x2 + s * ab.x2, a.x3 + s * ab.x3))
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::FRAC_PI_2;
        match *self {
            DomainSpec::WholePlane => Ok(()),
            DomainSpec::Wedge { apex, half_angle } => {
                if !apex.is_finite() || !(half_angle > 0.0 && half_angle < FRAC_PI_2) {
                    return config(format!("wedge half_angle must lie in (0, π/2), got {half_angle}"));
                }
                Ok(())
            }
            DomainSpec::SlantedUpperHalfPlane { slope, offset } => {
                if !slope.is_finite() || !offset.is_finite() {
                    return config("slanted half-plane parameters must be finite");
                }
                Ok(())
            }
            DomainSpec::LowerHalfPlane { b } => {
                if !b.is_finite() {
                    return config("lower half-plane level must be finite");
                }
                Ok(())
            }
            DomainSpec::UShape { t, s } => {
                if !(t > 0.0 && s > 0.0 && t.is_finite() && s.is_finite()) {
                    return config(format!("U-shape needs t, s > 0, got t={t} s={s}"));
                }
                Ok(())
            }
            DomainSpec::Sausage { base, width } => {
                if !base.is_finite() || !(width > 0.0 && width.is_finite()) {
                    return config(format!("sausage width must be > 0, got {width}"));
                }
                Ok(())
            }
            DomainSpec::ExteriorDisk { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return config(format!("exterior disk radius must be > 0, got {radius}"));
                }
                Ok(())
            }
            DomainSpec::Rectangle { bounds } => bounds.validate(),
        }
    }

    /// Open-set membership.
    pub fn contains(&self, p: Point2) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            DomainSpec::WholePlane => true,
            DomainSpec::Wedge { apex, half_angle } => {
                let d = p - apex;
                d.x3 > 0.0 && d.x2.abs() * half_angle.cos() < d.x3 * half_angle.sin()
            }
            DomainSpec::SlantedUpperHalfPlane { slope, offset } => p.x3 > slope * p.x2 + offset,
            DomainSpec::LowerHalfPlane { b } => p.x3 < b,
            DomainSpec::UShape { t, s } => !(p.x2.abs() <= t && p.x3 >= -s),
            DomainSpec::Sausage { base, width } => {
                let top = Point2::new(base.x2, base.x3 + width * width);
                dist_to_segment(p, base, top) < width
            }
            DomainSpec::ExteriorDisk { radius } => p.norm() > radius,
            DomainSpec::Rectangle { bounds: r } => {
                p.x2 > r.x2_min && p.x2 < r.x2_max && p.x3 > r.x3_min && p.x3 < r.x3_max
            }
        }
    }

    /// Membership in the closure; used for grid masks.
    pub fn contains_closed(&self, p: Point2) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            DomainSpec::WholePlane => true,
            DomainSpec::Wedge { apex, half_angle } => {
                let d = p - apex;
                d.x3 >= 0.0 && d.x2.abs() * half_angle.cos() <= d.x3 * half_angle.sin()
            }
            DomainSpec::SlantedUpperHalfPlane { slope, offset } => p.x3 >= slope * p.x2 + offset,
            DomainSpec::LowerHalfPlane { b } => p.x3 <= b,
            DomainSpec::UShape { t, s } => !(p.x2.abs() < t && p.x3 > -s),
            DomainSpec::Sausage { base, width } => {
                let top = Point2::new(base.x2, base.x3 + width * width);
                dist_to_segment(p, base, top) <= width
            }
            DomainSpec::ExteriorDisk { radius } => p.norm() >= radius,
            DomainSpec::Rectangle { bounds } => bounds.contains_closed(p),
        }
    }

    /// Unsigned distance to the boundary, evaluated without a membership check.
    fn raw_dist(&self, p: Point2) -> f64 {
        match *self {
            DomainSpec::WholePlane => f64::INFINITY,
            DomainSpec::Wedge { apex, half_angle } => {
                let (s, c) = half_angle.sin_cos();
                dist_to_ray(p, apex, Point2::new(s, c)).min(dist_to_ray(p, apex, Point2::new(-s, c)))
            }
            DomainSpec::SlantedUpperHalfPlane { slope, offset } => {
                (p.x3 - slope * p.x2 - offset).abs() / slope.hypot(1.0)
            }
            DomainSpec::LowerHalfPlane { b } => (b - p.x3).abs(),
            DomainSpec::UShape { t, s } => {
                let dx = (p.x2.abs() - t).max(0.0);
                let dz = (-s - p.x3).max(0.0);
                dx.hypot(dz)
            }
            DomainSpec::Sausage { base, width } => {
                let top = Point2::new(base.x2, base.x3 + width * width);
                (width - dist_to_segment(p, base, top)).abs()
            }
            DomainSpec::ExteriorDisk { radius } => (p.norm() - radius).abs(),
            DomainSpec::Rectangle { bounds: r } => {
                (p.x2 - r.x2_min).min(r.x2_max - p.x2).min(p.x3 - r.x3_min).min(r.x3_max - p.x3).abs()
            }
        }
    }

    /// Euclidean distance from an interior point to the boundary; `+∞` for
    /// the whole plane.
    pub fn dist_to_boundary(&self, p: Point2) -> Result<f64> {
        if !self.contains(p) {
            return domain(format!("point ({}, {}) is not in the domain", p.x2, p.x3));
        }
        Ok(self.raw_dist(p))
    }

    /// Whether every upward sausage `S⁺_ρ(p)`, `ρ = dist(p, ∂d)`, stays in the
    /// domain.
    pub fn has_upward_sausage_property(&self) -> bool {
        matches!(self, DomainSpec::WholePlane | DomainSpec::Wedge { .. } | DomainSpec::SlantedUpperHalfPlane { .. })
    }

    /// An explicit counterexample to the sausage property, if there is one.
    pub fn sausage_witness(&self) -> Option<SausageWitness> {
        let up = |p: Point2, rho: f64| {
            // the ball around p + (ρ²/2)e3 reaches height ρ²/2 + 0.999ρ above p
            Point2::new(p.x2, p.x3 + 0.5 * rho * rho + 0.999 * rho)
        };
        let point = match *self {
            DomainSpec::WholePlane | DomainSpec::Wedge { .. } | DomainSpec::SlantedUpperHalfPlane { .. } => {
                return None
            }
            DomainSpec::LowerHalfPlane { b } => Point2::new(0.0, b - 1.0),
            DomainSpec::UShape { s, .. } => Point2::new(0.0, -s - 1.0),
            DomainSpec::Sausage { base, width } => Point2::new(base.x2, base.x3 + width * width),
            DomainSpec::ExteriorDisk { radius } => Point2::new(0.0, -radius - 1.0),
            DomainSpec::Rectangle { bounds: r } => {
                let half = 0.5 * (r.x2_max - r.x2_min).min(r.x3_max - r.x3_min);
                Point2::new(0.5 * (r.x2_min + r.x2_max), r.x3_max - 0.5 * half)
            }
        };
        let radius = self.raw_dist(point);
        Some(SausageWitness { point, radius, escape: up(point, radius) })
    }

    /// Random probe of the sausage property over sample points drawn from
    /// `window`. Returns the first violating (p, q) pair found, if any.
    pub fn probe_sausages<R: Rng>(&self, window: Rect, probes: usize, rng: &mut R) -> Option<(Point2, Point2)> {
        let mut done = 0;
        let mut attempts = 0;
        while done < probes && attempts < probes * 100 {
            attempts += 1;
            let p = Point2::new(
                rng.random_range(window.x2_min..window.x2_max),
                rng.random_range(window.x3_min..window.x3_max),
            );
            if !self.contains(p) {
                continue;
            }
            let rho = self.raw_dist(p);
            if !rho.is_finite() {
                done += 1;
                continue;
            }
            let t = rng.random_range(0.0..1.0) * rho * rho;
            let r = 0.999 * rho * rng.random_range(0.0f64..1.0).sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let q = Point2::new(p.x2 + r * phi.cos(), p.x3 + t + r * phi.sin());
            if !self.contains(q) {
                return Some((p, q));
            }
            done += 1;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn membership_examples() {
        let w = DomainSpec::Wedge { apex: Point2::new(0.0, 0.0), half_angle: FRAC_PI_4 };
        assert!(w.contains(Point2::new(0.0, 1.0)));
        assert!(!w.contains(Point2::new(2.0, 1.0)));
        let u = DomainSpec::UShape { t: 1.0, s: 1.0 };
        assert!(!u.contains(Point2::new(0.0, 0.0)));
        assert!(u.contains(Point2::new(0.0, -1.5)));
        assert!(u.contains(Point2::new(1.5, 3.0)));
        let s = DomainSpec::Sausage { base: Point2::new(0.0, 0.0), width: 2.0 };
        assert!(s.contains(Point2::new(0.0, 3.9)));
        assert!(!s.contains(Point2::new(0.0, 6.1)));
    }

    #[test]
    fn distance_examples() {
        let lower = DomainSpec::LowerHalfPlane { b: 0.0 };
        assert_eq!(lower.dist_to_boundary(Point2::new(5.0, -3.0)).unwrap(), 3.0);
        let w = DomainSpec::Wedge { apex: Point2::new(0.0, 0.0), half_angle: FRAC_PI_4 };
        assert!((w.dist_to_boundary(Point2::new(0.0, SQRT_2)).unwrap() - 1.0).abs() < 1e-15);
        let e = DomainSpec::ExteriorDisk { radius: 1.0 };
        assert_eq!(e.dist_to_boundary(Point2::new(3.0, 0.0)).unwrap(), 2.0);
        assert!(DomainSpec::WholePlane.dist_to_boundary(Point2::new(1.0, 1.0)).unwrap().is_infinite());
        assert!(lower.dist_to_boundary(Point2::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn witnesses_violate() {
        let kinds = [
            DomainSpec::LowerHalfPlane { b: 0.0 },
            DomainSpec::UShape { t: 1.0, s: 1.0 },
            DomainSpec::Sausage { base: Point2::new(1.0, -2.0), width: 0.5 },
            DomainSpec::Sausage { base: Point2::new(0.0, 0.0), width: 3.0 },
            DomainSpec::ExteriorDisk { radius: 2.0 },
            DomainSpec::Rectangle { bounds: Rect::new(-1.0, 1.0, -1.0, 1.0) },
        ];
        for d in kinds {
            assert!(!d.has_upward_sausage_property());
            let w = d.sausage_witness().unwrap();
            assert!(d.contains(w.point), "{d:?}");
            assert!(!d.contains(w.escape), "{d:?}");
            // escape lies in the sausage: within 0.999ρ of p + (ρ²/2)e3
            let c = Point2::new(w.point.x2, w.point.x3 + 0.5 * w.radius * w.radius);
            assert!(c.dist(w.escape) < w.radius);
        }
    }

    #[test]
    fn sampled_sausage_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let window = Rect::new(-20.0, 20.0, -20.0, 20.0);
        let kinds = [
            DomainSpec::WholePlane,
            DomainSpec::Wedge { apex: Point2::new(1.0, -3.0), half_angle: 0.3 },
            DomainSpec::Wedge { apex: Point2::new(0.0, 0.0), half_angle: 1.5 },
            DomainSpec::SlantedUpperHalfPlane { slope: 2.0, offset: 1.0 },
            DomainSpec::SlantedUpperHalfPlane { slope: -0.5, offset: 0.0 },
        ];
        for d in kinds {
            assert!(d.has_upward_sausage_property());
            assert_eq!(d.probe_sausages(window, 10_000, &mut rng), None, "{d:?}");
        }
        let u = DomainSpec::UShape { t: 1.0, s: 1.0 };
        assert!(u.probe_sausages(window, 10_000, &mut rng).is_some());
    }

    #[test]
    fn slope_conversion_round_trips() {
        for a in [0.1, 0.5, 1.0, 1.4] {
            assert!((wedge_half_angle(wedge_slope(a)) - a).abs() < 1e-14);
        }
        assert!((wedge_slope(FRAC_PI_4) - 1.0).abs() < 1e-15);
    }
}
