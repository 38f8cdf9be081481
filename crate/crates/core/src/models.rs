//! Closed-form solutions, barriers and kernels of the translator equation.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::domains::Point2;
use crate::error::{config, domain, Error, Result};
use crate::specfun;

/// The vertical plane `u = a·x2 + b`; it solves both `Lu = 0` and `P = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSolution {
    pub a: f64,
    pub b: f64,
}

impl PlaneSolution {
    pub fn eval(&self, p: Point2) -> f64 {
        self.a * p.x2 + self.b
    }
}

pub fn plane_solution(a: f64, b: f64) -> PlaneSolution {
    PlaneSolution { a, b }
}

/// A tilted grim reaper graph
/// `u = A·log cos(B·(x2 - apex.x2)) + c·(x3 - apex.x3)` over the strip
/// `|B·(x2 - apex.x2)| < π/2`, with `A = (1+c²)/c` and `B = c/√(1+c²)`.
///
/// A negative slope gives the mirror image `x1 ↦ -x1`: the graph is then
/// convex and blows up to `+∞` at the strip edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedReaper {
    pub slope: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub strip_halfwidth: f64,
    pub apex_offset: Point2,
}

impl TiltedReaper {
    pub fn from_slope(c: f64, apex_offset: Point2) -> Result<Self> {
        if !c.is_finite() || c == 0.0 {
            return config(format!("reaper slope must be finite and nonzero, got {c}"));
        }
        let amplitude = (1.0 + c * c) / c;
        let frequency = c / (1.0 + c * c).sqrt();
        Ok(TiltedReaper { slope: c, amplitude, frequency, strip_halfwidth: FRAC_PI_2 / frequency.abs(), apex_offset })
    }

    /// Tilt angle `ζ ∈ (0, π/2)` measured so that the slope is `cot ζ`;
    /// then `A = 1/(sin ζ cos ζ)` and `B = cos ζ`.
    pub fn from_tilt_angle(zeta: f64, apex_offset: Point2) -> Result<Self> {
        if !(zeta > 0.0 && zeta < FRAC_PI_2) {
            return config(format!("tilt angle must lie in (0, π/2), got {zeta}"));
        }
        Self::from_slope(1.0 / zeta.tan(), apex_offset)
    }

    /// The reflected graph `-u`.
    pub fn flipped(&self) -> Self {
        TiltedReaper { slope: -self.slope, amplitude: -self.amplitude, frequency: -self.frequency, ..*self }
    }

    /// Full strip width `π/|B|`.
    pub fn strip_width(&self) -> f64 {
        2.0 * self.strip_halfwidth
    }

    fn phase(&self, p: Point2) -> f64 {
        self.frequency * (p.x2 - self.apex_offset.x2)
    }

    pub fn in_strip(&self, p: Point2) -> bool {
        self.phase(p).abs() < FRAC_PI_2
    }

    pub fn eval(&self, p: Point2) -> Result<f64> {
        let th = self.phase(p);
        if !(th.abs() < FRAC_PI_2) {
            return domain(format!("x2 = {} lies outside the reaper strip", p.x2));
        }
        Ok(self.amplitude * th.cos().ln() + self.slope * (p.x3 - self.apex_offset.x3))
    }

    /// Analytic gradient `(u_2, u_3)`.
    pub fn gradient(&self, p: Point2) -> Result<[f64; 2]> {
        let th = self.phase(p);
        if !(th.abs() < FRAC_PI_2) {
            return domain("outside the reaper strip");
        }
        Ok([-self.amplitude * self.frequency * th.tan(), self.slope])
    }
}

pub fn tilted_reaper_eval(r: &TiltedReaper, p: Point2) -> Result<f64> {
    r.eval(p)
}

/// Exponential superbarrier on `V_α = {x3 ≥ α|x2|}`.
pub fn superbarrier_w(alpha: f64, p: Point2) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return domain(format!("superbarrier needs alpha >= 0, got {alpha}"));
    }
    if p.x3 < alpha * p.x2.abs() - 1e-12 * (1.0 + p.x3.abs()) {
        return domain(format!("({}, {}) lies outside V_alpha", p.x2, p.x3));
    }
    Ok(superbarrier_unchecked(alpha, p))
}

pub(crate) fn superbarrier_unchecked(alpha: f64, p: Point2) -> f64 {
    let beta = 1.0 / (1.0 + alpha * alpha);
    (-(p.x3 + alpha * p.x2) * beta).exp() + (-(p.x3 - alpha * p.x2) * beta).exp()
}

/// Green's function of `L = Δ + ∂₃`:
/// `(1/2π)·K0(|x - x'|/2)·e^{(x'_3 - x_3)/2}`.
pub fn green_l(x: Point2, xp: Point2) -> Result<f64> {
    let r = x.dist(xp);
    if r == 0.0 {
        return Err(Error::Singularity("green_L at coincident points".into()));
    }
    // combine the exponentials before evaluating to stay finite for large r
    let k0s = specfun::bessel_k0_scaled(0.5 * r)?;
    Ok(k0s * (0.5 * (xp.x3 - x.x3 - r)).exp() / (2.0 * PI))
}

/// `u_K = e^{-x3/2} K0(|p|/2)`, L-harmonic off the origin.
pub fn u_k_eval(p: Point2) -> Result<f64> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::Singularity("u_K at the origin".into()));
    }
    let k0s = specfun::bessel_k0_scaled(0.5 * r)?;
    Ok(k0s * (-0.5 * (p.x3 + r)).exp())
}

/// `u_I = e^{-x3/2} I0(|p|/2)`.
pub fn u_i_eval(p: Point2) -> Result<f64> {
    Ok((-0.5 * p.x3).exp() * specfun::bessel_i0(0.5 * p.norm())?)
}

/// Barrier `c_P·(e^{-b}Ei(b) - e^{-x3}Ei(x3))` on `x3 < b < 0`, with
/// `L w = c_P / x3²`.
pub fn ei_barrier(c_p: f64, b: f64, x3: f64) -> Result<f64> {
    if !(c_p > 0.0) || !c_p.is_finite() {
        return domain(format!("ei_barrier needs c_P > 0, got {c_p}"));
    }
    if !(x3 < b && b < 0.0) || !x3.is_finite() {
        return domain(format!("ei_barrier needs x3 < b < 0, got x3={x3}, b={b}"));
    }
    Ok(c_p * (specfun::expint_ei_scaled(b)? - specfun::expint_ei_scaled(x3)?))
}

/// Value with a distinguished `+∞`, used by the barrier reef.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInfinity => None,
        }
    }

    pub fn min(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.min(b)),
            (Extended::Finite(a), Extended::PosInfinity) | (Extended::PosInfinity, Extended::Finite(a)) => {
                Extended::Finite(a)
            }
            _ => Extended::PosInfinity,
        }
    }

    /// Whether `v <= self`.
    pub fn dominates(self, v: f64) -> bool {
        match self {
            Extended::Finite(a) => v <= a,
            Extended::PosInfinity => true,
        }
    }
}

/// `b(ε₁) = (C'/ε₁)²`.
pub fn reef_depth(eps1: f64, c_prime: f64) -> f64 {
    (c_prime / eps1).powi(2)
}

/// `ζ = arccos(ε / (4b))`.
pub fn reef_zeta(eps: f64, b: f64) -> f64 {
    (eps / (4.0 * b)).acos()
}

/// Width of the reef profile `-log cos(x2 cos ζ)/(cos ζ sin ζ)` at height `h`.
pub fn reef_width_at_height(zeta: f64, h: f64) -> f64 {
    let (s, c) = zeta.sin_cos();
    2.0 / c * (-h * c * s).exp().acos()
}

/// N copies of the mirrored (convex) tilted reaper of tilt `ζ`, shifted by
/// multiples of the period `τ`; the reef is their pointwise minimum and `+∞`
/// outside every strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierReef {
    pub n_copies: usize,
    pub eps1: f64,
    pub eps: f64,
    pub c_prime: f64,
    pub depth_b: f64,
    pub zeta: f64,
    pub tau: f64,
    /// x2 of the apex of copy 0.
    pub first_apex: f64,
    /// +1 places copies to the right of the first apex, -1 to the left.
    pub direction: f64,
}

impl BarrierReef {
    /// The period is the profile width at height `ε/4`, so that the reef
    /// sags by at most `ε/4` between neighboring apexes on `x3 = 0`.
    pub fn new(n_copies: usize, eps1: f64, eps: f64, c_prime: f64) -> Result<Self> {
        if n_copies == 0 {
            return config("barrier reef needs at least one copy");
        }
        if !(eps1 > 0.0 && eps > 0.0 && c_prime > 0.0) {
            return config("barrier reef needs eps1, eps, C' > 0");
        }
        let depth_b = reef_depth(eps1, c_prime);
        if eps >= 4.0 * depth_b {
            return config(format!("eps = {eps} too large for b(eps1) = {depth_b}"));
        }
        let zeta = reef_zeta(eps, depth_b);
        let tau = reef_width_at_height(zeta, 0.25 * eps);
        Ok(BarrierReef { n_copies, eps1, eps, c_prime, depth_b, zeta, tau, first_apex: 0.0, direction: 1.0 })
    }

    /// Places the reef so that its outermost strip edge on the inner side
    /// sits at `edge`; copies extend away from it in `direction`.
    pub fn anchored_at_edge(mut self, edge: f64, direction: f64) -> Self {
        self.direction = direction.signum();
        self.first_apex = edge + self.direction * self.reaper(0).strip_halfwidth;
        self
    }

    pub fn apex(&self, k: usize) -> f64 {
        self.first_apex + self.direction * k as f64 * self.tau
    }

    /// Copy `k` as a convex reaper graph with apex height 0 on `x3 = 0`.
    pub fn reaper(&self, k: usize) -> TiltedReaper {
        let base = TiltedReaper::from_tilt_angle(self.zeta, Point2::new(0.0, 0.0))
            .expect("zeta validated at construction")
            .flipped();
        TiltedReaper { apex_offset: Point2::new(self.apex(k), 0.0), ..base }
    }

    pub fn eval(&self, p: Point2) -> Extended {
        let mut out = Extended::PosInfinity;
        for k in 0..self.n_copies {
            let r = self.reaper(k);
            if r.in_strip(p) {
                if let Ok(v) = r.eval(p) {
                    out = out.min(Extended::Finite(v));
                }
            }
        }
        out
    }
}

pub fn barrier_reef_eval(r: &BarrierReef, p: Point2) -> Extended {
    r.eval(p)
}

/// A point of R³ in the coordinates `(x1, x2, x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

/// Conformal factor `φ` of the metric `e^{2φ}δ` with `φ = x3/2`: gradient
/// and Hessian at `p`.
fn conformal_phi(_p: Point3) -> ([f64; 3], [[f64; 3]; 3]) {
    ([0.0, 0.0, 0.5], [[0.0; 3]; 3])
}

/// `Ric(ν,ν) + |A|²` for the vertical plane through `p` with horizontal
/// Euclidean unit normal `(cos θ, sin θ, 0)` in the metric `e^{x3}δ`.
pub fn doubling_obstruction_with_normal(p: Point3, theta: f64) -> f64 {
    let (g, hess) = conformal_phi(p);
    let n = [theta.cos(), theta.sin(), 0.0];
    let n_dim = 3.0;
    let dphi_n: f64 = (0..3).map(|i| g[i] * n[i]).sum();
    let hess_nn: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| hess[i][j] * n[i] * n[j]).sum();
    let lap: f64 = (0..3).map(|i| hess[i][i]).sum();
    let grad2: f64 = g.iter().map(|v| v * v).sum();
    let e2phi = p.x3.exp();
    // Ric_{e^{2φ}δ}(X,X) = -(n-2)(∇²φ - dφ⊗dφ)(X,X) - (Δφ + (n-2)|dφ|²)|X|², X = e^{-φ}n
    let ric = -((n_dim - 2.0) * (hess_nn - dphi_n * dphi_n) + lap + (n_dim - 2.0) * grad2) / e2phi;
    // a flat plane acquires the umbilic part e^{φ}(∂_nφ) g_δ, so |A|² = 2(∂_nφ)² e^{-2φ}
    let a2 = 2.0 * dphi_n * dphi_n / e2phi;
    ric + a2
}

/// Doubling obstruction for the vertical plane `{x1 = p.x1}`.
pub fn doubling_obstruction(p: Point3) -> f64 {
    doubling_obstruction_with_normal(p, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap_drift(f: &dyn Fn(Point2) -> f64, p: Point2, h: f64) -> f64 {
        let c = f(p);
        let e = f(Point2::new(p.x2 + h, p.x3));
        let w = f(Point2::new(p.x2 - h, p.x3));
        let n = f(Point2::new(p.x2, p.x3 + h));
        let s = f(Point2::new(p.x2, p.x3 - h));
        (e + w + n + s - 4.0 * c) / (h * h) + (n - s) / (2.0 * h)
    }

    #[test]
    fn reaper_constants() {
        let r = TiltedReaper::from_slope(1.0, Point2::new(0.0, 0.0)).unwrap();
        assert!((r.amplitude - 2.0).abs() < 1e-15);
        assert!((r.frequency - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((r.strip_width() - PI * 2f64.sqrt()).abs() < 1e-14);
        for c in [0.2, 1.0, 3.0, -0.7] {
            let r = TiltedReaper::from_slope(c, Point2::new(0.0, 0.0)).unwrap();
            assert!((r.amplitude * r.frequency * r.frequency - c).abs() < 1e-14);
            assert!((r.amplitude * c - (1.0 + c * c)).abs() < 1e-13);
            assert!(r.strip_width() > PI);
        }
        let z = TiltedReaper::from_tilt_angle(0.4, Point2::new(0.0, 0.0)).unwrap();
        assert!((z.amplitude - 1.0 / (0.4f64.sin() * 0.4f64.cos())).abs() < 1e-13);
        assert!((z.frequency - 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn reaper_apex_and_strip() {
        let apex = Point2::new(1.0, -2.0);
        let r = TiltedReaper::from_slope(0.5, apex).unwrap();
        assert_eq!(r.eval(apex).unwrap(), 0.0);
        assert!(r.eval(Point2::new(1.0 + r.strip_halfwidth, 0.0)).is_err());
        let g = r.gradient(Point2::new(1.3, 0.0)).unwrap();
        let h = 1e-6;
        let fd = (r.eval(Point2::new(1.3 + h, 0.0)).unwrap() - r.eval(Point2::new(1.3 - h, 0.0)).unwrap()) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn l_harmonic_models() {
        let h = 1e-3;
        let pts = [Point2::new(0.3, 0.7), Point2::new(-1.5, 2.0), Point2::new(2.0, -3.0), Point2::new(0.0, -0.8)];
        for p in pts {
            assert!(lap_drift(&|q| u_k_eval(q).unwrap(), p, h).abs() < 1e-5);
            assert!(lap_drift(&|q| u_i_eval(q).unwrap(), p, h).abs() < 1e-5);
            let xp = Point2::new(0.1, 0.2);
            assert!(lap_drift(&|q| green_l(q, xp).unwrap(), p, h).abs() < 1e-5);
        }
        let p = Point2::new(0.2, 3.0);
        assert!(lap_drift(&|q| superbarrier_unchecked(1.0, q), p, h).abs() < 1e-6);
    }

    #[test]
    fn green_asymmetry() {
        let a = green_l(Point2::new(0.0, 0.0), Point2::new(0.0, 1.0)).unwrap();
        let b = green_l(Point2::new(0.0, 1.0), Point2::new(0.0, 0.0)).unwrap();
        assert!((a / b - std::f64::consts::E).abs() < 1e-13);
        assert!(green_l(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn superbarrier_values() {
        assert_eq!(superbarrier_w(1.0, Point2::new(0.0, 0.0)).unwrap(), 2.0);
        let v = superbarrier_w(1.0, Point2::new(2.0, 2.0)).unwrap();
        assert!((v - (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!(superbarrier_w(1.0, Point2::new(2.0, 1.0)).is_err());
    }

    #[test]
    fn ei_barrier_anchor_and_tail() {
        let b = -1.0;
        assert!(ei_barrier(2.0, b, b - 1e-12).unwrap().abs() < 1e-11);
        let far = ei_barrier(2.0, b, -1e6).unwrap();
        let lim = 2.0 * std::f64::consts::E * specfun::expint_ei(-1.0).unwrap();
        assert!((far - lim).abs() < 1e-4);
        assert!(ei_barrier(1.0, -1.0, -0.5).is_err());
        assert!(ei_barrier(1.0, 0.5, -0.5).is_err());
    }

    #[test]
    fn reef_geometry() {
        let reef = BarrierReef::new(5, 0.5, 0.1, 1.0).unwrap();
        assert!(reef.zeta > 0.0 && reef.zeta < FRAC_PI_2);
        assert!((reef.zeta - (0.1f64 / (4.0 * reef.depth_b)).acos()).abs() < 1e-15);
        // flatness between the outermost apexes on x3 = 0
        let n = 400;
        for i in 0..=n {
            let x = reef.apex(0) + (reef.apex(4) - reef.apex(0)) * i as f64 / n as f64;
            let v = reef.eval(Point2::new(x, 0.0)).finite().unwrap();
            assert!(v <= 0.5 * reef.eps && v <= 0.25 * reef.eps + 1e-12);
        }
        let single = BarrierReef::new(1, 0.5, 0.1, 1.0).unwrap();
        let p = Point2::new(0.7, -0.3);
        assert_eq!(single.eval(p).finite().unwrap(), single.reaper(0).eval(p).unwrap());
        let far = Point2::new(reef.apex(4) + 2.0 * reef.reaper(0).strip_halfwidth, 0.0);
        assert_eq!(reef.eval(far), Extended::PosInfinity);
    }

    #[test]
    fn doubling_values() {
        let v0 = doubling_obstruction(Point3 { x1: 0.0, x2: 0.0, x3: 0.0 });
        assert!((v0 + 0.25).abs() < 1e-15);
        let v1 = doubling_obstruction(Point3 { x1: 0.0, x2: 0.0, x3: 4f64.ln() });
        assert!((v1 + 0.0625).abs() < 1e-15);
        assert_eq!(doubling_obstruction(Point3 { x1: 7.0, x2: -3.0, x3: 0.0 }), v0);
        assert!(
            (doubling_obstruction_with_normal(Point3 { x1: 0.0, x2: 0.0, x3: 1.0 }, 0.8) + (-1f64).exp() / 4.0).abs()
                < 1e-15
        );
    }
}
