//! Integral representations of bounded L-harmonic functions and their heat
//! approximations.

mod trace;

pub use trace::{smooth_ramp, BoundaryTrace, Piece, Segment};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domains::Point2;
use crate::error::{domain, Error, Result};
use crate::quad::{integrate_pieces, QuadOptions};
use crate::specfun;

/// Constant in the relaxation bound `|u - h| ≤ c₀‖g‖∞/√t`.
pub const RELAXATION_C0: f64 = 5.0;

/// The heat kernel is negligible (below 1e-16 of its peak) beyond this many
/// standard widths `√(4t)`.
const HEAT_CUTOFF: f64 = 6.07;

/// The Duffin kernel carries a factor `e^{-(r - t)/2}`; beyond `r - t` of
/// this size it is below 1e-17 of its peak.
const DUFFIN_EXCESS: f64 = 80.0;

const KERNEL_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_panels: 4000 };

fn finish(r: crate::quad::QuadResult, what: &str) -> Result<f64> {
    if !r.converged && r.error > 1e-9 {
        return Err(Error::Numeric(format!("{what}: quadrature did not converge (error {:e})", r.error)));
    }
    Ok(r.value)
}

fn push_sym(out: &mut Vec<f64>, c: f64, offsets: &[f64], lo: f64, hi: f64) {
    for &o in offsets {
        for x in [c - o, c + o] {
            if x > lo && x < hi {
                out.push(x);
            }
        }
    }
}

/// Poisson kernel of `L` on `{x3 < b}` at depth `t = b - x3`, as a function
/// of the horizontal offset `ξ`.
pub fn duffin_kernel(xi: f64, t: f64) -> f64 {
    let r = xi.hypot(t);
    let k1s = specfun::bessel_k1_scaled(0.5 * r).expect("r > 0");
    // t - r without cancellation at large depth
    let t_minus_r = -xi * xi / (t + r);
    t / (2.0 * PI) * k1s * (0.5 * t_minus_r).exp() / r
}

/// Half-width of the window outside which the Duffin kernel is negligible.
pub fn duffin_window(t: f64) -> f64 {
    ((t + DUFFIN_EXCESS).powi(2) - t * t).sqrt()
}

/// Bounded L-harmonic extension of `trace` (given on `x3 = b`) evaluated at
/// `q` below the line.
pub fn poisson_duffin(trace: &BoundaryTrace, b: f64, q: Point2) -> Result<f64> {
    if !q.is_finite() || !b.is_finite() {
        return domain("poisson_duffin: non-finite input");
    }
    let t = b - q.x3;
    if !(t > 0.0) {
        return domain(format!("poisson_duffin: point at x3 = {} is not below the line x3 = {b}", q.x3));
    }
    let w = duffin_window(t);
    let lo = q.x2 - w;
    let hi = q.x2 + w;
    let mut xs = trace.breakpoints(lo, hi);
    let s = (4.0 * t).sqrt();
    push_sym(&mut xs, q.x2, &[0.0, 0.25 * t, t, 4.0 * t, 16.0 * t, s, 2.0 * s, 4.0 * s], lo, hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let r = integrate_pieces(|x| duffin_kernel(x - q.x2, t) * trace.eval(x), &xs, KERNEL_QUAD);
    finish(r, "poisson_duffin")
}

/// Mass of the Duffin kernel at depth `t`, integrated on its own.
pub fn duffin_kernel_mass(t: f64) -> Result<f64> {
    let one = BoundaryTrace::constant(1.0)?;
    poisson_duffin(&one, 0.0, Point2::new(0.0, -t))
}

/// `(1/√(4πt)) ∫ e^{-(x-x')²/(4t)} g(x') dx'`.
pub fn heat_convolve(g: &BoundaryTrace, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() || !x.is_finite() {
        return domain(format!("heat_convolve needs t > 0, got {t}"));
    }
    let s = (4.0 * t).sqrt();
    // integrate in ξ = (x' - x)/s against e^{-ξ²}/√π
    let lo = x - HEAT_CUTOFF * s;
    let hi = x + HEAT_CUTOFF * s;
    let mut xs: Vec<f64> = g.breakpoints(lo, hi).into_iter().map(|v| (v - x) / s).collect();
    push_sym(&mut xs, 0.0, &[0.0, 1.0, 2.0, 4.0], -HEAT_CUTOFF, HEAT_CUTOFF);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let r = integrate_pieces(|xi| inv_sqrt_pi * (-xi * xi).exp() * g.eval(x + s * xi), &xs, KERNEL_QUAD);
    let mut v = finish(r, "heat_convolve")?;
    // mass beyond the window: erfc(6.07)/2 ≈ 1e-17 per side
    let tail = 0.5 * libm::erfc(HEAT_CUTOFF);
    v += tail * (g.eval(lo) + g.eval(hi));
    Ok(v)
}

/// Duffin value, heat value and the relaxation bound at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationGap {
    pub duffin: f64,
    pub heat: f64,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares the L-harmonic extension at `(x2, x3)` (data on `x3 = 0`) with
/// the heat solution at time `t = -x3`.
pub fn relaxation_gap(trace: &BoundaryTrace, x2: f64, x3: f64) -> Result<RelaxationGap> {
    if !(x3 <= -1.0) {
        return domain(format!("relaxation_gap needs x3 <= -1, got {x3}"));
    }
    let t = -x3;
    let duffin = poisson_duffin(trace, 0.0, Point2::new(x2, x3))?;
    let heat = heat_convolve(trace, x2, t)?;
    let gap = (duffin - heat).abs();
    let bound = RELAXATION_C0 * trace.sup_norm() / t.sqrt();
    Ok(RelaxationGap { duffin, heat, gap, bound, holds: gap <= bound })
}

/// `(1/2a) ∫_{-a}^{a} g`.
pub fn interval_average(g: &BoundaryTrace, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("interval_average needs a > 0, got {a}"));
    }
    Ok(g.integral(-a, a) / (2.0 * a))
}

/// Outcome of [`average_limit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AverageLimit {
    Limit(f64),
    NoLimit { spread: f64 },
}

/// Rungs of the geometric ladder `a = 2^k`, `k = 0..AVERAGE_RUNGS`.
pub const AVERAGE_RUNGS: usize = 48;
/// Maximum spread over the last four rungs for a limit to be declared.
pub const AVERAGE_TOL: f64 = 1e-3;

/// Limit of the interval averages along `a = 2^k`; Richardson-corrected for
/// the `O(1/a)` approach of data with side limits.
pub fn average_limit(g: &BoundaryTrace) -> Result<AverageLimit> {
    let mut ladder = Vec::with_capacity(AVERAGE_RUNGS + 1);
    for k in 0..=AVERAGE_RUNGS {
        ladder.push(interval_average(g, 2f64.powi(k as i32))?);
    }
    let tail = &ladder[ladder.len() - 4..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if hi - lo > AVERAGE_TOL {
        return Ok(AverageLimit::NoLimit { spread: hi - lo });
    }
    let n = ladder.len();
    Ok(AverageLimit::Limit(2.0 * ladder[n - 1] - ladder[n - 2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_mass_is_one() {
        for t in [0.5, 1.0, 5.0, 25.0, 100.0, 1e4] {
            let m = duffin_kernel_mass(t).unwrap();
            assert!((m - 1.0).abs() < 1e-10, "t={t} m={m}");
        }
    }

    #[test]
    fn odd_step_vanishes_on_axis() {
        let g = BoundaryTrace::step(0.0, -1.0, 1.0).unwrap();
        for t in [0.3, 2.0, 40.0] {
            assert!(poisson_duffin(&g, 1.0, Point2::new(0.0, 1.0 - t)).unwrap().abs() < 1e-12);
        }
        assert!(poisson_duffin(&g, 0.0, Point2::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn heat_of_gaussian() {
        let sigma: f64 = 0.8;
        let g = BoundaryTrace::single(Segment::Bump { center: 0.0, width: sigma, height: 1.0 }).unwrap();
        for (x, t) in [(0.0, 0.1), (1.0, 1.0), (-3.0, 7.0)] {
            let var = sigma * sigma + 2.0 * t;
            let exact = sigma / var.sqrt() * (-x * x / (2.0 * var)).exp();
            assert!((heat_convolve(&g, x, t).unwrap() - exact).abs() < 1e-12);
        }
        assert!(heat_convolve(&g, 0.0, 0.0).is_err());
    }

    #[test]
    fn averages() {
        let g = BoundaryTrace::step(0.0, -1.0, 1.0).unwrap();
        assert_eq!(interval_average(&g, 3.0).unwrap(), 0.0);
        let h = BoundaryTrace::single(Segment::SmoothStep { x0: 2.0, width: 3.0, c_left: 0.0, c_right: 1.0 }).unwrap();
        match average_limit(&h).unwrap() {
            AverageLimit::Limit(v) => assert!((v - 0.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
