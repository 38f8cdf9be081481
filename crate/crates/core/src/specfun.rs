//! Modified Bessel functions K0, K1, I0 and the exponential integral Ei on
//! the negative axis.
//!
//! Small arguments use the ascending series. For K0/K1 above `KN_SEAM` the
//! Steed/Temme continued fraction is used; it converges quickly there and
//! yields the exponentially scaled values directly. I0 switches to its
//! asymptotic expansion above `I0_SEAM`. Ei uses the E1 series for |x| <= 1
//! and a Lentz continued fraction beyond.

use crate::error::{domain, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = f64::EPSILON;
const KN_SEAM: f64 = 2.0;
const I0_SEAM: f64 = 20.0;
const I0_MAX: f64 = 700.0;
const EI_MIN: f64 = -700.0;
const MAX_TERMS: usize = 500;

/// A function value with an a-posteriori bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunResult {
    pub value: f64,
    pub est_abs_error: f64,
}

impl SpecFunResult {
    fn new(value: f64, est_abs_error: f64) -> Self {
        SpecFunResult { value, est_abs_error }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return domain(format!("{name}: argument must be finite and > 0, got {x}"));
    }
    Ok(())
}

/// Ascending series for I0 and I1; returns (I0, I1, sum of |terms| for I0).
fn i0_i1_series(x: f64) -> (f64, f64, f64) {
    let q = 0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let mut s0 = t0;
    let mut s1 = t1;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < EPS * s0 && t1 < EPS * s1 {
            break;
        }
    }
    (s0, s1, s0)
}

/// K0 and K1 by the ascending series, valid for small x.
fn k01_series(x: f64) -> (SpecFunResult, SpecFunResult) {
    let (i0, i1, _) = i0_i1_series(x);
    let q = 0.25 * x * x;
    let lx = (0.5 * x).ln();

    // K0 = -(ln(x/2) + γ) I0 + Σ H_k q^k / (k!)²
    let lead0 = -(lx + EULER_GAMMA) * i0;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum0 = 0.0;
    let mut abs0 = lead0.abs();

    // K1 = 1/x + ln(x/2) I1 - (x/4) Σ (ψ(k+1) + ψ(k+2)) q^k / (k!(k+1)!)
    let mut term1 = 1.0;
    let mut psi_k1 = -EULER_GAMMA;
    let mut sum1 = 0.0;
    let mut abs1 = 1.0 / x + (lx * i1).abs();

    for k in 0..MAX_TERMS {
        let kf = k as f64;
        if k > 0 {
            term *= q / (kf * kf);
            harmonic += 1.0 / kf;
            term1 *= q / (kf * (kf + 1.0));
            psi_k1 += 1.0 / kf;
        }
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        let a0 = harmonic * term;
        let a1 = (psi_k1 + psi_k2) * term1;
        sum0 += a0;
        sum1 += a1;
        abs0 += a0.abs();
        abs1 += 0.25 * x * a1.abs();
        if k > 0 && a0.abs() < EPS * sum0.abs().max(1e-300) && a1.abs() < EPS * sum1.abs() {
            break;
        }
    }
    let k0 = lead0 + sum0;
    let k1 = 1.0 / x + lx * i1 - 0.25 * x * sum1;
    (SpecFunResult::new(k0, 4.0 * EPS * abs0), SpecFunResult::new(k1, 4.0 * EPS * abs1))
}

/// Steed's continued fraction (Temme's method at order zero). Returns
/// e^x K0(x), e^x K1(x) and the number of iterations used.
fn k01_scaled_cf(x: f64) -> (f64, f64, usize) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut iters = 0;
    for i in 2..MAX_TERMS * 20 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        iters = i;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0s = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1s = k0s * (x + 0.5 - h) / x;
    (k0s, k1s, iters)
}

fn k01_scaled(x: f64) -> (SpecFunResult, SpecFunResult) {
    if x < KN_SEAM {
        let (k0, k1) = k01_series(x);
        let e = x.exp();
        (
            SpecFunResult::new(k0.value * e, k0.est_abs_error * e + EPS * (k0.value * e).abs()),
            SpecFunResult::new(k1.value * e, k1.est_abs_error * e + EPS * (k1.value * e).abs()),
        )
    } else {
        let (k0s, k1s, _) = k01_scaled_cf(x);
        (SpecFunResult::new(k0s, 16.0 * EPS * k0s), SpecFunResult::new(k1s, 16.0 * EPS * k1s))
    }
}

fn unscale(r: SpecFunResult, x: f64) -> SpecFunResult {
    let e = (-x).exp();
    SpecFunResult::new(r.value * e, r.est_abs_error * e)
}

/// K0(x) with an error estimate.
pub fn bessel_k0_result(x: f64) -> Result<SpecFunResult> {
    check_positive("bessel_k0", x)?;
    if x < KN_SEAM {
        return Ok(k01_series(x).0);
    }
    Ok(unscale(k01_scaled(x).0, x))
}

/// K1(x) with an error estimate.
pub fn bessel_k1_result(x: f64) -> Result<SpecFunResult> {
    check_positive("bessel_k1", x)?;
    if x < KN_SEAM {
        return Ok(k01_series(x).1);
    }
    Ok(unscale(k01_scaled(x).1, x))
}

/// Modified Bessel function of the second kind, order zero.
pub fn bessel_k0(x: f64) -> Result<f64> {
    bessel_k0_result(x).map(|r| r.value)
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64> {
    bessel_k1_result(x).map(|r| r.value)
}

/// e^x K0(x); finite for all x > 0, no overflow or underflow for large x.
pub fn bessel_k0_scaled(x: f64) -> Result<f64> {
    check_positive("bessel_k0_scaled", x)?;
    Ok(k01_scaled(x).0.value)
}

/// e^x K1(x).
pub fn bessel_k1_scaled(x: f64) -> Result<f64> {
    check_positive("bessel_k1_scaled", x)?;
    Ok(k01_scaled(x).1.value)
}

fn i0_asymptotic_scaled(x: f64) -> (f64, f64) {
    // e^{-x} I0(x) ~ (2πx)^{-1/2} Σ ((2k-1)!!)² / (k! (8x)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < EPS * sum {
            break;
        }
    }
    let pref = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
    (pref * sum, pref * (term + 4.0 * EPS * sum))
}

/// I0(x) with an error estimate.
pub fn bessel_i0_result(x: f64) -> Result<SpecFunResult> {
    if !x.is_finite() || x < 0.0 {
        return domain(format!("bessel_i0: argument must be finite and >= 0, got {x}"));
    }
    if x > I0_MAX {
        return Err(Error::Overflow(format!("bessel_i0: argument {x} exceeds {I0_MAX}")));
    }
    if x <= I0_SEAM {
        let (s, _, abs) = i0_i1_series(x);
        return Ok(SpecFunResult::new(s, 4.0 * EPS * abs));
    }
    let (s, err) = i0_asymptotic_scaled(x);
    let e = x.exp();
    Ok(SpecFunResult::new(s * e, err * e + 2.0 * EPS * s * e))
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> Result<f64> {
    bessel_i0_result(x).map(|r| r.value)
}

/// e^z E1(z) for z > 0, with an error estimate.
fn e1_scaled(z: f64) -> (f64, f64) {
    if z <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut abs = 0.0;
        for k in 1..MAX_TERMS {
            let kf = k as f64;
            term *= -z / kf;
            let a = -term / kf;
            sum += a;
            abs += a.abs();
            if a.abs() < EPS * sum.abs() {
                break;
            }
        }
        let e1 = -EULER_GAMMA - z.ln() + sum;
        let abs_all = EULER_GAMMA + z.ln().abs() + abs;
        let ez = z.exp();
        (e1 * ez, 4.0 * EPS * abs_all * ez)
    } else {
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_TERMS * 20 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        (h, 8.0 * EPS * h)
    }
}

/// Ei(x) for x < 0, with an error estimate.
pub fn expint_ei_result(x: f64) -> Result<SpecFunResult> {
    if !x.is_finite() || x >= 0.0 {
        return domain(format!("expint_ei: argument must be finite and < 0, got {x}"));
    }
    if x < EI_MIN {
        return Err(Error::Underflow(format!("expint_ei: Ei({x}) underflows; use expint_ei_scaled")));
    }
    let (s, err) = e1_scaled(-x);
    let e = x.exp();
    Ok(SpecFunResult::new(-s * e, err * e))
}

/// Exponential integral Ei(x) = -∫_{-x}^∞ e^{-t}/t dt on the negative axis.
pub fn expint_ei(x: f64) -> Result<f64> {
    expint_ei_result(x).map(|r| r.value)
}

/// e^{-x} Ei(x) for x < 0; finite and well scaled for arbitrarily negative x.
pub fn expint_ei_scaled(x: f64) -> Result<f64> {
    if !x.is_finite() || x >= 0.0 {
        return domain(format!("expint_ei_scaled: argument must be finite and < 0, got {x}"));
    }
    Ok(-e1_scaled(-x).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn reference_values() {
        assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_34).abs() < 1e-15);
        assert!((bessel_k1(1.0).unwrap() - 0.601_907_230_197_234_6).abs() < 1e-15);
        assert!((bessel_i0(1.0).unwrap() - 1.266_065_877_752_008_3).abs() < 1e-15);
        assert!((expint_ei(-1.0).unwrap() + 0.219_383_934_395_520_3).abs() < 1e-15);
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
    }

    #[test]
    fn seams_are_continuous() {
        let lo = k01_series(KN_SEAM);
        let (k0s, k1s, _) = k01_scaled_cf(KN_SEAM);
        let e = (-KN_SEAM).exp();
        assert!(rel(lo.0.value, k0s * e) < 1e-13, "K0 seam");
        assert!(rel(lo.1.value, k1s * e) < 1e-13, "K1 seam");
        let (s, _, _) = i0_i1_series(I0_SEAM);
        let (a, _) = i0_asymptotic_scaled(I0_SEAM);
        assert!(rel(s, a * I0_SEAM.exp()) < 1e-13);
        let below = expint_ei(-1.0 + 1e-15).unwrap();
        let above = expint_ei(-1.0 - 1e-15).unwrap();
        assert!((below - above).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_k0(0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k1(-1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k0(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_i0(-0.1), Err(Error::Domain(_))));
        assert!(matches!(bessel_i0(700.5), Err(Error::Overflow(_))));
        assert!(matches!(expint_ei(0.0), Err(Error::Domain(_))));
        assert!(matches!(expint_ei(-800.0), Err(Error::Underflow(_))));
        assert!(expint_ei_scaled(-1e6).unwrap() < 0.0);
    }

    #[test]
    fn scaled_large_arguments() {
        // e^x K0(x) -> sqrt(pi / 2x)
        let x = 1e6;
        let r = bessel_k0_scaled(x).unwrap() / (std::f64::consts::PI / (2.0 * x)).sqrt();
        assert!((r - 1.0).abs() < 1e-6);
        // e^{-x} Ei(x) ~ 1/x
        let x = -1e6;
        assert!((expint_ei_scaled(x).unwrap() * x - 1.0).abs() < 1e-5);
    }

    #[test]
    fn error_estimates_are_small() {
        let mut x = 1e-8;
        while x < 700.0 {
            for r in [bessel_k0_result(x), bessel_k1_result(x), bessel_i0_result(x)] {
                let r = r.unwrap();
                assert!(r.value.is_finite());
                assert!(r.est_abs_error <= 1e-12 * r.value.abs().max(1.0), "x={x} {r:?}");
            }
            let r = expint_ei_result(-x).unwrap();
            assert!(r.est_abs_error <= 1e-12 * r.value.abs().max(1.0));
            x *= 1.37;
        }
    }
}
