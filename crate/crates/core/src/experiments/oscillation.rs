//! Oscillation that survives at depth: persistence for step data and the
//! alternating construction whose heat evolution never settles.

use serde::{Deserialize, Serialize};

use super::fit::fit_decay_exponent;
use super::report::{ExperimentReport, Samples};
use crate::domains::Point2;
use crate::error::{config, Error, Result};
use crate::kernels::{self, BoundaryTrace, Piece, Segment, RELAXATION_C0};
use crate::models::BarrierReef;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillationPersistenceConfig {
    pub c_minus: f64,
    pub c_plus: f64,
    pub depths: Vec<f64>,
    /// Sampling half-width is `x_factor·ρ`.
    pub x_factor: f64,
    pub samples: usize,
    pub persist_tol: f64,
    pub window: f64,
    pub window_depths: Vec<f64>,
    pub window_exponent_max: f64,
}

impl Default for OscillationPersistenceConfig {
    fn default() -> Self {
        OscillationPersistenceConfig {
            c_minus: 0.0,
            c_plus: 1.0,
            depths: vec![1.0, 10.0, 100.0],
            x_factor: 100.0,
            samples: 201,
            persist_tol: 0.05,
            window: 1.0,
            window_depths: (3..=10).map(|k| 2f64.powi(k)).collect(),
            window_exponent_max: -0.4,
        }
    }
}

fn oscillation(trace: &BoundaryTrace, rho: f64, half: f64, n: usize) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let x = -half + 2.0 * half * i as f64 / (n - 1) as f64;
        let v = kernels::poisson_duffin(trace, 0.0, Point2::new(x, -rho))?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

pub fn run_oscillation_persistence(cfg: &OscillationPersistenceConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("oscillation-persistence");
    r.param("config", cfg);
    r.tolerance("persist_tol", cfg.persist_tol);
    r.tolerance("window_exponent_max", cfg.window_exponent_max);
    let trace = BoundaryTrace::step(0.0, cfg.c_minus, cfg.c_plus)?;
    let jump = (cfg.c_plus - cfg.c_minus).abs();
    let mut s = Samples::new(&["rho", "global_oscillation"]);
    let mut worst: f64 = 0.0;
    for &rho in &cfg.depths {
        let osc = oscillation(&trace, rho, cfg.x_factor * rho, cfg.samples)?;
        worst = worst.max((osc - jump).abs() / jump.max(1e-300));
        s.push(vec![rho, osc]);
    }
    r.add_samples("global", s);
    r.metric("worst_relative_deficit", worst);
    r.verdict("global_oscillation_persists", worst <= cfg.persist_tol, "persist_tol");

    let mut pts = Vec::new();
    let mut s = Samples::new(&["rho", "window_oscillation"]);
    for &rho in &cfg.window_depths {
        let osc = oscillation(&trace, rho, cfg.window, 21)?;
        pts.push((rho, osc));
        s.push(vec![rho, osc]);
    }
    r.add_samples("window", s);
    let e = fit_decay_exponent(&pts)?;
    r.metric("window_exponent", e);
    r.verdict("window_oscillation_decays", e <= cfg.window_exponent_max, "window_exponent_max");
    Ok(r)
}

// ---------------------------------------------------------------------------

/// `χ` with `erfc(χ) = ε/2`, by bisection.
pub fn chi_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 2.0) {
        return config(format!("chi_eps needs 0 < eps < 2, got {eps}"));
    }
    let target = 0.5 * eps;
    let (mut lo, mut hi) = (0.0f64, 30.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillationParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub eps1: f64,
    pub c_prime: f64,
    pub a0: f64,
    pub t0: f64,
    pub n_rounds: usize,
}

impl Default for OscillationParams {
    fn default() -> Self {
        OscillationParams { alpha: 0.0, beta: 1.0, eps: 0.05, eps1: 0.1, c_prime: 1.0, a0: 1.0, t0: 1.0, n_rounds: 2 }
    }
}

/// One round of the construction: level on `a_{k-1} < |x| ≤ a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub low: bool,
    pub level: f64,
    pub t: f64,
    pub a: f64,
    pub n_copies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatingData {
    pub params: OscillationParams,
    pub trace: BoundaryTrace,
    pub times_lo: Vec<f64>,
    pub times_hi: Vec<f64>,
    pub chi_eps: f64,
    pub rounds: Vec<Round>,
    pub reef_tau: f64,
    pub reef_zeta: f64,
    pub reef_depth: f64,
}

/// Alternating low/high plateaus whose widths grow so fast that the heat
/// solution at the round's time sees essentially one level.
pub fn build_oscillating_data(p: &OscillationParams) -> Result<OscillatingData> {
    if !(p.beta > p.alpha) || !p.alpha.is_finite() || !p.beta.is_finite() {
        return config("oscillating data needs alpha < beta");
    }
    if !(p.eps > 0.0 && p.eps < (p.beta - p.alpha) / 8.0) {
        return config(format!("eps = {} must lie in (0, (beta - alpha)/8)", p.eps));
    }
    if !(p.eps1 > 0.0 && p.a0 > 0.0 && p.t0 > 0.0 && p.c_prime > 0.0) {
        return config("eps1, a0, t0 and C' must be positive");
    }
    if p.n_rounds < 2 {
        return config("n_rounds must be at least 2");
    }
    let chi = chi_eps(p.eps)?;
    let reef = BarrierReef::new(1, p.eps1, p.eps, p.c_prime)?;
    let mut rounds = Vec::new();
    let mut t_prev = p.t0;
    let mut a_prev = p.a0;
    let mut a = vec![p.a0];
    for k in 1..=p.n_rounds {
        let t = t_prev.max(a_prev * a_prev / (p.eps * p.eps));
        let ak = chi * (4.0 * t).sqrt();
        if !ak.is_finite() || ak <= a_prev * (1.0 + p.eps) {
            return Err(Error::Overflow(format!("round {k} radius {ak} is not representable")));
        }
        let low = k % 2 == 1;
        let n_copies = (ak / reef.tau).ceil() as usize + 1;
        rounds.push(Round { index: k, low, level: if low { p.alpha } else { p.beta }, t, a: ak, n_copies });
        a.push(ak);
        t_prev = t;
        a_prev = ak;
    }
    let level = |k: usize| if k == 0 { p.beta } else { rounds[k - 1].level };
    // right half: plateau k on [a_{k-1}(1+ε), a_k), C∞ transition before it
    let mut right = Vec::new();
    for k in 1..=p.n_rounds {
        let start = a[k - 1];
        let end = start * (1.0 + p.eps);
        right.push(Piece {
            from: Some(start),
            to: Some(end),
            segment: Segment::SmoothStep {
                x0: 0.5 * (start + end),
                width: end - start,
                c_left: level(k - 1),
                c_right: level(k),
            },
        });
        let to = if k == p.n_rounds { None } else { Some(a[k]) };
        right.push(Piece { from: Some(end), to, segment: Segment::Constant { c: level(k) } });
    }
    let mut pieces: Vec<Piece> = right
        .iter()
        .rev()
        .map(|pc| Piece {
            from: pc.to.map(|x| -x),
            to: pc.from.map(|x| -x),
            segment: match pc.segment {
                Segment::SmoothStep { x0, width, c_left, c_right } => {
                    Segment::SmoothStep { x0: -x0, width, c_left: c_right, c_right: c_left }
                }
                ref s => s.clone(),
            },
        })
        .collect();
    pieces.push(Piece { from: Some(-p.a0), to: Some(p.a0), segment: Segment::Constant { c: p.beta } });
    pieces.extend(right);
    let last = level(p.n_rounds);
    let trace = BoundaryTrace::from_pieces(pieces, Some([last, last]))?;
    let times_lo = rounds.iter().filter(|r| r.low).map(|r| r.t).collect();
    let times_hi = rounds.iter().filter(|r| !r.low).map(|r| r.t).collect();
    Ok(OscillatingData {
        params: p.clone(),
        trace,
        times_lo,
        times_hi,
        chi_eps: chi,
        rounds,
        reef_tau: reef.tau,
        reef_zeta: reef.zeta,
        reef_depth: reef.depth_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub params: OscillationParams,
    /// Rounds at which the Duffin stage is evaluated (all when empty).
    pub duffin_rounds: Vec<usize>,
    pub control_tol: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig { params: OscillationParams::default(), duffin_rounds: Vec::new(), control_tol: 1e-8 }
    }
}

/// Heat and Duffin ladder inequalities for built data.
pub fn verify_oscillation(
    built: &OscillatingData,
    duffin_rounds: &[usize],
    control_tol: f64,
) -> Result<ExperimentReport> {
    let p = &built.params;
    let spanw = p.beta - p.alpha;
    let mut r = ExperimentReport::new("counterexample");
    r.tolerance("heat_margin", 2.0 * p.eps * spanw);
    r.tolerance("gap_min", (1.0 - 4.0 * p.eps) * spanw);
    r.tolerance("relaxation_c0", RELAXATION_C0);
    r.tolerance("control_tol", control_tol);
    r.tolerance("range_slack", 1e-12);
    r.metric("chi_eps", built.chi_eps);
    r.metric("reef_tau", built.reef_tau);
    r.metric("reef_zeta", built.reef_zeta);
    r.metric("reef_depth", built.reef_depth);

    // the data stays in [α, β]
    let mut lo_v = f64::INFINITY;
    let mut hi_v = f64::NEG_INFINITY;
    let bound = 2.0 * built.rounds.last().map_or(p.a0, |rd| rd.a);
    for x in built.trace.breakpoints(-bound, bound) {
        for dx in [-1e-9, 0.0, 1e-9] {
            let v = built.trace.eval(x * (1.0 + dx));
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
    }
    for pc in &built.trace.pieces {
        if let Segment::SmoothStep { x0, width, .. } = pc.segment {
            for i in 0..=64 {
                let v = built.trace.eval(x0 - 0.5 * width + width * i as f64 / 64.0);
                lo_v = lo_v.min(v);
                hi_v = hi_v.max(v);
            }
        }
    }
    r.verdict("data_in_range", lo_v >= p.alpha - 1e-12 && hi_v <= p.beta + 1e-12, "range_slack");

    let sup = built.trace.sup_norm();
    let mut s = Samples::new(&["round", "t", "a", "n_copies", "heat", "duffin", "relaxation"]);
    let mut heat_ok = true;
    let mut duffin_ok = true;
    let mut max_lo = f64::NEG_INFINITY;
    let mut min_hi = f64::INFINITY;
    for round in &built.rounds {
        let h = kernels::heat_convolve(&built.trace, 0.0, round.t)?;
        let relax = RELAXATION_C0 * sup / round.t.sqrt();
        let check_duffin = duffin_rounds.is_empty() || duffin_rounds.contains(&round.index);
        let d = if check_duffin {
            kernels::poisson_duffin(&built.trace, 0.0, Point2::new(0.0, -round.t))?
        } else {
            f64::NAN
        };
        if round.low {
            heat_ok &= h <= p.alpha + 2.0 * p.eps * spanw;
            if check_duffin {
                duffin_ok &= d <= p.alpha + 2.0 * p.eps * spanw + relax;
            }
            max_lo = max_lo.max(h);
        } else {
            heat_ok &= h >= p.beta - 2.0 * p.eps * spanw;
            if check_duffin {
                duffin_ok &= d >= p.beta - 2.0 * p.eps * spanw - relax;
            }
            min_hi = min_hi.min(h);
        }
        r.metric(&format!("round_{}_t", round.index), round.t);
        r.metric(&format!("round_{}_a", round.index), round.a);
        r.metric(&format!("round_{}_n_copies", round.index), round.n_copies as f64);
        r.metric(&format!("round_{}_heat", round.index), h);
        if check_duffin {
            r.metric(&format!("round_{}_duffin", round.index), d);
        }
        s.push(vec![round.index as f64, round.t, round.a, round.n_copies as f64, h, d, relax]);
    }
    r.add_samples("ladder", s);
    let gap = min_hi - max_lo;
    r.metric("heat_gap", gap);
    r.verdict("heat_ladder", heat_ok, "heat_margin");
    r.verdict("duffin_ladder", duffin_ok, "relaxation_c0");
    r.verdict("heat_gap", gap >= (1.0 - 4.0 * p.eps) * spanw, "gap_min");
    let covered = built.rounds.iter().all(|rd| rd.n_copies as f64 * built.reef_tau >= rd.a);
    r.verdict("reef_covers_rounds", covered, "range_slack");

    // control: constant data cannot separate the ladders
    let flat = BoundaryTrace::constant(p.beta)?;
    let vals: Vec<f64> =
        built.rounds.iter().map(|rd| kernels::heat_convolve(&flat, 0.0, rd.t)).collect::<Result<_>>()?;
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    r.metric("control_gap", hi - lo);
    r.verdict("control_no_separation", hi - lo < control_tol, "control_tol");
    Ok(r)
}

pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<ExperimentReport> {
    let built = build_oscillating_data(&cfg.params)?;
    let mut r = verify_oscillation(&built, &cfg.duffin_rounds, cfg.control_tol)?;
    r.param("config", cfg);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_values() {
        assert!((chi_eps(0.1).unwrap() - 1.386).abs() < 1e-3);
        assert!((libm::erfc(chi_eps(0.05).unwrap()) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn first_round_times() {
        let p = OscillationParams { eps: 0.1, ..Default::default() };
        let b = build_oscillating_data(&p).unwrap();
        assert!((b.rounds[0].t - 100.0).abs() < 1e-9);
        assert!((b.rounds[0].a - 20.0 * b.chi_eps).abs() < 1e-9);
        assert_eq!(b.rounds[0].n_copies, (b.rounds[0].a / b.reef_tau).ceil() as usize + 1);
        assert!(build_oscillating_data(&OscillationParams { eps: 0.2, ..Default::default() }).is_err());
        assert!(build_oscillating_data(&OscillationParams { n_rounds: 1, ..Default::default() }).is_err());
    }
}
