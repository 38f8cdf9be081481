//! Decay of the gradient, Hessian and nonlinear term away from the boundary.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::fit::{decay_fit, fit_decay_exponent};
use super::report::{ExperimentReport, Samples};
use crate::domains::{DomainSpec, Point2, Rect};
use crate::error::Result;
use crate::fdsolver::{solve_translator_report, DirichletData, Grid, GridFunction, NewtonConfig, NodeKind};
use crate::kernels::{self, BoundaryTrace, Piece, Segment};
use crate::models;

/// Per-distance maxima of `|∇u|`, `|Hess u|` and `|P|`.
#[derive(Debug, Clone, Default)]
pub struct DecayProfile {
    pub distance: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub p: Vec<f64>,
}

impl DecayProfile {
    fn window(&self, which: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.distance
            .iter()
            .zip(which)
            .filter(|(d, m)| **d >= lo - 1e-12 && **d <= hi + 1e-12 && **m > 0.0)
            .map(|(d, m)| (*d, *m))
            .collect()
    }

    fn samples(&self) -> Samples {
        let mut s = Samples::new(&["distance", "grad", "hess", "p"]);
        for i in 0..self.distance.len() {
            s.push(vec![self.distance[i], self.grad[i], self.hess[i], self.p[i]]);
        }
        s
    }
}

/// Bins interior nodes accepted by `keep` by `dist(node)` rounded to the grid
/// spacing and records the largest magnitudes per bin.
fn profile(u: &GridFunction, dist: impl Fn(Point2) -> f64, keep: impl Fn(Point2) -> bool) -> DecayProfile {
    let g = &u.grid;
    let mut bins: std::collections::BTreeMap<i64, [f64; 3]> = Default::default();
    for k in 0..g.len() {
        if g.kinds[k] != NodeKind::Interior {
            continue;
        }
        let p = g.point(k);
        if !keep(p) {
            continue;
        }
        let d = u.derivs(k).expect("interior");
        let key = (dist(p) / g.h).round() as i64;
        let e = bins.entry(key).or_insert([0.0; 3]);
        e[0] = e[0].max(d.grad_norm());
        e[1] = e[1].max(d.hess_norm());
        e[2] = e[2].max(d.p_term().abs());
    }
    let mut out = DecayProfile::default();
    for (key, v) in bins {
        if key <= 0 {
            continue;
        }
        out.distance.push(key as f64 * g.h);
        out.grad.push(v[0]);
        out.hess.push(v[1]);
        out.p.push(v[2]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpwardDecayConfig {
    pub h: f64,
    /// Half-opening of the wedge `{x3 > cot(θ)|x2|}` with apex at the origin.
    pub half_angle: f64,
    /// Box heights `H`; each box is `[-H/2, H/2] × [0, H]`.
    pub heights: Vec<f64>,
    /// Far-field level of the data.
    pub level: f64,
    pub data: BoundaryTrace,
    pub grad_window: FitWindow,
    pub hess_window: FitWindow,
    pub p_window: FitWindow,
    pub grad_max: f64,
    pub hess_max: f64,
    pub p_max: f64,
    pub monotone_slack: f64,
    pub newton: NewtonConfig,
}

fn perturbed_step() -> BoundaryTrace {
    BoundaryTrace::from_pieces(
        vec![
            Piece { from: None, to: Some(-1.0), segment: Segment::Constant { c: 0.0 } },
            Piece {
                from: Some(-1.0),
                to: Some(1.0),
                segment: Segment::Bump { center: -0.25, width: 0.7, height: 0.5 },
            },
            Piece {
                from: Some(1.0),
                to: None,
                segment: Segment::SmoothStep { x0: 2.0, width: 2.0, c_left: 0.0, c_right: 1.0 },
            },
        ],
        None,
    )
    .expect("valid trace")
}

impl Default for UpwardDecayConfig {
    fn default() -> Self {
        UpwardDecayConfig {
            h: 0.25,
            half_angle: std::f64::consts::FRAC_PI_3,
            heights: vec![16.0, 32.0, 64.0],
            level: 0.5,
            data: perturbed_step(),
            grad_window: FitWindow { lo: 1.0, hi: 8.0 },
            hess_window: FitWindow { lo: 1.0, hi: 8.0 },
            p_window: FitWindow { lo: 0.5, hi: 4.0 },
            grad_max: -0.85,
            hess_max: -1.7,
            p_max: -3.4,
            monotone_slack: 0.05,
            newton: NewtonConfig::default(),
        }
    }
}

fn record_exponents(
    r: &mut ExperimentReport,
    prof: &DecayProfile,
    windows: [&FitWindow; 3],
    prefix: &str,
) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, (name, series)) in [("grad", &prof.grad), ("hess", &prof.hess), ("p", &prof.p)].iter().enumerate() {
        let w = windows[i];
        let fit = decay_fit(&prof.window(series, w.lo, w.hi))?;
        r.metric(&format!("{prefix}{name}_exponent"), fit.slope);
        r.metric(&format!("{prefix}{name}_r2"), fit.r2);
        out[i] = fit.slope;
    }
    Ok(out)
}

/// `headline` holds the exponents of the largest truncation; `common` the
/// exponents of every truncation fitted on one shared window.
fn record_verdicts(r: &mut ExperimentReport, headline: [f64; 3], common: &[[f64; 3]], maxes: [f64; 3], slack: f64) {
    for (i, name) in ["grad", "hess", "p"].iter().enumerate() {
        r.metric(&format!("{name}_exponent"), headline[i]);
        r.verdict(&format!("{name}_decay"), headline[i] <= maxes[i], &format!("{name}_max"));
        let monotone = common.windows(2).all(|w| w[1][i] <= w[0][i] + slack);
        r.verdict(&format!("{name}_monotone_in_truncation"), monotone, "monotone_slack");
    }
}

/// Nested wedge truncations with data relaxing to a plane at infinity.
pub fn run_upward_decay(cfg: &UpwardDecayConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("decay-upward");
    r.param("config", cfg);
    for (k, v) in [
        ("grad_max", cfg.grad_max),
        ("hess_max", cfg.hess_max),
        ("p_max", cfg.p_max),
        ("monotone_slack", cfg.monotone_slack),
    ] {
        r.tolerance(k, v);
    }
    let domain = DomainSpec::Wedge { apex: Point2::new(0.0, 0.0), half_angle: cfg.half_angle };
    let level = cfg.level;
    let phi = cfg.data.clone();
    let data = DirichletData::field(move |p: Point2| level + (-p.x3).exp() * (phi.eval(p.x2) - level));
    let mut exps = Vec::new();
    for (n, &hgt) in cfg.heights.iter().enumerate() {
        let rect = Rect::new(-hgt / 2.0, hgt / 2.0, 0.0, hgt);
        let grid = Arc::new(Grid::new(domain, rect, cfg.h)?);
        let rep = solve_translator_report(&grid, &data, &cfg.newton)?;
        let (s, c) = (cfg.half_angle.sin(), cfg.half_angle.cos());
        // distance to the nearer arm of {x3 = α|x2|}
        let dist = move |p: Point2| (p.x3 * s - p.x2.abs() * c).max(0.0);
        let prof = profile(&rep.solution, dist, |p| p.x2.abs() <= hgt / 4.0 && p.x3 <= 0.75 * hgt);
        let prefix = format!("t{n}_");
        exps.push(record_exponents(&mut r, &prof, [&cfg.grad_window, &cfg.hess_window, &cfg.p_window], &prefix)?);
        r.metric(&format!("{prefix}newton_iterations"), (rep.residual_history.len() - 1) as f64);
        r.metric(&format!("{prefix}final_residual"), *rep.residual_history.last().unwrap());
        r.metric(&format!("{prefix}max_principle_excess"), rep.max_principle_excess);
        r.metric(&format!("{prefix}nodes"), grid.len() as f64);
        r.add_samples(&format!("profile_t{n}"), prof.samples());
    }
    let last = exps.last().copied().unwrap_or([f64::NAN; 3]);
    record_verdicts(&mut r, last, &exps, [cfg.grad_max, cfg.hess_max, cfg.p_max], cfg.monotone_slack);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralDecayConfig {
    pub h: f64,
    /// Box depths `D`; each box is `[-D/2, D/2] × [-D, 0]`.
    pub depths: Vec<f64>,
    pub data: BoundaryTrace,
    /// Rows closer than this to the bottom of a box are not fitted.
    pub bottom_margin: f64,
    /// Fit windows are `[d_hi/ratio, d_hi]` with `d_hi = D - bottom_margin`.
    /// Monotonicity in truncation is judged on the first box's window.
    pub window_ratio: f64,
    pub grad_max: f64,
    pub hess_max: f64,
    pub p_max: f64,
    pub monotone_slack: f64,
    pub control_window: FitWindow,
    pub control_target: f64,
    pub control_tol: f64,
    pub newton: NewtonConfig,
}

impl Default for GeneralDecayConfig {
    fn default() -> Self {
        GeneralDecayConfig {
            h: 0.5,
            depths: vec![32.0, 64.0, 128.0],
            data: BoundaryTrace::single(Segment::SmoothStep { x0: 0.0, width: 2.0, c_left: 0.0, c_right: 1.0 })
                .expect("valid"),
            bottom_margin: 24.0,
            window_ratio: 8.0,
            grad_max: -0.4,
            hess_max: -0.85,
            p_max: -1.7,
            monotone_slack: 0.05,
            control_window: FitWindow { lo: 10.0, hi: 100.0 },
            control_target: -0.5,
            control_tol: 0.05,
            newton: NewtonConfig::default(),
        }
    }
}

/// Nested lower half-plane truncations; sides and bottom carry the
/// L-harmonic extension of the top data.
pub fn run_general_decay(cfg: &GeneralDecayConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("decay-general");
    r.param("config", cfg);
    for (k, v) in [
        ("grad_max", cfg.grad_max),
        ("hess_max", cfg.hess_max),
        ("p_max", cfg.p_max),
        ("monotone_slack", cfg.monotone_slack),
        ("control_tol", cfg.control_tol),
    ] {
        r.tolerance(k, v);
    }
    let domain = DomainSpec::LowerHalfPlane { b: 0.0 };
    let mut exps = Vec::new();
    let mut common = Vec::new();
    let hi0 = cfg.depths.first().copied().unwrap_or(0.0) - cfg.bottom_margin;
    let shared = FitWindow { lo: hi0 / cfg.window_ratio, hi: hi0 };
    for (n, &depth) in cfg.depths.iter().enumerate() {
        let rect = Rect::new(-depth / 2.0, depth / 2.0, -depth, 0.0);
        let grid = Arc::new(Grid::new(domain, rect, cfg.h)?);
        let mut vals = vec![f64::NAN; grid.len()];
        for k in 0..grid.len() {
            if grid.kinds[k] == NodeKind::Boundary {
                let p = grid.point(k);
                vals[k] =
                    if p.x3 >= -1e-12 { cfg.data.eval(p.x2) } else { kernels::poisson_duffin(&cfg.data, 0.0, p)? };
            }
        }
        let lookup = Arc::new((grid.clone(), vals));
        let data = DirichletData::field(move |p: Point2| {
            let (g, v) = &*lookup;
            g.nearest(p).map_or(f64::NAN, |k| v[k])
        });
        let rep = solve_translator_report(&grid, &data, &cfg.newton)?;
        let prof = profile(&rep.solution, |p| -p.x3, |p| p.x2.abs() <= depth / 4.0);
        let hi = depth - cfg.bottom_margin;
        let w = FitWindow { lo: hi / cfg.window_ratio, hi };
        let prefix = format!("t{n}_");
        exps.push(record_exponents(&mut r, &prof, [&w, &w, &w], &prefix)?);
        common.push(record_exponents(&mut r, &prof, [&shared, &shared, &shared], &format!("{prefix}shared_"))?);
        r.metric(&format!("{prefix}newton_iterations"), (rep.residual_history.len() - 1) as f64);
        r.metric(&format!("{prefix}final_residual"), *rep.residual_history.last().unwrap());
        r.metric(&format!("{prefix}max_principle_excess"), rep.max_principle_excess);
        r.metric(&format!("{prefix}nodes"), grid.len() as f64);
        r.add_samples(&format!("profile_t{n}"), prof.samples());
    }
    let last = exps.last().copied().unwrap_or([f64::NAN; 3]);
    record_verdicts(&mut r, last, &common, [cfg.grad_max, cfg.hess_max, cfg.p_max], cfg.monotone_slack);

    // u_K straight down: the sharp rate
    let (samples, grad_samples) = uk_straight_down(&cfg.control_window, 19)?;
    let e = fit_decay_exponent(&samples)?;
    let eg = fit_decay_exponent(&grad_samples)?;
    r.metric("uk_exponent", e);
    r.metric("uk_gradient_exponent", eg);
    r.verdict("uk_control_sharp", (e - cfg.control_target).abs() <= cfg.control_tol, "control_tol");
    let mut s = Samples::new(&["r", "abs_uk", "abs_grad_uk"]);
    for (a, b) in samples.iter().zip(&grad_samples) {
        s.push(vec![a.0, a.1, b.1]);
    }
    r.add_samples("uk_control", s);
    Ok(r)
}

type Ladder = Vec<(f64, f64)>;

/// `|u_K|` and `|∂₃u_K|` at `(0, -r)` on a log-spaced ladder.
pub fn uk_straight_down(w: &FitWindow, n: usize) -> Result<(Ladder, Ladder)> {
    let mut vals = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    for i in 0..n {
        let r = w.lo * (w.hi / w.lo).powf(i as f64 / (n - 1) as f64);
        let v = models::u_k_eval(Point2::new(0.0, -r))?;
        // e^{r/2}K0(r/2) has derivative ½e^{r/2}(K0 - K1)(r/2) in r
        let k0s = crate::specfun::bessel_k0_scaled(0.5 * r)?;
        let k1s = crate::specfun::bessel_k1_scaled(0.5 * r)?;
        vals.push((r, v.abs()));
        grads.push((r, (0.5 * (k0s - k1s)).abs()));
    }
    Ok((vals, grads))
}
