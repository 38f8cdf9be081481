//! Point checks: special functions, model residuals, the doubling
//! obstruction, kernel mass and the relaxation bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::report::{ExperimentReport, Samples};
use crate::domains::{DomainSpec, Point2, Rect};
use crate::error::Result;
use crate::fdsolver::{residual, Grid, GridFunction};
use crate::kernels::{self, BoundaryTrace, Piece, Segment};
use crate::models::{self, Point3, TiltedReaper};
use crate::quad::{integrate, QuadOptions};
use crate::specfun;

const ORACLE_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-15, max_panels: 4000 };

/// Fourth-order central estimate of `Δf + ∂₃f`.
pub fn fd_l(f: &dyn Fn(Point2) -> f64, p: Point2, h: f64) -> f64 {
    let d = |dx: f64, dy: f64| f(Point2::new(p.x2 + dx, p.x3 + dy));
    let c = f(p);
    let second = |a2: f64, a1: f64, m1: f64, m2: f64| (-a2 + 16.0 * a1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
    let uxx = second(d(2.0 * h, 0.0), d(h, 0.0), d(-h, 0.0), d(-2.0 * h, 0.0));
    let (n2, n1, s1, s2) = (d(0.0, 2.0 * h), d(0.0, h), d(0.0, -h), d(0.0, -2.0 * h));
    let uyy = second(n2, n1, s1, s2);
    let uy = (-n2 + 8.0 * n1 - 8.0 * s1 + s2) / (12.0 * h);
    uxx + uyy + uy
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecialFunctionsConfig {
    pub tol: f64,
    pub bound_points: usize,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for SpecialFunctionsConfig {
    fn default() -> Self {
        SpecialFunctionsConfig { tol: 1e-9, bound_points: 100, z_min: 1e-3, z_max: 1e3 }
    }
}

/// Library values at 1 (Ei at -1) against integral representations, and the
/// large-argument K1 bound on a log-spaced sweep.
pub fn run_special_functions(cfg: &SpecialFunctionsConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("special-functions");
    r.param("config", cfg);
    r.tolerance("tol", cfg.tol);
    r.tolerance("bound_violations_allowed", 0.0);

    let tmax = 8.0; // e^{-cosh 8} < 1e-600
    let k0_oracle = integrate(|t: f64| (-t.cosh()).exp(), 0.0, tmax, ORACLE_QUAD).value;
    let k1_oracle = integrate(|t: f64| (-t.cosh()).exp() * t.cosh(), 0.0, tmax, ORACLE_QUAD).value;
    let i0_oracle =
        integrate(|th: f64| th.cos().exp(), 0.0, std::f64::consts::PI, ORACLE_QUAD).value / std::f64::consts::PI;
    // E1(1) = ∫_0^1 e^{-1/s}/s ds after t = 1/s
    let e1_oracle = integrate(|s: f64| if s == 0.0 { 0.0 } else { (-1.0 / s).exp() / s }, 0.0, 1.0, ORACLE_QUAD).value;
    let checks = [
        ("k0", specfun::bessel_k0(1.0)?, k0_oracle),
        ("k1", specfun::bessel_k1(1.0)?, k1_oracle),
        ("i0", specfun::bessel_i0(1.0)?, i0_oracle),
        ("ei", specfun::expint_ei(-1.0)?, -e1_oracle),
    ];
    for (name, v, o) in checks {
        r.metric(&format!("{name}_value"), v);
        r.metric(&format!("{name}_oracle"), o);
        r.metric(&format!("{name}_abs_error"), (v - o).abs());
        r.verdict(&format!("{name}_matches_oracle"), (v - o).abs() <= cfg.tol, "tol");
    }

    let mut s = Samples::new(&["z", "k1_scaled", "deviation", "bound"]);
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    let n = cfg.bound_points.max(2);
    for i in 0..n {
        let z = cfg.z_min * (cfg.z_max / cfg.z_min).powf(i as f64 / (n - 1) as f64);
        let k1s = specfun::bessel_k1_scaled(z)?;
        let lead = (std::f64::consts::PI / (2.0 * z)).sqrt();
        let dev = (k1s - lead).abs();
        let bound = 0.375 / z * lead;
        worst = worst.max(dev / bound);
        if dev > bound {
            violations += 1;
        }
        s.push(vec![z, k1s, dev, bound]);
    }
    r.metric("k1_bound_violations", violations as f64);
    r.metric("k1_bound_worst_ratio", worst);
    r.verdict("k1_classical_bound", violations == 0, "bound_violations_allowed");
    r.add_samples("k1_bound", s);
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelResidualsConfig {
    pub seed: u64,
    pub probes: usize,
    pub fd_step: f64,
    pub tol_l: f64,
    pub tol_ei: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub grids: Vec<usize>,
}

impl Default for ModelResidualsConfig {
    fn default() -> Self {
        ModelResidualsConfig {
            seed: 20240611,
            probes: 25,
            fd_step: 1e-2,
            tol_l: 1e-5,
            tol_ei: 1e-6,
            order_min: 1.8,
            order_max: 2.2,
            grids: vec![65, 129, 257],
        }
    }
}

pub fn run_model_residuals(cfg: &ModelResidualsConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("model-residuals");
    r.param("config", cfg);
    r.tolerance("exact_zero", 0.0);
    r.tolerance("tol_l", cfg.tol_l);
    r.tolerance("tol_ei", cfg.tol_ei);
    r.tolerance("order_min", cfg.order_min);
    r.tolerance("order_max", cfg.order_max);

    // exact discrete solutions; dyadic coefficients keep the arithmetic exact
    let g = Arc::new(Grid::new(DomainSpec::WholePlane, Rect::new(-4.0, 4.0, -4.0, 4.0), 0.125)?);
    let mut plane_res: f64 = 0.0;
    for (a, b) in [(0.0, 0.0), (1.0, -2.0), (-0.375, 5.0), (12.5, 0.125)] {
        let pl = models::plane_solution(a, b);
        plane_res = plane_res.max(residual(&GridFunction::from_fn(g.clone(), |p| pl.eval(p))).max_abs());
    }
    let const_res = residual(&GridFunction::from_fn(g, |_| -3.75)).max_abs();
    r.metric("plane_residual", plane_res);
    r.metric("constant_residual", const_res);
    r.verdict("plane_residual_zero", plane_res == 0.0, "exact_zero");
    r.verdict("constant_residual_zero", const_res == 0.0, "exact_zero");

    // tilted reaper: residual of the sampled closed form under refinement
    let reaper = TiltedReaper::from_slope(1.0, Point2::new(0.0, 0.0))?;
    let mut s = Samples::new(&["n", "h", "residual"]);
    let mut res = Vec::new();
    for &n in &cfg.grids {
        let h = 3.0 / (n - 1) as f64;
        let grid = Arc::new(Grid::new(DomainSpec::WholePlane, Rect::new(-1.5, 1.5, 0.0, 3.0), h)?);
        let u = GridFunction::from_fn(grid, |p| reaper.eval(p).unwrap_or(f64::NAN));
        let m = residual(&u).max_abs();
        s.push(vec![n as f64, h, m]);
        res.push(m);
    }
    r.add_samples("reaper_refinement", s);
    let mut orders = Vec::new();
    for (i, w) in res.windows(2).enumerate() {
        let order = (w[0] / w[1]).log2();
        r.metric(&format!("reaper_order_{i}"), order);
        orders.push(order);
    }
    let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    r.verdict("reaper_order_at_least", !orders.is_empty() && lo >= cfg.order_min, "order_min");
    r.verdict("reaper_order_at_most", !orders.is_empty() && hi <= cfg.order_max, "order_max");

    // L-harmonic models at random probes
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = cfg.fd_step;
    let mut worst = [0.0f64; 4];
    let xp = Point2::new(0.4, -0.3);
    for _ in 0..cfg.probes {
        let alpha: f64 = rng.random_range(0.2..3.0);
        let x2: f64 = rng.random_range(-3.0..3.0);
        let p = Point2::new(x2, alpha * x2.abs() + rng.random_range(0.5..6.0));
        worst[0] = worst[0].max(fd_l(&|q| models::superbarrier_w(alpha, q).unwrap_or(f64::NAN), p, h).abs());
        let q = Point2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let q = if q.norm() < 0.5 { Point2::new(q.x2 + 1.0, q.x3) } else { q };
        worst[1] = worst[1].max(fd_l(&|z| models::u_k_eval(z).unwrap_or(f64::NAN), q, h).abs());
        worst[2] = worst[2].max(fd_l(&|z| models::u_i_eval(z).unwrap_or(f64::NAN), q, h).abs());
        let qg = if q.dist(xp) < 0.5 { Point2::new(q.x2 - 1.0, q.x3) } else { q };
        worst[3] = worst[3].max(fd_l(&|z| models::green_l(z, xp).unwrap_or(f64::NAN), qg, h).abs());
    }
    for (i, name) in ["superbarrier", "u_k", "u_i", "green_l"].iter().enumerate() {
        r.metric(&format!("{name}_max_abs_l"), worst[i]);
        r.verdict(&format!("{name}_l_harmonic"), worst[i] < cfg.tol_l, "tol_l");
    }

    // Ei barrier: L w = c_P / x3²
    let mut worst_ei: f64 = 0.0;
    for _ in 0..cfg.probes {
        let c_p: f64 = rng.random_range(0.1..4.0);
        let b: f64 = rng.random_range(-3.0..-0.5);
        let x3 = b - rng.random_range(0.5..60.0);
        let f = |z: Point2| models::ei_barrier(c_p, b, z.x3).unwrap_or(f64::NAN);
        let lw = fd_l(&f, Point2::new(0.0, x3), h);
        worst_ei = worst_ei.max((lw - c_p / (x3 * x3)).abs());
    }
    r.metric("ei_barrier_max_defect", worst_ei);
    r.verdict("ei_barrier_source", worst_ei < cfg.tol_ei, "tol_ei");
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoublingConfig {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub fd_tol: f64,
}

impl Default for DoublingConfig {
    fn default() -> Self {
        DoublingConfig { seed: 31337, points: 100, tol: 1e-10, fd_tol: 1e-6 }
    }
}

type Gamma = [[[f64; 3]; 3]; 3];

/// Christoffel symbols `Γ^k_ij` of `e^{x3}δ`, from fourth-order differences
/// of the metric itself.
fn christoffel_fd(x: [f64; 3], h: f64) -> Gamma {
    let metric = |y: [f64; 3]| y[2].exp();
    let mut dg = [0.0; 3]; // ∂_l of the conformal factor; g_ij = factor·δ_ij
    for (l, d) in dg.iter_mut().enumerate() {
        let at = |s: f64| {
            let mut y = x;
            y[l] += s;
            metric(y)
        };
        *d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
    }
    let inv = 1.0 / metric(x);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut g = [[[0.0; 3]; 3]; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        for (i, gki) in gk.iter_mut().enumerate() {
            for (j, v) in gki.iter_mut().enumerate() {
                *v = 0.5 * inv * (dg[i] * delta(j, k) + dg[j] * delta(i, k) - dg[k] * delta(i, j));
            }
        }
    }
    g
}

/// `Ric(ν,ν) + |A|²` for the vertical plane with horizontal normal angle
/// `theta`, assembled from numerically differentiated Christoffel symbols.
pub fn doubling_oracle(p: Point3, theta: f64) -> f64 {
    let x = [p.x1, p.x2, p.x3];
    let hg = 1e-3;
    let hr = 1e-2;
    let gam = christoffel_fd(x, hg);
    let dgam = |l: usize| -> Gamma {
        let at = |s: f64| {
            let mut y = x;
            y[l] += s;
            christoffel_fd(y, hg)
        };
        let (a2, a1, m1, m2) = (at(2.0 * hr), at(hr), at(-hr), at(-2.0 * hr));
        let mut out = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    out[k][i][j] = (-a2[k][i][j] + 8.0 * a1[k][i][j] - 8.0 * m1[k][i][j] + m2[k][i][j]) / (12.0 * hr);
                }
            }
        }
        out
    };
    let d: Vec<Gamma> = (0..3).map(dgam).collect();
    let mut ric = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += d[k][k][i][j] - d[j][k][i][k];
                for l in 0..3 {
                    v += gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][i][k];
                }
            }
            ric[i][j] = v;
        }
    }
    let n = [theta.cos(), theta.sin(), 0.0];
    let scale = (-p.x3).exp();
    let ric_nn: f64 =
        (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| ric[i][j] * n[i] * n[j]).sum::<f64>() * scale;
    let tangents = [[-theta.sin(), theta.cos(), 0.0], [0.0, 0.0, 1.0]];
    let mut a2 = 0.0;
    for ta in &tangents {
        for tb in &tangents {
            let mut comp = 0.0;
            for k in 0..3 {
                let mut gk = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        gk += gam[k][i][j] * ta[i] * tb[j];
                    }
                }
                comp += gk * n[k];
            }
            let a = -(-0.5 * p.x3).exp() * comp;
            a2 += a * a;
        }
    }
    ric_nn + a2
}

pub fn run_doubling(cfg: &DoublingConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("doubling-obstruction");
    r.param("config", cfg);
    r.tolerance("tol", cfg.tol);
    r.tolerance("fd_tol", cfg.fd_tol);
    r.tolerance("max_allowed", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let mut max_value = f64::NEG_INFINITY;
    let mut s = Samples::new(&["x1", "x2", "x3", "theta", "value", "expected", "fd_oracle"]);
    for _ in 0..cfg.points {
        let p = Point3 {
            x1: rng.random_range(-10.0..10.0),
            x2: rng.random_range(-10.0..10.0),
            x3: rng.random_range(-8.0..8.0),
        };
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let v = models::doubling_obstruction_with_normal(p, theta);
        let v0 = models::doubling_obstruction(p);
        let expected = -(-p.x3).exp() / 4.0;
        let fd = doubling_oracle(p, theta);
        worst = worst.max(((v - expected) / expected).abs()).max(((v0 - expected) / expected).abs());
        worst_fd = worst_fd.max(((fd - expected) / expected).abs());
        max_value = max_value.max(v).max(v0);
        s.push(vec![p.x1, p.x2, p.x3, theta, v, expected, fd]);
    }
    r.metric("max_rel_error", worst);
    r.metric("max_rel_error_fd_oracle", worst_fd);
    r.metric("max_value", max_value);
    r.verdict("matches_closed_form", worst <= cfg.tol, "tol");
    r.verdict("fd_oracle_agrees", worst_fd <= cfg.fd_tol, "fd_tol");
    r.verdict("negative_everywhere", max_value < 0.0, "max_allowed");
    r.add_samples("points", s);
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuffinMassConfig {
    pub depths: Vec<f64>,
    pub mass_tol: f64,
    pub step_depth: f64,
    pub step_tol: f64,
}

impl Default for DuffinMassConfig {
    fn default() -> Self {
        DuffinMassConfig { depths: vec![0.5, 1.0, 5.0, 25.0, 100.0], mass_tol: 1e-8, step_depth: 1e4, step_tol: 5e-2 }
    }
}

pub fn run_duffin_mass(cfg: &DuffinMassConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("duffin-mass");
    r.param("config", cfg);
    r.tolerance("mass_tol", cfg.mass_tol);
    r.tolerance("step_tol", cfg.step_tol);
    let mut s = Samples::new(&["t", "mass"]);
    let mut worst: f64 = 0.0;
    for &t in &cfg.depths {
        let m = kernels::duffin_kernel_mass(t)?;
        worst = worst.max((m - 1.0).abs());
        s.push(vec![t, m]);
    }
    r.metric("max_mass_error", worst);
    r.verdict("mass_is_one", worst <= cfg.mass_tol, "mass_tol");
    r.add_samples("mass", s);
    let step = BoundaryTrace::step(0.0, 0.0, 1.0)?;
    let v = kernels::poisson_duffin(&step, 0.0, Point2::new(0.0, -cfg.step_depth))?;
    r.metric("step_centerline", v);
    r.verdict("step_centerline_is_average", (v - 0.5).abs() <= cfg.step_tol, "step_tol");
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    pub seed: u64,
    pub traces: usize,
    pub depths: usize,
    pub max_depth: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig { seed: 5, traces: 50, depths: 10, max_depth: 100.0 }
    }
}

/// A bounded trace with a few random pieces of mixed type.
pub fn random_trace<R: Rng>(rng: &mut R) -> Result<BoundaryTrace> {
    let cuts = rng.random_range(0..4usize);
    let mut xs: Vec<f64> = (0..cuts).map(|_| rng.random_range(-20.0..20.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut pieces = Vec::new();
    for k in 0..=xs.len() {
        let from = if k == 0 { None } else { Some(xs[k - 1]) };
        let to = xs.get(k).copied();
        let bounded = from.is_some() && to.is_some();
        let center = match (from, to) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) => a + 3.0,
            (None, Some(b)) => b - 3.0,
            (None, None) => 0.0,
        };
        let kind = rng.random_range(0..if bounded { 7 } else { 6 });
        let amp = |rng: &mut R| rng.random_range(-1.0..1.0);
        let segment = match kind {
            0 => Segment::Constant { c: amp(rng) },
            1 => Segment::Step { x0: center + rng.random_range(-2.0..2.0), c_left: amp(rng), c_right: amp(rng) },
            2 => Segment::Bump { center, width: rng.random_range(0.3..5.0), height: amp(rng) },
            3 => Segment::SmoothStep {
                x0: center,
                width: rng.random_range(0.5..8.0),
                c_left: amp(rng),
                c_right: amp(rng),
            },
            4 => Segment::Sinusoid {
                mean: 0.5 * amp(rng),
                amplitude: 0.5 * amp(rng),
                period: rng.random_range(0.5..30.0),
                phase: rng.random_range(0.0..6.0),
            },
            5 => Segment::Sampled { points: (0..5).map(|i| [center + 2.0 * i as f64 - 4.0, amp(rng)]).collect() },
            _ => {
                let (a, b) = (from.unwrap(), to.unwrap());
                let (ya, yb) = (amp(rng), amp(rng));
                let slope = (yb - ya) / (b - a).max(1e-9);
                Segment::Affine { a: slope, b: ya - slope * a }
            }
        };
        pieces.push(Piece { from, to, segment });
    }
    BoundaryTrace::from_pieces(pieces, None)
}

pub fn run_relaxation(cfg: &RelaxationConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("relaxation");
    r.param("config", cfg);
    r.param("c0", kernels::RELAXATION_C0);
    r.tolerance("violations_allowed", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut violations = 0usize;
    let mut worst_ratio: f64 = 0.0;
    let mut s = Samples::new(&["trace", "x2", "x3", "duffin", "heat", "gap", "bound"]);
    for i in 0..cfg.traces {
        let trace = random_trace(&mut rng)?;
        for j in 0..cfg.depths {
            let t = cfg.max_depth.powf(j as f64 / (cfg.depths.max(2) - 1) as f64);
            let x2: f64 = rng.random_range(-10.0..10.0);
            let g = kernels::relaxation_gap(&trace, x2, -t)?;
            if !g.holds {
                violations += 1;
            }
            if g.bound > 0.0 {
                worst_ratio = worst_ratio.max(g.gap / g.bound);
            }
            s.push(vec![i as f64, x2, -t, g.duffin, g.heat, g.gap, g.bound]);
        }
    }
    r.metric("violations", violations as f64);
    r.metric("worst_gap_to_bound", worst_ratio);
    r.metric("probes", (cfg.traces * cfg.depths) as f64);
    r.verdict("bound_holds_everywhere", violations == 0, "violations_allowed");
    r.add_samples("probes", s);
    Ok(r)
}
