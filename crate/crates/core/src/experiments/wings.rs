//! Wing bookkeeping for translators in a slab, and ray-by-ray limits of
//! composite graphs.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use crate::error::{config, Result};

const OFFSET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Wing {
    /// Asymptotic to the vertical planes at the given offsets above and below.
    Planar { side: Side, upper_offset: f64, lower_offset: f64 },
    /// Grim reaper wing asymptotic to the planes at `kappa` and `rho`.
    Reaper { side: Side, width: f64, kappa: f64, rho: f64 },
}

impl Wing {
    fn side(&self) -> Side {
        match self {
            Wing::Planar { side, .. } | Wing::Reaper { side, .. } => *side,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingConfiguration {
    pub slab_halfwidth: f64,
    pub wings: Vec<Wing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub offset: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfiguration {
    pub entropy: usize,
    pub up: Vec<Multiplicity>,
    pub down: Vec<Multiplicity>,
}

/// Sorted offsets merged into multiplicities.
pub fn multiset(mut xs: Vec<f64>) -> Vec<Multiplicity> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<Multiplicity> = Vec::new();
    for x in xs {
        match out.last_mut() {
            Some(m) if (x - m.offset).abs() <= OFFSET_TOL => m.multiplicity += 1,
            _ => out.push(Multiplicity { offset: x, multiplicity: 1 }),
        }
    }
    out
}

pub fn same_multiset(a: &[Multiplicity], b: &[Multiplicity], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| x.multiplicity == y.multiplicity && (x.offset - y.offset).abs() <= tol)
}

fn upper_offsets(wings: &[Wing], side: Side) -> Vec<f64> {
    let mut out = Vec::new();
    for w in wings.iter().filter(|w| w.side() == side) {
        match *w {
            Wing::Planar { upper_offset, .. } => out.push(upper_offset),
            Wing::Reaper { kappa, rho, .. } => {
                out.push(kappa);
                out.push(rho);
            }
        }
    }
    out
}

fn lower_offsets(wings: &[Wing], side: Side) -> Vec<f64> {
    let mut out: Vec<f64> = wings
        .iter()
        .filter(|w| w.side() == side)
        .filter_map(|w| match *w {
            Wing::Planar { lower_offset, .. } => Some(lower_offset),
            Wing::Reaper { .. } => None,
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Entropy and the offsets of the planes seen far above and far below.
pub fn predict_limit_configuration(cfg: &WingConfiguration) -> Result<LimitConfiguration> {
    let w = cfg.slab_halfwidth;
    if !(w > 0.0 && w.is_finite()) {
        return config("slab half-width must be positive and finite");
    }
    let in_slab = |x: f64| x.is_finite() && x.abs() <= w + OFFSET_TOL;
    let mut planar = [0usize; 2];
    let mut reapers = 0usize;
    for wing in &cfg.wings {
        let s = wing.side() as usize;
        match *wing {
            Wing::Planar { upper_offset, lower_offset, .. } => {
                if !in_slab(upper_offset) || !in_slab(lower_offset) {
                    return config("planar wing offset outside the slab");
                }
                planar[s] += 1;
            }
            Wing::Reaper { width, kappa, rho, .. } => {
                if !in_slab(kappa) || !in_slab(rho) {
                    return config("reaper wing offset outside the slab");
                }
                if (kappa - rho).abs() <= OFFSET_TOL {
                    return config("reaper wing needs distinct asymptotic planes");
                }
                if !(width >= PI - OFFSET_TOL) || ((rho - kappa).abs() - width).abs() > 1e-9 * width.max(1.0) {
                    return config(format!("reaper wing width {width} must be at least pi and equal |rho - kappa|"));
                }
                reapers += 1;
            }
        }
    }
    let omega_p = planar[0] + planar[1];
    if omega_p % 2 != 0 {
        return config("odd number of planar wings");
    }
    if planar[0] != planar[1] {
        return config("planar wings are unevenly split between the sides");
    }
    let up = multiset(upper_offsets(&cfg.wings, Side::Left));
    let up_right = multiset(upper_offsets(&cfg.wings, Side::Right));
    if !same_multiset(&up, &up_right, OFFSET_TOL) {
        return config("left and right wings see different planes above");
    }
    let lo_l = lower_offsets(&cfg.wings, Side::Left);
    let lo_r = lower_offsets(&cfg.wings, Side::Right);
    let down = multiset(lo_l.iter().zip(&lo_r).map(|(a, b)| 0.5 * (a + b)).collect());
    Ok(LimitConfiguration { entropy: (omega_p + 2 * reapers) / 2, up, down })
}

pub fn grim_reaper_configuration() -> WingConfiguration {
    let (k, r) = (-FRAC_PI_2, FRAC_PI_2);
    WingConfiguration {
        slab_halfwidth: 2.0,
        wings: vec![
            Wing::Reaper { side: Side::Left, width: PI, kappa: k, rho: r },
            Wing::Reaper { side: Side::Right, width: PI, kappa: k, rho: r },
        ],
    }
}

pub fn pitchfork_configuration() -> WingConfiguration {
    let mut wings = Vec::new();
    for side in [Side::Left, Side::Right] {
        wings.push(Wing::Reaper { side, width: 4.0, kappa: -2.0, rho: 2.0 });
        wings.push(Wing::Planar { side, upper_offset: 0.0, lower_offset: 0.0 });
    }
    WingConfiguration { slab_halfwidth: 3.0, wings }
}

/// A random admissible configuration together with its known answer.
pub fn random_configuration(rng: &mut ChaCha8Rng) -> (WingConfiguration, LimitConfiguration) {
    let w: f64 = 4.0 + 0.5 * rng.random_range(0..17) as f64;
    // offsets on a half-integer lattice so coincidences happen
    let lattice = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
        let n = ((hi - lo) / 0.5).floor() as i64;
        lo + 0.5 * rng.random_range(0..=n) as f64
    };
    let n_reapers = rng.random_range(0..=2usize);
    let n_planar = if n_reapers == 0 { rng.random_range(1..=3usize) } else { rng.random_range(0..=3usize) };
    let mut wings = Vec::new();
    let mut up = Vec::new();
    let mut down = Vec::new();
    for _ in 0..n_reapers {
        let kappa = lattice(rng, -w, w - 3.5);
        let rho = lattice(rng, kappa + 3.5, w);
        up.push(kappa);
        up.push(rho);
        for side in [Side::Left, Side::Right] {
            wings.push(Wing::Reaper { side, width: rho - kappa, kappa, rho });
        }
    }
    // lower offsets split symmetrically about the truth; equal truths get equal splits
    let split = |d: f64| 0.05 * (1 + ((2.0 * d).round() as i64).rem_euclid(3)) as f64;
    for _ in 0..n_planar {
        let u = lattice(rng, -w, w);
        let d = lattice(rng, -w + 0.25, w - 0.25);
        up.push(u);
        down.push(d);
        wings.push(Wing::Planar { side: Side::Left, upper_offset: u, lower_offset: d - split(d) });
        wings.push(Wing::Planar { side: Side::Right, upper_offset: u, lower_offset: d + split(d) });
    }
    wings.shuffle(rng);
    let truth = LimitConfiguration { entropy: n_planar + 2 * n_reapers, up: multiset(up), down: multiset(down) };
    (WingConfiguration { slab_halfwidth: w, wings }, truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitConfigurationConfig {
    pub seed: u64,
    pub n_random: usize,
    pub offset_tol: f64,
}

impl Default for LimitConfigurationConfig {
    fn default() -> Self {
        LimitConfigurationConfig { seed: 7, n_random: 20, offset_tol: 1e-9 }
    }
}

pub fn run_limit_configuration(cfg: &LimitConfigurationConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("limit-configuration");
    r.param("config", cfg);
    r.tolerance("offset_tol", cfg.offset_tol);
    let matches = |a: &LimitConfiguration, b: &LimitConfiguration| {
        a.entropy == b.entropy
            && same_multiset(&a.up, &b.up, cfg.offset_tol)
            && same_multiset(&a.down, &b.down, cfg.offset_tol)
    };

    let reaper = predict_limit_configuration(&grim_reaper_configuration())?;
    let reaper_truth = LimitConfiguration { entropy: 2, up: multiset(vec![-FRAC_PI_2, FRAC_PI_2]), down: Vec::new() };
    r.verdict("grim_reaper_fixture", matches(&reaper, &reaper_truth), "offset_tol");

    let fork = predict_limit_configuration(&pitchfork_configuration())?;
    let fork_truth = LimitConfiguration { entropy: 3, up: multiset(vec![-2.0, 0.0, 2.0]), down: multiset(vec![0.0]) };
    r.verdict("pitchfork_fixture", matches(&fork, &fork_truth), "offset_tol");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut hits = 0usize;
    for _ in 0..cfg.n_random {
        let (wc, truth) = random_configuration(&mut rng);
        if let Ok(pred) = predict_limit_configuration(&wc) {
            if matches(&pred, &truth) {
                hits += 1;
            }
        }
    }
    r.metric("random_matches", hits as f64);
    r.metric("random_total", cfg.n_random as f64);
    r.verdict("random_configurations", hits == cfg.n_random, "offset_tol");

    let bad = [
        WingConfiguration {
            slab_halfwidth: 2.0,
            wings: vec![Wing::Planar { side: Side::Left, upper_offset: 0.0, lower_offset: 0.0 }],
        },
        WingConfiguration {
            slab_halfwidth: 2.0,
            wings: vec![
                Wing::Reaper { side: Side::Left, width: 2.0, kappa: -1.0, rho: 1.0 },
                Wing::Reaper { side: Side::Right, width: 2.0, kappa: -1.0, rho: 1.0 },
            ],
        },
        WingConfiguration {
            slab_halfwidth: 1.0,
            wings: vec![
                Wing::Planar { side: Side::Left, upper_offset: 3.0, lower_offset: 0.0 },
                Wing::Planar { side: Side::Right, upper_offset: 3.0, lower_offset: 0.0 },
            ],
        },
    ];
    let rejected = bad.iter().all(|c| predict_limit_configuration(c).is_err());
    r.verdict("inadmissible_rejected", rejected, "offset_tol");
    Ok(r)
}

// ---------------------------------------------------------------------------

/// A graph `x1 = f(x2, x3)` over part of the vertical plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sheet {
    /// Constant offset; `upper`/`lower` restricts to `x3 ≥ 0` / `x3 < 0`.
    Plane { offset: f64, region: Region },
    /// Both halves of `x1 = ±arccos(e^{(x2 - c x3)/A})/B` over `x2 < c x3`.
    TiltedReaper { slope: f64, a: f64, b: f64 },
    /// `avg + half·erf(x2/√(4|x3|+1))` for `x3 < 0`.
    StepProfile { avg: f64, half: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    All,
    Upper,
    Lower,
}

fn region_has(region: Region, d3: f64) -> bool {
    match region {
        Region::All => true,
        Region::Upper => d3 >= 0.0,
        Region::Lower => d3 < 0.0,
    }
}

impl Sheet {
    /// Heights over `r·d`, or nothing when `r·d` is outside the sheet.
    fn values(&self, d: (f64, f64), r: f64, out: &mut Vec<f64>) {
        match *self {
            Sheet::Plane { offset, region } => {
                if region_has(region, d.1) {
                    out.push(offset);
                }
            }
            Sheet::TiltedReaper { slope, a, b } => {
                let mut s = d.0 - slope * d.1;
                if s.abs() < 1e-12 {
                    s = 0.0;
                }
                if s <= 0.0 {
                    let h = (r * s / a).exp().acos() / b;
                    out.push(h);
                    out.push(-h);
                }
            }
            Sheet::StepProfile { avg, half } => {
                if d.1 < 0.0 {
                    let mut x2 = r * d.0;
                    if d.0.abs() < 1e-12 {
                        x2 = 0.0;
                    }
                    out.push(avg + half * libm::erf(x2 / (4.0 * r * d.1.abs() + 1.0).sqrt()));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Composite {
    pub name: String,
    pub sheets: Vec<Sheet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayLimit {
    pub angle: f64,
    /// `None` when the heights do not settle along the ray.
    pub limits: Option<Vec<Multiplicity>>,
    pub jump: bool,
}

const RADII: [f64; 4] = [1e9, 1e10, 1e11, 1e12];
const SETTLE_TOL: f64 = 1e-6;

fn limit_along(c: &Composite, angle: f64) -> Option<Vec<Multiplicity>> {
    let d = (angle.cos(), angle.sin());
    let mut prev: Option<Vec<f64>> = None;
    for &r in &RADII {
        let mut v = Vec::new();
        for s in &c.sheets {
            s.values(d, r, &mut v);
        }
        v.sort_by(f64::total_cmp);
        if let Some(p) = &prev {
            if p.len() != v.len() || p.iter().zip(&v).any(|(a, b)| (a - b).abs() > SETTLE_TOL) {
                return None;
            }
        }
        prev = Some(v);
    }
    prev.map(|v| multiset(v.into_iter().map(|x| (x / SETTLE_TOL).round() * SETTLE_TOL).collect()))
}

fn same_limits(a: &Option<Vec<Multiplicity>>, b: &Option<Vec<Multiplicity>>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => same_multiset(x, y, 10.0 * SETTLE_TOL),
        _ => false,
    }
}

/// Limit multiset along each direction; `jump` flags directions whose
/// limit differs from a nearby direction on either side.
pub fn scan_ray_limits(c: &Composite, angles: &[f64], delta: f64) -> Vec<RayLimit> {
    angles
        .iter()
        .map(|&angle| {
            let limits = limit_along(c, angle);
            let jump = !same_limits(&limits, &limit_along(c, angle - delta))
                || !same_limits(&limits, &limit_along(c, angle + delta));
            RayLimit { angle, limits, jump }
        })
        .collect()
}

pub fn plane_pair(a: f64, b: f64) -> Composite {
    Composite {
        name: "plane-pair".into(),
        sheets: vec![Sheet::Plane { offset: a, region: Region::All }, Sheet::Plane { offset: b, region: Region::All }],
    }
}

/// Tilted grim reaper of slope `c`: `A = 1 + c²`, `B = 1/√A`.
pub fn tilted_reaper(c: f64) -> Composite {
    let a = 1.0 + c * c;
    Composite { name: "tilted-reaper".into(), sheets: vec![Sheet::TiltedReaper { slope: c, a, b: 1.0 / a.sqrt() }] }
}

pub fn pitchfork(w: f64) -> Composite {
    Composite {
        name: "pitchfork".into(),
        sheets: vec![
            Sheet::Plane { offset: -w, region: Region::Upper },
            Sheet::Plane { offset: 0.0, region: Region::Upper },
            Sheet::Plane { offset: w, region: Region::Upper },
            Sheet::StepProfile { avg: 0.0, half: w },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RayScanConfig {
    pub n_directions: usize,
    pub delta: f64,
    pub reaper_slope: f64,
    pub pitchfork_halfwidth: f64,
    pub offset_tol: f64,
}

impl Default for RayScanConfig {
    fn default() -> Self {
        RayScanConfig { n_directions: 16, delta: 1e-3, reaper_slope: 1.0, pitchfork_halfwidth: 2.0, offset_tol: 1e-5 }
    }
}

pub fn run_ray_scan(cfg: &RayScanConfig) -> Result<ExperimentReport> {
    if cfg.n_directions < 4 || !(cfg.delta > 0.0 && cfg.delta < 0.1) {
        return config("ray scan needs at least 4 directions and 0 < delta < 0.1");
    }
    let mut r = ExperimentReport::new("ray-scan");
    r.param("config", cfg);
    r.tolerance("offset_tol", cfg.offset_tol);
    let uniform: Vec<f64> = (0..cfg.n_directions).map(|k| 2.0 * PI * k as f64 / cfg.n_directions as f64).collect();
    let eq = |l: &Option<Vec<Multiplicity>>, xs: Vec<f64>| match l {
        Some(m) => same_multiset(m, &multiset(xs), cfg.offset_tol),
        None => false,
    };

    let planes = scan_ray_limits(&plane_pair(-1.0, 1.5), &uniform, cfg.delta);
    let ok = planes.iter().all(|l| !l.jump && eq(&l.limits, vec![-1.0, 1.5]));
    r.verdict("planes_have_constant_limits", ok, "offset_tol");

    let c = cfg.reaper_slope;
    let reaper = tilted_reaper(c);
    let tangent = c.atan2(1.0);
    let b = match reaper.sheets[0] {
        Sheet::TiltedReaper { b, .. } => b,
        _ => unreachable!(),
    };
    let wing = FRAC_PI_2 / b;
    let scan = scan_ray_limits(&reaper, &[tangent, tangent + 0.1, tangent - 0.1, tangent + PI], cfg.delta);
    let mut ok = scan[0].jump && eq(&scan[0].limits, vec![0.0, 0.0]);
    ok &= scan[3].jump && eq(&scan[3].limits, vec![0.0, 0.0]);
    // inside the region the two sheets open to the plane pair, outside nothing
    ok &= eq(&scan[1].limits, vec![-wing, wing]) && !scan[1].jump;
    ok &= eq(&scan[2].limits, vec![]) && !scan[2].jump;
    r.verdict("reaper_limit_at_tangent", ok, "offset_tol");
    let away = scan_ray_limits(&reaper, &uniform, cfg.delta);
    let stray = away.iter().filter(|l| l.jump).filter(|l| {
        let d = (l.angle - tangent).rem_euclid(PI);
        d > 1e-9 && d < PI - 1e-9
    });
    r.metric("reaper_stray_jumps", stray.count() as f64);

    let w = cfg.pitchfork_halfwidth;
    let down = -FRAC_PI_2;
    let fork = scan_ray_limits(&pitchfork(w), &[down, down - 0.2, down + 0.2, FRAC_PI_2], cfg.delta);
    let mut ok = fork[0].jump && eq(&fork[0].limits, vec![0.0]);
    ok &= eq(&fork[1].limits, vec![-w]) && eq(&fork[2].limits, vec![w]);
    ok &= eq(&fork[3].limits, vec![-w, 0.0, w]) && !fork[3].jump;
    r.verdict("pitchfork_jump_down", ok, "offset_tol");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        let g = predict_limit_configuration(&grim_reaper_configuration()).unwrap();
        assert_eq!(g.entropy, 2);
        assert_eq!(g.up.len(), 2);
        assert!(g.down.is_empty());
        let p = predict_limit_configuration(&pitchfork_configuration()).unwrap();
        assert_eq!(p.entropy, 3);
        assert_eq!(p.down, vec![Multiplicity { offset: 0.0, multiplicity: 1 }]);
    }

    #[test]
    fn multiplicities_merge() {
        let m = multiset(vec![1.0, -1.0, 1.0 + 1e-12]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].multiplicity, 2);
    }

    #[test]
    fn random_matches_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (c, truth) = random_configuration(&mut rng);
            let p = predict_limit_configuration(&c).unwrap();
            assert_eq!(p.entropy, truth.entropy);
            assert!(same_multiset(&p.up, &truth.up, 1e-9));
            assert!(same_multiset(&p.down, &truth.down, 1e-9), "{p:?} {truth:?}");
        }
    }
}
