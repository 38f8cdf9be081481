//! One-dimensional bounded boundary data.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::quad::{integrate, QuadOptions};

/// Elementary profiles. All positions are absolute `x` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Segment {
    Constant {
        c: f64,
    },
    /// `a·x + b`
    Affine {
        a: f64,
        b: f64,
    },
    Step {
        x0: f64,
        c_left: f64,
        c_right: f64,
    },
    /// `height·exp(-(x - center)²/(2 width²))`
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    /// C∞ transition from `c_left` to `c_right` on `[x0 - width/2, x0 + width/2]`.
    SmoothStep {
        x0: f64,
        width: f64,
        c_left: f64,
        c_right: f64,
    },
    /// Piecewise-linear through `(x, y)` knots, constant beyond the ends.
    Sampled {
        points: Vec<[f64; 2]>,
    },
    /// `mean + amplitude·sin(2π x/period + phase)`
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
        phase: f64,
    },
}

fn bump_fn(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

/// C∞ ramp from 0 (s ≤ -1/2) to 1 (s ≥ 1/2).
pub fn smooth_ramp(s: f64) -> f64 {
    let a = bump_fn(s + 0.5);
    let b = bump_fn(0.5 - s);
    if a + b == 0.0 {
        return if s > 0.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

impl Segment {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Segment::Constant { c } => c,
            Segment::Affine { a, b } => a * x + b,
            Segment::Step { x0, c_left, c_right } => {
                if x < x0 {
                    c_left
                } else {
                    c_right
                }
            }
            Segment::Bump { center, width, height } => {
                let z = (x - center) / width;
                height * (-0.5 * z * z).exp()
            }
            Segment::SmoothStep { x0, width, c_left, c_right } => {
                c_left + (c_right - c_left) * smooth_ramp((x - x0) / width)
            }
            Segment::Sampled { ref points } => {
                let n = points.len();
                if x <= points[0][0] {
                    return points[0][1];
                }
                if x >= points[n - 1][0] {
                    return points[n - 1][1];
                }
                let i = points.partition_point(|p| p[0] <= x) - 1;
                let [x0, y0] = points[i];
                let [x1, y1] = points[i + 1];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            Segment::Sinusoid { mean, amplitude, period, phase } => {
                mean + amplitude * (std::f64::consts::TAU * x / period + phase).sin()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            Segment::Constant { c } => finite(&[*c]),
            Segment::Affine { a, b } => finite(&[*a, *b]),
            Segment::Step { x0, c_left, c_right } => finite(&[*x0, *c_left, *c_right]),
            Segment::Bump { center, width, height } => finite(&[*center, *width, *height]) && *width > 0.0,
            Segment::SmoothStep { x0, width, c_left, c_right } => {
                finite(&[*x0, *width, *c_left, *c_right]) && *width > 0.0
            }
            Segment::Sampled { points } => {
                !points.is_empty() && points.iter().all(|p| finite(p)) && points.windows(2).all(|w| w[0][0] < w[1][0])
            }
            Segment::Sinusoid { mean, amplitude, period, phase } => {
                finite(&[*mean, *amplitude, *period, *phase]) && *period > 0.0
            }
        };
        if !ok {
            return config(format!("invalid trace segment {self:?}"));
        }
        Ok(())
    }

    /// Limit at `-∞` (side = -1) or `+∞` (side = +1), if it exists.
    fn limit(&self, side: i32) -> Option<f64> {
        match *self {
            Segment::Constant { c } => Some(c),
            Segment::Affine { a, b } => (a == 0.0).then_some(b),
            Segment::Step { c_left, c_right, .. } | Segment::SmoothStep { c_left, c_right, .. } => {
                Some(if side < 0 { c_left } else { c_right })
            }
            Segment::Bump { .. } => Some(0.0),
            Segment::Sampled { ref points } => Some(if side < 0 { points[0][1] } else { points[points.len() - 1][1] }),
            Segment::Sinusoid { mean, amplitude, .. } => (amplitude == 0.0).then_some(mean),
        }
    }

    /// Sup of `|g|` over `[lo, hi]` (infinite ends allowed).
    fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        let clampx = |x: f64| x.clamp(lo, hi);
        match *self {
            Segment::Constant { c } => c.abs(),
            Segment::Affine { a, b } => {
                if a == 0.0 {
                    b.abs()
                } else {
                    (a * lo + b).abs().max((a * hi + b).abs())
                }
            }
            Segment::Step { x0, c_left, c_right } => {
                let mut m: f64 = 0.0;
                if lo < x0 {
                    m = m.max(c_left.abs());
                }
                if hi >= x0 {
                    m = m.max(c_right.abs());
                }
                m
            }
            Segment::Bump { center, .. } => self.eval(clampx(center)).abs(),
            Segment::SmoothStep { x0, width, .. } => {
                self.eval(clampx(x0 - width)).abs().max(self.eval(clampx(x0 + width)).abs())
            }
            Segment::Sampled { ref points } => {
                let mut m =
                    self.eval(clampx(points[0][0])).abs().max(self.eval(clampx(points[points.len() - 1][0])).abs());
                for p in points {
                    if p[0] >= lo && p[0] <= hi {
                        m = m.max(p[1].abs());
                    }
                }
                m.max(self.eval(lo.max(-1e300)).abs()).max(self.eval(hi.min(1e300)).abs())
            }
            Segment::Sinusoid { mean, amplitude, .. } => mean.abs() + amplitude.abs(),
        }
    }

    /// Points inside `(lo, hi)` where the integrand deserves a panel edge.
    fn features(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        let mut push = |x: f64| {
            if x > lo && x < hi {
                out.push(x);
            }
        };
        match *self {
            Segment::Constant { .. } | Segment::Affine { .. } => {}
            Segment::Step { x0, .. } => push(x0),
            Segment::Bump { center, width, .. } => {
                for k in [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0] {
                    push(center + k * width);
                }
            }
            Segment::SmoothStep { x0, width, .. } => {
                for k in [-0.5, -0.25, 0.0, 0.25, 0.5] {
                    push(x0 + k * width);
                }
            }
            Segment::Sampled { ref points } => {
                for p in points {
                    push(p[0]);
                }
            }
            Segment::Sinusoid { period, .. } => {
                if hi.is_finite() && lo.is_finite() && (hi - lo) / period < 20_000.0 {
                    let mut x = (lo / period).ceil() * period;
                    while x < hi {
                        push(x);
                        x += 0.5 * period;
                    }
                }
            }
        }
    }

    /// `∫_lo^hi g` for finite `lo ≤ hi`.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match *self {
            Segment::Constant { c } => c * (hi - lo),
            Segment::Affine { a, b } => 0.5 * a * (hi * hi - lo * lo) + b * (hi - lo),
            Segment::Step { x0, c_left, c_right } => {
                let m = x0.clamp(lo, hi);
                c_left * (m - lo) + c_right * (hi - m)
            }
            Segment::Bump { center, width, height } => {
                let s = std::f64::consts::SQRT_2 * width;
                let e = libm::erf((hi - center) / s) - libm::erf((lo - center) / s);
                height * width * (0.5 * std::f64::consts::PI).sqrt() * e
            }
            Segment::SmoothStep { x0, width, c_left, c_right } => {
                let a = (x0 - 0.5 * width).clamp(lo, hi);
                let b = (x0 + 0.5 * width).clamp(lo, hi);
                let mid =
                    integrate(|x| self.eval(x), a, b, QuadOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_panels: 200 });
                c_left * (a - lo) + mid.value + c_right * (hi - b)
            }
            Segment::Sampled { ref points } => {
                let n = points.len();
                let first = points[0][0];
                let last = points[n - 1][0];
                let mut total =
                    points[0][1] * (first.min(hi) - lo).max(0.0) + points[n - 1][1] * (hi - last.max(lo)).max(0.0);
                for w in points.windows(2) {
                    let a = w[0][0].max(lo);
                    let b = w[1][0].min(hi);
                    if b > a {
                        total += 0.5 * (b - a) * (self.eval(a) + self.eval(b));
                    }
                }
                total
            }
            Segment::Sinusoid { mean, amplitude, period, phase } => {
                let k = std::f64::consts::TAU / period;
                mean * (hi - lo) - amplitude / k * ((k * hi + phase).cos() - (k * lo + phase).cos())
            }
        }
    }
}

/// A segment in force on `[from, to)`; `None` ends are unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub segment: Segment,
}

impl Piece {
    fn lo(&self) -> f64 {
        self.from.unwrap_or(f64::NEG_INFINITY)
    }
    fn hi(&self) -> f64 {
        self.to.unwrap_or(f64::INFINITY)
    }
}

/// Boundary datum on the real line: contiguous pieces covering ℝ, optionally
/// with declared side limits `c₋, c₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryTrace {
    pub pieces: Vec<Piece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_limits: Option<[f64; 2]>,
}

impl BoundaryTrace {
    pub fn from_pieces(pieces: Vec<Piece>, side_limits: Option<[f64; 2]>) -> Result<Self> {
        let t = BoundaryTrace { pieces, side_limits };
        t.validate()?;
        Ok(t)
    }

    pub fn single(segment: Segment) -> Result<Self> {
        Self::from_pieces(vec![Piece { from: None, to: None, segment }], None)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::single(Segment::Constant { c })
    }

    pub fn step(x0: f64, c_left: f64, c_right: f64) -> Result<Self> {
        Self::single(Segment::Step { x0, c_left, c_right })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pieces.len();
        if n == 0 {
            return config("trace has no pieces");
        }
        if self.pieces[0].from.is_some() || self.pieces[n - 1].to.is_some() {
            return config("trace pieces must cover the whole real line");
        }
        for w in self.pieces.windows(2) {
            match (w[0].to, w[1].from) {
                (Some(a), Some(b)) if a == b => {}
                _ => return config("trace pieces must be contiguous"),
            }
        }
        for p in &self.pieces {
            p.segment.validate()?;
            if !(p.lo() < p.hi()) {
                return config("trace piece has empty extent");
            }
        }
        let sup = self.sup_norm();
        if !sup.is_finite() {
            return config("trace is unbounded");
        }
        if let Some([cm, cp]) = self.side_limits {
            let (lm, lp) = (self.pieces[0].segment.limit(-1), self.pieces[n - 1].segment.limit(1));
            let agree = |declared: f64, actual: Option<f64>| {
                actual.is_some_and(|a| (a - declared).abs() <= 1e-12 * (1.0 + a.abs()))
            };
            if !agree(cm, lm) || !agree(cp, lp) {
                return config(format!(
                    "declared side limits ({cm}, {cp}) disagree with the end segments ({lm:?}, {lp:?})"
                ));
            }
        }
        Ok(())
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.to.is_some_and(|t| t <= x));
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece_at(x).segment.eval(x)
    }

    /// `(c₋, c₊)` when both side limits exist.
    pub fn limits(&self) -> Option<(f64, f64)> {
        let n = self.pieces.len();
        Some((self.pieces[0].segment.limit(-1)?, self.pieces[n - 1].segment.limit(1)?))
    }

    pub fn sup_norm(&self) -> f64 {
        self.pieces.iter().map(|p| p.segment.sup_abs(p.lo(), p.hi())).fold(0.0, f64::max)
    }

    /// Sorted panel edges for integrating over `[lo, hi]`, endpoints included.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = vec![lo, hi];
        for p in &self.pieces {
            if p.hi() <= lo || p.lo() >= hi {
                continue;
            }
            if p.lo() > lo {
                out.push(p.lo());
            }
            p.segment.features(lo.max(p.lo()), hi.min(p.hi()), &mut out);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `∫_lo^hi g` over a finite interval.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let a = lo.max(p.lo());
            let b = hi.min(p.hi());
            if b > a {
                total += p.segment.integral(a, b);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_piece() -> BoundaryTrace {
        BoundaryTrace::from_pieces(
            vec![
                Piece { from: None, to: Some(0.0), segment: Segment::Constant { c: -1.0 } },
                Piece { from: Some(0.0), to: Some(2.0), segment: Segment::Affine { a: 0.5, b: 0.0 } },
                Piece { from: Some(2.0), to: None, segment: Segment::Bump { center: 2.0, width: 1.0, height: 1.0 } },
            ],
            Some([-1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_and_limits() {
        let t = two_piece();
        assert_eq!(t.eval(-5.0), -1.0);
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(1.0), 0.5);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.limits(), Some((-1.0, 0.0)));
        assert_eq!(t.sup_norm(), 1.0);
    }

    #[test]
    fn rejects_bad_traces() {
        assert!(BoundaryTrace::single(Segment::Affine { a: 1.0, b: 0.0 }).is_err());
        assert!(BoundaryTrace::from_pieces(
            vec![Piece { from: None, to: None, segment: Segment::Constant { c: 1.0 } }],
            Some([1.0, 2.0])
        )
        .is_err());
        assert!(BoundaryTrace::from_pieces(
            vec![
                Piece { from: None, to: Some(0.0), segment: Segment::Constant { c: 1.0 } },
                Piece { from: Some(1.0), to: None, segment: Segment::Constant { c: 1.0 } },
            ],
            None
        )
        .is_err());
        assert!(BoundaryTrace::single(Segment::Sampled { points: vec![[1.0, 0.0], [0.0, 1.0]] }).is_err());
    }

    #[test]
    fn integrals_match_quadrature() {
        let segs = [
            Segment::Bump { center: 0.3, width: 0.7, height: 2.0 },
            Segment::SmoothStep { x0: 0.5, width: 2.0, c_left: -1.0, c_right: 3.0 },
            Segment::Sampled { points: vec![[-1.0, 0.0], [0.0, 2.0], [1.5, -1.0]] },
            Segment::Sinusoid { mean: 0.5, amplitude: 1.0, period: 3.0, phase: 0.2 },
            Segment::Step { x0: 0.1, c_left: 1.0, c_right: 2.0 },
        ];
        for s in segs {
            let t = BoundaryTrace::single(s).unwrap();
            let xs = t.breakpoints(-4.0, 5.0);
            let q = crate::quad::integrate_pieces(|x| t.eval(x), &xs, QuadOptions::default());
            assert!((q.value - t.integral(-4.0, 5.0)).abs() < 1e-10, "{t:?}");
        }
    }

    #[test]
    fn smooth_ramp_shape() {
        assert_eq!(smooth_ramp(-0.5), 0.0);
        assert_eq!(smooth_ramp(0.5), 1.0);
        assert!((smooth_ramp(0.0) - 0.5).abs() < 1e-15);
        assert!((smooth_ramp(0.2) + smooth_ramp(-0.2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let t = two_piece();
        let s = serde_json::to_string(&t).unwrap();
        let back: BoundaryTrace = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
