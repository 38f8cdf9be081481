//! Finite differences for `Lu = P(∇u, Hess u)` and for the linear problem
//! `Lu = f` on truncated domains.
//!
//! Nodes live on a uniform grid over a rectangle. A node belongs to the
//! computational set when it lies in the closed rectangle and the closure of
//! the domain; it is interior when all eight neighbors also belong, and a
//! Dirichlet node otherwise. All derivatives are centered; the drift
//! coefficient is one, so `h < 2` keeps the five-point part monotone.

mod io;
mod newton;

pub use io::GridMeta;
pub use newton::{solve_l_dirichlet, solve_translator_dirichlet, solve_translator_report, NewtonConfig, SolveReport};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::domains::{DomainSpec, Point2, Rect};
use crate::error::{config, Result};
use crate::kernels::BoundaryTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Uniform grid restricted to a domain mask. Node `(i, j)` sits at
/// `origin + h·(i, j)`; storage is row-major with `j` (the x3 index) as the
/// row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub origin: Point2,
    pub h: f64,
    pub nx2: usize,
    pub nx3: usize,
    pub domain: DomainSpec,
    pub rect: Rect,
    pub kinds: Vec<NodeKind>,
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

fn count(extent: f64, h: f64) -> Result<usize> {
    let n = (extent / h).round();
    if (n * h - extent).abs() > 1e-9 * extent.max(1.0) || n < 2.0 {
        return config(format!("rectangle extent {extent} is not a multiple (>= 2) of h = {h}"));
    }
    Ok(n as usize + 1)
}

impl Grid {
    pub fn new(domain: DomainSpec, rect: Rect, h: f64) -> Result<Self> {
        domain.validate()?;
        rect.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return config(format!("grid spacing must be > 0, got {h}"));
        }
        if h >= 2.0 {
            return config(format!("grid Péclet number h/2 = {} must be < 1", h / 2.0));
        }
        let nx2 = count(rect.x2_max - rect.x2_min, h)?;
        let nx3 = count(rect.x3_max - rect.x3_min, h)?;
        let origin = Point2::new(rect.x2_min, rect.x3_min);
        let mut inside = vec![false; nx2 * nx3];
        for j in 0..nx3 {
            for i in 0..nx2 {
                let p = Point2::new(origin.x2 + h * i as f64, origin.x3 + h * j as f64);
                inside[j * nx2 + i] = domain.contains_closed(p);
            }
        }
        let mut kinds = vec![NodeKind::Outside; nx2 * nx3];
        for j in 0..nx3 {
            for i in 0..nx2 {
                let k = j * nx2 + i;
                if !inside[k] {
                    continue;
                }
                let all = NEIGHBORS.iter().all(|&(di, dj)| {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    ii >= 0
                        && jj >= 0
                        && (ii as usize) < nx2
                        && (jj as usize) < nx3
                        && inside[jj as usize * nx2 + ii as usize]
                });
                kinds[k] = if all { NodeKind::Interior } else { NodeKind::Boundary };
            }
        }
        Ok(Grid { origin, h, nx2, nx3, domain, rect, kinds })
    }

    pub fn len(&self) -> usize {
        self.nx2 * self.nx3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx2 + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx2, k / self.nx2)
    }

    pub fn point(&self, k: usize) -> Point2 {
        let (i, j) = self.ij(k);
        Point2::new(self.origin.x2 + self.h * i as f64, self.origin.x3 + self.h * j as f64)
    }

    /// Nearest node to `p`, if it lies on the grid.
    pub fn nearest(&self, p: Point2) -> Option<usize> {
        let i = ((p.x2 - self.origin.x2) / self.h).round();
        let j = ((p.x3 - self.origin.x3) / self.h).round();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx2 || j as usize >= self.nx3 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    pub fn interior_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == NodeKind::Interior).count()
    }
}

/// Dirichlet data: a boundary trace read off at each node's x2, or an
/// arbitrary closed-form field.
#[derive(Clone)]
pub enum DirichletData {
    Trace(BoundaryTrace),
    Field(Arc<dyn Fn(Point2) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for DirichletData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DirichletData::Trace(t) => f.debug_tuple("Trace").field(t).finish(),
            DirichletData::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl DirichletData {
    pub fn field<F: Fn(Point2) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        DirichletData::Field(Arc::new(f))
    }

    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            DirichletData::Trace(t) => t.eval(p.x2),
            DirichletData::Field(f) => f(p),
        }
    }
}

/// Nodal values on a grid; outside nodes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

/// Centered first and second differences at an interior node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub d2: f64,
    pub d3: f64,
    pub d22: f64,
    pub d33: f64,
    pub d23: f64,
}

impl Derivs {
    /// `P = Σ u_ij u_i u_j / (1 + |∇u|²)`.
    pub fn p_term(&self) -> f64 {
        let num = self.d22 * self.d2 * self.d2 + 2.0 * self.d23 * self.d2 * self.d3 + self.d33 * self.d3 * self.d3;
        num / (1.0 + self.d2 * self.d2 + self.d3 * self.d3)
    }

    /// `Δu + ∂₃u`.
    pub fn l_term(&self) -> f64 {
        self.d22 + self.d33 + self.d3
    }

    pub fn grad_norm(&self) -> f64 {
        self.d2.hypot(self.d3)
    }

    /// Frobenius norm of the Hessian.
    pub fn hess_norm(&self) -> f64 {
        (self.d22 * self.d22 + self.d33 * self.d33 + 2.0 * self.d23 * self.d23).sqrt()
    }
}

pub(crate) fn derivs_at(grid: &Grid, u: &[f64], k: usize) -> Derivs {
    let n = grid.nx2;
    let h = grid.h;
    let c = u[k];
    let e = u[k + 1];
    let w = u[k - 1];
    let no = u[k + n];
    let s = u[k - n];
    Derivs {
        d2: (e - w) / (2.0 * h),
        d3: (no - s) / (2.0 * h),
        d22: (e - 2.0 * c + w) / (h * h),
        d33: (no - 2.0 * c + s) / (h * h),
        d23: (u[k + n + 1] - u[k + n - 1] - u[k - n + 1] + u[k - n - 1]) / (4.0 * h * h),
    }
}

impl GridFunction {
    pub fn from_fn<F: Fn(Point2) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = (0..grid.len())
            .map(|k| if grid.kinds[k] == NodeKind::Outside { f64::NAN } else { f(grid.point(k)) })
            .collect();
        GridFunction { grid, values }
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.grid.index(i, j);
        (self.grid.kinds[k] != NodeKind::Outside).then(|| self.values[k])
    }

    pub fn at(&self, p: Point2) -> Option<f64> {
        let k = self.grid.nearest(p)?;
        (self.grid.kinds[k] != NodeKind::Outside).then(|| self.values[k])
    }

    /// Bilinear interpolation; `None` unless all four surrounding nodes
    /// carry values.
    pub fn interpolate(&self, p: Point2) -> Option<f64> {
        let g = &self.grid;
        let fx = (p.x2 - g.origin.x2) / g.h;
        let fy = (p.x3 - g.origin.x3) / g.h;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let i = (fx.floor() as usize).min(g.nx2.saturating_sub(2));
        let j = (fy.floor() as usize).min(g.nx3.saturating_sub(2));
        if i + 1 >= g.nx2 || j + 1 >= g.nx3 || fx > (g.nx2 - 1) as f64 || fy > (g.nx3 - 1) as f64 {
            return None;
        }
        let (sx, sy) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize| self.values[g.index(a, b)];
        let c = [v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)];
        if c.iter().any(|x| x.is_nan()) {
            return None;
        }
        Some((1.0 - sy) * ((1.0 - sx) * c[0] + sx * c[1]) + sy * ((1.0 - sx) * c[2] + sx * c[3]))
    }

    /// Difference quotients at an interior node.
    pub fn derivs(&self, k: usize) -> Option<Derivs> {
        (self.grid.kinds[k] == NodeKind::Interior).then(|| derivs_at(&self.grid, &self.values, k))
    }

    /// Max |value| over non-outside nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| !v.is_nan()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// (min, max) over Dirichlet nodes.
    pub fn boundary_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, kind) in self.grid.kinds.iter().enumerate() {
            if *kind == NodeKind::Boundary {
                lo = lo.min(self.values[k]);
                hi = hi.max(self.values[k]);
            }
        }
        (lo, hi)
    }
}

/// Discrete `Lu - P` at interior nodes, zero at Dirichlet nodes.
pub fn residual(u: &GridFunction) -> GridFunction {
    let g = &u.grid;
    let values = (0..g.len())
        .map(|k| match g.kinds[k] {
            NodeKind::Interior => {
                let d = derivs_at(g, &u.values, k);
                d.l_term() - d.p_term()
            }
            NodeKind::Boundary => 0.0,
            NodeKind::Outside => f64::NAN,
        })
        .collect();
    GridFunction { grid: u.grid.clone(), values }
}

/// Centered gradient `(u_2, u_3)` at interior nodes.
pub fn gradient(u: &GridFunction) -> Vec<Option<[f64; 2]>> {
    (0..u.grid.len()).map(|k| u.derivs(k).map(|d| [d.d2, d.d3])).collect()
}

/// Centered Hessian at interior nodes; mixed partials are symmetric by
/// construction.
pub fn hessian(u: &GridFunction) -> Vec<Option<[[f64; 2]; 2]>> {
    (0..u.grid.len()).map(|k| u.derivs(k).map(|d| [[d.d22, d.d23], [d.d23, d.d33]])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{plane_solution, TiltedReaper};

    fn box_grid(n: usize, half: f64) -> Arc<Grid> {
        let h = 2.0 * half / (n - 1) as f64;
        Arc::new(Grid::new(DomainSpec::WholePlane, Rect::new(-half, half, -half, half), h).unwrap())
    }

    #[test]
    fn mask_classification() {
        let g = Grid::new(DomainSpec::ExteriorDisk { radius: 1.0 }, Rect::new(-3.0, 3.0, -3.0, 3.0), 0.25).unwrap();
        assert_eq!(g.kinds[g.index(12, 12)], NodeKind::Outside);
        assert_eq!(g.kinds[g.index(0, 5)], NodeKind::Boundary);
        assert_eq!(g.kinds[g.index(2, 2)], NodeKind::Interior);
        assert_eq!(g.kinds[g.index(16, 12)], NodeKind::Boundary);
        assert!(Grid::new(DomainSpec::WholePlane, Rect::new(0.0, 4.0, 0.0, 4.0), 2.0).is_err());
        assert!(Grid::new(DomainSpec::WholePlane, Rect::new(0.0, 1.0, 0.0, 1.0), 0.3).is_err());
    }

    #[test]
    fn affine_and_constant_residual_vanish() {
        let g = box_grid(33, 4.0);
        for (a, b) in [(0.0, 0.0), (1.0, 2.0), (-3.5, 0.25)] {
            let pl = plane_solution(a, b);
            let u = GridFunction::from_fn(g.clone(), |p| pl.eval(p));
            assert!(residual(&u).max_abs() == 0.0);
        }
        let u = GridFunction::from_fn(g.clone(), |_| 7.0);
        assert_eq!(residual(&u).max_abs(), 0.0);
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let g = box_grid(17, 2.0);
        let u = GridFunction::from_fn(g.clone(), |p| p.x2 * p.x2);
        for hs in hessian(&u).into_iter().flatten() {
            assert!((hs[0][0] - 2.0).abs() < 1e-12 && hs[1][1].abs() < 1e-12 && hs[0][1].abs() < 1e-12);
        }
        let v = GridFunction::from_fn(g, |p| 3.0 * p.x2 - p.x3 + 1.0);
        for gr in gradient(&v).into_iter().flatten() {
            assert!((gr[0] - 3.0).abs() < 1e-12 && (gr[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reaper_residual_is_second_order() {
        let r = TiltedReaper::from_slope(1.0, Point2::new(0.0, 0.0)).unwrap();
        let mut res = Vec::new();
        for n in [65, 129, 257] {
            let h = 3.0 / (n - 1) as f64;
            let g = Arc::new(Grid::new(DomainSpec::WholePlane, Rect::new(-1.5, 1.5, 0.0, 3.0), h).unwrap());
            let u = GridFunction::from_fn(g, |p| r.eval(p).unwrap());
            res.push(residual(&u).max_abs());
        }
        for w in res.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }
}
