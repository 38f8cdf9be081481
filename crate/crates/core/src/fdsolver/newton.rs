use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{derivs_at, DirichletData, Grid, GridFunction, NodeKind};
use crate::error::{config, Divergence, Error, Result};

/// Damped Newton settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Stop once the ∞-norm of the discrete residual is at most this.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Armijo sufficient-decrease factor for the halving line search.
    pub armijo: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { residual_tol: 1e-10, max_iters: 50, armijo: 1e-4 }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || self.max_iters == 0 || !(self.armijo > 0.0 && self.armijo < 0.5) {
            return config(format!("invalid Newton configuration {self:?}"));
        }
        Ok(())
    }
}

/// Converged solve plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    /// ∞-norm residual before each Newton step, ending with the accepted one.
    pub residual_history: Vec<f64>,
    /// `max(u - max_boundary, min_boundary - u, 0)` over all nodes.
    pub max_principle_excess: f64,
}

/// Sparse system over the interior nodes, with a fixed nine-point pattern so
/// the symbolic factorization is computed once per grid.
struct System {
    grid: Arc<Grid>,
    /// grid index of each unknown
    nodes: Vec<usize>,
    /// unknown index of each grid node, usize::MAX if not an unknown
    unknown: Vec<usize>,
    /// (row, col) of each pattern slot, nine slots per row at most
    slots: Vec<(usize, usize, usize)>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu_symbolic: SymbolicLu<usize>,
}

// stencil offsets in the order (C, E, W, N, S, NE, NW, SE, SW)
fn offsets(n: usize) -> [isize; 9] {
    let n = n as isize;
    [0, 1, -1, n, -n, n + 1, n - 1, -n + 1, -n - 1]
}

impl System {
    fn new(grid: Arc<Grid>) -> Result<Self> {
        let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.kinds[k] == NodeKind::Interior).collect();
        if nodes.is_empty() {
            return config("grid has no interior nodes");
        }
        let mut unknown = vec![usize::MAX; grid.len()];
        for (r, &k) in nodes.iter().enumerate() {
            unknown[k] = r;
        }
        let off = offsets(grid.nx2);
        let mut slots = Vec::with_capacity(nodes.len() * 9);
        let mut pairs = Vec::with_capacity(nodes.len() * 9);
        for (r, &k) in nodes.iter().enumerate() {
            for (s, o) in off.iter().enumerate() {
                let kk = (k as isize + o) as usize;
                let c = unknown[kk];
                if c != usize::MAX {
                    slots.push((r, c, s));
                    pairs.push(Pair::new(r, c));
                }
            }
        }
        let n = nodes.len();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::Numeric(format!("sparse pattern: {e:?}")))?;
        let lu_symbolic =
            SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| Error::Numeric(format!("symbolic LU: {e:?}")))?;
        Ok(System { grid, nodes, unknown, slots, symbolic, argsort, lu_symbolic })
    }

    fn factor(&self, stencils: &[[f64; 9]]) -> Result<Lu<usize, f64>> {
        let vals: Vec<f64> = self.slots.iter().map(|&(r, _, s)| stencils[r][s]).collect();
        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, &vals)
            .map_err(|e| Error::Numeric(format!("sparse assembly: {e:?}")))?;
        Lu::try_new_with_symbolic(self.lu_symbolic.clone(), mat.as_ref())
            .map_err(|e| Error::Numeric(format!("sparse LU breakdown: {e:?}")))
    }

    fn solve(&self, lu: &Lu<usize, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        lu.solve_in_place(b.as_mut());
        let x: Vec<f64> = (0..rhs.len()).map(|i| b[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("linear solve produced non-finite values".into()));
        }
        Ok(x)
    }

    fn linear_stencil(&self) -> [f64; 9] {
        let h = self.grid.h;
        let a = 1.0 / (h * h);
        let d = 1.0 / (2.0 * h);
        [-4.0 * a, a, a, a + d, a - d, 0.0, 0.0, 0.0, 0.0]
    }

    /// Exact linearization of the discrete residual at node `k`.
    fn jacobian_stencil(&self, u: &[f64], k: usize) -> [f64; 9] {
        let g = &self.grid;
        let h = g.h;
        let d = derivs_at(g, u, k);
        let den = 1.0 + d.d2 * d.d2 + d.d3 * d.d3;
        let num = d.d22 * d.d2 * d.d2 + 2.0 * d.d23 * d.d2 * d.d3 + d.d33 * d.d3 * d.d3;
        let p22 = d.d2 * d.d2 / den;
        let p33 = d.d3 * d.d3 / den;
        let p23 = 2.0 * d.d2 * d.d3 / den;
        let p2 = (2.0 * d.d22 * d.d2 + 2.0 * d.d23 * d.d3) / den - 2.0 * num * d.d2 / (den * den);
        let p3 = (2.0 * d.d23 * d.d2 + 2.0 * d.d33 * d.d3) / den - 2.0 * num * d.d3 / (den * den);
        let r22 = 1.0 - p22;
        let r33 = 1.0 - p33;
        let r23 = -p23;
        let r2 = -p2;
        let r3 = 1.0 - p3;
        let a = 1.0 / (h * h);
        let b = 1.0 / (2.0 * h);
        let m = 1.0 / (4.0 * h * h);
        [
            -2.0 * a * (r22 + r33),
            r2 * b + r22 * a,
            -r2 * b + r22 * a,
            r3 * b + r33 * a,
            -r3 * b + r33 * a,
            r23 * m,
            -r23 * m,
            -r23 * m,
            r23 * m,
        ]
    }

    /// Nonlinear residual at the unknowns.
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&k| {
                let d = derivs_at(&self.grid, u, k);
                d.l_term() - d.p_term()
            })
            .collect()
    }

    fn scatter(&self, u: &mut [f64], x: &[f64]) {
        for (r, &k) in self.nodes.iter().enumerate() {
            u[k] = x[r];
        }
    }

    /// Solves `Lu = f` with the Dirichlet values already stored in `u`.
    fn linear_solve(&self, u: &mut [f64], f: Option<&[f64]>) -> Result<()> {
        let st = self.linear_stencil();
        let stencils = vec![st; self.nodes.len()];
        let lu = self.factor(&stencils)?;
        let off = offsets(self.grid.nx2);
        let mut rhs = vec![0.0; self.nodes.len()];
        for (r, &k) in self.nodes.iter().enumerate() {
            let mut v = f.map_or(0.0, |f| f[k]);
            for (s, o) in off.iter().enumerate() {
                let kk = (k as isize + o) as usize;
                if self.unknown[kk] == usize::MAX && st[s] != 0.0 {
                    v -= st[s] * u[kk];
                }
            }
            rhs[r] = v;
        }
        let x = self.solve(&lu, &rhs)?;
        self.scatter(u, &x);
        Ok(())
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn initial_values(grid: &Grid, data: &DirichletData) -> Vec<f64> {
    (0..grid.len())
        .map(|k| match grid.kinds[k] {
            NodeKind::Outside => f64::NAN,
            NodeKind::Boundary => data.eval(grid.point(k)),
            NodeKind::Interior => 0.0,
        })
        .collect()
}

fn check_data(values: &[f64], grid: &Grid) -> Result<()> {
    for (k, v) in values.iter().enumerate() {
        if grid.kinds[k] == NodeKind::Boundary && !v.is_finite() {
            return config(format!("Dirichlet data is not finite at node {k}"));
        }
    }
    Ok(())
}

fn max_principle_excess(u: &GridFunction) -> f64 {
    let (lo, hi) = u.boundary_range();
    u.values.iter().filter(|v| !v.is_nan()).fold(0.0, |m, &v| m.max(v - hi).max(lo - v))
}

/// Linear Dirichlet problem `Lu = f` (`f = None` means zero). Deterministic:
/// a fixed pattern, fixed ordering and a sequential sparse LU.
pub fn solve_l_dirichlet(grid: &Arc<Grid>, data: &DirichletData, f: Option<&GridFunction>) -> Result<GridFunction> {
    let sys = System::new(grid.clone())?;
    let mut u = initial_values(grid, data);
    check_data(&u, grid)?;
    sys.linear_solve(&mut u, f.map(|f| f.values.as_slice()))?;
    Ok(GridFunction { grid: grid.clone(), values: u })
}

/// Damped Newton for the translator equation, started from the L-harmonic
/// solution with the same data, or from the data itself when that has the
/// smaller residual.
pub fn solve_translator_report(grid: &Arc<Grid>, data: &DirichletData, cfg: &NewtonConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let sys = System::new(grid.clone())?;
    let mut u = initial_values(grid, data);
    check_data(&u, grid)?;
    sys.linear_solve(&mut u, None)?;
    let mut r = sys.residual(&u);
    // data that already solves the equation is kept verbatim
    let ext: Vec<f64> = (0..grid.len())
        .map(|k| if grid.kinds[k] == NodeKind::Interior { data.eval(grid.point(k)) } else { u[k] })
        .collect();
    if sys.nodes.iter().all(|&k| ext[k].is_finite()) {
        let re = sys.residual(&ext);
        if inf_norm(&re) <= inf_norm(&r) {
            u = ext;
            r = re;
        }
    }

    let mut history = Vec::new();
    loop {
        let rn = inf_norm(&r);
        history.push(rn);
        if rn <= cfg.residual_tol {
            let solution = GridFunction { grid: grid.clone(), values: u };
            let excess = max_principle_excess(&solution);
            return Ok(SolveReport { solution, residual_history: history, max_principle_excess: excess });
        }
        let diverged = |u: Vec<f64>, history: Vec<f64>| {
            Error::Divergence(Box::new(Divergence {
                last_iterate: GridFunction { grid: grid.clone(), values: u },
                residual_history: history,
            }))
        };
        if history.len() > cfg.max_iters {
            return Err(diverged(u, history));
        }
        let stencils: Vec<[f64; 9]> = sys.nodes.iter().map(|&k| sys.jacobian_stencil(&u, k)).collect();
        let lu = sys.factor(&stencils)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = sys.solve(&lu, &neg)?;

        let merit = two_norm2(&r);
        let mut lambda = 1.0;
        let mut trial = u.clone();
        loop {
            for (i, &k) in sys.nodes.iter().enumerate() {
                trial[k] = u[k] + lambda * step[i];
            }
            let rt = sys.residual(&trial);
            let mt = two_norm2(&rt);
            if mt.is_finite() && mt <= (1.0 - 2.0 * cfg.armijo * lambda) * merit {
                r = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(diverged(u, history));
            }
        }
        u = trial;
    }
}

/// Converged solution of the translator equation with the given data.
pub fn solve_translator_dirichlet(grid: &Arc<Grid>, data: &DirichletData, cfg: &NewtonConfig) -> Result<GridFunction> {
    solve_translator_report(grid, data, cfg).map(|r| r.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{DomainSpec, Point2, Rect};
    use crate::kernels::BoundaryTrace;
    use crate::models::TiltedReaper;

    fn grid(domain: DomainSpec, rect: Rect, h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(domain, rect, h).unwrap())
    }

    #[test]
    fn affine_data_is_reproduced() {
        let g = grid(DomainSpec::WholePlane, Rect::new(-4.0, 4.0, -4.0, 4.0), 0.25);
        let data = DirichletData::field(|p: Point2| 0.7 * p.x2 - 1.5);
        let u = solve_translator_dirichlet(&g, &data, &NewtonConfig::default()).unwrap();
        for k in 0..g.len() {
            let p = g.point(k);
            assert!((u.values[k] - (0.7 * p.x2 - 1.5)).abs() < 1e-12);
        }
        let c = DirichletData::Trace(BoundaryTrace::constant(2.5).unwrap());
        let u = solve_translator_dirichlet(&g, &c, &NewtonConfig::default()).unwrap();
        assert!(u.values.iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn l_solve_shift_and_exponential() {
        let g =
            grid(DomainSpec::SlantedUpperHalfPlane { slope: 0.0, offset: 0.0 }, Rect::new(-4.0, 4.0, 0.0, 8.0), 0.25);
        let exact = |p: Point2| 1.0 - (-p.x3).exp();
        let u = solve_l_dirichlet(&g, &DirichletData::field(exact), None).unwrap();
        let err = (0..g.len()).map(|k| (u.values[k] - exact(g.point(k))).abs()).fold(0.0, f64::max);
        assert!(err < 0.04 * 0.25 * 0.25, "err {err}");
        let v = solve_l_dirichlet(&g, &DirichletData::field(move |p| exact(p) + 3.0), None).unwrap();
        for k in 0..g.len() {
            assert!((v.values[k] - u.values[k] - 3.0).abs() < 1e-12);
        }
        let again = solve_l_dirichlet(&g, &DirichletData::field(exact), None).unwrap();
        assert_eq!(again.values, u.values);
    }

    #[test]
    fn reaper_solve_converges_second_order() {
        let r = TiltedReaper::from_slope(1.0, Point2::new(0.0, 0.0)).unwrap();
        let mut errs = Vec::new();
        for n in [33usize, 65, 129] {
            let h = 3.0 / (n - 1) as f64;
            let g = grid(DomainSpec::WholePlane, Rect::new(-1.5, 1.5, 0.0, 3.0), h);
            let data = DirichletData::field(move |p| r.eval(p).unwrap());
            let rep = solve_translator_report(&g, &data, &NewtonConfig::default()).unwrap();
            let e =
                (0..g.len()).map(|k| (rep.solution.values[k] - r.eval(g.point(k)).unwrap()).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order} from {errs:?}");
        }
    }
}
