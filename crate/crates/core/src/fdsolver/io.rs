use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{Grid, GridFunction};
use crate::domains::{DomainSpec, Point2, Rect};
use crate::error::{config, Result};

/// JSON sidecar describing how a CSV payload was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub nx2: usize,
    pub nx3: usize,
    pub h: f64,
    pub origin: Point2,
    pub domain: DomainSpec,
    pub rect: Rect,
}

const HEADER: &str = "nx2,nx3,h,origin_x2,origin_x3";

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl GridFunction {
    pub fn meta(&self) -> GridMeta {
        let g = &self.grid;
        GridMeta { nx2: g.nx2, nx3: g.nx3, h: g.h, origin: g.origin, domain: g.domain, rect: g.rect }
    }

    /// Header line, one metadata line, then one line per x3 row. Outside
    /// nodes are written as `nan`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "{HEADER}")?;
        writeln!(w, "{},{},{},{},{}", g.nx2, g.nx3, fmt(g.h), fmt(g.origin.x2), fmt(g.origin.x3))?;
        for j in 0..g.nx3 {
            let row: Vec<String> = (0..g.nx2).map(|i| fmt(self.values[g.index(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a CSV payload. With metadata the original mask is rebuilt;
    /// without it the mask is recovered from the `nan` pattern over a
    /// rectangle domain.
    pub fn read_csv<R: BufRead>(r: R, meta: Option<&GridMeta>) -> Result<GridFunction> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            match lines.next() {
                Some(l) => Ok(l?),
                None => config("truncated grid CSV"),
            }
        };
        if next()?.trim() != HEADER {
            return config("grid CSV header mismatch");
        }
        let head = next()?;
        let f: Vec<&str> = head.split(',').collect();
        if f.len() != 5 {
            return config("grid CSV metadata line needs 5 fields");
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().or_else(|_| config(format!("bad number {s:?} in grid CSV")))
        };
        let nx2 = parse(f[0])? as usize;
        let nx3 = parse(f[1])? as usize;
        let h = parse(f[2])?;
        let origin = Point2::new(parse(f[3])?, parse(f[4])?);
        let mut values = Vec::with_capacity(nx2 * nx3);
        for _ in 0..nx3 {
            let line = next()?;
            let row: Vec<f64> = line.split(',').map(parse).collect::<Result<_>>()?;
            if row.len() != nx2 {
                return config("grid CSV row has the wrong length");
            }
            values.extend(row);
        }
        let rect = Rect::new(origin.x2, origin.x2 + h * (nx2 - 1) as f64, origin.x3, origin.x3 + h * (nx3 - 1) as f64);
        let grid = match meta {
            Some(m) => {
                if m.nx2 != nx2 || m.nx3 != nx3 || m.h != h {
                    return config("grid CSV disagrees with its metadata");
                }
                Grid::new(m.domain, m.rect, m.h)?
            }
            None => {
                let mut g = Grid::new(DomainSpec::WholePlane, rect, h)?;
                let inside: Vec<bool> = values.iter().map(|v| !v.is_nan()).collect();
                for k in 0..g.len() {
                    let (i, j) = g.ij(k);
                    g.kinds[k] = if !inside[k] {
                        super::NodeKind::Outside
                    } else if i == 0
                        || j == 0
                        || i + 1 == nx2
                        || j + 1 == nx3
                        || super::NEIGHBORS
                            .iter()
                            .any(|&(di, dj)| !inside[g.index((i as i64 + di) as usize, (j as i64 + dj) as usize)])
                    {
                        super::NodeKind::Boundary
                    } else {
                        super::NodeKind::Interior
                    };
                }
                g
            }
        };
        Ok(GridFunction { grid: Arc::new(grid), values })
    }
}
