use std::collections::VecDeque;

use serde::Serialize;

use super::levels::Probe;
use super::nu::{point_tag, NuEstimate, NuVerdict};
use super::Schedule;
use crate::error::{Error, Result};
use crate::expr::{JacobianEval, MapDef};
use crate::matrix::{dist, norm};
use crate::newton::{self, NewtonOptions};
use crate::par;

/// Regular grid on the box `x̄ ± half_width` with `points_per_axis`
/// (odd) points per axis, so that `x̄` is a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImplicitGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl ImplicitGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Solved,
    NewtonDiverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitCell {
    pub index: Vec<usize>,
    pub x: Vec<f64>,
    /// `G(x)`; for a diverged cell, the last Newton iterate.
    pub y: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub edges_checked: usize,
    /// Edges where neither endpoint had a usable Jacobian.
    pub edges_skipped: usize,
    /// Largest `‖ΔG‖ / bound` over checked edges.
    pub max_ratio: f64,
    pub violations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitTable {
    /// The condition estimate: `inf σ(∂F/∂y)` over shrinking product balls.
    pub condition: NuEstimate,
    pub step: f64,
    /// Cells in breadth-first order from `x̄`.
    pub cells: Vec<ImplicitCell>,
    pub continuity: ContinuityCheck,
    pub newton: NewtonOptions,
}

impl ImplicitTable {
    pub fn all_solved(&self) -> bool {
        self.cells.iter().all(|c| c.status == CellStatus::Solved)
    }
}

/// Continues the implicit function `G` with `F(x, G(x)) = 0`, `G(x̄) = ȳ`,
/// over a grid around `x̄`.
///
/// `F` has `n + p` variables (x first) and `p` components.
pub fn implicit_solve(
    f: &MapDef,
    xbar: &[f64],
    ybar: &[f64],
    grid: ImplicitGrid,
    newton: NewtonOptions,
    s: &Schedule,
) -> Result<ImplicitTable> {
    let (n, p) = (xbar.len(), ybar.len());
    if n == 0 || p == 0 || f.arity() != n + p || f.dim_out() != p {
        return Err(Error::InvalidInput(format!(
            "implicit map `{}` must have {} variables and {} components, has {} and {}",
            f.name,
            n + p,
            p,
            f.arity(),
            f.dim_out()
        )));
    }
    if grid.points_per_axis < 3 || grid.points_per_axis.is_multiple_of(2) || !(grid.half_width > 0.0) {
        return Err(Error::InvalidInput(
            "grid needs an odd number (at least 3) of points per axis and a positive half width".into(),
        ));
    }
    let jac = f.differentiate();
    let mut base = xbar.to_vec();
    base.extend_from_slice(ybar);
    let r0 = norm(&f.eval(&base)?);
    if r0 > newton.tol {
        return Err(Error::InvalidInput(format!(
            "F(x̄, ȳ) has norm {r0:e}, above the tolerance {:e}",
            newton.tol
        )));
    }

    let probe = Probe {
        map: f,
        jac: &jac,
        center: &base,
        cols: n..n + p,
        split: Some(n),
        tag: point_tag(&base) ^ 0x1f,
    };
    let levels = probe.run(s)?;
    let condition = NuEstimate::from_levels(&base, &levels, s);
    if !matches!(condition.verdict, NuVerdict::Infinite) && condition.last() < s.eps_regular {
        return Err(Error::ConditionFails {
            estimate: condition.last(),
            threshold: s.eps_regular,
        });
    }

    let g = grid.points_per_axis;
    let h = grid.step();
    let total = g.pow(n as u32);
    let unflatten = |mut k: usize| -> Vec<usize> {
        let mut idx = vec![0; n];
        for d in (0..n).rev() {
            idx[d] = k % g;
            k /= g;
        }
        idx
    };
    let flatten = |idx: &[usize]| idx.iter().fold(0, |acc, &i| acc * g + i);
    let coords = |idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .zip(xbar)
            .map(|(&i, &c)| c - grid.half_width + i as f64 * h)
            .collect()
    };
    let neighbours = |k: usize| -> Vec<usize> {
        let idx = unflatten(k);
        let mut out = Vec::new();
        for d in 0..n {
            for delta in [-1i64, 1] {
                let v = idx[d] as i64 + delta;
                if v >= 0 && (v as usize) < g {
                    let mut j = idx.clone();
                    j[d] = v as usize;
                    out.push(flatten(&j));
                }
            }
        }
        out
    };

    // Breadth-first layers from the centre cell.
    let start = flatten(&vec![g / 2; n]);
    let mut parent = vec![usize::MAX; total];
    let mut depth = vec![usize::MAX; total];
    let mut order = Vec::with_capacity(total);
    let mut queue = VecDeque::from([start]);
    depth[start] = 0;
    while let Some(k) = queue.pop_front() {
        order.push(k);
        for j in neighbours(k) {
            if depth[j] == usize::MAX {
                depth[j] = depth[k] + 1;
                parent[j] = k;
                queue.push_back(j);
            }
        }
    }

    let solve_cell = |x: &[f64], y0: &[f64]| {
        let eval = |y: &[f64]| {
            let mut z = x.to_vec();
            z.extend_from_slice(y);
            f.eval(&z)
        };
        let jy = |y: &[f64]| -> Result<Option<crate::matrix::Matrix>> {
            let mut z = x.to_vec();
            z.extend_from_slice(y);
            Ok(jac.eval_columns(&z, f64::MIN_POSITIVE, n..n + p)?.smooth())
        };
        newton::solve(eval, jy, y0, newton)
    };

    let mut solved: Vec<Option<ImplicitCell>> = vec![None; total];
    let mut layer_start = 0;
    while layer_start < order.len() {
        let d = depth[order[layer_start]];
        let layer_end = order[layer_start..]
            .iter()
            .position(|&k| depth[k] != d)
            .map_or(order.len(), |o| layer_start + o);
        let layer = &order[layer_start..layer_end];
        let results = par::map_slice(layer, |&k| {
            let idx = unflatten(k);
            let x = coords(&idx);
            let y0 = if k == start {
                ybar.to_vec()
            } else {
                warm_start(k, parent[k], &solved, &order[..layer_start], &unflatten).unwrap_or_else(|| ybar.to_vec())
            };
            let out = solve_cell(&x, &y0);
            let ok = out.converged && out.residual <= newton.tol;
            ImplicitCell {
                index: idx,
                x,
                y: out.x,
                residual: out.residual,
                iterations: out.iterations,
                status: if ok { CellStatus::Solved } else { CellStatus::NewtonDiverged },
            }
        });
        for (&k, cell) in layer.iter().zip(results) {
            solved[k] = Some(cell);
        }
        layer_start = layer_end;
    }

    let lip = |c: &ImplicitCell| -> Option<f64> {
        let mut z = c.x.clone();
        z.extend_from_slice(&c.y);
        let fy = jac.eval_columns(&z, f64::MIN_POSITIVE, n..n + p).ok()?.smooth()?;
        let fx = match jac.eval_columns(&z, f64::MIN_POSITIVE, 0..n).ok()? {
            JacobianEval::Smooth(a) => a,
            JacobianEval::NotSmooth => return None,
        };
        let s = fy.conorm();
        (s > 0.0).then(|| fx.op_norm() / s)
    };
    let local: Vec<Option<f64>> = par::map_range(total, |k| {
        solved[k]
            .as_ref()
            .filter(|c| c.status == CellStatus::Solved)
            .and_then(lip)
    });
    let mut continuity = ContinuityCheck {
        edges_checked: 0,
        edges_skipped: 0,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    for k in 0..total {
        for j in neighbours(k).into_iter().filter(|&j| j > k) {
            let (a, b) = (solved[k].as_ref().unwrap(), solved[j].as_ref().unwrap());
            if a.status != CellStatus::Solved || b.status != CellStatus::Solved {
                continue;
            }
            let l = match (local[k], local[j]) {
                (Some(u), Some(v)) => u.max(v),
                (Some(u), None) | (None, Some(u)) => u,
                (None, None) => {
                    continuity.edges_skipped += 1;
                    continue;
                }
            };
            continuity.edges_checked += 1;
            let bound = 2.0 * h * l;
            let gap = dist(&a.y, &b.y);
            let ratio = if bound > 0.0 {
                gap / bound
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            continuity.max_ratio = continuity.max_ratio.max(ratio);
            if ratio > 1.0 {
                continuity.violations.push((k, j));
            }
        }
    }

    let cells = order.iter().map(|&k| solved[k].clone().unwrap()).collect();
    Ok(ImplicitTable {
        condition,
        step: h,
        cells,
        continuity,
        newton,
    })
}

/// The parent's value, or else the solved earlier cell nearest in index.
fn warm_start(
    k: usize,
    parent: usize,
    solved: &[Option<ImplicitCell>],
    earlier: &[usize],
    unflatten: &dyn Fn(usize) -> Vec<usize>,
) -> Option<Vec<f64>> {
    let ok = |j: usize| solved[j].as_ref().filter(|c| c.status == CellStatus::Solved);
    if let Some(c) = ok(parent) {
        return Some(c.y.clone());
    }
    let idx = unflatten(k);
    earlier
        .iter()
        .filter_map(|&j| ok(j))
        .min_by_key(|c| c.index.iter().zip(&idx).map(|(a, b)| a.abs_diff(*b)).sum::<usize>())
        .map(|c| c.y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    fn grid() -> ImplicitGrid {
        ImplicitGrid {
            half_width: 0.9,
            points_per_axis: 19,
        }
    }

    #[test]
    fn linear() {
        let f = parse_map("map F(x, y) = (y - x)").unwrap();
        let t = implicit_solve(&f, &[0.0], &[0.0], grid(), NewtonOptions::default(), &Schedule::default()).unwrap();
        assert!(t.all_solved());
        for c in &t.cells {
            assert!((c.y[0] - c.x[0]).abs() < 1e-12);
        }
        assert!(t.continuity.violations.is_empty());
        assert_eq!(t.cells[0].x, vec![0.0]);
    }

    #[test]
    fn cube_root_and_circle() {
        let s = Schedule::default();
        let f = parse_map("map F(x, y) = (cbrt(y) - x)").unwrap();
        let t = implicit_solve(&f, &[0.0], &[0.0], grid(), NewtonOptions::default(), &s).unwrap();
        assert_eq!(t.condition.verdict, NuVerdict::Infinite);
        assert!(t.all_solved());
        for c in &t.cells {
            assert!((c.y[0] - c.x[0].powi(3)).abs() <= 1e-8, "{c:?}");
        }
        assert!(t.continuity.violations.is_empty(), "{:?}", t.continuity);

        let f = parse_map("map F(x, y) = (x^2 + y^2 - 1)").unwrap();
        let t = implicit_solve(&f, &[0.0], &[1.0], grid(), NewtonOptions::default(), &s).unwrap();
        assert!(t.all_solved());
        for c in &t.cells {
            assert!((c.y[0] - (1.0 - c.x[0] * c.x[0]).sqrt()).abs() <= 1e-8);
        }
        assert!(t.continuity.violations.is_empty());
    }

    #[test]
    fn condition_fails_at_fold() {
        let f = parse_map("map F(x, y) = (x^2 + y^2 - 1)").unwrap();
        let e = implicit_solve(&f, &[1.0], &[0.0], grid(), NewtonOptions::default(), &Schedule::default());
        assert!(matches!(e, Err(Error::ConditionFails { .. })), "{e:?}");
    }

    #[test]
    fn two_dimensional_grid() {
        let f = parse_map("map F(a, b, y) = (y - a*b)").unwrap();
        let g = ImplicitGrid {
            half_width: 1.0,
            points_per_axis: 5,
        };
        let t = implicit_solve(&f, &[0.0, 0.0], &[0.0], g, NewtonOptions::default(), &Schedule::default()).unwrap();
        assert_eq!(t.cells.len(), 25);
        for c in &t.cells {
            assert!((c.y[0] - c.x[0] * c.x[1]).abs() < 1e-10);
        }
    }
}
