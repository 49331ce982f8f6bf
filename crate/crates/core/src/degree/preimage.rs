use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{JacobianDef, MapDef};
use crate::matrix::{dist, norm, Matrix};
use crate::newton::{self, NewtonOptions};
use crate::par;
use crate::region::Region;
use crate::regularity::{
    classify_point_with, local_inverse_cert_with, LocalInverseCert, NuEstimate, PointClass, Schedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[derive(Default)]
pub struct PreimageOptions {
    /// Grid points per axis of the coarse seeding grid; the fine grid
    /// doubles it. `None` picks a size from the dimension.
    pub grid_resolution: Option<usize>,
    pub newton: NewtonOptions,
    /// Fixed merge radius; `None` uses `2 · tol / σ(df(root))`.
    pub dedup_radius: Option<f64>,
    pub schedule: Schedule,
}


impl PreimageOptions {
    pub fn resolution(&self, n: usize) -> usize {
        self.grid_resolution.unwrap_or(match n {
            1 => 64,
            2 => 24,
            3 => 14,
            _ => 9,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub point: Vec<f64>,
    pub residual: f64,
    pub class: PointClass,
    pub nu: NuEstimate,
    /// Present when a local inverse certificate was obtained.
    pub certificate: Option<LocalInverseCert>,
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreimageSet {
    pub roots: Vec<Root>,
    pub grid_resolutions: [usize; 2],
    /// Newton seeds (grid local minima of the residual) per resolution.
    pub seeds: [usize; 2],
    /// Distinct roots per resolution.
    pub counts: [usize; 2],
}

/// Structured grid over the region's bounding box, keeping the index of
/// every point so axis neighbours can be found.
struct Grid {
    res: usize,
    n: usize,
    lo: Vec<f64>,
    step: Vec<f64>,
}

impl Grid {
    fn new(region: &Region, res: usize) -> Grid {
        let (lo, hi) = region.bounds();
        let step = lo.iter().zip(&hi).map(|(a, b)| (b - a) / (res - 1) as f64).collect();
        Grid {
            res,
            n: lo.len(),
            lo,
            step,
        }
    }

    fn len(&self) -> usize {
        self.res.pow(self.n as u32)
    }

    fn point(&self, mut k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for d in (0..self.n).rev() {
            x[d] = self.lo[d] + (k % self.res) as f64 * self.step[d];
            k /= self.res;
        }
        x
    }

    fn neighbours(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.n);
        let mut stride = 1;
        for _ in 0..self.n {
            let i = (k / stride) % self.res;
            if i > 0 {
                out.push(k - stride);
            }
            if i + 1 < self.res {
                out.push(k + stride);
            }
            stride *= self.res;
        }
        out
    }
}

/// Grid points where `‖f − y‖` is no larger than at any axis neighbour.
fn seeds(m: &MapDef, region: &Region, y: &[f64], res: usize) -> Vec<Vec<f64>> {
    let grid = Grid::new(region, res);
    let resid: Vec<f64> = par::map_range(grid.len(), |k| {
        let x = grid.point(k);
        if !region.contains(&x) {
            return f64::NAN;
        }
        m.residual(&x, y).map(|r| norm(&r)).unwrap_or(f64::NAN)
    });
    (0..grid.len())
        .filter(|&k| {
            let r = resid[k];
            !r.is_nan() && grid.neighbours(k).iter().all(|&j| resid[j].is_nan() || r <= resid[j])
        })
        .map(|k| grid.point(k))
        .collect()
}

pub(crate) fn newton_root(m: &MapDef, jac: &JacobianDef, y: &[f64], x0: &[f64], opts: NewtonOptions) -> Option<(Vec<f64>, f64)> {
    let out = newton::solve(
        |x| m.residual(x, y),
        |x| Ok(jac.eval(x, f64::MIN_POSITIVE)?.smooth()),
        x0,
        opts,
    );
    (out.converged && out.residual <= opts.tol).then_some((out.x, out.residual))
}

fn merge_radius(jac: &JacobianDef, x: &[f64], opts: &PreimageOptions, fallback: f64) -> f64 {
    if let Some(r) = opts.dedup_radius {
        return r;
    }
    let sigma = jac
        .eval(x, f64::MIN_POSITIVE)
        .ok()
        .and_then(|e| e.smooth())
        .map(|a: Matrix| a.conorm())
        .unwrap_or(0.0);
    let r = 2.0 * opts.newton.tol / sigma;
    if r.is_finite() && r <= fallback {
        r.max(f64::MIN_POSITIVE)
    } else {
        fallback
    }
}

/// Adds `(x, residual)` unless it lies within merge distance of a kept root.
fn merge(kept: &mut Vec<(Vec<f64>, f64, f64)>, x: Vec<f64>, residual: f64, radius: f64) {
    if !kept.iter().any(|(p, _, r)| dist(p, &x) <= radius.max(*r)) {
        kept.push((x, residual, radius));
    }
}

pub(crate) fn roots_at(
    m: &MapDef,
    jac: &JacobianDef,
    region: &Region,
    y: &[f64],
    res: usize,
    opts: &PreimageOptions,
) -> (Vec<(Vec<f64>, f64, f64)>, usize) {
    let starts = seeds(m, region, y, res);
    let fallback = 1e-6 * region.diameter();
    let found = par::map_slice(&starts, |x0| {
        newton_root(m, jac, y, x0, opts.newton)
            .filter(|(x, _)| region.contains(x))
            .map(|(x, r)| {
                let rad = merge_radius(jac, &x, opts, fallback);
                (x, r, rad)
            })
    });
    let mut kept = Vec::new();
    for (x, r, rad) in found.into_iter().flatten() {
        merge(&mut kept, x, r, rad);
    }
    (kept, starts.len())
}

/// Solves `f(x) = y` in `region` from grid-seeded Newton runs at two
/// resolutions.
///
/// A root count that grows with the resolution is reported as
/// [`Error::PossiblyInfinitePreimage`]. Each kept root is classified and
/// gets a local inverse certificate attempt; certified roots are marked
/// isolated.
pub fn find_preimages(m: &MapDef, region: &Region, y: &[f64], opts: &PreimageOptions) -> Result<PreimageSet> {
    let n = m.arity();
    if !m.is_square() || region.dim() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if region.dim() != n { region.dim() } else { y.len() },
        });
    }
    let g = opts.resolution(n);
    if g < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let jac = m.differentiate();
    let (coarse, coarse_seeds) = roots_at(m, &jac, region, y, g, opts);
    let (fine, fine_seeds) = roots_at(m, &jac, region, y, 2 * g, opts);
    if fine.len() > coarse.len() {
        return Err(Error::PossiblyInfinitePreimage {
            coarse: coarse.len(),
            fine: fine.len(),
        });
    }
    let counts = [coarse.len(), fine.len()];
    let mut kept = fine;
    for (x, r, rad) in coarse {
        merge(&mut kept, x, r, rad);
    }
    let s = opts.schedule;
    let roots = par::try_map_slice(&kept, |(x, residual, _)| -> Result<Root> {
        let (class, nu) = classify_point_with(m, &jac, x, &s)?;
        let certificate = if class.is_regular() {
            local_inverse_cert_with(m, &nu, &s).ok()
        } else {
            None
        };
        Ok(Root {
            point: x.clone(),
            residual: *residual,
            class,
            nu,
            isolated: certificate.is_some(),
            certificate,
        })
    })?;
    Ok(PreimageSet {
        roots,
        grid_resolutions: [g, 2 * g],
        seeds: [coarse_seeds, fine_seeds],
        counts,
    })
}
