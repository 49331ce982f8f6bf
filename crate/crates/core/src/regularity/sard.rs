use std::collections::BTreeSet;

use serde::Serialize;

use super::classify::PointClass;
use super::nu::{check_point, estimate_nu_with, quick_nu};
use super::Schedule;
use crate::error::{Error, Result};
use crate::expr::{JacobianDef, MapDef};
use crate::par;
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SardLevel {
    pub grid_resolution: usize,
    pub value_resolution: usize,
    pub grid_points: usize,
    pub critical_points: usize,
    pub undetermined_points: usize,
    pub occupied_cells: usize,
    pub total_cells: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SardReport {
    pub levels: Vec<SardLevel>,
    /// Bounding box of the sampled image, shared by both levels.
    pub value_lo: Vec<f64>,
    pub value_hi: Vec<f64>,
    /// `fraction[1] / fraction[0]`, or 0 when no critical value was found.
    pub ratio: f64,
    pub decreasing: bool,
    /// The fraction at least halved.
    pub halves: bool,
    pub seed: u64,
}

pub(crate) struct Scan {
    /// Critical points and their images.
    pub critical_at: Vec<Vec<f64>>,
    pub critical: Vec<Vec<f64>>,
    pub images: Vec<Vec<f64>>,
    pub points: usize,
    pub undetermined: usize,
}

pub(crate) fn scan(m: &MapDef, jac: &JacobianDef, region: &Region, res: usize, seed: u64) -> Result<Scan> {
    let pts = region.grid(res);
    let (lo, hi) = region.bounds();
    let h = lo.iter().zip(&hi).map(|(a, b)| (b - a) / (res - 1) as f64).fold(f64::INFINITY, f64::min);
    let sched = Schedule::light(h / 4.0, seed);
    let classes = par::try_map_slice(&pts, |x| -> Result<(Vec<f64>, Vec<f64>, PointClass)> {
        let y = m.eval(x)?;
        let class = match quick_nu(jac, x)? {
            Some(v) if v < sched.eps_critical => PointClass::Critical,
            Some(v) if v < sched.eps_regular => PointClass::Undetermined { estimate: v },
            Some(v) => PointClass::Regular {
                nu: super::NuLimit::Finite(v),
            },
            None => PointClass::from_estimate(&estimate_nu_with(m, jac, x, &sched)?, &sched),
        };
        Ok((x.clone(), y, class))
    })?;
    let mut out = Scan {
        critical_at: Vec::new(),
        critical: Vec::new(),
        images: Vec::with_capacity(pts.len()),
        points: pts.len(),
        undetermined: 0,
    };
    for (x, y, c) in classes {
        match c {
            PointClass::Critical => {
                out.critical_at.push(x);
                out.critical.push(y.clone());
            }
            PointClass::Undetermined { .. } => out.undetermined += 1,
            PointClass::Regular { .. } => {}
        }
        out.images.push(y);
    }
    Ok(out)
}

/// Empirical Sard check: the share of value-space cells hit by critical
/// values, on a grid of `grid_resolution` points per axis with
/// `value_resolution` cells per axis, and again with both doubled.
pub fn sard_scan(
    m: &MapDef,
    region: &Region,
    grid_resolution: usize,
    value_resolution: usize,
    seed: u64,
) -> Result<SardReport> {
    check_point(m, &vec![0.0; region.dim()])?;
    if grid_resolution < 2 || value_resolution < 1 {
        return Err(Error::InvalidInput("grid resolution must be at least 2 and value resolution at least 1".into()));
    }
    let jac = m.differentiate();
    let resolutions = [(grid_resolution, value_resolution), (2 * grid_resolution - 1, 2 * value_resolution)];
    let scans = resolutions
        .iter()
        .map(|&(g, _)| scan(m, &jac, region, g, seed))
        .collect::<Result<Vec<_>>>()?;

    let n = region.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for y in scans.iter().flat_map(|s| &s.images) {
        for d in 0..n {
            lo[d] = lo[d].min(y[d]);
            hi[d] = hi[d].max(y[d]);
        }
    }

    let levels: Vec<SardLevel> = scans
        .iter()
        .zip(resolutions)
        .map(|(s, (g, v))| {
            let cells: BTreeSet<Vec<usize>> = s.critical.iter().map(|y| cell(y, &lo, &hi, v)).collect();
            let total = (v as f64).powi(n as i32);
            SardLevel {
                grid_resolution: g,
                value_resolution: v,
                grid_points: s.points,
                critical_points: s.critical.len(),
                undetermined_points: s.undetermined,
                occupied_cells: cells.len(),
                total_cells: total,
                fraction: cells.len() as f64 / total,
            }
        })
        .collect();
    let (a, b) = (levels[0].fraction, levels[1].fraction);
    let ratio = if a > 0.0 { b / a } else if b > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(SardReport {
        levels,
        value_lo: lo,
        value_hi: hi,
        ratio,
        decreasing: ratio < 1.0,
        halves: ratio <= 0.5 + 1e-12,
        seed,
    })
}

fn cell(y: &[f64], lo: &[f64], hi: &[f64], v: usize) -> Vec<usize> {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&c, (&a, &b))| {
            if b > a {
                (((c - a) / (b - a) * v as f64).floor().max(0.0) as usize).min(v - 1)
            } else {
                0
            }
        })
        .collect()
}
