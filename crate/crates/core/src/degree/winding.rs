use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::BOUNDARY_TOL;
use crate::error::{Error, Result};
use crate::expr::MapDef;
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingResult {
    pub degree: i64,
    /// Total turning angle in radians.
    pub total_angle: f64,
    /// `|total / 2π − degree|`.
    pub residual: f64,
    pub evaluations: usize,
    /// Smallest `‖f(b) − y‖` met along the refined boundary.
    pub min_distance: f64,
}

struct Walker<'a> {
    m: &'a MapDef,
    region: &'a Region,
    y: &'a [f64],
    evaluations: usize,
    min_distance: f64,
    unresolved: bool,
}

impl Walker<'_> {
    fn w(&mut self, t: f64) -> Result<[f64; 2]> {
        let f = self.m.eval(&self.region.boundary_point_2d(t))?;
        self.evaluations += 1;
        let w = [f[0] - self.y[0], f[1] - self.y[1]];
        let d = w[0].hypot(w[1]);
        self.min_distance = self.min_distance.min(d);
        if d <= BOUNDARY_TOL {
            return Err(Error::BoundaryTooClose { distance: d });
        }
        Ok(w)
    }

    /// Turning angle from `t0` to `t1`, bisecting while a step turns by
    /// more than a right angle.
    fn angle(&mut self, t0: f64, w0: [f64; 2], t1: f64, w1: [f64; 2], depth: usize) -> Result<f64> {
        let step = (w0[0] * w1[1] - w0[1] * w1[0]).atan2(w0[0] * w1[0] + w0[1] * w1[1]);
        if step.abs() <= FRAC_PI_2 {
            return Ok(step);
        }
        if depth == 0 {
            self.unresolved = true;
            return Ok(step);
        }
        let tm = 0.5 * (t0 + t1);
        let wm = self.w(tm)?;
        Ok(self.angle(t0, w0, tm, wm, depth - 1)? + self.angle(tm, wm, t1, w1, depth - 1)?)
    }
}

/// Winding number of `f(∂Ω) − y` around the origin.
///
/// The boundary is walked at `samples` equally spaced parameters; any
/// step turning by more than `π/2` is bisected, at most `refine_limit`
/// times.
pub fn winding_degree_2d(
    m: &MapDef,
    region: &Region,
    y: &[f64],
    samples: usize,
    refine_limit: usize,
) -> Result<WindingResult> {
    if m.arity() != 2 || m.dim_out() != 2 || region.dim() != 2 || y.len() != 2 {
        return Err(Error::UnsupportedDimension {
            required: 2,
            actual: m.arity(),
        });
    }
    if samples < 3 {
        return Err(Error::InvalidInput("winding needs at least 3 boundary samples".into()));
    }
    let mut walker = Walker {
        m,
        region,
        y,
        evaluations: 0,
        min_distance: f64::INFINITY,
        unresolved: false,
    };
    let first = walker.w(0.0)?;
    let mut prev = (0.0, first);
    let mut total = 0.0;
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let w = if i == samples { first } else { walker.w(t)? };
        total += walker.angle(prev.0, prev.1, t, w, refine_limit)?;
        prev = (t, w);
    }
    let turns = total / (2.0 * PI);
    let degree = turns.round();
    let residual = (turns - degree).abs();
    if walker.unresolved || residual >= 0.1 {
        return Err(Error::RefinementExhausted { residual });
    }
    Ok(WindingResult {
        degree: degree as i64,
        total_angle: total,
        residual,
        evaluations: walker.evaluations,
        min_distance: walker.min_distance,
    })
}
