//! Per-radius hull estimates shared by `ν_f` and the implicit-function
//! condition.

use std::ops::Range;

use rand::Rng;

use super::Schedule;
use crate::error::{Error, Result};
use crate::expr::{JacobianDef, JacobianEval, MapDef};
use crate::matrix::{dist, hull_conorm_inf, HullSample, Matrix};
use crate::{par, sampling};

const MAX_REJECTIONS: usize = 1000;
const GROWTH_RATIO: f64 = 1.25;

/// Where to sample and which Jacobian block to use.
pub(crate) struct Probe<'a> {
    pub map: &'a MapDef,
    pub jac: &'a JacobianDef,
    pub center: &'a [f64],
    /// Columns of the Jacobian forming the square block of interest.
    pub cols: Range<usize>,
    /// When set, coordinates `..split` and `split..` are drawn from
    /// separate balls of the same radius (product neighbourhood).
    pub split: Option<usize>,
    pub tag: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Level {
    pub radius: f64,
    pub estimate: f64,
    pub lipschitz: f64,
    pub slack: f64,
    pub points: Vec<Vec<f64>>,
    pub rejected: usize,
}

impl Probe<'_> {
    fn draw<R: Rng>(&self, rng: &mut R, r: f64) -> Vec<f64> {
        match self.split {
            None => sampling::in_ball(rng, self.center, r),
            Some(s) => {
                let mut a = sampling::in_ball(rng, &self.center[..s], r);
                a.extend(sampling::in_ball(rng, &self.center[s..], r));
                a
            }
        }
    }

    /// Samples `count` points of the neighbourhood of radius `r` off the
    /// guards, with their Jacobian blocks.
    pub fn smooth_samples(
        &self,
        r: f64,
        count: usize,
        guard_tol: f64,
        stream: u64,
        seed: u64,
    ) -> Result<(Vec<Vec<f64>>, Vec<Matrix>, usize)> {
        let mut rng = sampling::stream(seed, stream);
        let mut pts = Vec::with_capacity(count);
        let mut mats = Vec::with_capacity(count);
        let (mut streak, mut rejected) = (0usize, 0usize);
        while pts.len() < count {
            let p = self.draw(&mut rng, r);
            let ok = self.map.eval(&p).is_ok();
            let eval = if ok {
                self.jac.eval_columns(&p, guard_tol * r, self.cols.clone())?
            } else {
                JacobianEval::NotSmooth
            };
            match eval {
                JacobianEval::Smooth(a) => {
                    streak = 0;
                    pts.push(p);
                    mats.push(a);
                }
                JacobianEval::NotSmooth => {
                    streak += 1;
                    rejected += 1;
                    if streak >= MAX_REJECTIONS {
                        return Err(Error::AllSamplesOnGuard {
                            attempts: streak,
                            radius: r,
                        });
                    }
                }
            }
        }
        Ok((pts, mats, rejected))
    }

    pub fn level(&self, k: usize, s: &Schedule) -> Result<Level> {
        let r = s.radius(k);
        let stream = sampling::stream_id(&[self.tag, k as u64]);
        let (points, jacobians, rejected) = self.smooth_samples(r, s.samples, s.guard_tol, stream, s.seed)?;
        let hull = HullSample::new(
            jacobians.clone(),
            sampling::stream_id(&[s.seed, self.tag, k as u64, 0x57]),
            s.hull_samples,
        );
        let estimate = hull_conorm_inf(&hull)?.value;
        let lipschitz = finite_difference_lipschitz(&points, &jacobians);
        Ok(Level {
            radius: r,
            estimate,
            lipschitz,
            slack: 2.0 * lipschitz * r,
            points,
            rejected,
        })
    }

    /// Levels `0..=K`, extended while the estimate keeps growing
    /// geometrically and has not yet passed `nu_cap`.
    pub fn run(&self, s: &Schedule) -> Result<Vec<Level>> {
        s.validate()?;
        let mut levels = par::try_map_range(s.levels + 1, |k| self.level(k, s))?;
        while levels.len() <= s.max_levels && keeps_growing(&levels, s) {
            let k = levels.len();
            levels.push(self.level(k, s)?);
        }
        Ok(levels)
    }
}

fn keeps_growing(levels: &[Level], s: &Schedule) -> bool {
    let n = levels.len();
    if n < 3 {
        return false;
    }
    let (a, b, c) = (levels[n - 3].estimate, levels[n - 2].estimate, levels[n - 1].estimate);
    c >= s.eps_regular && c <= s.nu_cap && b > 0.0 && a > 0.0 && c / b >= GROWTH_RATIO && b / a >= GROWTH_RATIO
}

/// Largest observed `‖J(p) − J(q)‖ / ‖p − q‖` over consecutive samples.
pub(crate) fn finite_difference_lipschitz(points: &[Vec<f64>], jacobians: &[Matrix]) -> f64 {
    points
        .windows(2)
        .zip(jacobians.windows(2))
        .filter_map(|(p, j)| {
            let d = dist(&p[0], &p[1]);
            (d > 0.0).then(|| j[0].sub(&j[1]).op_norm() / d)
        })
        .fold(0.0, f64::max)
}
