use rand::Rng;
use serde::Serialize;

use super::levels::finite_difference_lipschitz;
use super::nu::{check_point, point_tag};
use crate::error::{Error, Result};
use crate::expr::{JacobianEval, MapDef, DEFAULT_GUARD_TOL};
use crate::matrix::{dist, hull_conorm_inf, norm, HullSample, Matrix};
use crate::{par, sampling};

const HULL_TOL: f64 = 1e-6;
const JITTER_TRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MvtInclusion {
    pub holds: bool,
    /// Distance from `f(x′) − f(x)` to the sampled hull (or to the
    /// discrete set when not convexified).
    pub distance: f64,
    pub tolerance: f64,
    pub difference: Vec<f64>,
    pub convexified: bool,
    /// Segment points with a usable Jacobian.
    pub samples_used: usize,
    /// Segment points dropped because they stayed on a guard.
    pub skipped: usize,
    pub seed: u64,
}

/// Tests `f(x′) − f(x) ∈ co{df(p)(x′ − x) : p ∈ [x, x′]}` with `samples`
/// points along the segment.
///
/// With `convexify = false` the membership is tested against the
/// discrete set itself, which is the statement that fails for `−|x|`.
pub fn mvt_inclusion_check(
    m: &MapDef,
    x: &[f64],
    xp: &[f64],
    samples: usize,
    seed: u64,
    convexify: bool,
) -> Result<MvtInclusion> {
    check_point(m, x)?;
    check_point(m, xp)?;
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 segment samples".into()));
    }
    let jac = m.differentiate();
    let d: Vec<f64> = xp.iter().zip(x).map(|(a, b)| a - b).collect();
    let len = norm(&d);
    let difference: Vec<f64> = {
        let (fx, fxp) = (m.eval(x)?, m.eval(xp)?);
        fxp.iter().zip(&fx).map(|(a, b)| a - b).collect()
    };
    let tolerance = HULL_TOL * len;
    let guard_tol = DEFAULT_GUARD_TOL * len.max(f64::MIN_POSITIVE);
    let tag = point_tag(x) ^ point_tag(xp).rotate_left(17);

    let images = par::try_map_range(samples, |i| -> Result<Option<Vec<f64>>> {
        let t = i as f64 / (samples - 1) as f64;
        let mut rng = sampling::stream(seed, sampling::stream_id(&[tag, i as u64]));
        let step = 0.25 / (samples - 1) as f64;
        for attempt in 0..=JITTER_TRIES {
            let tt = if attempt == 0 {
                t
            } else {
                (t + step * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0)
            };
            let p: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + tt * b).collect();
            if let JacobianEval::Smooth(a) = jac.eval(&p, guard_tol)? {
                return Ok(Some(a.mul_vec(&d)));
            }
        }
        Ok(None)
    })?;
    let skipped = images.iter().filter(|v| v.is_none()).count();
    let pts: Vec<Vec<f64>> = images
        .into_iter()
        .flatten()
        .map(|v| v.iter().zip(&difference).map(|(a, b)| a - b).collect())
        .collect();
    if pts.is_empty() {
        return Err(Error::SegmentOnGuard);
    }
    let distance = if convexify {
        norm(&min_norm_in_hull(&pts).0)
    } else {
        pts.iter().map(|p| norm(p)).fold(f64::INFINITY, f64::min)
    };
    Ok(MvtInclusion {
        holds: distance <= tolerance,
        distance,
        tolerance,
        difference,
        convexified: convexify,
        samples_used: pts.len(),
        skipped,
        seed,
    })
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
/// Returns the point and its convex weights.
pub fn min_norm_in_hull(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = points.len();
    assert!(k > 0, "empty point set");
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
    let start = (0..k)
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let combine = |set: &[usize], w: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; points[0].len()];
        for (&i, &wi) in set.iter().zip(w) {
            for (a, b) in v.iter_mut().zip(&points[i]) {
                *a += wi * b;
            }
        }
        v
    };
    let max_major = 10 * (k + points[0].len()) + 10;
    for _ in 0..max_major {
        let xv = combine(&set, &lambda);
        let xx = dot(&xv, &xv);
        let (j, best) = (0..k)
            .map(|j| (j, dot(&xv, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best >= xx - 1e-12 * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let Some(mu) = affine_min_norm(points, &set) else {
                set.pop();
                lambda.pop();
                return finish(k, &set, &lambda, combine(&set, &lambda));
            };
            if mu.iter().all(|&m| m > 1e-14) {
                lambda = mu;
                break;
            }
            let theta = lambda
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= 1e-14)
                .map(|(&l, &m)| l / (l - m))
                .fold(1.0, f64::min);
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut i = 0;
            while i < set.len() {
                if lambda[i] <= 1e-14 {
                    set.remove(i);
                    lambda.remove(i);
                } else {
                    i += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
    }
    let xv = combine(&set, &lambda);
    finish(k, &set, &lambda, xv)
}

fn finish(k: usize, set: &[usize], lambda: &[f64], x: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut w = vec![0.0; k];
    for (&i, &l) in set.iter().zip(lambda) {
        w[i] = l;
    }
    (x, w)
}

/// Weights minimizing `‖Σ μ_i p_i‖` subject to `Σ μ_i = 1` on `set`.
fn affine_min_norm(points: &[Vec<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let s = set.len();
    let mut a = Matrix::zeros(s + 1, s + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a.set(r, c, points[i].iter().zip(&points[j]).map(|(u, v)| u * v).sum());
        }
        a.set(r, s, 1.0);
        a.set(s, r, 1.0);
    }
    let mut b = vec![0.0; s + 1];
    b[s] = 1.0;
    let sol = a.solve(&b)?;
    sol.iter().all(|v| v.is_finite()).then(|| sol[..s].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MvtInequality {
    /// Sampled `inf σ` over the hull of Jacobians on the ball.
    pub estimate: f64,
    pub lipschitz: f64,
    /// Largest distance from a pair point to the nearest Jacobian sample.
    pub cover: f64,
    pub slack: f64,
    /// `max(estimate − slack, 0)`.
    pub bound: f64,
    pub min_ratio: f64,
    pub pairs: usize,
    pub jacobian_samples: usize,
    pub holds: bool,
    pub seed: u64,
}

const INEQ_JACOBIANS: usize = 192;
const INEQ_SPHERE: usize = 64;

/// Checks `‖f(x′) − f(x)‖ ≥ (inf σ over co df(B_r(c)) − slack)·‖x′ − x‖`
/// on `pair_samples` random pairs in the ball.
pub fn mvt_inequality_check(m: &MapDef, center: &[f64], r: f64, pair_samples: usize, seed: u64) -> Result<MvtInequality> {
    check_point(m, center)?;
    if !(r > 0.0) || pair_samples == 0 {
        return Err(Error::InvalidInput("need a positive radius and pair count".into()));
    }
    let jac = m.differentiate();
    let tag = point_tag(center) ^ 0x4d56_5449;
    let guard_tol = DEFAULT_GUARD_TOL * r;

    let mut rng = sampling::stream(seed, tag);
    let mut pts = Vec::new();
    let mut mats = Vec::new();
    let mut streak = 0;
    while pts.len() < INEQ_JACOBIANS + INEQ_SPHERE {
        let p = if pts.len() < INEQ_JACOBIANS {
            sampling::in_ball(&mut rng, center, r)
        } else {
            let u = sampling::unit_vector(&mut rng, center.len());
            center.iter().zip(&u).map(|(c, d)| c + r * (1.0 - 1e-9) * d).collect()
        };
        match jac.eval(&p, guard_tol)? {
            JacobianEval::Smooth(a) => {
                streak = 0;
                pts.push(p);
                mats.push(a);
            }
            JacobianEval::NotSmooth => {
                streak += 1;
                if streak >= 1000 {
                    return Err(Error::AllSamplesOnGuard { attempts: streak, radius: r });
                }
            }
        }
    }
    let estimate = hull_conorm_inf(&HullSample::new(mats.clone(), sampling::stream_id(&[seed, tag, 1]), 256))?.value;
    let lipschitz = pairwise_lipschitz(&pts, &mats).max(finite_difference_lipschitz(&pts, &mats));

    let pair_tag = sampling::stream_id(&[tag, 2]);
    let ratios = par::try_map_range(pair_samples, |i| -> Result<(f64, f64)> {
        let mut rng = sampling::stream(seed, sampling::stream_id(&[pair_tag, i as u64]));
        let a = sampling::in_ball(&mut rng, center, r);
        let b = sampling::in_ball(&mut rng, center, r);
        let cover = [&a, &b]
            .iter()
            .map(|q| pts.iter().map(|p| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let ratio = dist(&m.eval(&a)?, &m.eval(&b)?) / dist(&a, &b);
        Ok((ratio, cover))
    })?;
    let min_ratio = ratios.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let cover = ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    let slack = lipschitz * cover;
    let bound = (estimate - slack).max(0.0);
    Ok(MvtInequality {
        estimate,
        lipschitz,
        cover,
        slack,
        bound,
        min_ratio,
        pairs: pair_samples,
        jacobian_samples: mats.len(),
        holds: min_ratio >= bound - 1e-6,
        seed,
    })
}

fn pairwise_lipschitz(points: &[Vec<f64>], mats: &[Matrix]) -> f64 {
    let rows = par::map_range(points.len(), |i| {
        (i + 1..points.len())
            .filter_map(|j| {
                let d = dist(&points[i], &points[j]);
                (d > 0.0).then(|| mats[i].sub(&mats[j]).op_norm() / d)
            })
            .fold(0.0, f64::max)
    });
    rows.into_iter().fold(0.0, f64::max)
}
