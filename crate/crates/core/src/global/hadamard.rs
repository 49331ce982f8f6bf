use serde::Serialize;

use super::{box_half_widths, nu_hat, Verdict};
use crate::error::{Error, Result};
use crate::expr::{Expr, MapDef};
use crate::matrix::norm;
use crate::regularity::Schedule;
use crate::{par, sampling};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardUniform {
    pub delta: f64,
    pub min_nu: f64,
    pub argmin: Vec<f64>,
    pub boxes: usize,
    pub samples_per_box: usize,
    pub verdict: Verdict,
    pub seed: u64,
}

/// Sample points: the origin, then `samples` uniform points in each box
/// `[−2^k, 2^k]ⁿ`, `k = 0..=boxes`.
fn box_points(n: usize, boxes: usize, samples: usize, seed: u64, tag: u64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; n]];
    for (k, half) in box_half_widths(boxes).into_iter().enumerate() {
        let mut rng = sampling::stream(seed, sampling::stream_id(&[tag, k as u64]));
        pts.extend((0..samples).map(|_| sampling::in_box(&mut rng, &vec![-half; n], &vec![half; n])));
    }
    pts
}

/// Looks for a point with `ν̂ < δ`.
pub fn hadamard_uniform_check(m: &MapDef, delta: f64, boxes: usize, samples: usize, seed: u64) -> Result<HadamardUniform> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let jac = m.differentiate();
    let s = Schedule::default().with_seed(seed);
    let pts = box_points(m.arity(), boxes, samples, seed, 0x4855);
    let nus = par::try_map_slice(&pts, |x| nu_hat(m, &jac, x, &s))?;
    let (i, &min_nu) = nus.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("origin is sampled");
    let verdict = if min_nu < delta {
        Verdict::fail(vec![pts[i].clone()], vec![min_nu], "estimated nu below delta")
    } else {
        Verdict::pass()
    };
    Ok(HadamardUniform {
        delta,
        min_nu,
        argmin: pts[i].clone(),
        boxes,
        samples_per_box: samples,
        verdict,
        seed,
    })
}

/// `∫ c` over one doubling window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub from: f64,
    pub to: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardIntegral {
    pub c: String,
    pub t_max: f64,
    /// `min (ν̂(x) − c(‖x‖))` over the samples.
    pub min_slack: f64,
    pub argmin: Vec<f64>,
    pub windows: Vec<Window>,
    /// Every window increment stays above this share of the first one.
    pub increment_floor: f64,
    pub divergence_trend: bool,
    pub verdict: Verdict,
    pub samples: usize,
    pub seed: u64,
}

const SIMPSON_INTERVALS: usize = 64;
const INCREMENT_FLOOR: f64 = 0.1;

fn simpson(c: &Expr, a: f64, b: f64) -> Result<f64> {
    let h = (b - a) / SIMPSON_INTERVALS as f64;
    let mut acc = 0.0;
    for i in 0..=SIMPSON_INTERVALS {
        let w = if i == 0 || i == SIMPSON_INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * eval_c(c, a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

fn eval_c(c: &Expr, t: f64) -> Result<f64> {
    let v = c
        .eval(&[t])
        .map_err(|kind| Error::Domain { component: 0, kind })?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidInput(format!("c({t}) = {v} is not positive")));
    }
    Ok(v)
}

/// Checks `ν̂(x) ≥ c(‖x‖)` on samples with `‖x‖ ≤ t_max` and the
/// divergence trend of `∫₀^T c` over windows `[0,1], [1,2], [2,4], …`.
pub fn hadamard_integral_check(m: &MapDef, c: &Expr, t_max: f64, samples: usize, seed: u64) -> Result<HadamardIntegral> {
    if !(t_max >= 2.0) {
        return Err(Error::InvalidInput("t_max must be at least 2".into()));
    }
    if c.max_var().is_some_and(|v| v > 0) {
        return Err(Error::InvalidInput("c must be a function of one variable".into()));
    }
    let n = m.arity();
    let jac = m.differentiate();
    let s = Schedule::default().with_seed(seed);

    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() < t_max {
        edges.push((2.0 * edges.last().unwrap()).min(t_max));
    }
    let windows = edges
        .windows(2)
        .map(|w| {
            Ok(Window {
                from: w[0],
                to: w[1],
                integral: simpson(c, w[0], w[1])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // A truncated final window is not comparable with the others.
    let full: Vec<&Window> = windows.iter().filter(|w| w.to - w.from >= 0.5 * w.from.max(1.0)).collect();
    let divergence_trend = full.len() >= 2 && full.iter().all(|w| w.integral >= INCREMENT_FLOOR * full[0].integral);

    let mut rng = sampling::stream(seed, 0x494e_5447);
    let mut pts = vec![vec![0.0; n]];
    pts.extend((0..samples).map(|_| {
        let u = sampling::unit_vector(&mut rng, n);
        let t = t_max * rand::Rng::random::<f64>(&mut rng);
        u.into_iter().map(|v| v * t).collect::<Vec<f64>>()
    }));
    let slacks = par::try_map_slice(&pts, |x| Ok::<_, Error>(nu_hat(m, &jac, x, &s)? - eval_c(c, norm(x))?))?;
    let (i, &min_slack) = slacks.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("origin is sampled");

    let verdict = if min_slack < 0.0 {
        Verdict::fail(vec![pts[i].clone()], vec![min_slack], "estimated nu below c(|x|)")
    } else if divergence_trend {
        Verdict::pass()
    } else {
        Verdict::inconclusive("window increments of the integral of c shrink")
    };
    Ok(HadamardIntegral {
        c: c.display(&["t".to_string()]).to_string(),
        t_max,
        min_slack,
        argmin: pts[i].clone(),
        windows,
        increment_floor: INCREMENT_FLOOR,
        divergence_trend,
        verdict,
        samples,
        seed,
    })
}
