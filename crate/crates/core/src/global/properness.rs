use serde::Serialize;

use super::Verdict;
use crate::error::{Error, Result};
use crate::expr::MapDef;
use crate::matrix::norm;
use crate::{par, sampling};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperSection {
    pub radii: Vec<f64>,
    /// `min ‖f‖` over the sampled sphere of each radius.
    pub minima: Vec<f64>,
    pub directions: usize,
    pub verdict: Verdict,
    pub seed: u64,
}

/// Relative growth below which a direction counts as bounded.
const BOUNDED_GROWTH: f64 = 0.1;
/// Required ratio between the last and first sphere minima.
const GROWTH_FACTOR: f64 = 2.0;

/// Samples `‖f‖` on spheres of increasing radius along `±e_i` and
/// `sphere_samples` Gaussian directions.
pub fn properness_probe(m: &MapDef, radii: &[f64], sphere_samples: usize, seed: u64) -> Result<ProperSection> {
    let n = m.arity();
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidInput("radii must be positive and strictly increasing, at least two".into()));
    }
    let mut dirs = Vec::with_capacity(2 * n + sphere_samples);
    for a in 0..n {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; n];
            u[a] = s;
            dirs.push(u);
        }
    }
    let mut rng = sampling::stream(seed, 0x5052_4f50);
    dirs.extend((0..sphere_samples).map(|_| sampling::unit_vector(&mut rng, n)));

    // values[d][k] = ‖f(R_k u_d)‖
    let values = par::try_map_slice(&dirs, |u| {
        radii
            .iter()
            .map(|&r| {
                let x: Vec<f64> = u.iter().map(|c| r * c).collect();
                m.eval(&x).map(|y| norm(&y))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let minima: Vec<f64> = (0..radii.len())
        .map(|k| values.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
        .collect();

    let bounded = values.iter().enumerate().find(|(_, v)| {
        let (first, last) = (v[0], v[v.len() - 1]);
        last <= (1.0 + BOUNDED_GROWTH) * first + 1e-12
    });
    let verdict = if let Some((d, v)) = bounded {
        let pts = radii.iter().map(|&r| dirs[d].iter().map(|c| r * c).collect()).collect();
        Verdict::fail(pts, v.clone(), "‖f‖ stays bounded along this direction")
    } else {
        let (first, last) = (minima[0], minima[minima.len() - 1]);
        let increasing = minima.windows(2).all(|w| w[1] > w[0]);
        if increasing && last > 0.0 && last >= GROWTH_FACTOR * first {
            Verdict::pass()
        } else {
            Verdict::inconclusive("sphere minima do not grow steadily")
        }
    };
    Ok(ProperSection {
        radii: radii.to_vec(),
        minima,
        directions: dirs.len(),
        verdict,
        seed,
    })
}
