use serde::Serialize;

use super::nu_hat;
use crate::error::{Error, Result};
use crate::expr::{JacobianDef, MapDef};
use crate::matrix::{dist, norm};
use crate::regularity::Schedule;
use crate::{par, sampling};

#[derive(Debug, Clone, PartialEq)]
pub struct KinfOptions {
    pub rays: usize,
    /// Increasing radii along each probe.
    pub radii: Vec<f64>,
    /// Extra user-supplied sequences with `‖x_k‖ → ∞`.
    pub sequences: Vec<Vec<Vec<f64>>>,
    pub descent_iters: usize,
    pub seed: u64,
}

impl Default for KinfOptions {
    fn default() -> Self {
        KinfOptions {
            rays: 16,
            radii: (0..8).map(|k| 2f64.powi(2 * k + 1)).collect(),
            sequences: Vec::new(),
            descent_iters: 40,
            seed: 0,
        }
    }
}

/// A candidate asymptotic critical value with the path that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinfCluster {
    pub candidate: Vec<f64>,
    pub source: String,
    pub norms: Vec<f64>,
    /// `‖x_k‖ · ν̂(x_k)` along the path.
    pub products: Vec<f64>,
    /// Paths merged into this cluster.
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinfEvidence {
    pub clusters: Vec<KinfCluster>,
    pub paths_probed: usize,
    pub rays: usize,
    pub radii: Vec<f64>,
    pub note: &'static str,
    pub seed: u64,
}

const CONVERGENCE_TOL: f64 = 0.05;
const PRODUCT_DECAY: f64 = 0.1;

/// Tracks `f(x_k)` and `‖x_k‖ ν̂(x_k)` along rays, descent curves on the
/// spheres towards `f(R_max u)`, and any supplied sequences, and reports
/// the limits where `f` settles while the product tends to zero.
///
/// An empty result means no evidence was found, not that `K_∞` is empty.
pub fn kinf_probe(m: &MapDef, opts: &KinfOptions) -> Result<KinfEvidence> {
    let n = m.arity();
    if opts.radii.len() < 3 || opts.radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("need at least three increasing radii".into()));
    }
    let jac = m.differentiate();
    let s = Schedule::default().with_seed(opts.seed);

    let mut dirs = Vec::new();
    for a in 0..n {
        for sign in [1.0, -1.0] {
            let mut u = vec![0.0; n];
            u[a] = sign;
            dirs.push(u);
        }
    }
    let mut rng = sampling::stream(opts.seed, 0x4b49_4e46);
    dirs.extend((0..opts.rays).map(|_| sampling::unit_vector(&mut rng, n)));

    let mut paths: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (i, u) in dirs.iter().enumerate() {
        paths.push((format!("ray {i}"), opts.radii.iter().map(|&r| u.iter().map(|c| r * c).collect()).collect()));
    }
    let curves = par::try_map_slice(&dirs, |u| descent_curve(m, &jac, u, &opts.radii, opts.descent_iters))?;
    for (i, c) in curves.into_iter().enumerate() {
        paths.push((format!("descent {i}"), c));
    }
    for (i, q) in opts.sequences.iter().enumerate() {
        if q.iter().any(|x| x.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: q.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
            });
        }
        paths.push((format!("sequence {i}"), q.clone()));
    }

    let found = par::try_map_slice(&paths, |(name, xs)| -> Result<Option<KinfCluster>> {
        if xs.len() < 3 {
            return Ok(None);
        }
        let ys = xs.iter().map(|x| m.eval(x)).collect::<Result<Vec<_>>>()?;
        let norms: Vec<f64> = xs.iter().map(|x| norm(x)).collect();
        let products = xs
            .iter()
            .zip(&norms)
            .map(|(x, r)| Ok(r * nu_hat(m, &jac, x, &s)?))
            .collect::<Result<Vec<f64>>>()?;
        let k = ys.len();
        let last = &ys[k - 1];
        let settles = dist(last, &ys[k - 2]) <= CONVERGENCE_TOL * (1.0 + norm(last))
            && dist(last, &ys[k - 2]) <= dist(&ys[1], &ys[0]) + 1e-12;
        let escapes = norms[k - 1] > 4.0 * norms[0];
        let vanishes = products[k - 1] <= PRODUCT_DECAY * products[0].max(1e-300) && (products[k - 1] < products[k - 2] || products[k - 1] == 0.0);
        Ok((settles && escapes && vanishes).then(|| KinfCluster {
            candidate: last.clone(),
            source: name.clone(),
            norms,
            products,
            members: 1,
        }))
    })?;

    let mut clusters: Vec<KinfCluster> = Vec::new();
    for c in found.into_iter().flatten() {
        match clusters
            .iter_mut()
            .find(|k| dist(&k.candidate, &c.candidate) <= 2.0 * CONVERGENCE_TOL * (1.0 + norm(&k.candidate)))
        {
            Some(k) => k.members += 1,
            None => clusters.push(c),
        }
    }
    Ok(KinfEvidence {
        clusters,
        paths_probed: paths.len(),
        rays: dirs.len(),
        radii: opts.radii.clone(),
        note: "rays, sphere descent curves and supplied sequences only; empty means no evidence found",
        seed: opts.seed,
    })
}

/// For each radius, projected gradient descent of `½‖f(x) − f(R_max u)‖²`
/// on the sphere, warm-started from the previous radius.
fn descent_curve(m: &MapDef, jac: &JacobianDef, u: &[f64], radii: &[f64], iters: usize) -> Result<Vec<Vec<f64>>> {
    let r_max = *radii.last().expect("radii checked");
    let far: Vec<f64> = u.iter().map(|c| r_max * c).collect();
    let target = m.eval(&far)?;
    let project = |x: &[f64], r: f64| -> Vec<f64> {
        let l = norm(x);
        if l > 0.0 {
            x.iter().map(|c| c * r / l).collect()
        } else {
            u.iter().map(|c| c * r).collect()
        }
    };
    let objective = |x: &[f64]| -> f64 { m.eval(x).map(|y| dist(&y, &target)).unwrap_or(f64::INFINITY) };
    let mut out = Vec::with_capacity(radii.len());
    let mut x: Vec<f64> = u.to_vec();
    for &r in radii {
        x = project(&x, r);
        let mut fx = objective(&x);
        for _ in 0..iters {
            let Some(a) = jac.eval(&x, crate::expr::DEFAULT_GUARD_TOL)?.smooth() else {
                break;
            };
            let res: Vec<f64> = m.eval(&x)?.iter().zip(&target).map(|(p, q)| p - q).collect();
            let g = a.transpose().mul_vec(&res);
            let gn = norm(&g);
            if gn == 0.0 {
                break;
            }
            let mut step = r / gn;
            let mut improved = false;
            for _ in 0..40 {
                let cand = project(&x.iter().zip(&g).map(|(p, q)| p - step * q).collect::<Vec<_>>(), r);
                let fc = objective(&cand);
                if fc < fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}
