//! Sampled infimum of the co-norm over the convex hull of a matrix set.
//!
//! The exact problem is a non-convex minimization over a polytope of
//! matrices. The estimator evaluates σ at every vertex, at seeded
//! Dirichlet(1,…,1) combinations, at the midpoint of the two lowest
//! vertices, and then runs line searches from the incumbent towards each
//! vertex (golden section on σ plus bisection on sign changes of det).
//! Every evaluated matrix lies in the hull, so the result is an upper
//! bound on the true infimum.

use super::Matrix;
use crate::error::{Error, Result};
use crate::sampling;

const REFINE_ROUNDS: usize = 3;
const GOLDEN_ITERS: usize = 48;
const DET_SCAN: usize = 16;
const BISECT_ITERS: usize = 64;

/// Input to [`hull_conorm_inf`].
#[derive(Debug, Clone)]
pub struct HullSample {
    pub vertices: Vec<Matrix>,
    pub weights_seed: u64,
    pub samples: usize,
    /// Extra convex-weight vectors evaluated before sampling, e.g. the
    /// minimizer found on a subset of these vertices (zero-padded).
    pub warm_starts: Vec<Vec<f64>>,
}

impl HullSample {
    pub fn new(vertices: Vec<Matrix>, weights_seed: u64, samples: usize) -> HullSample {
        HullSample {
            vertices,
            weights_seed,
            samples,
            warm_starts: Vec::new(),
        }
    }

    pub fn with_warm_start(mut self, weights: Vec<f64>) -> HullSample {
        self.warm_starts.push(weights);
        self
    }
}

/// Minimum co-norm found and where.
#[derive(Debug, Clone, PartialEq)]
pub struct HullEstimate {
    pub value: f64,
    /// Convex weights over the vertices of the minimizing matrix.
    pub weights: Vec<f64>,
    pub evaluations: usize,
}

struct Search<'a> {
    vertices: &'a [Matrix],
    best: f64,
    best_weights: Vec<f64>,
    best_matrix: Matrix,
    evaluations: usize,
}

impl Search<'_> {
    fn offer(&mut self, weights: Vec<f64>, m: Matrix) {
        self.evaluations += 1;
        let s = m.conorm();
        if s < self.best {
            self.best = s;
            self.best_weights = weights;
            self.best_matrix = m;
        }
    }

    fn offer_weights(&mut self, weights: Vec<f64>) {
        let m = Matrix::combination(self.vertices, &weights);
        self.offer(weights, m);
    }

    /// Golden-section search of σ on the segment from the incumbent to
    /// vertex `i`.
    fn line_search(&mut self, i: usize) {
        let start = self.best_matrix.clone();
        let target = &self.vertices[i];
        let phi = |t: f64| start.lerp(target, t).conorm();
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (phi(c), phi(d));
        let mut evals = 2;
        for _ in 0..GOLDEN_ITERS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = phi(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = phi(d);
            }
            evals += 1;
        }
        let (mut t, mut val) = if fc <= fd { (c, fc) } else { (d, fd) };
        // σ can be flat along most of the segment with a narrow notch where
        // it crosses the singular matrices; locate such crossings through
        // sign changes of the determinant.
        let det = |t: f64| start.lerp(target, t).determinant();
        let mut prev = (0.0, det(0.0));
        for j in 1..=DET_SCAN {
            let tj = j as f64 / DET_SCAN as f64;
            let dj = det(tj);
            evals += 1;
            if prev.1 != 0.0 && dj != 0.0 && (prev.1 < 0.0) != (dj < 0.0) {
                let (mut lo, mut hi, neg_lo) = (prev.0, tj, prev.1 < 0.0);
                for _ in 0..BISECT_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if (det(mid) < 0.0) == neg_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                evals += BISECT_ITERS;
                let root = 0.5 * (lo + hi);
                let v = phi(root);
                if v < val {
                    (t, val) = (root, v);
                }
            }
            prev = (tj, dj);
        }
        self.evaluations += evals;
        if val < self.best {
            let mut w: Vec<f64> = self.best_weights.iter().map(|x| (1.0 - t) * x).collect();
            w[i] += t;
            self.best = val;
            self.best_weights = w;
            self.best_matrix = start.lerp(target, t);
        }
    }
}

/// Estimates `inf { σ(A) : A ∈ co(vertices) }` from above.
pub fn hull_conorm_inf(h: &HullSample) -> Result<HullEstimate> {
    let k = h.vertices.len();
    let first = h
        .vertices
        .first()
        .ok_or_else(|| Error::InvalidInput("hull needs at least one vertex".into()))?;
    if !first.is_square() {
        return Err(Error::DimensionMismatch {
            expected: first.rows(),
            actual: first.cols(),
        });
    }
    for v in &h.vertices {
        if v.rows() != first.rows() || v.cols() != first.cols() {
            return Err(Error::DimensionMismatch {
                expected: first.rows(),
                actual: v.rows(),
            });
        }
    }
    for w in &h.warm_starts {
        if w.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: w.len(),
            });
        }
    }

    let unit = |i: usize| {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        w
    };
    let vertex_sigma: Vec<f64> = h.vertices.iter().map(Matrix::conorm).collect();
    let (i0, &s0) = vertex_sigma
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut search = Search {
        vertices: &h.vertices,
        best: s0,
        best_weights: unit(i0),
        best_matrix: h.vertices[i0].clone(),
        evaluations: k,
    };
    if k == 1 {
        return Ok(HullEstimate {
            value: search.best,
            weights: search.best_weights,
            evaluations: search.evaluations,
        });
    }

    for w in &h.warm_starts {
        search.offer_weights(w.clone());
    }

    let mut rng = sampling::stream(h.weights_seed, 0x4855_4c4c);
    for _ in 0..h.samples {
        let w = sampling::simplex_weights(&mut rng, k);
        search.offer_weights(w);
    }

    // midpoint of the two lowest vertices
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| vertex_sigma[a].total_cmp(&vertex_sigma[b]));
    let mut mid = vec![0.0; k];
    mid[order[0]] = 0.5;
    mid[order[1]] = 0.5;
    search.offer_weights(mid);

    for _ in 0..REFINE_ROUNDS {
        let before = search.best;
        for i in 0..k {
            if search.best == 0.0 {
                break;
            }
            search.line_search(i);
        }
        if search.best >= before {
            break;
        }
    }

    // Report σ of the weights as recombined, so a zero-padded warm start
    // on a superset of vertices reproduces this value exactly.
    let value = Matrix::combination(&h.vertices, &search.best_weights).conorm();
    Ok(HullEstimate {
        value,
        weights: search.best_weights,
        evaluations: search.evaluations + 1,
    })
}
