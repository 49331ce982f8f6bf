//! Bounded domains: axis-aligned boxes and Euclidean balls.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::dist;
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Region> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidInput("box bounds must be nonempty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput("box needs lo < hi on every axis".into()));
        }
        Ok(Region::Box { lo, hi })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Region> {
        if center.is_empty() {
            return Err(Error::InvalidInput("ball center must be nonempty".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Region::Ball { center, radius })
    }

    /// The cube `[-h, h]ⁿ`.
    pub fn cube(n: usize, half: f64) -> Region {
        Region::new_box(vec![-half; n], vec![half; n]).expect("valid cube")
    }

    pub fn interval(a: f64, b: f64) -> Result<Region> {
        Region::new_box(vec![a], vec![b])
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        match self {
            Region::Box { .. } => dist(&lo, &hi),
            Region::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Signed distance-like margin: positive inside, zero on the boundary.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min),
            Region::Ball { center, radius } => radius - dist(x, center),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) >= 0.0
    }

    /// Open-set membership.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        self.depth(x) > 0.0
    }

    /// Grid nodes with `res` points per axis over the bounding box
    /// (endpoints included), filtered to the closed region.
    pub fn grid(&self, res: usize) -> Vec<Vec<f64>> {
        let res = res.max(2);
        let (lo, hi) = self.bounds();
        let n = lo.len();
        let total = res.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let p: Vec<f64> = (0..n)
                .map(|a| lo[a] + (hi[a] - lo[a]) * idx[a] as f64 / (res - 1) as f64)
                .collect();
            if self.contains(&p) {
                out.push(p);
            }
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < res {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// Uniform sample from the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Region::Box { lo, hi } => sampling::in_box(rng, lo, hi),
            Region::Ball { center, radius } => sampling::in_ball(rng, center, *radius),
        }
    }

    /// Point on the boundary at parameter `t ∈ [0, 1)` for planar regions,
    /// traversed counter-clockwise.
    pub fn boundary_point_2d(&self, t: f64) -> Vec<f64> {
        assert_eq!(self.dim(), 2, "planar boundary parametrization");
        match self {
            Region::Ball { center, radius } => {
                let th = std::f64::consts::TAU * t;
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            Region::Box { lo, hi } => {
                let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
                let per = 2.0 * (w + h);
                let s = t.rem_euclid(1.0) * per;
                if s < w {
                    vec![lo[0] + s, lo[1]]
                } else if s < w + h {
                    vec![hi[0], lo[1] + (s - w)]
                } else if s < 2.0 * w + h {
                    vec![hi[0] - (s - w - h), hi[1]]
                } else {
                    vec![lo[0], hi[1] - (s - 2.0 * w - h)]
                }
            }
        }
    }

    /// Boundary samples: deterministic structured points plus seeded
    /// random ones, `count` in total (at least the structured ones).
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.dim();
        if n == 1 {
            let (lo, hi) = self.bounds();
            return vec![lo, hi];
        }
        if n == 2 {
            return (0..count.max(8))
                .map(|k| self.boundary_point_2d(k as f64 / count.max(8) as f64))
                .collect();
        }
        let mut rng = sampling::stream(seed, 0x4244_5259);
        let mut out = Vec::with_capacity(count);
        match self {
            Region::Ball { center, radius } => {
                for a in 0..n {
                    for s in [-1.0, 1.0] {
                        let mut p = center.clone();
                        p[a] += s * radius;
                        out.push(p);
                    }
                }
                while out.len() < count {
                    let u = sampling::unit_vector(&mut rng, n);
                    out.push(center.iter().zip(&u).map(|(c, d)| c + radius * d).collect());
                }
            }
            Region::Box { lo, hi } => {
                let mut k = 0usize;
                while out.len() < count.max(2 * n) {
                    let mut p = sampling::in_box(&mut rng, lo, hi);
                    let face = k % (2 * n);
                    let axis = face / 2;
                    p[axis] = if face.is_multiple_of(2) { lo[axis] } else { hi[axis] };
                    out.push(p);
                    k += 1;
                }
            }
        }
        out
    }

    /// Whether `other` lies inside this closed region.
    pub fn encloses(&self, other: &Region) -> bool {
        match other {
            Region::Ball { center, radius } => self.depth(center) >= *radius,
            Region::Box { lo, hi } => {
                let n = lo.len();
                (0..1usize << n).all(|mask| {
                    let corner: Vec<f64> = (0..n)
                        .map(|a| if mask >> a & 1 == 1 { hi[a] } else { lo[a] })
                        .collect();
                    self.contains(&corner)
                })
            }
        }
    }

    /// Whether two regions are disjoint (conservative: may report overlap
    /// for disjoint shapes, never the reverse).
    pub fn disjoint(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Ball { center, radius }, Region::Ball { center: c2, radius: r2 }) => {
                dist(center, c2) > radius + r2
            }
            _ => {
                let (a_lo, a_hi) = self.bounds();
                let (b_lo, b_hi) = other.bounds();
                a_lo.iter()
                    .zip(&a_hi)
                    .zip(b_lo.iter().zip(&b_hi))
                    .any(|((l1, h1), (l2, h2))| h1 < l2 || h2 < l1)
            }
        }
    }
}
