//! Damped Newton iteration with a Levenberg–Marquardt fallback.
//!
//! Steps are accepted only when they decrease ‖F‖ (backtracking on the
//! step length), so the iteration also makes progress on non-smooth
//! roots such as those of `cbrt`, where the undamped step overshoots.

use serde::Serialize;

use crate::error::Result;
use crate::matrix::{norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_HALVINGS: usize = 60;

/// Solves `F(x) = 0` from `x0`.
///
/// `jac` returns `None` where the Jacobian is unavailable (a guard); the
/// iterate is then nudged off the guard.
pub fn solve<F, J>(f: F, jac: J, x0: &[f64], opts: NewtonOptions) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<Option<Matrix>>,
{
    let mut x = x0.to_vec();
    let mut r = match f(&x) {
        Ok(r) => r,
        Err(_) => {
            return NewtonOutcome {
                x,
                residual: f64::INFINITY,
                iterations: 0,
                converged: false,
            }
        }
    };
    let mut rn = norm(&r);
    let mut it = 0;
    let mut nudges = 0;
    while it < opts.max_iter && rn > opts.tol {
        it += 1;
        let j = match jac(&x) {
            Ok(Some(j)) => j,
            _ => {
                if nudges >= 8 {
                    break;
                }
                nudges += 1;
                let h = 1e-9 * (1.0 + norm(&x)) * (nudges as f64);
                let nudged: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + h / (1.0 + i as f64))
                    .collect();
                if let Ok(rr) = f(&nudged) {
                    x = nudged;
                    r = rr;
                    rn = norm(&r);
                }
                continue;
            }
        };
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut accepted = false;
        if j.is_square() {
            if let Some(d) = j.solve(&neg_r) {
                accepted = backtrack(&f, &mut x, &mut r, &mut rn, &d);
            }
        }
        if !accepted {
            // Levenberg–Marquardt with increasing damping
            let jt = j.transpose();
            let jtj = jt.matmul(&j);
            let g = jt.mul_vec(&neg_r);
            let scale = (0..jtj.rows()).map(|i| jtj.get(i, i)).fold(0.0f64, f64::max).max(1e-300);
            let mut mu = 1e-6 * scale;
            for _ in 0..16 {
                let mut a = jtj.clone();
                for i in 0..a.rows() {
                    a.set(i, i, a.get(i, i) + mu);
                }
                if let Some(d) = a.solve(&g) {
                    if backtrack(&f, &mut x, &mut r, &mut rn, &d) {
                        accepted = true;
                        break;
                    }
                }
                mu *= 100.0;
            }
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome {
        converged: rn <= opts.tol,
        x,
        residual: rn,
        iterations: it,
    }
}

fn backtrack<F>(f: &F, x: &mut Vec<f64>, r: &mut Vec<f64>, rn: &mut f64, d: &[f64]) -> bool
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut lambda = 1.0;
    for _ in 0..MAX_HALVINGS {
        let trial: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + lambda * b).collect();
        if let Ok(rt) = f(&trial) {
            let tn = norm(&rt);
            if tn < (1.0 - 1e-4 * lambda) * *rn || tn == 0.0 {
                *x = trial;
                *r = rt;
                *rn = tn;
                return true;
            }
        }
        lambda *= 0.5;
    }
    false
}
