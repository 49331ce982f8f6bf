use super::BOUNDARY_TOL;
use crate::error::{Error, Result};
use crate::expr::MapDef;
use crate::region::Region;

/// Degree of a scalar map on an interval: half the change of
/// `sign(f − y)` between the endpoints.
pub fn degree_1d(m: &MapDef, interval: &Region, y: f64) -> Result<i64> {
    if m.arity() != 1 || m.dim_out() != 1 || interval.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            required: 1,
            actual: if m.arity() != 1 { m.arity() } else { interval.dim() },
        });
    }
    let (lo, hi) = interval.bounds();
    let fa = m.eval(&lo)?[0] - y;
    let fb = m.eval(&hi)?[0] - y;
    let margin = fa.abs().min(fb.abs());
    if margin <= BOUNDARY_TOL {
        return Err(Error::BoundaryValue { margin });
    }
    Ok((sign(fb) - sign(fa)) / 2)
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}
