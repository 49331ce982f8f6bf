use serde::Serialize;

use super::preimage::{find_preimages, PreimageOptions};
use super::{degree_1d, winding_degree_2d, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::expr::MapDef;
use crate::matrix::dist;
use crate::regularity::{sign_at_with, PointClass, Schedule, SignResult};
use crate::region::Region;

/// Boundary points used for the margin estimate and the winding oracle.
pub const BOUNDARY_SAMPLES: usize = 512;
const SIGN_PROBES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMethod {
    Formula,
    Winding,
    Interval1d,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreimageSign {
    pub point: Vec<f64>,
    pub class: PointClass,
    pub isolated: bool,
    pub sign: SignResult,
}

/// Result of an independent degree computation run alongside the formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub method: DegreeMethod,
    /// `None` when the oracle itself failed; see `error`.
    pub degree: Option<i64>,
    pub error: Option<String>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeResult {
    pub degree: i64,
    pub target: Vec<f64>,
    pub preimages: Vec<PreimageSign>,
    /// `min ‖f(b) − y‖` over the sampled boundary.
    pub boundary_margin: f64,
    pub boundary_samples: usize,
    pub method: DegreeMethod,
    pub oracle: Option<OracleCheck>,
    pub grid_resolutions: [usize; 2],
    pub seed: u64,
}

/// `min ‖f(b) − y‖` over `count` boundary samples of `region`.
pub fn boundary_margin(m: &MapDef, region: &Region, y: &[f64], count: usize, seed: u64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for b in region.boundary_samples(count, seed) {
        best = best.min(dist(&m.eval(&b)?, y));
    }
    Ok(best)
}

/// `deg(f, Ω, y) = Σ Sign_f(x)` over the fiber of a regular value `y`.
///
/// In one and two dimensions the endpoint-sign and winding oracles run on
/// the same instance and their answer is recorded next to the formula.
pub fn degree_formula(m: &MapDef, region: &Region, y: &[f64], s: &Schedule) -> Result<DegreeResult> {
    degree_formula_with(m, region, y, s, None)
}

pub(crate) fn degree_formula_with(
    m: &MapDef,
    region: &Region,
    y: &[f64],
    s: &Schedule,
    grid_resolution: Option<usize>,
) -> Result<DegreeResult> {
    let n = m.arity();
    if region.dim() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if region.dim() != n { region.dim() } else { y.len() },
        });
    }
    let margin = boundary_margin(m, region, y, BOUNDARY_SAMPLES, s.seed)?;
    if margin <= BOUNDARY_TOL {
        return Err(Error::BoundaryValue { margin });
    }
    let opts = PreimageOptions {
        grid_resolution,
        schedule: *s,
        ..PreimageOptions::default()
    };
    let found = find_preimages(m, region, y, &opts)?;
    let jac = m.differentiate();
    let mut preimages = Vec::with_capacity(found.roots.len());
    for root in &found.roots {
        if !root.class.is_regular() {
            return Err(Error::CriticalValue {
                point: root.point.clone(),
                classification: root.class.to_string(),
            });
        }
        let radius = match &root.certificate {
            Some(c) => 0.5 * c.radius,
            None => s.radius(s.levels),
        };
        let sign = sign_at_with(m, &jac, &root.point, SIGN_PROBES, radius, s.seed)?;
        preimages.push(PreimageSign {
            point: root.point.clone(),
            class: root.class,
            isolated: root.isolated,
            sign,
        });
    }
    let degree: i64 = preimages.iter().map(|p| p.sign.sign as i64).sum();
    let oracle = match n {
        1 => Some(oracle(DegreeMethod::Interval1d, degree, degree_1d(m, region, y[0]))),
        2 => Some(oracle(
            DegreeMethod::Winding,
            degree,
            winding_degree_2d(m, region, y, BOUNDARY_SAMPLES, 24).map(|w| w.degree),
        )),
        _ => None,
    };
    Ok(DegreeResult {
        degree,
        target: y.to_vec(),
        preimages,
        boundary_margin: margin,
        boundary_samples: BOUNDARY_SAMPLES,
        method: DegreeMethod::Formula,
        oracle,
        grid_resolutions: found.grid_resolutions,
        seed: s.seed,
    })
}

fn oracle(method: DegreeMethod, formula: i64, r: Result<i64>) -> OracleCheck {
    match r {
        Ok(d) => OracleCheck {
            method,
            degree: Some(d),
            error: None,
            agrees: d == formula,
        },
        Err(e) => OracleCheck {
            method,
            degree: None,
            error: Some(e.to_string()),
            agrees: false,
        },
    }
}
