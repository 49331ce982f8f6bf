use serde::Serialize;

use super::formula::degree_formula_with;
use super::preimage::{find_preimages, PreimageOptions};
use crate::error::{Error, Result};
use crate::expr::{Expr, MapDef};
use crate::region::Region;
use crate::regularity::Schedule;
use crate::sampling;

/// Inputs of [`axiom_suite`]. The homotopy is the straight line
/// `H(x, t) = (1 − t) map(x) + t map_end(x)` with target path
/// `y(t) = (1 − t) y + t y_end`.
#[derive(Debug, Clone)]
pub struct AxiomInput<'a> {
    pub map: &'a MapDef,
    pub map_end: &'a MapDef,
    pub region: &'a Region,
    /// Disjoint subregions of `region` for the decomposition axiom.
    pub subregions: &'a [Region],
    pub y: &'a [f64],
    pub y_end: &'a [f64],
    pub steps: usize,
    /// Targets drawn inside half the boundary margin for local constancy.
    pub constancy_samples: usize,
    pub schedule: Schedule,
    pub grid_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub holds: bool,
    pub expected: i64,
    pub degrees: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub decomposition: AxiomCheck,
    pub local_constancy: AxiomCheck,
    pub homotopy: AxiomCheck,
    /// Formula runs whose 1-D or winding oracle disagreed or failed.
    pub oracle_disagreements: usize,
    pub seed: u64,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.decomposition.holds && self.local_constancy.holds && self.homotopy.holds && self.oracle_disagreements == 0
    }
}

/// `(1 − t) a + t b` as a map.
pub fn straight_homotopy(a: &MapDef, b: &MapDef, t: f64) -> Result<MapDef> {
    if a.arity() != b.arity() || a.dim_out() != b.dim_out() {
        return Err(Error::DimensionMismatch {
            expected: a.arity(),
            actual: b.arity(),
        });
    }
    let comps = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(p, q)| {
            Expr::Add(
                Box::new(Expr::Mul(Box::new(Expr::Const(1.0 - t)), Box::new(p.clone()))),
                Box::new(Expr::Mul(Box::new(Expr::Const(t)), Box::new(q.clone()))),
            )
        })
        .collect();
    MapDef::new(format!("{}_to_{}", a.name, b.name), a.vars.clone(), comps)
}

struct Runner<'a> {
    input: &'a AxiomInput<'a>,
    disagreements: usize,
}

impl Runner<'_> {
    fn degree(&mut self, m: &MapDef, region: &Region, y: &[f64], what: &str) -> Result<(i64, f64)> {
        let r = degree_formula_with(m, region, y, &self.input.schedule, self.input.grid_resolution)
            .map_err(|e| match e {
                Error::BoundaryValue { margin } => Error::PreconditionViolated(format!(
                    "{what}: target {y:?} within {margin:e} of the boundary image"
                )),
                Error::CriticalValue { point, classification } => Error::PreconditionViolated(format!(
                    "{what}: target {y:?} has a {classification} preimage at {point:?}"
                )),
                other => other,
            })?;
        if r.oracle.as_ref().is_some_and(|o| !o.agrees) {
            self.disagreements += 1;
        }
        Ok((r.degree, r.boundary_margin))
    }
}

/// Sampled checks of domain decomposition, local constancy in `y` and
/// homotopy invariance.
pub fn axiom_suite(input: &AxiomInput) -> Result<AxiomReport> {
    let mut run = Runner {
        input,
        disagreements: 0,
    };
    let (m, region, y) = (input.map, input.region, input.y);
    let (whole, margin) = run.degree(m, region, y, "domain")?;

    // Decomposition: the fiber must sit inside the subregions.
    for (i, a) in input.subregions.iter().enumerate() {
        if !region.encloses(a) {
            return Err(Error::PreconditionViolated(format!("subregion {i} is not inside the domain")));
        }
        for (j, b) in input.subregions.iter().enumerate().skip(i + 1) {
            if !a.disjoint(b) {
                return Err(Error::PreconditionViolated(format!("subregions {i} and {j} overlap")));
            }
        }
    }
    let opts = PreimageOptions {
        grid_resolution: input.grid_resolution,
        schedule: input.schedule,
        ..PreimageOptions::default()
    };
    for root in find_preimages(m, region, y, &opts)?.roots {
        if !input.subregions.iter().any(|s| s.contains_open(&root.point)) {
            return Err(Error::PreconditionViolated(format!(
                "preimage {:?} lies outside every subregion",
                root.point
            )));
        }
    }
    let mut parts = Vec::with_capacity(input.subregions.len());
    for (i, s) in input.subregions.iter().enumerate() {
        parts.push(run.degree(m, s, y, &format!("subregion {i}"))?.0);
    }
    let decomposition = AxiomCheck {
        holds: parts.iter().sum::<i64>() == whole,
        expected: whole,
        degrees: parts,
    };

    // Local constancy inside half the boundary margin.
    let mut rng = sampling::stream(input.schedule.seed, 0x4c43);
    let mut near = Vec::with_capacity(input.constancy_samples);
    for _ in 0..input.constancy_samples {
        let yp = sampling::in_ball(&mut rng, y, 0.5 * margin);
        near.push(run.degree(m, region, &yp, "local constancy")?.0);
    }
    let local_constancy = AxiomCheck {
        holds: near.iter().all(|&d| d == whole),
        expected: whole,
        degrees: near,
    };

    // Homotopy invariance along the step grid.
    let steps = input.steps.max(1);
    let mut along = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let h = straight_homotopy(m, input.map_end, t)?;
        let yt: Vec<f64> = y.iter().zip(input.y_end).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        along.push(run.degree(&h, region, &yt, &format!("homotopy t = {t}"))?.0);
    }
    let homotopy = AxiomCheck {
        holds: along.iter().all(|&d| d == along[0]),
        expected: along[0],
        degrees: along,
    };

    Ok(AxiomReport {
        decomposition,
        local_constancy,
        homotopy,
        oracle_disagreements: run.disagreements,
        seed: input.schedule.seed,
    })
}
