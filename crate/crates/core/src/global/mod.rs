//! Sampled diagnostics for the global theorems: properness, Pourciau's
//! conditions, Hadamard's uniform and integral criteria and asymptotic
//! critical values `K_∞`.
//!
//! The theorems quantify over all of ℝⁿ, so a pass here only means that
//! no counterexample turned up within the recorded budget.

mod hadamard;
mod kinf;
mod pourciau;
mod properness;

use serde::Serialize;

pub use hadamard::{hadamard_integral_check, hadamard_uniform_check, HadamardIntegral, HadamardUniform, Window};
pub use kinf::{kinf_probe, KinfCluster, KinfEvidence, KinfOptions};
pub use pourciau::{pourciau_check, CriticalTrend, PourciauOptions, PourciauSection, SignSection, SpotCheck};
pub use properness::{properness_probe, ProperSection};

use crate::error::Result;
use crate::expr::{JacobianDef, MapDef};
use crate::regularity::{estimate_nu_with, quick_nu, Schedule};

/// Attached to every pass verdict.
pub const EVIDENCE_NOTE: &str = "sampled evidence, not proof";

/// A concrete counterexample, reproducible from the recorded inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass { note: &'static str },
    Fail { witness: Witness },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn pass() -> Verdict {
        Verdict::Pass { note: EVIDENCE_NOTE }
    }

    pub fn fail(points: Vec<Vec<f64>>, values: Vec<f64>, note: impl Into<String>) -> Verdict {
        Verdict::Fail {
            witness: Witness {
                points,
                values,
                note: note.into(),
            },
        }
    }

    pub fn inconclusive(reason: impl Into<String>) -> Verdict {
        Verdict::Inconclusive { reason: reason.into() }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fail { witness } => Some(witness),
            _ => None,
        }
    }
}

/// `ν̂(x)` as a finite number: `σ(df(x))` for guard-free maps, otherwise
/// the schedule estimate with `+∞` clamped to `nu_cap`.
pub fn nu_hat(m: &MapDef, jac: &JacobianDef, x: &[f64], s: &Schedule) -> Result<f64> {
    if let Some(v) = quick_nu(jac, x)? {
        return Ok(v);
    }
    Ok(estimate_nu_with(m, jac, x, s)?.limit().capped(s.nu_cap))
}

/// Box schedule `[−2^k, 2^k]ⁿ`, `k = 0..=last`.
pub(crate) fn box_half_widths(last: usize) -> Vec<f64> {
    (0..=last).map(|k| 2f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalReport {
    pub map: String,
    pub properness: ProperSection,
    pub pourciau: PourciauSection,
    pub hadamard_uniform: Option<HadamardUniform>,
    pub hadamard_integral: Option<HadamardIntegral>,
    pub kinf: KinfEvidence,
    pub seed: u64,
}
