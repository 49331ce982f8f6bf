use serde::Serialize;

use super::levels::{Level, Probe};
use super::Schedule;
use crate::error::{Error, Result};
use crate::expr::{JacobianDef, JacobianEval, MapDef};
use crate::sampling;

/// Limit behaviour of the estimates as the radius shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NuVerdict {
    Converged { value: f64 },
    /// The estimate passed `nu_cap`.
    Infinite,
    /// The estimate fell below `eps_critical`.
    Zero,
}

/// `ν̂` as a quantity: finite or `+∞`. Infinity is a flag, never a float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum NuLimit {
    Finite(f64),
    Infinite,
}

impl NuLimit {
    pub fn at_least(&self, t: f64) -> bool {
        match *self {
            NuLimit::Finite(v) => v >= t,
            NuLimit::Infinite => true,
        }
    }

    /// Finite value clamped to `cap` for use in arithmetic.
    pub fn capped(&self, cap: f64) -> f64 {
        match *self {
            NuLimit::Finite(v) => v.min(cap),
            NuLimit::Infinite => cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuEstimate {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Finite-difference Lipschitz estimate of `df` per ball.
    pub lipschitz: Vec<f64>,
    /// `2 · lipschitz · r` per level.
    pub slack: Vec<f64>,
    pub verdict: NuVerdict,
    /// Jacobian evaluations used, all levels together.
    pub sample_budget: usize,
    pub hull_samples: usize,
    /// Probe points rejected for lying on a guard.
    pub rejected: usize,
    pub seed: u64,
}

impl NuEstimate {
    pub fn limit(&self) -> NuLimit {
        match self.verdict {
            NuVerdict::Converged { value } => NuLimit::Finite(value),
            NuVerdict::Zero => NuLimit::Finite(*self.estimates.last().unwrap_or(&0.0)),
            NuVerdict::Infinite => NuLimit::Infinite,
        }
    }

    pub fn last(&self) -> f64 {
        *self.estimates.last().unwrap_or(&0.0)
    }

    /// Slack-adjusted monotonicity of the per-level estimates.
    pub fn is_slack_monotone(&self) -> bool {
        (1..self.estimates.len()).all(|k| {
            let tol = 1e-12 * self.estimates[k - 1].abs().max(1.0);
            self.estimates[k] + self.slack[k] + tol >= self.estimates[k - 1] - self.slack[k - 1]
        })
    }

    pub(crate) fn from_levels(point: &[f64], levels: &[Level], s: &Schedule) -> NuEstimate {
        let last = levels.last().map(|l| l.estimate).unwrap_or(0.0);
        let verdict = if last < s.eps_critical {
            NuVerdict::Zero
        } else if last > s.nu_cap {
            NuVerdict::Infinite
        } else {
            NuVerdict::Converged { value: last }
        };
        NuEstimate {
            point: point.to_vec(),
            radii: levels.iter().map(|l| l.radius).collect(),
            estimates: levels.iter().map(|l| l.estimate).collect(),
            lipschitz: levels.iter().map(|l| l.lipschitz).collect(),
            slack: levels.iter().map(|l| l.slack).collect(),
            verdict,
            sample_budget: levels.iter().map(|l| l.points.len()).sum(),
            hull_samples: s.hull_samples,
            rejected: levels.iter().map(|l| l.rejected).sum(),
            seed: s.seed,
        }
    }
}

pub(crate) fn check_point(m: &MapDef, x: &[f64]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "map `{}` has {} variables but {} components",
            m.name,
            m.arity(),
            m.dim_out()
        )));
    }
    if x.len() != m.arity() {
        return Err(Error::DimensionMismatch {
            expected: m.arity(),
            actual: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn point_tag(x: &[f64]) -> u64 {
    let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
    sampling::stream_id(&bits)
}

/// Estimates `ν_f(x)` over the schedule's shrinking balls.
pub fn estimate_nu(m: &MapDef, x: &[f64], s: &Schedule) -> Result<NuEstimate> {
    check_point(m, x)?;
    let jac = m.differentiate();
    estimate_nu_with(m, &jac, x, s)
}

pub(crate) fn estimate_nu_with(m: &MapDef, jac: &JacobianDef, x: &[f64], s: &Schedule) -> Result<NuEstimate> {
    let probe = Probe {
        map: m,
        jac,
        center: x,
        cols: 0..m.arity(),
        split: None,
        tag: point_tag(x),
    };
    let levels = probe.run(s)?;
    Ok(NuEstimate::from_levels(x, &levels, s))
}

/// `ν_f(x)` for maps with no guards, where `df` is continuous and
/// `ν_f(x) = σ(df(x))`. Returns `None` when the map has guards.
pub fn quick_nu(jac: &JacobianDef, x: &[f64]) -> Result<Option<f64>> {
    if jac.has_guards() {
        return Ok(None);
    }
    match jac.eval(x, 0.0)? {
        JacobianEval::Smooth(a) => Ok(Some(a.conorm())),
        JacobianEval::NotSmooth => Ok(None),
    }
}
