//! Regularity index estimation and the local theorems built on it:
//! point and value classification, `Sign_f`, Sard scans, mean-value
//! checks, local inverse certificates and implicit-function continuation.

mod classify;
mod implicit;
mod inverse;
mod levels;
mod mvt;
mod nu;
mod sard;
mod sign;

use serde::Serialize;

pub use classify::{classify_point, classify_value, ClassifiedPreimage, PointClass, ValueClass, ValueClassification};
pub use implicit::{implicit_solve, CellStatus, ContinuityCheck, ImplicitCell, ImplicitGrid, ImplicitTable};
pub use inverse::{local_inverse_cert, LocalInverseCert, WitnessPair};
pub use mvt::{
    mvt_inclusion_check, mvt_inequality_check, min_norm_in_hull, MvtInclusion, MvtInequality,
};
pub use nu::{estimate_nu, quick_nu, NuEstimate, NuLimit, NuVerdict};
pub use sard::{sard_scan, SardLevel, SardReport};
pub use sign::{sign_at, SignResult, SIGN_TOL};

/// Radius schedule, sampling budget and thresholds for `ν_f` estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    /// Largest radius; level `k` uses `r0 · 2^-k`.
    pub r0: f64,
    /// Number of halvings `K`; radii `r_0 > … > r_K`.
    pub levels: usize,
    /// Hard cap on levels when the estimate keeps growing towards `nu_cap`.
    pub max_levels: usize,
    /// Jacobian sample points per level.
    pub samples: usize,
    /// Random convex combinations per hull estimate.
    pub hull_samples: usize,
    pub nu_cap: f64,
    pub eps_critical: f64,
    pub eps_regular: f64,
    /// Guard threshold, scaled by the level radius when sampling.
    pub guard_tol: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            r0: 0.5,
            levels: 8,
            max_levels: 64,
            samples: 48,
            hull_samples: 128,
            nu_cap: 1e6,
            eps_critical: 1e-4,
            eps_regular: 1e-2,
            guard_tol: crate::expr::DEFAULT_GUARD_TOL,
            seed: 0,
        }
    }
}

impl Schedule {
    /// A cheap schedule for grid scans, with radius tied to the grid step.
    pub fn light(r0: f64, seed: u64) -> Schedule {
        Schedule {
            r0,
            levels: 3,
            samples: 16,
            hull_samples: 24,
            seed,
            ..Schedule::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Schedule {
        self.seed = seed;
        self
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.r0 * 0.5f64.powi(k as i32)
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(crate::Error::InvalidInput(format!("r0 must be positive, got {}", self.r0)));
        }
        if self.levels < 2 {
            return Err(crate::Error::InvalidInput(format!(
                "at least 2 levels are required, got {}",
                self.levels
            )));
        }
        if self.samples == 0 {
            return Err(crate::Error::InvalidInput("samples per level must be positive".into()));
        }
        if !(self.eps_critical < self.eps_regular) || !(self.eps_regular < self.nu_cap) {
            return Err(crate::Error::InvalidInput(
                "thresholds must satisfy eps_critical < eps_regular < nu_cap".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) use classify::classify_point_with;
pub(crate) use inverse::local_inverse_cert_with;
pub(crate) use nu::estimate_nu_with;
pub(crate) use sard::scan as critical_scan;
pub(crate) use sign::sign_at_with;
