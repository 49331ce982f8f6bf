//! Brouwer degree: the sum of `Sign_f` over the fiber, planar winding
//! numbers and 1-D endpoint signs as independent checks, and sampled
//! verification of the degree axioms.

mod axioms;
mod formula;
mod oned;
mod preimage;
mod winding;

pub use axioms::{axiom_suite, AxiomCheck, AxiomInput, AxiomReport};
pub use formula::{boundary_margin, degree_formula, DegreeMethod, DegreeResult, OracleCheck, PreimageSign};
pub use oned::degree_1d;
pub use preimage::{find_preimages, PreimageOptions, PreimageSet, Root};
pub(crate) use preimage::{newton_root, roots_at};
pub use winding::{winding_degree_2d, WindingResult};

/// Targets closer than this to the sampled boundary image are rejected.
pub const BOUNDARY_TOL: f64 = 1e-8;
