use serde::Serialize;

use super::classify::PointClass;
use super::nu::{check_point, estimate_nu_with, point_tag, NuEstimate, NuLimit};
use super::Schedule;
use crate::error::{Error, Result};
use crate::expr::MapDef;
use crate::matrix::dist;
use crate::{par, sampling};

/// Pairs drawn per candidate radius during validation.
pub const CERT_PAIRS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessPair {
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    pub ratio: f64,
}

/// `‖f(x′) − f(x)‖ ≥ δ‖x′ − x‖` on `B_radius(center)`, with the sampled
/// pairs that support it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalInverseCert {
    pub center: Vec<f64>,
    pub radius: f64,
    pub delta: f64,
    /// Whether `delta` had the Lipschitz slack subtracted.
    pub slack_adjusted: bool,
    /// Estimated `ν̂` at the center.
    pub nu: NuLimit,
    pub min_ratio: f64,
    pub witness_pairs: Vec<WitnessPair>,
    pub seed: u64,
}

impl LocalInverseCert {
    /// Radius inside which preimages of nearby values are unique.
    pub fn injectivity_radius(&self) -> f64 {
        self.radius
    }
}

/// Certifies that `f` is injective with Lipschitz inverse near a regular
/// point.
///
/// Candidate radii come from the `ν̂` schedule, largest first: the hull
/// estimate must reach `eps_regular` and, for a finite `ν̂`, 95 % of it.
/// `δ` is that estimate, or the estimate less its slack; it is accepted
/// only if every sampled pair ratio on the ball is at least
/// `δ (1 − 1e-6)`, otherwise the next radius is tried.
pub fn local_inverse_cert(m: &MapDef, center: &[f64], s: &Schedule) -> Result<LocalInverseCert> {
    check_point(m, center)?;
    let jac = m.differentiate();
    let est = estimate_nu_with(m, &jac, center, s)?;
    local_inverse_cert_with(m, &est, s)
}

pub(crate) fn local_inverse_cert_with(
    m: &MapDef,
    est: &NuEstimate,
    s: &Schedule,
) -> Result<LocalInverseCert> {
    let class = PointClass::from_estimate(est, s);
    let nu = match class {
        PointClass::Regular { nu } => nu,
        other => {
            return Err(Error::NotRegular {
                point: est.point.clone(),
                classification: other.to_string(),
            })
        }
    };
    let center = &est.point;
    let floor = match nu {
        NuLimit::Finite(v) => (0.95 * v).max(s.eps_regular),
        NuLimit::Infinite => s.eps_regular,
    };
    let mut best_failure = (0.0, f64::NEG_INFINITY);
    for (k, (&r, &e)) in est.radii.iter().zip(&est.estimates).enumerate() {
        if e < floor {
            continue;
        }
        let pairs = validation_pairs(m, center, r, s.seed, k as u64)?;
        let min_ratio = pairs.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
        // The sampled estimate first; if a pair undercuts it, the
        // estimate less its Lipschitz slack.
        let adjusted = e - est.slack[k];
        for (delta, slack_adjusted) in [(e, false), (adjusted, true)] {
            if slack_adjusted && adjusted < s.eps_regular {
                break;
            }
            if min_ratio >= delta * (1.0 - 1e-6) {
                return Ok(LocalInverseCert {
                    center: center.clone(),
                    radius: r,
                    delta,
                    slack_adjusted,
                    nu,
                    min_ratio,
                    witness_pairs: pairs,
                    seed: s.seed,
                });
            }
        }
        if min_ratio > best_failure.1 {
            best_failure = (e, min_ratio);
        }
    }
    Err(Error::CertificationFailed {
        delta: best_failure.0,
        min_ratio: best_failure.1,
    })
}

/// Half the pairs are independent points of the ball, half are close
/// pairs that probe the local derivative.
fn validation_pairs(m: &MapDef, center: &[f64], r: f64, seed: u64, level: u64) -> Result<Vec<WitnessPair>> {
    let tag = sampling::stream_id(&[point_tag(center), 0x1c, level]);
    par::try_map_range(CERT_PAIRS, |i| {
        let mut rng = sampling::stream(seed, sampling::stream_id(&[tag, i as u64]));
        let x = sampling::in_ball(&mut rng, center, r);
        let xp = if i % 2 == 0 {
            sampling::in_ball(&mut rng, center, r)
        } else {
            let near = sampling::in_ball(&mut rng, &x, 0.01 * r);
            if dist(&near, center) <= r {
                near
            } else {
                sampling::in_ball(&mut rng, center, r)
            }
        };
        let d = dist(&x, &xp);
        let ratio = if d > 0.0 { dist(&m.eval(&x)?, &m.eval(&xp)?) / d } else { f64::INFINITY };
        Ok(WitnessPair { x, xp, ratio })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    #[test]
    fn examples() {
        let s = Schedule::default();
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        let c = local_inverse_cert(&m, &[0.0, 0.0], &s).unwrap();
        assert!(c.delta >= 0.9 && c.delta <= 1.05, "{}", c.delta);
        assert!(c.witness_pairs.iter().all(|p| p.ratio >= c.delta * (1.0 - 1e-6)));

        let id = local_inverse_cert(&MapDef::identity(2), &[1.0, 2.0], &s).unwrap();
        assert!((id.delta - 1.0).abs() < 1e-9);
        assert_eq!(id.radius, s.r0);

        let g = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        assert!(matches!(
            local_inverse_cert(&g, &[0.0, 0.0], &s),
            Err(Error::NotRegular { .. })
        ));
    }

    #[test]
    fn infinite_nu_still_certifies() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), cbrt(x2))").unwrap();
        let c = local_inverse_cert(&m, &[0.0, 0.0], &Schedule::default()).unwrap();
        assert_eq!(c.nu, NuLimit::Infinite);
        assert!(c.delta > 0.5);
    }
}
