use serde::Serialize;

use super::nu::{check_point, point_tag};
use crate::error::{Error, Result};
use crate::expr::{JacobianDef, MapDef, DEFAULT_GUARD_TOL};
use crate::par;

/// Relative tolerance passed to `sign_det` by the probes.
pub const SIGN_TOL: f64 = 1e-12;

const SHRINK_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignResult {
    pub point: Vec<f64>,
    pub sign: i8,
    pub probe_count: usize,
    pub all_agree: bool,
}

/// `Sign_f(x)`: the common sign of `det df` at probes in balls of radius
/// `radius, radius/2, radius/4, radius/8` around `x`.
pub fn sign_at(m: &MapDef, x: &[f64], probes: usize, radius: f64, seed: u64) -> Result<SignResult> {
    check_point(m, x)?;
    sign_at_with(m, &m.differentiate(), x, probes, radius, seed)
}

pub(crate) fn sign_at_with(
    m: &MapDef,
    jac: &JacobianDef,
    x: &[f64],
    probes: usize,
    radius: f64,
    seed: u64,
) -> Result<SignResult> {
    if probes == 0 || !(radius > 0.0) {
        return Err(Error::InvalidInput("sign probes need a positive count and radius".into()));
    }
    let tag = point_tag(x) ^ 0x5167;
    let per = probes.div_ceil(SHRINK_STEPS);
    let batches = par::try_map_range(SHRINK_STEPS, |j| {
        let r = radius * 0.5f64.powi(j as i32);
        let probe = super::levels::Probe {
            map: m,
            jac,
            center: x,
            cols: 0..m.arity(),
            split: None,
            tag,
        };
        let (_, mats, _) = probe.smooth_samples(r, per, DEFAULT_GUARD_TOL, tag.wrapping_add(j as u64), seed)?;
        Ok::<_, Error>(mats.iter().map(|a| a.sign_det(SIGN_TOL)).collect::<Vec<i8>>())
    })?;
    let signs: Vec<i8> = batches.into_iter().flatten().collect();
    let positive = signs.iter().filter(|&&s| s > 0).count();
    let negative = signs.iter().filter(|&&s| s < 0).count();
    let zero = signs.len() - positive - negative;
    if zero > 0 || (positive > 0 && negative > 0) {
        return Err(Error::SignDisagreement {
            point: x.to_vec(),
            positive,
            negative,
            zero,
        });
    }
    Ok(SignResult {
        point: x.to_vec(),
        sign: if positive > 0 { 1 } else { -1 },
        probe_count: signs.len(),
        all_agree: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;
    use crate::matrix::Matrix;

    #[test]
    fn examples() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), cbrt(x2))").unwrap();
        assert_eq!(sign_at(&m, &[0.0, 0.0], 32, 0.1, 0).unwrap().sign, 1);
        assert_eq!(sign_at(&MapDef::identity(2), &[0.0, 0.0], 8, 0.1, 0).unwrap().sign, 1);
        let neg = MapDef::linear(&Matrix::identity(3).scale(-1.0));
        let r = sign_at(&neg, &[0.0; 3], 8, 0.1, 0).unwrap();
        assert_eq!(r.sign, -1);
        assert_eq!(r.probe_count, 8);
        assert!(r.all_agree);
    }

    #[test]
    fn critical_point_disagrees() {
        let m = parse_map("map f(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        assert!(matches!(
            sign_at(&m, &[0.0, 0.0], 64, 0.1, 3),
            Err(Error::SignDisagreement { .. })
        ));
        let z2 = parse_map("map z(x1,x2) = (x1^2 - x2^2, 2*x1*x2)").unwrap();
        assert_eq!(sign_at(&z2, &[1.0, 0.0], 16, 0.1, 0).unwrap().sign, 1);
    }
}
