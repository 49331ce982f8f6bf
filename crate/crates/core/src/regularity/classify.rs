use serde::Serialize;

use super::nu::{check_point, estimate_nu_with, NuEstimate, NuLimit, NuVerdict};
use super::Schedule;
use crate::degree::{find_preimages, PreimageOptions};
use crate::error::Result;
use crate::expr::{JacobianDef, MapDef};
use crate::region::Region;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointClass {
    Regular { nu: NuLimit },
    Critical,
    /// The final estimate lies between `eps_critical` and `eps_regular`.
    Undetermined { estimate: f64 },
}

impl PointClass {
    pub fn is_regular(&self) -> bool {
        matches!(self, PointClass::Regular { .. })
    }

    pub(crate) fn from_estimate(e: &NuEstimate, s: &Schedule) -> PointClass {
        match e.verdict {
            NuVerdict::Infinite => PointClass::Regular { nu: NuLimit::Infinite },
            NuVerdict::Zero => PointClass::Critical,
            NuVerdict::Converged { value } if value >= s.eps_regular => PointClass::Regular {
                nu: NuLimit::Finite(value),
            },
            NuVerdict::Converged { value } => PointClass::Undetermined { estimate: value },
        }
    }
}

impl std::fmt::Display for PointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointClass::Regular { nu: NuLimit::Finite(v) } => write!(f, "regular (nu = {v:e})"),
            PointClass::Regular { nu: NuLimit::Infinite } => write!(f, "regular (nu = +inf)"),
            PointClass::Critical => write!(f, "critical"),
            PointClass::Undetermined { estimate } => write!(f, "undetermined (estimate {estimate:e})"),
        }
    }
}

pub fn classify_point(m: &MapDef, x: &[f64], s: &Schedule) -> Result<PointClass> {
    check_point(m, x)?;
    let jac = m.differentiate();
    classify_point_with(m, &jac, x, s).map(|(c, _)| c)
}

pub(crate) fn classify_point_with(
    m: &MapDef,
    jac: &JacobianDef,
    x: &[f64],
    s: &Schedule,
) -> Result<(PointClass, NuEstimate)> {
    let e = estimate_nu_with(m, jac, x, s)?;
    Ok((PointClass::from_estimate(&e, s), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueClass {
    RegularValue,
    CriticalValue,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedPreimage {
    pub point: Vec<f64>,
    pub class: PointClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueClassification {
    pub class: ValueClass,
    pub preimages: Vec<ClassifiedPreimage>,
}

/// Classifies `y` through the classes of its preimages in `region`.
pub fn classify_value(m: &MapDef, region: &Region, y: &[f64], s: &Schedule) -> Result<ValueClassification> {
    let opts = PreimageOptions {
        schedule: *s,
        ..PreimageOptions::default()
    };
    let found = find_preimages(m, region, y, &opts)?;
    let jac = m.differentiate();
    let mut preimages = Vec::with_capacity(found.roots.len());
    for root in &found.roots {
        let (class, _) = classify_point_with(m, &jac, &root.point, s)?;
        preimages.push(ClassifiedPreimage {
            point: root.point.clone(),
            class,
        });
    }
    let class = if preimages.iter().any(|p| p.class == PointClass::Critical) {
        ValueClass::CriticalValue
    } else if preimages.iter().all(|p| p.class.is_regular()) {
        ValueClass::RegularValue
    } else {
        ValueClass::Undetermined
    };
    Ok(ValueClassification { class, preimages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    #[test]
    fn point_examples() {
        let s = Schedule::default();
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        assert!(classify_point(&m, &[0.0, 0.0], &s).unwrap().is_regular());
        let g = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        assert_eq!(classify_point(&g, &[0.0, 0.0], &s).unwrap(), PointClass::Critical);
        match classify_point(&MapDef::identity(3), &[0.3, -1.0, 2.0], &s).unwrap() {
            PointClass::Regular { nu: NuLimit::Finite(v) } => assert!((v - 1.0).abs() < 1e-9),
            c => panic!("{c}"),
        }
    }

    #[test]
    fn value_examples() {
        let s = Schedule::default();
        let ball = Region::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        let v = classify_value(&m, &ball, &[0.0, 0.0], &s).unwrap();
        assert_eq!(v.class, ValueClass::RegularValue);
        assert_eq!(v.preimages.len(), 1);
        assert!(v.preimages[0].point.iter().all(|c| c.abs() < 1e-6));

        let g = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        let v = classify_value(&g, &ball, &[0.0, 0.0], &s).unwrap();
        assert_eq!(v.class, ValueClass::CriticalValue);

        let v = classify_value(&MapDef::identity(2), &ball, &[5.0, 0.0], &s).unwrap();
        assert_eq!(v.class, ValueClass::RegularValue);
        assert!(v.preimages.is_empty());
    }
}
