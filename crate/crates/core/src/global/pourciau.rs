use serde::Serialize;

use super::properness::{properness_probe, ProperSection};
use super::{box_half_widths, Verdict};
use crate::degree::{newton_root, roots_at, PreimageOptions};
use crate::error::Result;
use crate::expr::{JacobianEval, MapDef, DEFAULT_GUARD_TOL};
use crate::matrix::norm;
use crate::region::Region;
use crate::regularity::{critical_scan, SIGN_TOL};
use crate::{par, sampling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PourciauOptions {
    /// Boxes `[−2^k, 2^k]ⁿ` for `k = 0..=boxes`.
    pub boxes: usize,
    pub sign_samples: usize,
    /// Domain grid points per axis for the critical-set trend (odd).
    pub grid_resolution: usize,
    pub surjectivity_targets: usize,
    pub seed: u64,
}

impl Default for PourciauOptions {
    fn default() -> Self {
        PourciauOptions {
            boxes: 5,
            sign_samples: 200,
            grid_resolution: 9,
            surjectivity_targets: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSection {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalTrend {
    pub grid_resolutions: [usize; 2],
    /// Share of domain grid points classified critical.
    pub fractions: [f64; 2],
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotCheck {
    pub target: Vec<f64>,
    pub preimage: Option<Vec<f64>>,
    /// Radius of the ball in which the preimage was found.
    pub radius: Option<f64>,
    /// Compass offsets of the target that were also reached.
    pub compass_reached: usize,
    pub compass_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PourciauSection {
    pub sign: SignSection,
    pub critical: CriticalTrend,
    pub properness: ProperSection,
    pub surjectivity: Vec<SpotCheck>,
    pub surjectivity_verdict: Verdict,
    pub verdict: Verdict,
    pub seed: u64,
}

const TREND_FACTOR: f64 = 0.75;
const SEARCH_LEVELS: usize = 6;
const SEARCH_RESOLUTION: [usize; 5] = [0, 48, 24, 12, 7];

/// Checks `det df ≥ 0` (or `≤ 0`), a shrinking critical set and
/// properness, then spot-checks surjectivity and openness.
pub fn pourciau_check(m: &MapDef, opts: &PourciauOptions) -> Result<PourciauSection> {
    let n = m.arity();
    let jac = m.differentiate();
    let seed = opts.seed;

    // (i) sign of the Jacobian determinant over expanding boxes.
    let halves = box_half_widths(opts.boxes);
    let signs = par::try_map_range(halves.len() * opts.sign_samples, |i| -> Result<Option<(Vec<f64>, i8)>> {
        let half = halves[i / opts.sign_samples];
        let mut rng = sampling::stream(seed, sampling::stream_id(&[0x5347, i as u64]));
        let x = sampling::in_box(&mut rng, &vec![-half; n], &vec![half; n]);
        Ok(match jac.eval(&x, DEFAULT_GUARD_TOL)? {
            JacobianEval::Smooth(a) => Some((x, a.sign_det(SIGN_TOL))),
            JacobianEval::NotSmooth => None,
        })
    })?;
    let signs: Vec<(Vec<f64>, i8)> = signs.into_iter().flatten().collect();
    let pos = signs.iter().find(|s| s.1 > 0);
    let neg = signs.iter().find(|s| s.1 < 0);
    let sign_verdict = match (pos, neg) {
        (Some(p), Some(q)) => Verdict::fail(
            vec![p.0.clone(), q.0.clone()],
            vec![1.0, -1.0],
            "det df takes both signs",
        ),
        _ => Verdict::pass(),
    };
    let sign = SignSection {
        positive: signs.iter().filter(|s| s.1 > 0).count(),
        negative: signs.iter().filter(|s| s.1 < 0).count(),
        zero: signs.iter().filter(|s| s.1 == 0).count(),
        verdict: sign_verdict,
    };

    // (ii) domain-side critical occupancy under refinement.
    let g = opts.grid_resolution.max(3) | 1;
    let cube = Region::cube(n, 1.0);
    let coarse = critical_scan(m, &jac, &cube, g, seed)?;
    let fine = critical_scan(m, &jac, &cube, 2 * g - 1, seed)?;
    let fractions = [
        coarse.critical_at.len() as f64 / coarse.points as f64,
        fine.critical_at.len() as f64 / fine.points as f64,
    ];
    let critical_verdict = if fractions[1] <= TREND_FACTOR * fractions[0] || fractions[1] == 0.0 {
        Verdict::pass()
    } else {
        Verdict::fail(
            fine.critical_at.iter().take(8).cloned().collect(),
            fractions.to_vec(),
            "critical share does not shrink under refinement",
        )
    };
    let critical = CriticalTrend {
        grid_resolutions: [g, 2 * g - 1],
        fractions,
        verdict: critical_verdict,
    };

    let properness = properness_probe(m, &halves[1..], 64, seed)?;

    // Conclusion spot checks, only meaningful when the hypotheses hold.
    let hypotheses = sign.verdict.is_pass() && critical.verdict.is_pass() && properness.verdict.is_pass();
    let mut surjectivity = Vec::new();
    let surjectivity_verdict = if !hypotheses {
        Verdict::inconclusive("hypotheses not established; surjectivity not checked")
    } else {
        let mut rng = sampling::stream(seed, 0x5355_524a);
        let targets: Vec<Vec<f64>> = (0..opts.surjectivity_targets)
            .map(|_| sampling::in_ball(&mut rng, &vec![0.0; n], 4.0))
            .collect();
        surjectivity = par::map_slice(&targets, |y| spot_check(m, &jac, y));
        match surjectivity.iter().find(|s| s.preimage.is_none()) {
            Some(s) => Verdict::inconclusive(format!("no preimage found for target {:?}", s.target)),
            None if surjectivity.iter().all(|s| s.compass_reached == s.compass_total) => Verdict::pass(),
            None => Verdict::inconclusive("some compass offsets were not reached"),
        }
    };

    let verdict = if sign.verdict.is_fail() || critical.verdict.is_fail() || properness.verdict.is_fail() {
        Verdict::inconclusive("a hypothesis fails; the conclusion is not implied")
    } else if hypotheses && surjectivity_verdict.is_pass() {
        Verdict::pass()
    } else {
        Verdict::inconclusive("hypotheses or spot checks not established")
    };
    Ok(PourciauSection {
        sign,
        critical,
        properness,
        surjectivity,
        surjectivity_verdict,
        verdict,
        seed,
    })
}

fn spot_check(m: &MapDef, jac: &crate::expr::JacobianDef, y: &[f64]) -> SpotCheck {
    let n = y.len();
    let res = SEARCH_RESOLUTION.get(n).copied().unwrap_or(5);
    let opts = PreimageOptions::default();
    let mut found = None;
    for k in 0..SEARCH_LEVELS {
        let r = 2f64.powi(k as i32);
        let ball = Region::Ball {
            center: vec![0.0; n],
            radius: r,
        };
        if let Some((x, _, _)) = roots_at(m, jac, &ball, y, res, &opts).0.into_iter().next() {
            found = Some((x, r));
            break;
        }
    }
    let mut compass = Vec::new();
    for a in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[a] = s;
            compass.push(d);
        }
    }
    if n == 2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        compass.extend([vec![h, h], vec![h, -h], vec![-h, h], vec![-h, -h]]);
    }
    let compass_total = compass.len();
    let Some((x, r)) = found else {
        return SpotCheck {
            target: y.to_vec(),
            preimage: None,
            radius: None,
            compass_reached: 0,
            compass_total,
        };
    };
    let eps = 1e-2 * (1.0 + norm(y));
    let compass_reached = compass
        .iter()
        .filter(|d| {
            let yp: Vec<f64> = y.iter().zip(d.iter()).map(|(a, b)| a + eps * b).collect();
            newton_root(m, jac, &yp, &x, opts.newton).is_some()
        })
        .count();
    SpotCheck {
        target: y.to_vec(),
        preimage: Some(x),
        radius: Some(r),
        compass_reached,
        compass_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    #[test]
    fn complex_square_passes() {
        let z2 = parse_map("map z(x1,x2) = (x1^2 - x2^2, 2*x1*x2)").unwrap();
        let p = pourciau_check(&z2, &PourciauOptions::default()).unwrap();
        assert!(p.sign.verdict.is_pass());
        assert!(p.critical.verdict.is_pass(), "{:?}", p.critical);
        assert!(p.properness.verdict.is_pass());
        assert!(p.verdict.is_pass(), "{p:?}");
        assert_eq!(p.surjectivity.len(), 5);
    }

    #[test]
    fn identity_passes() {
        let p = pourciau_check(&MapDef::identity(2), &PourciauOptions::default()).unwrap();
        assert!(p.verdict.is_pass());
        assert_eq!(p.critical.fractions, [0.0, 0.0]);
    }

    #[test]
    fn sign_change_fails() {
        let m = parse_map("map f(x1,x2) = (x1^2, x2)").unwrap();
        let p = pourciau_check(&m, &PourciauOptions::default()).unwrap();
        let w = p.sign.verdict.witness().unwrap();
        let jac = m.differentiate();
        let s: Vec<i8> = w
            .points
            .iter()
            .map(|x| jac.eval(x, 0.0).unwrap().smooth().unwrap().sign_det(SIGN_TOL))
            .collect();
        assert_eq!(s, vec![1, -1]);
        assert!(!p.verdict.is_pass());
    }
}
