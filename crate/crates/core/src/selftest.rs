//! Bundled fixture suite behind the `selftest` command.

use serde::Serialize;

use crate::degree::{degree_formula, find_preimages, winding_degree_2d, PreimageOptions};
use crate::error::{Error, Result};
use crate::expr::{parse_map, MapDef};
use crate::global::{hadamard_uniform_check, kinf_probe, KinfOptions};
use crate::matrix::dist;
use crate::newton::NewtonOptions;
use crate::region::Region;
use crate::regularity::{
    estimate_nu, implicit_solve, local_inverse_cert, mvt_inclusion_check, sard_scan, sign_at, ImplicitGrid,
    NuVerdict, Schedule,
};

/// `(file name, source)` of every bundled fixture.
pub const FIXTURES: &[(&str, &str)] = &[
    ("ex31.map", include_str!("../fixtures/ex31.map")),
    ("ex32.map", include_str!("../fixtures/ex32.map")),
    ("ex33.map", include_str!("../fixtures/ex33.map")),
    ("cbrt_second.map", include_str!("../fixtures/cbrt_second.map")),
    ("quaternion.map", include_str!("../fixtures/quaternion.map")),
    ("zsquare.map", include_str!("../fixtures/zsquare.map")),
    ("zcube.map", include_str!("../fixtures/zcube.map")),
    ("conjugation.map", include_str!("../fixtures/conjugation.map")),
    ("minus_abs.map", include_str!("../fixtures/minus_abs.map")),
    ("implicit_cubic.map", include_str!("../fixtures/implicit_cubic.map")),
    ("implicit_circle.map", include_str!("../fixtures/implicit_circle.map")),
    ("shear.map", include_str!("../fixtures/shear.map")),
    ("product.map", include_str!("../fixtures/product.map")),
    ("cube.map", include_str!("../fixtures/cube.map")),
    ("double.map", include_str!("../fixtures/double.map")),
    ("identity.map", include_str!("../fixtures/identity.map")),
];

/// Parses a bundled fixture by file name.
pub fn fixture(name: &str) -> Result<MapDef> {
    let src = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::InvalidInput(format!("no bundled fixture `{name}`")))?;
    parse_map(src)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn case(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Case {
    match f() {
        Ok((passed, detail)) => Case { name, passed, detail },
        Err(e) => Case {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn ball(center: &[f64], r: f64) -> Result<Region> {
    Region::new_ball(center.to_vec(), r)
}

/// Runs every fixture check with the given seed.
pub fn run(seed: u64) -> Vec<Case> {
    let s = Schedule::default().with_seed(seed);
    vec![
        case("nu_triple", || {
            let a = estimate_nu(&fixture("ex31.map")?, &[0.0, 0.0], &s)?.verdict;
            let b = estimate_nu(&fixture("ex32.map")?, &[0.0, 0.0], &s)?.verdict;
            let c = estimate_nu(&fixture("ex33.map")?, &[0.0, 0.0], &s)?.verdict;
            let ok = matches!(a, NuVerdict::Converged { value } if (value - 1.0).abs() <= 0.05)
                && b == NuVerdict::Infinite
                && c == NuVerdict::Zero;
            Ok((ok, format!("{a:?}, {b:?}, {c:?}")))
        }),
        case("degree_cube_roots", || {
            let m = fixture("ex32.map")?;
            let mut degs = Vec::new();
            for r in [0.5, 1.0, 2.0] {
                degs.push(degree_formula(&m, &ball(&[0.0, 0.0], r)?, &[0.0, 0.0], &s)?.degree);
            }
            let sign = sign_at(&m, &[0.0, 0.0], 32, 0.1, seed)?.sign;
            Ok((degs == [1, 1, 1] && sign == 1, format!("degrees {degs:?}, sign {sign}")))
        }),
        case("degree_oracles", || {
            let mut out = Vec::new();
            for (name, y, r, want) in [
                ("zsquare.map", [1.0, 0.0], 2.0, 2),
                ("zcube.map", [0.5, 0.0], 2.0, 3),
                ("conjugation.map", [0.0, 0.0], 1.0, -1),
            ] {
                let m = fixture(name)?;
                let region = ball(&[0.0, 0.0], r)?;
                let f = degree_formula(&m, &region, &y, &s)?.degree;
                let w = winding_degree_2d(&m, &region, &y, 512, 24)?.degree;
                out.push((f, w, want));
            }
            Ok((out.iter().all(|&(f, w, d)| f == d && w == d), format!("{out:?}")))
        }),
        case("quaternion_fiber", || {
            let q = fixture("quaternion.map")?;
            let r = find_preimages(&q, &ball(&[0.0; 4], 2.0)?, &[-1.0, 0.0, 0.0, 0.0], &PreimageOptions::default());
            Ok((matches!(r, Err(Error::PossiblyInfinitePreimage { .. })), format!("{r:?}").chars().take(120).collect()))
        }),
        case("mean_value_minus_abs", || {
            let m = fixture("minus_abs.map")?;
            let hull = mvt_inclusion_check(&m, &[1.0], &[-1.0], 65, seed, true)?;
            let bare = mvt_inclusion_check(&m, &[1.0], &[-1.0], 65, seed, false)?;
            Ok((hull.holds && !bare.holds, format!("hull distance {:e}, discrete distance {:e}", hull.distance, bare.distance)))
        }),
        case("local_inverse", || {
            let c = local_inverse_cert(&fixture("ex31.map")?, &[0.0, 0.0], &s)?;
            let critical = local_inverse_cert(&fixture("ex33.map")?, &[0.0, 0.0], &s);
            let ok = c.delta >= 0.9 && matches!(critical, Err(Error::NotRegular { .. }));
            Ok((ok, format!("delta {} at radius {}", c.delta, c.radius)))
        }),
        case("implicit_functions", || {
            let grid = ImplicitGrid {
                half_width: 0.9,
                points_per_axis: 19,
            };
            let cubic = implicit_solve(&fixture("implicit_cubic.map")?, &[0.0], &[0.0], grid, NewtonOptions::default(), &s)?;
            let circle = implicit_solve(&fixture("implicit_circle.map")?, &[0.0], &[1.0], grid, NewtonOptions::default(), &s)?;
            let e1 = cubic.cells.iter().map(|c| (c.y[0] - c.x[0].powi(3)).abs()).fold(0.0, f64::max);
            let e2 = circle
                .cells
                .iter()
                .map(|c| (c.y[0] - (1.0 - c.x[0] * c.x[0]).sqrt()).abs())
                .fold(0.0, f64::max);
            Ok((e1 <= 1e-8 && e2 <= 1e-8, format!("max errors {e1:e}, {e2:e}")))
        }),
        case("sard", || {
            let cube = Region::cube(2, 1.0);
            let a = sard_scan(&fixture("zsquare.map")?, &cube, 21, 10, seed)?;
            let b = sard_scan(&fixture("ex33.map")?, &cube, 21, 10, seed)?;
            Ok((a.halves && b.halves, format!("ratios {}, {}", a.ratio, b.ratio)))
        }),
        case("hadamard", || {
            let pass = hadamard_uniform_check(&fixture("double.map")?, 1.0, 5, 20, seed)?;
            let fail = hadamard_uniform_check(&fixture("cube.map")?, 0.1, 5, 20, seed)?;
            Ok((pass.verdict.is_pass() && fail.verdict.is_fail(), format!("min nu {}, {}", pass.min_nu, fail.min_nu)))
        }),
        case("kinf", || {
            let seq = (1..=12).map(|j| vec![0.5f64.powi(j), 2f64.powi(j)]).collect();
            let opts = KinfOptions {
                sequences: vec![seq],
                seed,
                ..KinfOptions::default()
            };
            let e = kinf_probe(&fixture("product.map")?, &opts)?;
            let hit = e.clusters.iter().any(|c| dist(&c.candidate, &[0.0, 1.0]) < 1e-2);
            let id = kinf_probe(&fixture("identity.map")?, &KinfOptions { seed, ..KinfOptions::default() })?;
            Ok((hit && id.clusters.is_empty(), format!("{} clusters", e.clusters.len())))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        for (name, _) in FIXTURES {
            fixture(name).unwrap();
        }
        assert!(fixture("missing.map").is_err());
    }

    #[test]
    fn suite_passes() {
        for c in run(0) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
