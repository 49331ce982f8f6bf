//! Acceptance criteria 1 to 10. Each criterion prints one line
//! `criterion N: PASS|FAIL <detail>` and the target exits non-zero if any
//! line is FAIL. It runs without the libtest harness so the lines always show.
//!
//! Reference values come from closed forms evaluated here, not from the
//! library: hand-written maps and Jacobians, 2x2 determinants by formula,
//! and explicit pair sampling with a separate RNG stream.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use defmap::cli::{self, Cli};
use defmap::degree::{axiom_suite, degree_formula, find_preimages, winding_degree_2d, AxiomInput, PreimageOptions};
use defmap::global::{hadamard_uniform_check, kinf_probe, pourciau_check, KinfOptions, PourciauOptions};
use defmap::regularity::{
    estimate_nu, implicit_solve, local_inverse_cert, mvt_inclusion_check, sard_scan, sign_at, ImplicitGrid,
    NuVerdict,
};
use defmap::selftest::fixture;
use defmap::{parse_map, Error, MapDef, Matrix, NewtonOptions, Region, Schedule};

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ball(c: &[f64], r: f64) -> Region {
    Region::new_ball(c.to_vec(), r).unwrap()
}

fn criterion_1() -> Outcome {
    let s = Schedule::default();
    let start = Instant::now();
    let a = estimate_nu(&fixture("ex31.map").unwrap(), &[0.0, 0.0], &s).unwrap();
    let b = estimate_nu(&fixture("ex32.map").unwrap(), &[0.0, 0.0], &s).unwrap();
    let c = estimate_nu(&fixture("ex33.map").unwrap(), &[0.0, 0.0], &s).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = matches!(a.verdict, NuVerdict::Converged { value } if (value - 1.0).abs() <= 0.05)
        && b.verdict == NuVerdict::Infinite
        && c.verdict == NuVerdict::Zero
        && c.last() <= 1e-4
        && elapsed < 5.0;
    check(
        ok,
        format!("{:?} / {:?} / {:?} (last {:e}) in {elapsed:.2}s", a.verdict, b.verdict, c.verdict, c.last()),
    )
}

fn criterion_2() -> Outcome {
    let m = fixture("ex32.map").unwrap();
    let s = Schedule::default();
    let mut degrees = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        degrees.push(degree_formula(&m, &ball(&[0.0, 0.0], r), &[0.0, 0.0], &s).unwrap().degree);
    }
    let sign = sign_at(&m, &[0.0, 0.0], 64, 0.1, 0).unwrap().sign;
    check(degrees == [1, 1, 1] && sign == 1, format!("degrees {degrees:?}, Sign_f(0,0) = {sign}"))
}

fn criterion_3() -> Outcome {
    let s = Schedule::default();
    let mut disagreements = Vec::new();
    for (name, y, r, want) in [
        ("zsquare.map", [1.0, 0.0], 2.0, 2),
        ("zcube.map", [0.5, 0.0], 2.0, 3),
        ("conjugation.map", [0.3, -0.2], 1.0, -1),
    ] {
        let m = fixture(name).unwrap();
        let region = ball(&[0.0, 0.0], r);
        let f = degree_formula(&m, &region, &y, &s).unwrap().degree;
        let w = winding_degree_2d(&m, &region, &y, 512, 24).unwrap().degree;
        if f != want || w != want {
            disagreements.push(format!("{name}: formula {f}, winding {w}, expected {want}"));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut tested = 0;
    while tested < 50 {
        let e: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let det = e[0] * e[3] - e[1] * e[2];
        if det.abs() < 0.25 {
            continue;
        }
        let a = Matrix::from_rows(&[vec![e[0], e[1]], vec![e[2], e[3]]]);
        let m = MapDef::linear(&a);
        let x0 = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let y = [e[0] * x0[0] + e[1] * x0[1], e[2] * x0[0] + e[3] * x0[1]];
        let region = ball(&[0.0, 0.0], 1.0);
        let want = if det > 0.0 { 1 } else { -1 };
        let f = degree_formula(&m, &region, &y, &s.with_seed(tested)).unwrap().degree;
        let w = winding_degree_2d(&m, &region, &y, 512, 24).unwrap().degree;
        if f != want || w != want {
            disagreements.push(format!("{e:?}: formula {f}, winding {w}, sign det {want}"));
        }
        tested += 1;
    }
    check(
        disagreements.is_empty(),
        format!("3 fixtures + {tested} linear maps, {} disagreements {disagreements:?}", disagreements.len()),
    )
}

struct AxiomCase {
    name: &'static str,
    end: &'static str,
    y: Vec<f64>,
    subregions: Vec<Region>,
}

fn criterion_4() -> Outcome {
    let cases = vec![
        AxiomCase {
            name: "identity.map",
            end: "map e(x1, x2) = (x1 + 0.1, x2 - 0.05)",
            y: vec![0.3, -0.2],
            subregions: vec![ball(&[0.3, -0.2], 0.5), ball(&[-1.2, 0.6], 0.5)],
        },
        AxiomCase {
            name: "zsquare.map",
            end: "map e(x1, x2) = (x1^2 - x2^2 + 0.1, 2*x1*x2)",
            y: vec![1.0, 0.0],
            subregions: vec![ball(&[1.0, 0.0], 0.5), ball(&[-1.0, 0.0], 0.5)],
        },
        AxiomCase {
            name: "zcube.map",
            end: "map e(x1, x2) = (x1^3 - 3*x1*x2^2 + 0.05, 3*x1^2*x2 - x2^3)",
            y: vec![0.5, 0.0],
            subregions: (0..3)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                    let r = 0.5f64.cbrt();
                    ball(&[r * t.cos(), r * t.sin()], 0.3)
                })
                .collect(),
        },
        AxiomCase {
            name: "conjugation.map",
            end: "map e(x1, x2) = (x1 + 0.1, -x2)",
            y: vec![0.2, 0.3],
            subregions: vec![ball(&[0.2, -0.3], 0.4)],
        },
        AxiomCase {
            name: "shear.map",
            end: "map e(x1, x2) = (x1, x2 + x1^3 + 0.1)",
            y: vec![0.5, 1.0],
            subregions: vec![ball(&[0.5, 0.875], 0.4)],
        },
        AxiomCase {
            name: "ex32.map",
            end: "map e(x1, x2) = (cbrt(x1) + 0.05, cbrt(x2))",
            y: vec![0.2, -0.3],
            subregions: vec![ball(&[0.008, -0.027], 0.3)],
        },
    ];
    let region = ball(&[0.0, 0.0], 2.0);
    let mut lines = Vec::new();
    let mut violations = 0;
    for c in &cases {
        let m = fixture(c.name).unwrap();
        let end = parse_map(c.end).unwrap();
        let input = AxiomInput {
            map: &m,
            map_end: &end,
            region: &region,
            subregions: &c.subregions,
            y: &c.y,
            y_end: &c.y,
            steps: 20,
            constancy_samples: 4,
            schedule: Schedule::default(),
            grid_resolution: None,
        };
        match axiom_suite(&input) {
            Ok(r) => {
                let bad = [&r.decomposition, &r.local_constancy, &r.homotopy]
                    .iter()
                    .filter(|a| !a.holds)
                    .count()
                    + r.oracle_disagreements
                    + usize::from(r.homotopy.degrees.len() != 21);
                violations += bad;
                lines.push(format!("{} deg {} ({bad} violations)", c.name, r.homotopy.expected));
            }
            Err(e) => {
                violations += 1;
                lines.push(format!("{}: {e}", c.name));
            }
        }
    }
    check(violations == 0, format!("{violations} violations; {}", lines.join(", ")))
}

fn criterion_5() -> Outcome {
    let q = fixture("quaternion.map").unwrap();
    let jac = q.differentiate();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let det = jac.eval(&x, 0.0).unwrap().smooth().unwrap().determinant();
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let want = 16.0 * x[0] * x[0] * norm2;
        worst = worst.max((det - want).abs() / want.abs());
    }
    let p = pourciau_check(&q, &PourciauOptions::default()).unwrap();
    let fiber = find_preimages(&q, &ball(&[0.0; 4], 2.0), &[-1.0, 0.0, 0.0, 0.0], &PreimageOptions::default());
    let infinite = matches!(fiber, Err(Error::PossiblyInfinitePreimage { .. }));
    let ok = worst <= 1e-9
        && p.sign.verdict.is_pass()
        && p.critical.verdict.is_pass()
        && p.properness.verdict.is_pass()
        && infinite;
    check(
        ok,
        format!(
            "max rel det error {worst:e}; sign pass {}, critical pass {}, properness pass {}; infinite fiber {infinite}",
            p.sign.verdict.is_pass(),
            p.critical.verdict.is_pass(),
            p.properness.verdict.is_pass()
        ),
    )
}

fn random_polynomial_map(rng: &mut ChaCha20Rng) -> MapDef {
    let monomials = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
    let component = |rng: &mut ChaCha20Rng| {
        (0..4)
            .map(|_| {
                let (a, b) = monomials[rng.random_range(0..monomials.len())];
                format!("({:.6})*x1^{a}*x2^{b}", rng.random_range(-2.0..2.0))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    };
    let src = format!("map p(x1, x2) = ({}, {})", component(rng), component(rng));
    parse_map(&src).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut failures = 0;
    for i in 0..100 {
        let m = random_polynomial_map(&mut rng);
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xp: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        if !mvt_inclusion_check(&m, &x, &xp, 33, i, true).unwrap().holds {
            failures += 1;
        }
    }
    // f(1) - f(-1) = 0 is a convex combination of f'(±t) = ∓1 but equals neither.
    let m = fixture("minus_abs.map").unwrap();
    let bare = mvt_inclusion_check(&m, &[1.0], &[-1.0], 65, 0, false).unwrap();
    let hull = mvt_inclusion_check(&m, &[1.0], &[-1.0], 65, 0, true).unwrap();
    check(
        failures == 0 && !bare.holds && hull.holds,
        format!(
            "{failures}/100 smooth segments fail; -|x| without hull: holds {} (distance {:e}), with hull: holds {}",
            bare.holds, bare.distance, hull.holds
        ),
    )
}

fn criterion_7() -> Outcome {
    let m = fixture("ex31.map").unwrap();
    let cert = local_inverse_cert(&m, &[0.0, 0.0], &Schedule::default()).unwrap();
    let f = |x: &[f64]| [x[0].cbrt(), x[1]];
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let in_ball = |rng: &mut ChaCha20Rng| loop {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            return [p[0] * cert.radius, p[1] * cert.radius];
        }
    };
    let mut worst = f64::INFINITY;
    let mut counted = 0;
    for _ in 0..10_000 {
        let a = in_ball(&mut rng);
        let b = in_ball(&mut rng);
        let dx = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        if dx == 0.0 {
            continue;
        }
        let (fa, fb) = (f(&a), f(&b));
        let dy = ((fa[0] - fb[0]).powi(2) + (fa[1] - fb[1]).powi(2)).sqrt();
        worst = worst.min(dy / dx);
        counted += 1;
    }
    let critical = local_inverse_cert(&fixture("ex33.map").unwrap(), &[0.0, 0.0], &Schedule::default());
    let not_regular = matches!(critical, Err(Error::NotRegular { .. }));
    check(
        cert.delta >= 0.9 && counted == 10_000 && worst >= cert.delta * (1.0 - 1e-6) && not_regular,
        format!(
            "delta {} on radius {}; min ratio over {counted} pairs {worst}; NotRegular for (sqrt|x1|, x2): {not_regular}",
            cert.delta, cert.radius
        ),
    )
}

fn criterion_8() -> Outcome {
    let s = Schedule::default();
    let grid = ImplicitGrid {
        half_width: 0.9,
        points_per_axis: 37,
    };
    let cubic = implicit_solve(&fixture("implicit_cubic.map").unwrap(), &[0.0], &[0.0], grid, NewtonOptions::default(), &s)
        .unwrap();
    let circle = implicit_solve(&fixture("implicit_circle.map").unwrap(), &[0.0], &[1.0], grid, NewtonOptions::default(), &s)
        .unwrap();
    let e1 = cubic.cells.iter().map(|c| (c.y[0] - c.x[0].powi(3)).abs()).fold(0.0, f64::max);
    let e2 = circle
        .cells
        .iter()
        .map(|c| (c.y[0] - (1.0 - c.x[0] * c.x[0]).sqrt()).abs())
        .fold(0.0, f64::max);
    let ok = cubic.all_solved() && circle.all_solved() && e1 <= 1e-8 && e2 <= 1e-8 && cubic.cells.len() == 37;
    check(ok, format!("max error x^3 {e1:e}, sqrt(1-x^2) {e2:e} over {} cells each", cubic.cells.len()))
}

fn criterion_9() -> Outcome {
    let cube = Region::cube(2, 1.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["zsquare.map", "ex33.map"] {
        let r = sard_scan(&fixture(name).unwrap(), &cube, 21, 10, 9).unwrap();
        let f: Vec<f64> = r.levels.iter().map(|l| l.fraction).collect();
        ok &= r.halves && f[0] > 0.0 && f[1] <= 0.5 * f[0] + 1e-12;
        lines.push(format!("{name} fractions {f:?}"));
    }
    check(ok, lines.join("; "))
}

fn report_text(args: &[&str]) -> String {
    let mut argv = vec!["defmap"];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).unwrap();
    let (report, _) = cli::run(&cli).unwrap();
    report.to_json().unwrap()
}

fn criterion_10() -> Outcome {
    let double = fixture("double.map").unwrap();
    let cube = fixture("cube.map").unwrap();
    let pass = hadamard_uniform_check(&double, 1.5, 5, 40, 10).unwrap();
    let fail_a = hadamard_uniform_check(&cube, 0.1, 5, 40, 10).unwrap();
    let fail_b = hadamard_uniform_check(&cube, 0.1, 5, 40, 10).unwrap();
    // ν of x ↦ x³ is |3x²| off the origin; the witness must sit where that is below δ.
    let witness_ok = match fail_a.verdict.witness() {
        Some(w) => w.points.iter().all(|p| 3.0 * p[0] * p[0] < 0.1) && fail_a == fail_b,
        None => false,
    };
    // probed along x_k = (1/k, k) for k = 2^j, where σ(df) ≈ k⁻² so
    // ‖x_k‖ν(x_k) ≈ 1/k and f(x_k) = (1/k, 1)
    let sequence = (0..=12).map(|j| vec![0.5f64.powi(j), 2f64.powi(j)]).collect();
    let opts = KinfOptions {
        sequences: vec![sequence],
        ..KinfOptions::default()
    };
    let product = kinf_probe(&fixture("product.map").unwrap(), &opts).unwrap();
    let hit = product.clusters.iter().any(|c| {
        let p = &c.products;
        ((c.candidate[0]).powi(2) + (c.candidate[1] - 1.0).powi(2)).sqrt() < 1e-2 && p[p.len() - 1] < 1e-2
    });
    let identity = kinf_probe(&MapDef::identity(2), &KinfOptions::default()).unwrap();

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    let runs: Vec<Vec<String>> = vec![
        vec!["analyze".into(), "--map".into(), format!("{dir}ex31.map"), "--point".into(), "0,0".into()],
        vec![
            "degree".into(),
            "--map".into(),
            format!("{dir}ex32.map"),
            "--ball".into(),
            "0,0,1".into(),
            "--target".into(),
            "0,0".into(),
        ],
        vec!["sard".into(), "--map".into(), format!("{dir}zsquare.map"), "--seed".into(), "4".into()],
        vec!["global".into(), "--map".into(), format!("{dir}product.map"), "--delta".into(), "0.5".into()],
        vec![
            "implicit".into(),
            "--map".into(),
            format!("{dir}implicit_circle.map"),
            "--point".into(),
            "0".into(),
            "--target".into(),
            "1".into(),
        ],
    ];
    let mut identical = 0;
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        if report_text(&args) == report_text(&args) {
            identical += 1;
        }
    }
    let ok = pass.verdict.is_pass()
        && fail_a.verdict.is_fail()
        && witness_ok
        && hit
        && identity.clusters.is_empty()
        && identical == runs.len();
    check(
        ok,
        format!(
            "2x pass {}, x^3 fail {} (reproducible witness {witness_ok}); K∞ (x1, x1 x2) has (0,1): {hit}; identity clusters {}; {identical}/{} reports byte-identical",
            pass.verdict.is_pass(),
            fail_a.verdict.is_fail(),
            identity.clusters.len(),
            runs.len()
        ),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut failed = Vec::new();
    for (i, c) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = catch_unwind(AssertUnwindSafe(c)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                println!("criterion {n}: FAIL {detail}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
