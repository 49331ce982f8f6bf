use proptest::prelude::*;

use defmap::degree::{degree_formula, winding_degree_2d, WindingResult};
use defmap::expr::DEFAULT_GUARD_TOL;
use defmap::regularity::{estimate_nu, sign_at, PointClass};
use defmap::{classify_point, parse_map, Error, Expr, MapDef, Matrix, Region, Schedule};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0usize..2).prop_map(Expr::Var),
        prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 0.25, 1.5]).prop_map(Expr::Const),
    ]
}

fn bin(f: fn(Box<Expr>, Box<Expr>) -> Expr) -> impl Fn((Expr, Expr)) -> Expr {
    move |(a, b)| f(Box::new(a), Box::new(b))
}

/// Polynomials in two variables.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Add)),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Sub)),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Mul)),
            (inner, 0u32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
        ]
    })
}

/// The whole grammar.
fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Add)),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Sub)),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Mul)),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Div)),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| Expr::Sqrt(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cbrt(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Abs(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(bin(Expr::Min)),
            (inner.clone(), inner).prop_map(bin(Expr::Max)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2)
}

fn matrix2() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, 4).prop_map(|e| Matrix::from_rows(&[vec![e[0], e[1]], vec![e[2], e[3]]]))
}

/// Smallest singular value of a 2x2 matrix in closed form.
fn sigma2(a: &Matrix) -> f64 {
    let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    let t = p * p + q * q + r * r + s * s;
    let d = (p * s - q * r).abs();
    let disc = ((t - 2.0 * d) * (t + 2.0 * d)).max(0.0).sqrt();
    // σ_max² is the larger root of λ² − tλ + d², and σ_min = d / σ_max
    let big = 0.5 * (t + disc);
    if big == 0.0 {
        0.0
    } else {
        d / big.sqrt()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_then_parsing_preserves_values(e in any_expr(), x in point()) {
        let m = MapDef::from_components("f", 2, vec![e]).unwrap();
        let back = parse_map(&m.to_source()).unwrap();
        match (m.eval(&x), back.eval(&x)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a[0].to_bits(), b[0].to_bits()),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?} for {}", a, b, m.to_source()),
        }
    }

    #[test]
    fn derivative_matches_central_differences(e in smooth_expr(), f in smooth_expr(), x in point()) {
        let m = MapDef::from_components("f", 2, vec![e, f]).unwrap();
        let a = m.differentiate().eval(&x, DEFAULT_GUARD_TOL).unwrap().smooth().unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (m.eval(&xp).unwrap(), m.eval(&xm).unwrap());
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                prop_assert!((a.get(i, j) - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "d{}/dx{}: {} vs {}", i, j, a.get(i, j), fd);
            }
        }
    }

    #[test]
    fn guarded_derivative_matches_away_from_guards(e in any_expr(), x in point()) {
        let m = MapDef::from_components("f", 2, vec![e]).unwrap();
        let jac = m.differentiate();
        prop_assume!(jac.guard_distance(&x) > 0.05);
        let Some(a) = jac.eval(&x, DEFAULT_GUARD_TOL).unwrap().smooth() else {
            return Ok(());
        };
        let h = 1e-7;
        for j in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            if let (Ok(fp), Ok(fm)) = (m.eval(&xp), m.eval(&xm)) {
                let fd = (fp[0] - fm[0]) / (2.0 * h);
                prop_assert!((a.get(0, j) - fd).abs() <= 1e-4 * (1.0 + fd.abs()), "{}: {} vs {}", m.to_source(), a.get(0, j), fd);
            }
        }
    }

    #[test]
    fn conorm_matches_closed_form(a in matrix2()) {
        let s = a.conorm();
        prop_assert!((s - sigma2(&a)).abs() <= 1e-9 * (1.0 + a.frobenius()), "{} vs {}", s, sigma2(&a));
    }

    #[test]
    fn conorm_scales_and_is_one_lipschitz(a in matrix2(), b in matrix2(), c in -4.0f64..4.0) {
        prop_assert!((a.scale(c).conorm() - c.abs() * a.conorm()).abs() <= 1e-9 * (1.0 + a.frobenius() * c.abs()));
        // |σ(A) − σ(B)| ≤ ‖A − B‖ ≤ ‖A − B‖_F
        prop_assert!((a.conorm() - b.conorm()).abs() <= a.sub(&b).frobenius() + 1e-9);
    }

    #[test]
    fn sign_det_matches_explicit_determinant(a in matrix2()) {
        let d = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
        prop_assume!(d.abs() > 1e-6);
        prop_assert_eq!(defmap::sign_det(&a, 1e-12), if d > 0.0 { 1 } else { -1 });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn slack_shrinks_with_radius(e in smooth_expr(), f in smooth_expr(), x in point(), seed in 0u64..1000) {
        let m = MapDef::from_components("f", 2, vec![e, f]).unwrap();
        let est = estimate_nu(&m, &x, &Schedule::light(0.5, seed)).unwrap();
        prop_assert!(est.is_slack_monotone(), "{:?}", est.slack);
    }

    #[test]
    fn identity_is_regular_everywhere(x in point(), seed in 0u64..1000) {
        let c = classify_point(&MapDef::identity(2), &x, &Schedule::default().with_seed(seed)).unwrap();
        prop_assert!(matches!(c, PointClass::Regular { .. }), "{:?}", c);
    }

    #[test]
    fn sign_agrees_with_linear_determinant(a in matrix2(), x in point(), seed in 0u64..1000) {
        let d = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
        prop_assume!(d.abs() > 1e-3);
        let s = sign_at(&MapDef::linear(&a), &x, 16, 0.1, seed).unwrap();
        prop_assert_eq!(s.sign, if d > 0.0 { 1 } else { -1 });
    }

    #[test]
    fn identity_degree_is_indicator(y in prop::collection::vec(-2.0f64..2.0, 2)) {
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        prop_assume!((r - 1.0).abs() > 1e-3);
        let region = Region::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let d = degree_formula(&MapDef::identity(2), &region, &y, &Schedule::default()).unwrap();
        prop_assert_eq!(d.degree, i64::from(r < 1.0));
    }

    #[test]
    fn odd_maps_have_odd_degree(c in prop::collection::vec(-2.0f64..2.0, 8)) {
        // f(−x) = −f(x): linear plus cubic terms
        let src = format!(
            "map f(x1, x2) = (({})*x1 + ({})*x2 + ({})*x1^3 + ({})*x1*x2^2, ({})*x1 + ({})*x2 + ({})*x2^3 + ({})*x1^2*x2)",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        );
        let m = parse_map(&src).unwrap();
        let region = Region::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        match winding_degree_2d(&m, &region, &[0.0, 0.0], 512, 24) {
            Ok(WindingResult { degree, .. }) => prop_assert!(degree % 2 != 0, "{} has degree {}", src, degree),
            Err(Error::BoundaryTooClose { .. } | Error::RefinementExhausted { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
