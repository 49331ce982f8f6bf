//! Symbolic Jacobians and the guard set that over-approximates the
//! non-C¹ locus.

use super::{Expr, MapDef};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default threshold below which a guard counts as vanishing.
pub const DEFAULT_GUARD_TOL: f64 = 1e-9;

/// Symbolic partial derivatives of a map plus guards.
///
/// Wherever every guard is nonzero the map is C¹ and each entry equals
/// the true partial derivative. Guards are the arguments of `abs`,
/// `sqrt` and `cbrt`, the differences `a - b` of `min`/`max`, and
/// denominators.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianDef {
    rows: usize,
    cols: usize,
    entries: Vec<Expr>,
    guards: Vec<Expr>,
}

/// Result of evaluating a Jacobian at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum JacobianEval {
    Smooth(Matrix),
    /// Some guard is within tolerance of zero, or an entry is undefined.
    NotSmooth,
}

impl JacobianEval {
    pub fn smooth(self) -> Option<Matrix> {
        match self {
            JacobianEval::Smooth(m) => Some(m),
            JacobianEval::NotSmooth => None,
        }
    }
}

impl JacobianDef {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.cols + j]
    }

    pub fn guards(&self) -> &[Expr] {
        &self.guards
    }

    pub fn has_guards(&self) -> bool {
        !self.guards.is_empty()
    }

    /// Smallest absolute guard value at `x` (`+∞` for guard-free maps).
    pub fn guard_distance(&self, x: &[f64]) -> f64 {
        self.guards
            .iter()
            .map(|g| g.eval(x).map(f64::abs).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every guard exceeds `tol` in absolute value at `x`.
    pub fn off_guards(&self, x: &[f64], tol: f64) -> bool {
        self.guards
            .iter()
            .all(|g| matches!(g.eval(x), Ok(v) if v.abs() > tol))
    }

    /// Evaluates the full Jacobian. Refuses (returns `NotSmooth`) when any
    /// guard is within `guard_tol` of zero.
    pub fn eval(&self, x: &[f64], guard_tol: f64) -> Result<JacobianEval> {
        self.eval_columns(x, guard_tol, 0..self.cols)
    }

    /// Evaluates the sub-block of columns `cols` (partials with respect to
    /// a subset of the variables).
    pub fn eval_columns(
        &self,
        x: &[f64],
        guard_tol: f64,
        cols: std::ops::Range<usize>,
    ) -> Result<JacobianEval> {
        if !(guard_tol >= 0.0) {
            return Err(Error::InvalidInput(format!("guard tolerance must be >= 0, got {guard_tol}")));
        }
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        for g in &self.guards {
            match g.eval(x) {
                Ok(v) if v.abs() > guard_tol => {}
                _ => return Ok(JacobianEval::NotSmooth),
            }
        }
        let width = cols.len();
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            for j in cols.clone() {
                match self.entry(i, j).eval(x) {
                    Ok(v) if v.is_finite() => data.push(v),
                    _ => return Ok(JacobianEval::NotSmooth),
                }
            }
        }
        Ok(JacobianEval::Smooth(Matrix::new(self.rows, width, data)))
    }
}

/// Differentiates every component with respect to every variable.
pub fn differentiate(m: &MapDef) -> JacobianDef {
    let cols = m.arity();
    let mut entries = Vec::with_capacity(m.dim_out() * cols);
    for c in &m.components {
        for j in 0..cols {
            entries.push(partial(c, j));
        }
    }
    let mut guards = Vec::new();
    for c in &m.components {
        collect_guards(c, &mut guards);
    }
    JacobianDef {
        rows: m.dim_out(),
        cols,
        entries,
        guards,
    }
}

fn push_unique(guards: &mut Vec<Expr>, g: Expr) {
    if !matches!(g, Expr::Const(c) if c != 0.0) && !guards.contains(&g) {
        guards.push(g);
    }
}

fn collect_guards(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            collect_guards(a, out);
            collect_guards(b, out);
        }
        Expr::Div(a, b) => {
            collect_guards(a, out);
            collect_guards(b, out);
            push_unique(out, (**b).clone());
        }
        Expr::Pow(a, _) => collect_guards(a, out),
        Expr::Sqrt(a) | Expr::Cbrt(a) | Expr::Abs(a) => {
            collect_guards(a, out);
            push_unique(out, (**a).clone());
        }
        Expr::Min(a, b) | Expr::Max(a, b) => {
            collect_guards(a, out);
            collect_guards(b, out);
            push_unique(out, sub((**a).clone(), (**b).clone()));
        }
    }
}

/// ∂e/∂x_j.
pub(crate) fn partial(e: &Expr, j: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(i) => Expr::Const(if *i == j { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(partial(a, j), partial(b, j)),
        Expr::Sub(a, b) => sub(partial(a, j), partial(b, j)),
        Expr::Mul(a, b) => add(
            mul(partial(a, j), (**b).clone()),
            mul((**a).clone(), partial(b, j)),
        ),
        Expr::Div(a, b) => div(
            sub(
                mul(partial(a, j), (**b).clone()),
                mul((**a).clone(), partial(b, j)),
            ),
            pow((**b).clone(), 2),
        ),
        Expr::Pow(a, k) => match k {
            0 => Expr::Const(0.0),
            _ => mul(
                mul(Expr::Const(*k as f64), pow((**a).clone(), k - 1)),
                partial(a, j),
            ),
        },
        Expr::Sqrt(a) => div(
            partial(a, j),
            mul(Expr::Const(2.0), Expr::Sqrt(a.clone())),
        ),
        // d cbrt(u) = u' / (3 cbrt(u^2))
        Expr::Cbrt(a) => div(
            partial(a, j),
            mul(Expr::Const(3.0), Expr::Cbrt(Box::new(pow((**a).clone(), 2)))),
        ),
        // d |u| = (u / |u|) u'
        Expr::Abs(a) => mul(
            div((**a).clone(), Expr::Abs(a.clone())),
            partial(a, j),
        ),
        // min(a, b) = (a + b - |a - b|) / 2, max(a, b) = (a + b + |a - b|) / 2
        Expr::Min(a, b) | Expr::Max(a, b) => {
            let da = partial(a, j);
            let db = partial(b, j);
            let diff = sub((**a).clone(), (**b).clone());
            let sgn = div(diff.clone(), Expr::Abs(Box::new(diff)));
            let kink = mul(sgn, sub(da.clone(), db.clone()));
            let sum = add(da, db);
            let inner = if matches!(e, Expr::Min(..)) {
                sub(sum, kink)
            } else {
                add(sum, kink)
            };
            mul(Expr::Const(0.5), inner)
        }
    }
}

// Smart constructors: constant folding plus the 0/1 identities.

fn konst(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(0.0)) => a,
        (Some(0.0), _) => mul(Expr::Const(-1.0), b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        // keep constants on the left
        (None, Some(_)) => Expr::Mul(Box::new(b), Box::new(a)),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (konst(&a), konst(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, k: u32) -> Expr {
    match (konst(&a), k) {
        (_, 0) => Expr::Const(1.0),
        (_, 1) => a,
        (Some(x), k) => Expr::Const(x.powi(k as i32)),
        _ => Expr::Pow(Box::new(a), k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn cube_root_entries_and_guard() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        let j = m.differentiate();
        assert_eq!(j.guards(), &[Expr::Var(0)]);
        assert_eq!(j.entry(0, 0).display(&names(2)).to_string(), "(1 / (3 * cbrt(x1^2)))");
        assert_eq!(j.entry(0, 1), &Expr::Const(0.0));
        assert_eq!(j.entry(1, 1), &Expr::Const(1.0));
        let x1: f64 = 0.3;
        let a = j.eval(&[x1, 5.0], DEFAULT_GUARD_TOL).unwrap().smooth().unwrap();
        assert!((a.get(0, 0) - 1.0 / (3.0 * (x1 * x1).cbrt())).abs() < 1e-15);
    }

    #[test]
    fn not_smooth_on_guard() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        let j = m.differentiate();
        for t in [-3.0, 0.0, 1e6] {
            assert_eq!(j.eval(&[0.0, t], 1e-9).unwrap(), JacobianEval::NotSmooth);
        }
        assert_eq!(j.eval(&[1e-10, 0.0], 1e-9).unwrap(), JacobianEval::NotSmooth);
        assert!(j.eval(&[1e-8, 0.0], 1e-9).unwrap().smooth().is_some());
    }

    #[test]
    fn guard_on_second_axis() {
        let m = parse_map("map r(x1,x2) = (x1, cbrt(x2))").unwrap();
        assert_eq!(m.differentiate().guards(), &[Expr::Var(1)]);
    }

    #[test]
    fn identity_jacobian() {
        let j = MapDef::identity(3).differentiate();
        assert!(!j.has_guards());
        let a = j.eval(&[0.1, -7.0, 2.0], 1e-9).unwrap().smooth().unwrap();
        assert_eq!(a, Matrix::identity(3));
    }

    #[test]
    fn quaternion_square_jacobian() {
        let m = parse_map(
            "map q(x1,x2,x3,x4) = (x1^2 - x2^2 - x3^2 - x4^2, 2*x1*x2, 2*x1*x3, 2*x1*x4)",
        )
        .unwrap();
        let j = m.differentiate();
        let x = [1.0, 1.0, 1.0, 1.0];
        let a = j.eval(&x, 1e-9).unwrap().smooth().unwrap();
        let first_col: Vec<f64> = (0..4).map(|i| a.get(i, 0)).collect();
        assert_eq!(first_col, vec![2.0, 2.0, 2.0, 2.0]);
        assert_eq!(a.get(0, 1), -2.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert_eq!(a.get(1, 2), 0.0);
        // 16 x1^2 (x1^2 + ... + x4^2) at (1,1,1,1)
        assert!((a.determinant() - 64.0).abs() < 1e-12);
    }

    #[test]
    fn abs_and_minmax_guards() {
        let m = parse_map("map g(x,y) = (sqrt(abs(x)), min(x, y) + abs(x)*abs(x))").unwrap();
        let j = m.differentiate();
        let shown: Vec<String> = j
            .guards()
            .iter()
            .map(|g| g.display(&m.vars).to_string())
            .collect();
        assert_eq!(shown, vec!["x", "abs(x)", "(x - y)"]);
        let a = j.eval(&[-0.25, 1.0], 1e-9).unwrap().smooth().unwrap();
        // d sqrt|x| / dx = -1 / (2 sqrt(0.25)) for x < 0
        assert!((a.get(0, 0) + 1.0).abs() < 1e-14);
        // min picks x; d/dx (x + x^2) = 1 + 2x
        assert!((a.get(1, 0) - 0.5).abs() < 1e-14);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn negative_guard_tolerance_rejected() {
        let j = MapDef::identity(1).differentiate();
        assert!(matches!(j.eval(&[0.0], -1.0), Err(Error::InvalidInput(_))));
    }
}
