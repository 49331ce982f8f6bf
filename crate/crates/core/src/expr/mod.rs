//! Piecewise semi-algebraic expressions: parsing, evaluation, printing and
//! symbolic differentiation with non-smooth guards.

mod diff;
mod parse;

use std::fmt;

use crate::error::{DomainKind, Error, Result};
use crate::matrix::Matrix;

pub use diff::{differentiate, JacobianDef, JacobianEval, DEFAULT_GUARD_TOL};
pub use parse::{parse_expr, parse_map};

/// Expression tree over the closed grammar: constants, variables, field
/// operations, non-negative integer powers, `sqrt`, `cbrt`, `abs`, `min`
/// and `max`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Cbrt(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    /// Evaluates at `x`. Division by zero and square roots of negative
    /// numbers are domain errors; everything else is total.
    pub fn eval(&self, x: &[f64]) -> std::result::Result<f64, DomainKind> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(DomainKind::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, k) => powu(a.eval(x)?, *k),
            Expr::Sqrt(a) => {
                let v = a.eval(x)?;
                if v < 0.0 {
                    return Err(DomainKind::SqrtOfNegative);
                }
                v.sqrt()
            }
            Expr::Cbrt(a) => a.eval(x)?.cbrt(),
            Expr::Abs(a) => a.eval(x)?.abs(),
            Expr::Min(a, b) => a.eval(x)?.min(b.eval(x)?),
            Expr::Max(a, b) => a.eval(x)?.max(b.eval(x)?),
        })
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Cbrt(a) | Expr::Abs(a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Cbrt(a) | Expr::Abs(a) => 1 + a.size(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Replaces every `Var(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(subs));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => subs[*i].clone(),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Pow(a, k) => Expr::Pow(s(a), *k),
            Expr::Sqrt(a) => Expr::Sqrt(s(a)),
            Expr::Cbrt(a) => Expr::Cbrt(s(a)),
            Expr::Abs(a) => Expr::Abs(s(a)),
            Expr::Min(a, b) => Expr::Min(s(a), s(b)),
            Expr::Max(a, b) => Expr::Max(s(a), s(b)),
        }
    }

    /// Formats with the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

fn powu(base: f64, k: u32) -> f64 {
    if k <= i32::MAX as u32 {
        base.powi(k as i32)
    } else {
        base.powf(k as f64)
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl ExprDisplay<'_> {
    fn child<'b>(&'b self, e: &'b Expr) -> ExprDisplay<'b> {
        ExprDisplay {
            expr: e,
            names: self.names,
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    // Canonical form: every binary operation is parenthesized and negative
    // constants print as `(-c)`, so printing then parsing is the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => match self.names.get(*i) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "x{}", i + 1),
            },
            Expr::Add(a, b) => write!(f, "({} + {})", self.child(a), self.child(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", self.child(a), self.child(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", self.child(a), self.child(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", self.child(a), self.child(b)),
            Expr::Pow(a, k) => match a.as_ref() {
                Expr::Pow(..) => write!(f, "({})^{k}", self.child(a)),
                _ => write!(f, "{}^{k}", self.child(a)),
            },
            Expr::Sqrt(a) => write!(f, "sqrt({})", self.child(a)),
            Expr::Cbrt(a) => write!(f, "cbrt({})", self.child(a)),
            Expr::Abs(a) => write!(f, "abs({})", self.child(a)),
            Expr::Min(a, b) => write!(f, "min({}, {})", self.child(a), self.child(b)),
            Expr::Max(a, b) => write!(f, "max({}, {})", self.child(a), self.child(b)),
        }
    }
}

/// A parsed mapping `ℝⁿ → ℝᵐ`. Square maps (`m = n`) are the common case;
/// implicit-function inputs have `n + p` variables and `p` components.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDef {
    pub name: String,
    pub vars: Vec<String>,
    pub components: Vec<Expr>,
}

impl MapDef {
    /// Builds a map, checking that every variable index is below the arity.
    pub fn new(name: impl Into<String>, vars: Vec<String>, components: Vec<Expr>) -> Result<MapDef> {
        if vars.is_empty() {
            return Err(Error::InvalidInput("a map needs at least one variable".into()));
        }
        if components.is_empty() {
            return Err(Error::InvalidInput("a map needs at least one component".into()));
        }
        for c in &components {
            if let Some(i) = c.max_var() {
                if i >= vars.len() {
                    return Err(Error::Arity {
                        name: format!("x{}", i + 1),
                        arity: vars.len(),
                        line: 0,
                        column: 0,
                    });
                }
            }
        }
        Ok(MapDef {
            name: name.into(),
            vars,
            components,
        })
    }

    /// Convenience constructor with variables named `x1..xn`.
    pub fn from_components(name: impl Into<String>, arity: usize, components: Vec<Expr>) -> Result<MapDef> {
        let vars = (1..=arity).map(|i| format!("x{i}")).collect();
        MapDef::new(name, vars, components)
    }

    /// The identity map on ℝⁿ.
    pub fn identity(n: usize) -> MapDef {
        MapDef::from_components("identity", n, (0..n).map(Expr::Var).collect())
            .expect("identity is well formed")
    }

    /// The linear map `x ↦ A x`.
    pub fn linear(a: &Matrix) -> MapDef {
        let comps = (0..a.rows())
            .map(|i| {
                (0..a.cols())
                    .map(|j| Expr::Mul(Box::new(Expr::Const(a.get(i, j))), Box::new(Expr::Var(j))))
                    .reduce(|acc, t| Expr::Add(Box::new(acc), Box::new(t)))
                    .expect("at least one column")
            })
            .collect();
        MapDef::from_components("linear", a.cols(), comps).expect("linear map is well formed")
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn is_square(&self) -> bool {
        self.arity() == self.dim_out()
    }

    /// Component-wise evaluation. Non-finite results count as domain errors.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                actual: x.len(),
            });
        }
        self.components
            .iter()
            .enumerate()
            .map(|(component, c)| match c.eval(x) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::Domain {
                    component,
                    kind: DomainKind::NonFinite,
                }),
                Err(kind) => Err(Error::Domain { component, kind }),
            })
            .collect()
    }

    /// `f(x) - y`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let fx = self.eval(x)?;
        Ok(fx.iter().zip(y).map(|(a, b)| a - b).collect())
    }

    pub fn differentiate(&self) -> JacobianDef {
        differentiate(self)
    }

    /// Canonical source text; re-parses to an identical map.
    pub fn to_source(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MapDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map {}({}) = (", self.name, self.vars.join(","))?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c.display(&self.vars))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_example_maps() {
        let f = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        assert_eq!(f.eval(&[8.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        let g = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        assert_eq!(g.eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let q = parse_map(
            "map q(x1,x2,x3,x4) = (x1^2 - x2^2 - x3^2 - x4^2, 2*x1*x2, 2*x1*x3, 2*x1*x4)",
        )
        .unwrap();
        assert_eq!(q.eval(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn domain_errors_carry_component() {
        let f = parse_map("map f(x, y) = (x, sqrt(y))").unwrap();
        assert_eq!(
            f.eval(&[1.0, -1.0]),
            Err(Error::Domain {
                component: 1,
                kind: DomainKind::SqrtOfNegative
            })
        );
        let g = parse_map("map g(x) = (1 / x)").unwrap();
        assert!(matches!(
            g.eval(&[0.0]),
            Err(Error::Domain {
                component: 0,
                kind: DomainKind::DivisionByZero
            })
        ));
        assert!(matches!(f.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn min_max_abs() {
        let f = parse_map("map f(a, b) = (min(a, b), max(a, b) - abs(a))").unwrap();
        assert_eq!(f.eval(&[-2.0, 3.0]).unwrap(), vec![-2.0, 1.0]);
    }

    #[test]
    fn linear_builder() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]);
        let m = MapDef::linear(&a);
        assert_eq!(m.eval(&[1.0, 1.0]).unwrap(), vec![-1.0, 3.5]);
        let back = parse_map(&m.to_source()).unwrap();
        assert_eq!(back, m);
    }
}
