//! Recursive-descent parser for the map DSL.
//!
//! ```text
//! map <ident>(<var>{,<var>}) = (<expr>{,<expr>})
//! expr   ::= term {(+|-) term}
//! term   ::= unary {(*|/) unary}
//! unary  ::= - unary | factor
//! factor ::= base [^ <uint>]
//! base   ::= <number> | <var> | (expr) | sqrt(expr) | cbrt(expr)
//!          | abs(expr) | min(expr,expr) | max(expr,expr)
//! ```
//!
//! Whitespace is insignificant and `#` starts a line comment. Unary minus
//! folds into a literal (`-3` is the constant −3) and otherwise becomes
//! multiplication by −1.

use super::{Expr, MapDef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: start_line,
                column: start_col,
            });
        } else if c.is_ascii_digit() || c == '.' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            // optional exponent
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    s.extend(&chars[i..j]);
                    col += j - i;
                    i = j;
                }
            }
            if s.parse::<f64>().is_err() {
                return Err(Error::Syntax {
                    line: start_line,
                    column: start_col,
                    message: format!("malformed number `{s}`"),
                });
            }
            out.push(Token {
                tok: Tok::Number(s),
                line: start_line,
                column: start_col,
            });
        } else if "()=,+-*/^".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line,
                column: col,
            });
            i += 1;
            col += 1;
        } else {
            return Err(Error::Syntax {
                line,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    vars: &'a [String],
    // positions of currently open parentheses, for end-of-input errors
    open: Vec<(usize, usize)>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, tok: &Token, message: impl Into<String>) -> Result<T> {
        if let (Tok::Eof, Some(&(line, column))) = (&tok.tok, self.open.last()) {
            return Err(Error::Syntax {
                line,
                column,
                message: format!("unclosed `(`: {}", message.into()),
            });
        }
        Err(Error::Syntax {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        })
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            self.error(&t, format!("expected `{c}`, found {}", describe(&t.tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => self.error(&t, format!("expected identifier, found {}", describe(other))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Sym('+') => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Sym('*') => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Sym('-') {
            self.next();
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Mul(Box::new(Expr::Const(-1.0)), Box::new(e)),
            });
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek().tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.next();
        let t = self.next();
        match &t.tok {
            Tok::Number(s) => match s.parse::<u32>() {
                Ok(k) => Ok(Expr::Pow(Box::new(base), k)),
                Err(_) => self.error(&t, format!("exponent must be a non-negative integer, found `{s}`")),
            },
            other => self.error(&t, format!("expected integer exponent, found {}", describe(other))),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Number(s) => Ok(Expr::Const(s.parse().expect("validated by lexer"))),
            Tok::Sym('(') => {
                self.open.push((t.line, t.column));
                let e = self.expr()?;
                self.expect_sym(')')?;
                self.open.pop();
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::Sym('(') {
                    self.call(name, &t)
                } else if let Some(i) = self.vars.iter().position(|v| v == name) {
                    Ok(Expr::Var(i))
                } else {
                    Err(Error::Arity {
                        name: name.clone(),
                        arity: self.vars.len(),
                        line: t.line,
                        column: t.column,
                    })
                }
            }
            other => self.error(&t, format!("expected expression, found {}", describe(other))),
        }
    }

    fn call(&mut self, name: &str, at: &Token) -> Result<Expr> {
        let (line, column) = (self.peek().line, self.peek().column);
        self.expect_sym('(')?;
        self.open.push((line, column));
        let a = self.expr()?;
        let e = match name {
            "sqrt" => Expr::Sqrt(Box::new(a)),
            "cbrt" => Expr::Cbrt(Box::new(a)),
            "abs" => Expr::Abs(Box::new(a)),
            "min" | "max" => {
                self.expect_sym(',')?;
                let b = self.expr()?;
                if name == "min" {
                    Expr::Min(Box::new(a), Box::new(b))
                } else {
                    Expr::Max(Box::new(a), Box::new(b))
                }
            }
            _ => return self.error(at, format!("unknown function `{name}`")),
        };
        self.expect_sym(')')?;
        self.open.pop();
        Ok(e)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parses a full `map name(vars) = (components)` definition.
pub fn parse_map(src: &str) -> Result<MapDef> {
    let toks = lex(src)?;
    let mut header = Parser {
        toks,
        pos: 0,
        vars: &[],
        open: Vec::new(),
    };
    let (kw, kw_tok) = header.ident()?;
    if kw != "map" {
        return header.error(&kw_tok, format!("expected `map`, found `{kw}`"));
    }
    let (name, _) = header.ident()?;
    header.expect_sym('(')?;
    let mut vars: Vec<String> = Vec::new();
    loop {
        let (v, vt) = header.ident()?;
        if matches!(v.as_str(), "map" | "sqrt" | "cbrt" | "abs" | "min" | "max") {
            return header.error(&vt, format!("`{v}` is reserved"));
        }
        if vars.contains(&v) {
            return header.error(&vt, format!("variable `{v}` declared twice"));
        }
        vars.push(v);
        let t = header.next();
        match t.tok {
            Tok::Sym(',') => continue,
            Tok::Sym(')') => break,
            ref other => return header.error(&t, format!("expected `,` or `)`, found {}", describe(other))),
        }
    }
    header.expect_sym('=')?;
    let open = header.next();
    if open.tok != Tok::Sym('(') {
        return header.error(&open, format!("expected `(`, found {}", describe(&open.tok)));
    }
    let mut p = Parser {
        toks: header.toks,
        pos: header.pos,
        vars: &vars,
        open: vec![(open.line, open.column)],
    };
    let mut components = Vec::new();
    loop {
        components.push(p.expr()?);
        let t = p.next();
        match t.tok {
            Tok::Sym(',') => continue,
            Tok::Sym(')') => break,
            ref other => return p.error(&t, format!("expected `,` or `)`, found {}", describe(other))),
        }
    }
    p.open.clear();
    let t = p.next();
    if t.tok != Tok::Eof {
        return p.error(&t, format!("trailing input starting at {}", describe(&t.tok)));
    }
    MapDef::new(name, vars, components)
}

/// Parses a bare expression over the given variable names.
pub fn parse_expr(src: &str, vars: &[String]) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        vars,
        open: Vec::new(),
    };
    let e = p.expr()?;
    let t = p.next();
    if t.tok != Tok::Eof {
        return p.error(&t, format!("trailing input starting at {}", describe(&t.tok)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cube_root_example() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        assert_eq!(m.arity(), 2);
        assert_eq!(m.name, "f");
        assert_eq!(m.components[0], Expr::Cbrt(Box::new(Expr::Var(0))));
        assert_eq!(m.components[1], Expr::Var(1));
    }

    #[test]
    fn parses_sqrt_abs() {
        let m = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        assert_eq!(
            m.components[0],
            Expr::Sqrt(Box::new(Expr::Abs(Box::new(Expr::Var(0)))))
        );
    }

    #[test]
    fn unclosed_paren_is_syntax_error() {
        match parse_map("map h(x1) = (") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 13)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_map("map h(x1) = (x1") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 13)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_variable_is_arity_error() {
        match parse_map("map h(x1, x2) = (x1 + x3, x2)") {
            Err(Error::Arity { name, arity, line, column }) => {
                assert_eq!((name.as_str(), arity, line, column), ("x3", 2, 1, 23))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_lines() {
        let src = "# leading comment\nmap r(x1, x2) = ( # first\n  x1,\n  cbrt(x2) )\n";
        let m = parse_map(src).unwrap();
        assert_eq!(m.components.len(), 2);
        match parse_map("map r(x) =\n (x, $)") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 6)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_unary_minus() {
        let m = parse_map("map p(x, y) = (-x^2 + 2*y - -3, x - y - 1)").unwrap();
        assert_eq!(m.eval(&[2.0, 1.0]).unwrap(), vec![-4.0 + 2.0 + 3.0, 0.0]);
        assert_eq!(m.components[0].eval(&[1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(matches!(
            parse_map("map p(x) = (x^1.5)"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_map("map p(x) = (exp(x))"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn canonical_form_round_trips() {
        for src in [
            "map f(x1,x2) = (cbrt(x1), x2)",
            "map q(a,b) = (-(a - b)^3 / 2.5e-3, min(abs(a), max(b, -1)) * (a^2)^2)",
            "map t(x) = (0.1 + 1e300 - 3 * -x)",
        ] {
            let m = parse_map(src).unwrap();
            let printed = m.to_source();
            let again = parse_map(&printed).unwrap();
            assert_eq!(again, m, "{printed}");
            assert_eq!(again.to_source(), printed);
        }
    }
}
