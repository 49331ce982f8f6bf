//! Machine-readable output: JSON reports with sorted keys and
//! 17-significant-digit floats, and CSV grids for plotting.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expr::{JacobianEval, MapDef, DEFAULT_GUARD_TOL};
use crate::matrix::norm;
use crate::region::Region;
use crate::regularity::SIGN_TOL;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level report. Every numeric verdict is accompanied by the
/// `budgets` and `seed` that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub config_echo: Value,
    pub verdicts: Value,
    pub evidence: Value,
    pub budgets: Value,
    pub seed: u64,
}

impl Report {
    pub fn new(config_echo: Value, verdicts: Value, evidence: Value, budgets: Value, seed: u64) -> Report {
        Report {
            tool_version: TOOL_VERSION.to_string(),
            config_echo,
            verdicts,
            evidence,
            budgets,
            seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Converts any serializable value into a JSON tree (keys sorted).
pub fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Pretty JSON with every float printed as `d.dddddddddddddddde±x`.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    // Round-trip through Value so object keys come out sorted.
    let tree = serde_json::to_value(v).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FloatFormatter::default());
    tree.serialize(&mut ser).map_err(|e| Error::InvalidInput(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("JSON is UTF-8"))
}

#[derive(Default)]
struct FloatFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for FloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Pointwise quantity written by [`emit_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `σ(df(x))`, the pointwise regularity index off the guards.
    Nu,
    SignDet,
    NormF,
}

/// Writes `x1,x2,value` rows over a `resolution × resolution` grid of a
/// planar region. Cells where the value is undefined hold `nan`.
pub fn write_grid<W: Write>(m: &MapDef, region: &Region, quantity: Quantity, resolution: usize, out: &mut W) -> Result<usize> {
    if m.arity() != 2 || region.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            required: 2,
            actual: m.arity(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let jac = m.differentiate();
    let pts = region.grid(resolution);
    let values = crate::par::map_slice(&pts, |x| -> Option<f64> {
        match quantity {
            Quantity::NormF => m.eval(x).ok().map(|y| norm(&y)),
            Quantity::Nu | Quantity::SignDet => match jac.eval(x, DEFAULT_GUARD_TOL) {
                Ok(JacobianEval::Smooth(a)) => Some(match quantity {
                    Quantity::Nu => a.conorm(),
                    _ => a.sign_det(SIGN_TOL) as f64,
                }),
                _ => None,
            },
        }
    });
    let io = |e: io::Error| Error::InvalidInput(format!("writing grid: {e}"));
    writeln!(out, "x1,x2,value").map_err(io)?;
    for (x, v) in pts.iter().zip(&values) {
        match v {
            Some(v) => writeln!(out, "{},{},{}", x[0], x[1], v),
            None => writeln!(out, "{},{},nan", x[0], x[1]),
        }
        .map_err(io)?;
    }
    Ok(pts.len())
}

/// [`write_grid`] into a file.
pub fn emit_grid(m: &MapDef, region: &Region, quantity: Quantity, resolution: usize, path: &Path) -> Result<usize> {
    let mut buf = Vec::new();
    let rows = write_grid(m, region, quantity, resolution, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits_and_keys_sort() {
        let s = to_json(&json!({"b": 0.1, "a": [1.0, -2.5e-300], "c": 3})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
        assert_eq!(back["c"], json!(3));
    }

    fn rows(m: &MapDef, q: Quantity) -> Vec<Vec<String>> {
        let mut buf = Vec::new();
        write_grid(m, &Region::cube(2, 1.0), q, 11, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2,value"));
        lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    #[test]
    fn identity_nu_grid() {
        let r = rows(&MapDef::identity(2), Quantity::Nu);
        assert_eq!(r.len(), 121);
        assert!(r.iter().all(|row| row[2] == "1"));
    }

    #[test]
    fn sign_flips_across_guard() {
        let g = parse_map("map g(x1,x2) = (sqrt(abs(x1)), x2)").unwrap();
        for row in rows(&g, Quantity::SignDet) {
            let x1: f64 = row[0].parse().unwrap();
            let expect = if x1 == 0.0 { "nan" } else if x1 > 0.0 { "1" } else { "-1" };
            assert_eq!(row[2], expect);
        }
    }

    #[test]
    fn cube_root_nu_grid() {
        let m = parse_map("map f(x1,x2) = (cbrt(x1), x2)").unwrap();
        for row in rows(&m, Quantity::Nu) {
            let x1: f64 = row[0].parse().unwrap();
            if x1 == 0.0 {
                assert_eq!(row[2], "nan");
            } else {
                let v: f64 = row[2].parse().unwrap();
                let expect = (1.0 / (3.0 * x1.abs().powf(2.0 / 3.0))).min(1.0);
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_dimension() {
        let mut buf = Vec::new();
        assert!(matches!(
            write_grid(&MapDef::identity(3), &Region::cube(3, 1.0), Quantity::Nu, 5, &mut buf),
            Err(Error::UnsupportedDimension { .. })
        ));
    }
}
