//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::degree::degree_formula;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, parse_map, MapDef};
use crate::global::{
    hadamard_integral_check, hadamard_uniform_check, kinf_probe, GlobalReport, pourciau_check, properness_probe, KinfOptions,
    PourciauOptions,
};
use crate::newton::NewtonOptions;
use crate::region::Region;
use crate::regularity::{
    classify_point, estimate_nu, implicit_solve, local_inverse_cert, sard_scan, sign_at, ImplicitGrid, NuVerdict,
    PointClass, Schedule,
};
use crate::report::{emit_grid, to_json, value, Quantity, Report};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const HADAMARD_BOXES: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "defmap", version, about = "Regularity, degree and global invertibility diagnostics for piecewise semi-algebraic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate nu at a point, classify it, and certify a local inverse.
    Analyze(Common),
    /// Brouwer degree over a ball or box, with an independent oracle in 1-D and 2-D.
    Degree(Common),
    /// Critical-value occupancy at two grid resolutions.
    Sard(Common),
    /// Properness, Pourciau, Hadamard and K-infinity diagnostics.
    Global(Common),
    /// Continue the implicit function of F(x, y) = 0 over a grid around --point.
    Implicit(Common),
    /// Run the bundled fixture suite.
    Selftest(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub map: Option<PathBuf>,
    #[arg(long, value_name = "CSV", allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Center coordinates followed by the radius.
    #[arg(long, value_name = "CX,CY,...,R", allow_hyphen_values = true)]
    pub ball: Option<String>,
    /// Lower and upper bound per axis.
    #[arg(long = "box", value_name = "LO1,HI1,...", allow_hyphen_values = true)]
    pub region_box: Option<String>,
    #[arg(long, value_name = "CSV", allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of radius halvings K.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Samples per level (analyze, degree) or per box (global).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long = "grid-out", value_name = "PATH")]
    pub grid_out: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Quantity written by --grid-out.
    #[arg(long, value_enum, default_value = "nu")]
    pub quantity: Quantity,
    /// Uniform lower bound tested by the Hadamard check (global).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Lower bound c(t) for the integral criterion, in the variable t (global).
    #[arg(long, value_name = "EXPR")]
    pub c: Option<String>,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok((report, ok)) => {
            let common = cli.command.common();
            let text = match to_json(&report) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_NUMERIC;
                }
            };
            match &common.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_INPUT;
                    }
                }
                None => {
                    use std::io::Write;
                    let mut out = std::io::stdout().lock();
                    if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                        return EXIT_INPUT;
                    }
                }
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_NUMERIC
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Degree(c)
            | Command::Sard(c)
            | Command::Global(c)
            | Command::Implicit(c)
            | Command::Selftest(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Degree(_) => "degree",
            Command::Sard(_) => "sard",
            Command::Global(_) => "global",
            Command::Implicit(_) => "implicit",
            Command::Selftest(_) => "selftest",
        }
    }
}

pub fn parse_csv(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("--{what}: `{}` is not a finite number", t.trim())))
        })
        .collect()
}

pub fn parse_region(ball: Option<&str>, region_box: Option<&str>) -> Result<Option<Region>> {
    match (ball, region_box) {
        (Some(_), Some(_)) => Err(Error::InvalidInput("give either --ball or --box, not both".into())),
        (Some(b), None) => {
            let v = parse_csv(b, "ball")?;
            if v.len() < 2 {
                return Err(Error::InvalidInput("--ball needs a center and a radius".into()));
            }
            let (c, r) = v.split_at(v.len() - 1);
            Region::new_ball(c.to_vec(), r[0]).map(Some)
        }
        (None, Some(b)) => {
            let v = parse_csv(b, "box")?;
            if v.is_empty() || v.len() % 2 != 0 {
                return Err(Error::InvalidInput("--box needs lo,hi pairs".into()));
            }
            let lo = v.iter().step_by(2).copied().collect();
            let hi = v.iter().skip(1).step_by(2).copied().collect();
            Region::new_box(lo, hi).map(Some)
        }
        (None, None) => Ok(None),
    }
}

fn load_map(path: Option<&Path>) -> Result<MapDef> {
    let path = path.ok_or_else(|| Error::InvalidInput("--map is required".into()))?;
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_map(&src)
}

fn require<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str> {
    v.as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("--{flag} is required for this command")))
}

fn schedule(c: &Common) -> Schedule {
    let mut s = Schedule::default().with_seed(c.seed);
    if let Some(k) = c.levels {
        s.levels = k;
    }
    if let Some(n) = c.samples {
        s.samples = n;
    }
    s
}

fn echo(cli: &Cli, extra: Value) -> Value {
    let c = cli.command.common();
    let mut v = json!({
        "command": cli.command.name(),
        "map": c.map.as_ref().map(|p| p.display().to_string()),
        "point": c.point,
        "ball": c.ball,
        "box": c.region_box,
        "target": c.target,
        "seed": c.seed,
        "levels": c.levels,
        "samples": c.samples,
        "out": c.out.as_ref().map(|p| p.display().to_string()),
        "grid_out": c.grid_out.as_ref().map(|p| p.display().to_string()),
        "resolution": c.resolution,
        "quantity": value(&c.quantity),
        "delta": c.delta,
        "c": c.c,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

/// Runs one command; the flag is false when a selftest case failed.
pub fn run(cli: &Cli) -> Result<(Report, bool)> {
    let c = cli.command.common();
    match &cli.command {
        Command::Analyze(_) => analyze(cli, c).map(|r| (r, true)),
        Command::Degree(_) => degree(cli, c).map(|r| (r, true)),
        Command::Sard(_) => sard(cli, c).map(|r| (r, true)),
        Command::Global(_) => global(cli, c).map(|r| (r, true)),
        Command::Implicit(_) => implicit(cli, c).map(|r| (r, true)),
        Command::Selftest(_) => {
            let cases = selftest::run(c.seed);
            let ok = cases.iter().all(|k| k.passed);
            let verdicts: serde_json::Map<String, Value> = cases
                .iter()
                .map(|k| (k.name.to_string(), json!(if k.passed { "pass" } else { "fail" })))
                .collect();
            let report = Report::new(
                echo(cli, json!({})),
                Value::Object(verdicts),
                value(&cases),
                json!({ "schedule": value(&Schedule::default().with_seed(c.seed)) }),
                c.seed,
            );
            Ok((report, ok))
        }
    }
}

fn analyze(cli: &Cli, c: &Common) -> Result<Report> {
    let m = load_map(c.map.as_deref())?;
    let x = parse_csv(require(&c.point, "point")?, "point")?;
    let s = schedule(c);
    let est = estimate_nu(&m, &x, &s)?;
    let class = classify_point(&m, &x, &s)?;
    let (sign, cert) = if class.is_regular() {
        let cert = local_inverse_cert(&m, &x, &s);
        let radius = cert.as_ref().map(|k| 0.5 * k.radius).unwrap_or(s.radius(s.levels));
        (Some(sign_at(&m, &x, 32, radius, s.seed)), Some(cert))
    } else {
        (None, None)
    };
    let nu = match est.verdict {
        NuVerdict::Converged { value } => json!(value),
        NuVerdict::Infinite => json!("infinite"),
        NuVerdict::Zero => json!(est.last()),
    };
    let cert_evidence = cert.as_ref().map(|r| match r {
        Ok(k) => json!({
            "radius": k.radius,
            "delta": k.delta,
            "slack_adjusted": k.slack_adjusted,
            "min_ratio": k.min_ratio,
            "pairs": k.witness_pairs.len(),
            "sample_pairs": value(&k.witness_pairs.iter().take(8).collect::<Vec<_>>()),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    });
    let grid_rows = match &c.grid_out {
        Some(path) => {
            let region = parse_region(c.ball.as_deref(), c.region_box.as_deref())?.unwrap_or_else(|| Region::cube(2, 1.0));
            Some(emit_grid(&m, &region, c.quantity, c.resolution.unwrap_or(41), path)?)
        }
        None => None,
    };
    Ok(Report::new(
        echo(cli, json!({ "map_source": m.to_source(), "schedule": value(&s) })),
        json!({
            "classification": point_class_name(&class),
            "nu": nu,
            "nu_verdict": value(&est.verdict),
            "sign": sign.as_ref().map(|r| r.as_ref().map(|k| k.sign).ok()),
            "local_inverse": cert.as_ref().map(|r| if r.is_ok() { "certified" } else { "not certified" }),
        }),
        json!({
            "nu_estimate": value(&est),
            "classification": value(&class),
            "sign": sign.map(|r| match r {
                Ok(k) => value(&k),
                Err(e) => json!({ "error": e.to_string() }),
            }),
            "local_inverse": cert_evidence,
            "grid_rows": grid_rows,
        }),
        json!({
            "levels": est.radii.len(),
            "samples_per_level": s.samples,
            "hull_samples": s.hull_samples,
            "sample_budget": est.sample_budget,
            "rejected": est.rejected,
        }),
        c.seed,
    ))
}

fn point_class_name(c: &PointClass) -> &'static str {
    match c {
        PointClass::Regular { .. } => "Regular",
        PointClass::Critical => "Critical",
        PointClass::Undetermined { .. } => "Undetermined",
    }
}

fn degree(cli: &Cli, c: &Common) -> Result<Report> {
    let m = load_map(c.map.as_deref())?;
    let region = parse_region(c.ball.as_deref(), c.region_box.as_deref())?
        .ok_or_else(|| Error::InvalidInput("degree needs --ball or --box".into()))?;
    let y = parse_csv(require(&c.target, "target")?, "target")?;
    let s = schedule(c);
    let d = degree_formula(&m, &region, &y, &s)?;
    Ok(Report::new(
        echo(cli, json!({ "map_source": m.to_source(), "region": value(&region), "schedule": value(&s) })),
        json!({
            "degree": d.degree,
            "method": value(&d.method),
            "oracle": d.oracle.as_ref().map(|o| json!({
                "method": value(&o.method),
                "degree": o.degree,
                "agrees": o.agrees,
            })),
        }),
        value(&d),
        json!({
            "boundary_samples": d.boundary_samples,
            "grid_resolutions": d.grid_resolutions,
            "samples_per_level": s.samples,
            "hull_samples": s.hull_samples,
            "levels": s.levels,
        }),
        c.seed,
    ))
}

fn sard(cli: &Cli, c: &Common) -> Result<Report> {
    let m = load_map(c.map.as_deref())?;
    let region = parse_region(c.ball.as_deref(), c.region_box.as_deref())?.unwrap_or_else(|| Region::cube(m.arity(), 1.0));
    let g = c.resolution.unwrap_or(21);
    let v = ((g.saturating_sub(1)) / 2).max(1);
    let r = sard_scan(&m, &region, g, v, c.seed)?;
    Ok(Report::new(
        echo(cli, json!({ "map_source": m.to_source(), "region": value(&region), "value_resolution": v })),
        json!({ "halves": r.halves, "decreasing": r.decreasing, "ratio": r.ratio }),
        value(&r),
        json!({
            "grid_resolutions": r.levels.iter().map(|l| l.grid_resolution).collect::<Vec<_>>(),
            "value_resolutions": r.levels.iter().map(|l| l.value_resolution).collect::<Vec<_>>(),
        }),
        c.seed,
    ))
}

fn global(cli: &Cli, c: &Common) -> Result<Report> {
    let m = load_map(c.map.as_deref())?;
    let samples = c.samples.unwrap_or(50);
    let radii: Vec<f64> = (1..=5).map(|k| 2f64.powi(k)).collect();
    let properness = properness_probe(&m, &radii, 64, c.seed)?;
    let popts = PourciauOptions {
        sign_samples: samples,
        seed: c.seed,
        ..PourciauOptions::default()
    };
    let pourciau = pourciau_check(&m, &popts)?;
    let uniform = c.delta.map(|d| hadamard_uniform_check(&m, d, HADAMARD_BOXES, samples, c.seed)).transpose()?;
    let integral = match &c.c {
        Some(src) => {
            let expr = parse_expr(src, &["t".to_string()])?;
            Some(hadamard_integral_check(&m, &expr, 64.0, samples, c.seed)?)
        }
        None => None,
    };
    let kinf = kinf_probe(
        &m,
        &KinfOptions {
            seed: c.seed,
            ..KinfOptions::default()
        },
    )?;
    let tag = |v: &crate::global::Verdict| value(v)["verdict"].clone();
    let verdicts = json!({
        "properness": tag(&properness.verdict),
        "pourciau": tag(&pourciau.verdict),
        "pourciau_sign": tag(&pourciau.sign.verdict),
        "pourciau_critical": tag(&pourciau.critical.verdict),
        "hadamard_uniform": uniform.as_ref().map(|u| tag(&u.verdict)),
        "hadamard_integral": integral.as_ref().map(|u| tag(&u.verdict)),
        "kinf_clusters": kinf.clusters.len(),
    });
    let budgets = json!({
        "properness_radii": radii,
        "sphere_samples": 64,
        "sign_samples_per_box": samples,
        "pourciau_boxes": popts.boxes,
        "pourciau_grid_resolution": popts.grid_resolution,
        "hadamard_boxes": HADAMARD_BOXES,
        "hadamard_samples_per_box": samples,
        "kinf_rays": kinf.rays,
        "kinf_paths": kinf.paths_probed,
    });
    let report = GlobalReport {
        map: m.to_source(),
        properness,
        pourciau,
        hadamard_uniform: uniform,
        hadamard_integral: integral,
        kinf,
        seed: c.seed,
    };
    Ok(Report::new(
        echo(cli, json!({ "map_source": report.map })),
        verdicts,
        value(&report),
        budgets,
        c.seed,
    ))
}

fn implicit(cli: &Cli, c: &Common) -> Result<Report> {
    let f = load_map(c.map.as_deref())?;
    let x = parse_csv(require(&c.point, "point")?, "point")?;
    let y = parse_csv(require(&c.target, "target")?, "target")?;
    let half_width = match parse_region(c.ball.as_deref(), c.region_box.as_deref())? {
        None => 0.5,
        Some(Region::Box { lo, hi }) => {
            let h = 0.5 * (hi[0] - lo[0]);
            let centered = lo.len() == x.len()
                && lo.iter().zip(&hi).zip(&x).all(|((a, b), c)| {
                    ((b - a) * 0.5 - h).abs() <= 1e-12 * h.max(1.0) && ((a + b) * 0.5 - c).abs() <= 1e-12 * h.max(1.0)
                });
            if !centered {
                return Err(Error::InvalidInput("--box must be a cube centered at --point".into()));
            }
            h
        }
        Some(Region::Ball { .. }) => return Err(Error::InvalidInput("implicit takes --box, not --ball".into())),
    };
    let grid = ImplicitGrid {
        half_width,
        points_per_axis: c.resolution.unwrap_or(21),
    };
    let s = schedule(c);
    let newton = NewtonOptions::default();
    let t = implicit_solve(&f, &x, &y, grid, newton, &s)?;
    if let Some(path) = &c.grid_out {
        let mut text = String::new();
        let head: Vec<String> = (1..=x.len())
            .map(|i| format!("x{i}"))
            .chain((1..=y.len()).map(|i| format!("y{i}")))
            .chain(["residual".to_string(), "status".to_string()])
            .collect();
        text.push_str(&head.join(","));
        text.push('\n');
        for cell in &t.cells {
            let row: Vec<String> = cell
                .x
                .iter()
                .chain(&cell.y)
                .map(|v| v.to_string())
                .chain([cell.residual.to_string(), value(&cell.status).as_str().unwrap_or("").to_string()])
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    }
    let diverged = t.cells.iter().filter(|c| c.status != crate::regularity::CellStatus::Solved).count();
    Ok(Report::new(
        echo(cli, json!({ "map_source": f.to_source(), "grid": value(&grid), "schedule": value(&s) })),
        json!({
            "condition": value(&t.condition.verdict),
            "all_solved": t.all_solved(),
            "diverged_cells": diverged,
            "continuity_violations": t.continuity.violations.len(),
        }),
        value(&t),
        json!({
            "cells": t.cells.len(),
            "newton": value(&newton),
            "condition_levels": t.condition.radii.len(),
            "samples_per_level": s.samples,
        }),
        c.seed,
    ))
}
