//! CSV artifacts. Floats are written in shortest round-trip form, so equal
//! runs produce byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::engine::{alpha_star, Summary, TraceRecord};
use crate::grid::Field;

pub const TRACE_FILE: &str = "trace.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const SUMMARY_HEADER: &str =
    "status,iterations,alpha_star,A_star,sigma_fit,sigma_theory,fit_residual";

/// Shortest round-trip text for `x`; scientific notation outside
/// `[1e-4, 1e15)` in magnitude.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One `summary.csv` row; `status` is `ok` or an error class.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub status: String,
    pub iterations: usize,
    pub alpha_star: f64,
    pub a_star: f64,
    pub sigma_fit: f64,
    pub sigma_theory: f64,
    pub fit_residual: f64,
}

impl SummaryRow {
    pub fn ok(s: &Summary) -> Self {
        SummaryRow {
            status: "ok".into(),
            iterations: s.iterations,
            alpha_star: s.alpha_star,
            a_star: s.a_star,
            sigma_fit: s.sigma_fit,
            sigma_theory: s.sigma_theory,
            fit_residual: s.fit_residual,
        }
    }

    /// Row for a failed run, with exponent and prefactor taken from the
    /// iterations that did complete.
    pub fn failed(class: &str, trace: &[TraceRecord], sigma_theory: f64) -> Self {
        SummaryRow {
            status: class.into(),
            iterations: trace.len(),
            alpha_star: alpha_star(trace),
            a_star: trace.last().map_or(f64::NAN, |r| r.a_n),
            sigma_fit: f64::NAN,
            sigma_theory,
            fit_residual: f64::NAN,
        }
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.status,
            self.iterations,
            num(self.alpha_star),
            num(self.a_star),
            num(self.sigma_fit),
            num(self.sigma_theory),
            num(self.fit_residual)
        )
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn trace_header(lambdas: usize) -> String {
    let mut h = String::from("n,alpha_n,beta_n,A_n,B_n,reldiff_L1,reldiff_Linf");
    for k in 1..=lambdas {
        h.push_str(&format!(",lambda_{k}"));
    }
    h.push_str(",grid_count,substeps");
    h
}

/// Writes one row per completed iteration. `lambdas` fixes the column count
/// even when the trace is empty.
pub fn write_trace(path: &Path, trace: &[TraceRecord], lambdas: usize) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", trace_header(lambdas))?;
    for r in trace {
        write!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            num(r.alpha),
            num(r.beta),
            num(r.a_n),
            num(r.b_n),
            num(r.reldiff_l1),
            num(r.reldiff_linf)
        )?;
        for &l in &r.lambda_magnitudes {
            write!(w, ",{}", num(l))?;
        }
        writeln!(w, ",{},{}", r.grid_count, r.substeps)?;
    }
    w.flush()
}

pub fn write_profile(path: &Path, profile: &Field) -> io::Result<()> {
    write_xy(path, "x,value", profile, 1.0)
}

/// Profile against `x / sqrt(sigma)`.
pub fn write_scaled_profile(path: &Path, profile: &Field, sigma: f64) -> io::Result<()> {
    write_xy(path, "x_scaled,value", profile, sigma.sqrt().recip())
}

fn write_xy(path: &Path, header: &str, profile: &Field, x_factor: f64) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    let grid = profile.grid();
    for (j, v) in profile.values().iter().enumerate() {
        writeln!(w, "{},{}", num(grid.x(j) * x_factor), num(*v))?;
    }
    w.flush()
}

pub fn write_summary(path: &Path, row: &SummaryRow) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    writeln!(w, "{}", row.csv_fields())?;
    w.flush()
}

/// Generic table: a header line and pre-formatted rows.
pub fn write_table(path: &Path, header: &str, rows: &[String]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()
}

/// Reads a two-line CSV (header plus one row) into `(column, value)` pairs.
pub fn read_single_row(path: &Path) -> io::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |m: &str| {
        io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {m}", path.display()),
        )
    };
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let row = lines.next().ok_or_else(|| bad("missing data row"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let vals: Vec<&str> = row.split(',').collect();
    if cols.len() != vals.len() {
        return Err(bad("row width differs from header"));
    }
    Ok(cols
        .into_iter()
        .zip(vals)
        .map(|(c, v)| (c.to_string(), v.to_string()))
        .collect())
}
