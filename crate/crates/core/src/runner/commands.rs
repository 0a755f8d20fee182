//! Batch commands behind the CLI. Every command writes into its own output
//! directory; sweep members run in parallel, each in a private
//! subdirectory, and the combined table is written after all have finished.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use super::output::{
    num, write_profile, write_scaled_profile, write_summary, write_table, write_trace, SummaryRow,
    PROFILE_FILE, SUMMARY_FILE, TRACE_FILE,
};
use super::presets::{preset, PRESETS};
use crate::diagnostics::{barenblatt_alpha_first_order, harmonic_mean, relevant_alpha};
use crate::engine::{run, RunFailure, RunReport};
use crate::equations::{EquationForm, EquationSpec, MonomialTerm, PeriodicCoefficient};
use crate::error::{invalid, RgError};
use crate::grid::Grid;

/// Tolerance of the quadrature oracle used in reports.
pub const HARMONIC_MEAN_TOL: f64 = 1e-10;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 10;
pub const EXIT_MISSING_ARTIFACTS: i32 = 11;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] RgError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => EXIT_CONFIG,
            CommandError::Solver(e) => e.exit_code(),
            CommandError::Io(_) => EXIT_IO,
            CommandError::MissingArtifacts(_) => EXIT_MISSING_ARTIFACTS,
        }
    }
}

/// Discretization settings that replace those of presets and sweep bases.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOverrides {
    pub count: Option<usize>,
    pub half_width: Option<f64>,
    pub max_iter: Option<usize>,
    pub reldiff_tol: Option<f64>,
}

impl RunOverrides {
    pub fn apply(&self, c: &mut RunConfig) -> Result<(), RgError> {
        if self.count.is_some() || self.half_width.is_some() {
            c.grid = Grid::symmetric(
                self.half_width.unwrap_or(c.grid.half_width()),
                self.count.unwrap_or(c.grid.count()),
            )?;
        }
        if let Some(m) = self.max_iter {
            if m == 0 {
                return Err(invalid("max_iter must be at least 1"));
            }
            c.stop.max_iter = m;
        }
        if let Some(t) = self.reldiff_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid(format!("reldiff_tol must be >= 0, got {t}")));
            }
            c.stop.reldiff_tol = t;
        }
        Ok(())
    }
}

/// Result of one run together with the row written to `summary.csv`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: SummaryRow,
    /// `mass(f0)` on the initial grid.
    pub initial_mass: f64,
    pub result: Result<RunReport, RunFailure>,
}

impl RunOutcome {
    pub fn is_ok(&self) -> bool {
        self.result.is_ok()
    }

    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(_) => 0,
            Err(f) => f.error.exit_code(),
        }
    }

    pub fn trace(&self) -> &[crate::engine::TraceRecord] {
        match &self.result {
            Ok(r) => &r.trace,
            Err(f) => &f.trace,
        }
    }
}

/// Runs `config` and writes its artifacts to `dir`. Solver failures are part
/// of the outcome (the partial trace and a failed summary row are still
/// written); only I/O problems are errors.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<RunOutcome, CommandError> {
    fs::create_dir_all(dir)?;
    let sigma_theory = harmonic_mean(&config.equation.g, config.equation.mu, HARMONIC_MEAN_TOL)
        .unwrap_or(f64::NAN);
    let lambdas = config.equation.terms.len();
    let (f0, result) = match config.initial_field() {
        Ok(f0) => {
            let mass = f0.mass();
            (
                mass,
                run(&config.equation, f0, &config.settings, config.stop),
            )
        }
        Err(e) => (
            f64::NAN,
            Err(RunFailure {
                iteration: 0,
                error: e,
                trace: Vec::new(),
            }),
        ),
    };
    let files = config.output.files;
    let summary = match &result {
        Ok(report) => {
            if files.trace {
                write_trace(&dir.join(TRACE_FILE), &report.trace, lambdas)?;
            }
            if files.profile {
                write_profile(&dir.join(PROFILE_FILE), report.final_profile())?;
            }
            SummaryRow::ok(&report.summary)
        }
        Err(failure) => {
            if files.trace {
                write_trace(&dir.join(TRACE_FILE), &failure.trace, lambdas)?;
            }
            SummaryRow::failed(failure.error.class(), &failure.trace, sigma_theory)
        }
    };
    write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(RunOutcome {
        summary,
        initial_mass: f0,
        result,
    })
}

fn report(e: &CommandError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// `run`: one simulation into `config.output.dir`.
pub fn cmd_run(config: &RunConfig) -> i32 {
    match execute(config, &config.output.dir) {
        Ok(outcome) => {
            let s = &outcome.summary;
            println!(
                "status={} iterations={} alpha_star={} A_star={} sigma_fit={} sigma_theory={}",
                s.status,
                s.iterations,
                num(s.alpha_star),
                num(s.a_star),
                num(s.sigma_fit),
                num(s.sigma_theory)
            );
            if let Err(f) = &outcome.result {
                eprintln!("error ({}): {f}", f.error.class());
            }
            outcome.exit_code()
        }
        Err(e) => report(&e),
    }
}

fn first_failure(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes.into_iter().find(|&c| c != 0).unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct TableEntry {
    pub row: usize,
    pub config: RunConfig,
    pub outcome: RunOutcome,
}

pub const TABLE_FILE: &str = "table.csv";
pub const TABLE_HEADER: &str = "row,mu,g,lambda,a,b,c,f,mass,status,iterations,alpha_star,A_star,\
                                sigma_fit,sigma_theory,fit_residual";

/// Runs the selected presets into `out/row_NN` and writes `out/table.csv`.
pub fn run_table(
    rows: &[usize],
    overrides: &RunOverrides,
    out: &Path,
) -> Result<Vec<TableEntry>, CommandError> {
    let mut configs = Vec::with_capacity(rows.len());
    for &row in rows {
        let mut c = preset(row)?;
        overrides.apply(&mut c)?;
        c.output.dir = out.join(format!("row_{row:02}"));
        configs.push((row, c));
    }
    fs::create_dir_all(out)?;
    let entries = configs
        .into_par_iter()
        .map(|(row, config)| {
            let outcome = execute(&config, &config.output.dir)?;
            Ok(TableEntry {
                row,
                config,
                outcome,
            })
        })
        .collect::<Result<Vec<_>, CommandError>>()?;
    let lines: Vec<String> = entries
        .iter()
        .map(|e| {
            let p = &PRESETS[e.row - 1];
            let (l, a, b, c) = match p.term {
                Some((l, a, b, c)) => (num(l), num(a), b.to_string(), c.to_string()),
                None => ("0".into(), String::new(), String::new(), String::new()),
            };
            format!(
                "{},{},{},{l},{a},{b},{c},f{},{},{}",
                e.row,
                num(p.mu),
                p.g,
                p.f,
                num(e.outcome.initial_mass),
                e.outcome.summary.csv_fields()
            )
        })
        .collect();
    write_table(&out.join(TABLE_FILE), TABLE_HEADER, &lines)?;
    Ok(entries)
}

/// `table`: the selected reference simulations.
pub fn cmd_table(rows: &[usize], overrides: &RunOverrides, out: &Path) -> i32 {
    match run_table(rows, overrides, out) {
        Ok(entries) => {
            for e in &entries {
                let s = &e.outcome.summary;
                println!(
                    "row {:2}: status={} alpha_star={} A_star={} mass={} sigma_fit={}",
                    e.row, s.status, s.alpha_star, s.a_star, e.outcome.initial_mass, s.sigma_fit
                );
            }
            first_failure(entries.iter().map(|e| e.outcome.exit_code()))
        }
        Err(e) => report(&e),
    }
}

pub const DEFAULT_EPSILONS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
pub const BARENBLATT_FILE: &str = "barenblatt.csv";
pub const BARENBLATT_HEADER: &str = "epsilon,status,alpha_star,first_order";

#[derive(Debug, Clone)]
pub struct BarenblattEntry {
    pub epsilon: f64,
    pub first_order: f64,
    pub outcome: RunOutcome,
}

/// One Barenblatt run per `epsilon` in `out/eps_<epsilon>`; writes
/// `out/barenblatt.csv`. The base config supplies everything but the form.
pub fn run_barenblatt_sweep(
    epsilons: &[f64],
    base: &RunConfig,
    out: &Path,
) -> Result<Vec<BarenblattEntry>, CommandError> {
    let mut configs = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut c = base.clone();
        c.equation = EquationSpec::new(
            base.equation.mu,
            base.equation.g.clone(),
            EquationForm::Barenblatt { epsilon: eps },
            base.equation.terms.clone(),
        )?;
        c.output.dir = member_dir(out, "eps", eps);
        configs.push((eps, c));
    }
    fs::create_dir_all(out)?;
    let entries = configs
        .into_par_iter()
        .map(|(epsilon, c)| {
            Ok(BarenblattEntry {
                epsilon,
                first_order: barenblatt_alpha_first_order(epsilon),
                outcome: execute(&c, &c.output.dir)?,
            })
        })
        .collect::<Result<Vec<_>, CommandError>>()?;
    let lines: Vec<String> = entries
        .iter()
        .map(|e| {
            let s = &e.outcome.summary;
            format!(
                "{},{},{},{}",
                num(e.epsilon),
                s.status,
                num(s.alpha_star),
                num(e.first_order)
            )
        })
        .collect();
    write_table(&out.join(BARENBLATT_FILE), BARENBLATT_HEADER, &lines)?;
    Ok(entries)
}

/// `sweep-barenblatt`: exponent against `epsilon`. Failed members are
/// recorded in the table and the sweep continues.
pub fn cmd_sweep_barenblatt(epsilons: &[f64], base: &RunConfig, out: &Path) -> i32 {
    match run_barenblatt_sweep(epsilons, base, out) {
        Ok(entries) => {
            for e in &entries {
                println!(
                    "epsilon={} status={} alpha_star={} first_order={}",
                    e.epsilon,
                    e.outcome.summary.status,
                    e.outcome.summary.alpha_star,
                    e.first_order
                );
            }
            first_failure(entries.iter().map(|e| e.outcome.exit_code()))
        }
        Err(e) => report(&e),
    }
}

pub const RELEVANT_FILE: &str = "relevant.csv";
pub const SCALED_PROFILE_FILE: &str = "profile_scaled.csv";
/// Subdirectory of a relevant-sweep member holding its `mu = 0` companion.
pub const COMPANION_DIR: &str = "mu0";

/// Center value of the spatially constant solution of `u' = -u^a` at `t = 1`.
pub fn relevant_amplitude(a: f64) -> f64 {
    (a - 1.0).powf(-1.0 / (a - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevantSweep {
    pub mu: f64,
    pub g: String,
    /// Center value of the initial data; `None` uses [`relevant_amplitude`].
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RelevantEntry {
    pub a: f64,
    pub theory: f64,
    pub outcome: RunOutcome,
    /// The same run with `mu = 0`; present only when `mu != 0`.
    pub companion: Option<RunOutcome>,
    /// `sigma_fit(mu) / sigma_fit(0)`: the diffusivity by which `x` is rescaled.
    pub sigma_eff: f64,
    pub harmonic_mean: f64,
}

fn relevant_spec(mu: f64, g: &PeriodicCoefficient, a: f64) -> Result<EquationSpec, RgError> {
    EquationSpec::new(
        mu,
        g.clone(),
        EquationForm::Standard,
        vec![MonomialTerm::new(-1.0, a, 0, 0)?],
    )
}

/// Absorption `-u^a` runs into `out/a_<a>`. For `mu != 0` each member also
/// runs its `mu = 0` companion in `out/a_<a>/mu0`, and the member's profile
/// against `x / sqrt(H)` is written to `profile_scaled.csv` for overlay.
pub fn run_relevant_sweep(
    a_list: &[f64],
    sweep: &RelevantSweep,
    base: &RunConfig,
    out: &Path,
) -> Result<Vec<RelevantEntry>, CommandError> {
    let g = PeriodicCoefficient::builtin(&sweep.g)?;
    let h = harmonic_mean(&g, sweep.mu, HARMONIC_MEAN_TOL)?;
    let mut members = Vec::with_capacity(a_list.len());
    for &a in a_list {
        let theory = relevant_alpha(a)?;
        let mut c = base.clone();
        c.equation = relevant_spec(sweep.mu, &g, a)?;
        c.initial.amplitude = sweep.amplitude.unwrap_or_else(|| relevant_amplitude(a));
        c.output.dir = member_dir(out, "a", a);
        let companion = (sweep.mu != 0.0)
            .then(|| -> Result<RunConfig, RgError> {
                let mut c0 = c.clone();
                c0.equation = relevant_spec(0.0, &g, a)?;
                c0.output.dir = c.output.dir.join(COMPANION_DIR);
                Ok(c0)
            })
            .transpose()?;
        members.push((a, theory, c, companion));
    }
    fs::create_dir_all(out)?;
    let entries = members
        .into_par_iter()
        .map(|(a, theory, c, c0)| {
            let outcome = execute(&c, &c.output.dir)?;
            let companion = c0.map(|c0| execute(&c0, &c0.output.dir)).transpose()?;
            let sigma_eff = match &companion {
                Some(c0) => outcome.summary.sigma_fit / c0.summary.sigma_fit,
                None => 1.0,
            };
            if let (Some(_), Ok(report)) = (&companion, &outcome.result) {
                write_scaled_profile(
                    &c.output.dir.join(SCALED_PROFILE_FILE),
                    report.final_profile(),
                    h,
                )?;
            }
            Ok(RelevantEntry {
                a,
                theory,
                outcome,
                companion,
                sigma_eff,
                harmonic_mean: h,
            })
        })
        .collect::<Result<Vec<_>, CommandError>>()?;

    let with_sigma = sweep.mu != 0.0;
    let mut header = String::from("a,status,alpha_star,theory");
    if with_sigma {
        header.push_str(",sigma_fit,sigma_fit_mu0,sigma_eff,harmonic_mean");
    }
    let lines: Vec<String> = entries
        .iter()
        .map(|e| {
            let s = &e.outcome.summary;
            let mut line = format!(
                "{},{},{},{}",
                num(e.a),
                s.status,
                num(s.alpha_star),
                num(e.theory)
            );
            if let Some(c0) = &e.companion {
                line.push_str(&format!(
                    ",{},{},{},{}",
                    num(s.sigma_fit),
                    num(c0.summary.sigma_fit),
                    num(e.sigma_eff),
                    num(e.harmonic_mean)
                ));
            }
            line
        })
        .collect();
    write_table(&out.join(RELEVANT_FILE), &header, &lines)?;
    Ok(entries)
}

/// `sweep-relevant`: exponent against the absorption power `a`.
pub fn cmd_sweep_relevant(
    a_list: &[f64],
    sweep: &RelevantSweep,
    base: &RunConfig,
    out: &Path,
) -> i32 {
    match run_relevant_sweep(a_list, sweep, base, out) {
        Ok(entries) => {
            for e in &entries {
                let s = &e.outcome.summary;
                print!(
                    "a={} status={} alpha_star={} theory={}",
                    e.a, s.status, s.alpha_star, e.theory
                );
                if e.companion.is_some() {
                    print!(
                        " sigma_eff={} harmonic_mean={}",
                        e.sigma_eff, e.harmonic_mean
                    );
                }
                println!();
            }
            first_failure(entries.iter().flat_map(|e| {
                std::iter::once(e.outcome.exit_code())
                    .chain(e.companion.as_ref().map(RunOutcome::exit_code))
            }))
        }
        Err(e) => report(&e),
    }
}

/// `harmonic-mean`: prints `H(g, mu)`.
pub fn cmd_harmonic_mean(g: &str, mu: f64) -> i32 {
    let h = PeriodicCoefficient::builtin(g).and_then(|g| harmonic_mean(&g, mu, HARMONIC_MEAN_TOL));
    match h {
        Ok(h) => {
            println!("{h}");
            0
        }
        Err(e) => report(&CommandError::Solver(e)),
    }
}

/// Parses `1-3,5,11-13` into row numbers.
pub fn parse_rows(spec: &str) -> Result<Vec<usize>, RgError> {
    let mut rows = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("bad row number '{s}'")))
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(invalid(format!("empty row range '{part}'")));
                }
                rows.extend(lo..=hi);
            }
            None => rows.push(num(part)?),
        }
    }
    if rows.is_empty() {
        return Err(invalid("no rows selected"));
    }
    for &r in &rows {
        if !(1..=PRESETS.len()).contains(&r) {
            return Err(invalid(format!(
                "table rows are 1..={}, got {r}",
                PRESETS.len()
            )));
        }
    }
    Ok(rows)
}

/// Directory of the sweep member with parameter `value`.
pub fn member_dir(out: &Path, prefix: &str, value: f64) -> PathBuf {
    out.join(format!("{prefix}_{value}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::parse_config;

    #[test]
    fn rows_parse() {
        assert_eq!(parse_rows("11-13").unwrap(), vec![11, 12, 13]);
        assert_eq!(parse_rows("1, 5,14-15").unwrap(), vec![1, 5, 14, 15]);
        for bad in ["", "0", "16", "3-1", "x"] {
            assert!(parse_rows(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn overrides_apply() {
        let mut c = RunConfig::default();
        let o = RunOverrides {
            count: Some(65),
            max_iter: Some(3),
            reldiff_tol: Some(0.0),
            ..Default::default()
        };
        o.apply(&mut c).unwrap();
        assert_eq!((c.grid.count(), c.grid.half_width()), (65, 5.0));
        assert_eq!((c.stop.max_iter, c.stop.reldiff_tol), (3, 0.0));
        let bad = RunOverrides {
            count: Some(64),
            ..Default::default()
        };
        assert!(bad.apply(&mut c).is_err());
    }

    #[test]
    fn execute_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("max_iter = 3\nreldiff_tol = 0").unwrap();
        let out = execute(&c, dir.path()).unwrap();
        assert!(out.is_ok());
        assert_eq!(out.summary.iterations, 3);
        let trace = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert_eq!(trace.lines().count(), 4);
        assert!(dir.path().join(PROFILE_FILE).exists());
        assert!(dir.path().join(SUMMARY_FILE).exists());
    }

    #[test]
    fn failed_run_flushes_partial_trace() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("term = 50 3 0 0\namplitude = 3\nmax_iter = 50").unwrap();
        let out = execute(&c, dir.path()).unwrap();
        let f = out.result.as_ref().unwrap_err();
        assert_eq!(out.summary.status, f.error.class());
        assert_ne!(out.exit_code(), 0);
        let trace = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert_eq!(trace.lines().count(), f.trace.len() + 1);
        let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert!(summary.lines().nth(1).unwrap().starts_with(f.error.class()));
    }

    #[test]
    fn relevant_amplitude_solves_the_ode() {
        for a in [1.5, 2.0, 2.5] {
            let u1 = relevant_amplitude(a);
            let l: f64 = 1.021;
            let ul = ((a - 1.0) * l).powf(-1.0 / (a - 1.0));
            assert!(((u1 / ul).ln() / l.ln() - 1.0 / (a - 1.0)).abs() < 1e-12);
        }
        assert_eq!(relevant_amplitude(2.0), 1.0);
    }

    #[test]
    fn harmonic_mean_command_codes() {
        assert_eq!(cmd_harmonic_mean("g1", 0.8), 0);
        assert_eq!(
            cmd_harmonic_mean("g1", 1.2),
            RgError::InvalidArgument(String::new()).exit_code()
        );
        assert_ne!(cmd_harmonic_mean("g7", 0.1), 0);
    }
}
