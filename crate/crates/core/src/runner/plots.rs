//! Gnuplot scripts for the artifacts in an output directory. Scripts only
//! reference the CSVs next to them; nothing is plotted here.

use std::fs;
use std::path::{Path, PathBuf};

use super::commands::{CommandError, BARENBLATT_FILE, RELEVANT_FILE};
use super::output::{read_single_row, PROFILE_FILE, SUMMARY_FILE, TRACE_FILE};
use crate::equations::barenblatt_slope;

pub const RUN_SCRIPTS: [&str; 4] = ["alpha.gp", "prefactor.gp", "reldiff.gp", "profile_log.gp"];
pub const BARENBLATT_SCRIPT: &str = "alpha_vs_eps.gp";
pub const RELEVANT_SCRIPT: &str = "alpha_vs_a.gp";

const PREAMBLE: &str = "set datafile separator ','\nset terminal pngcairo size 800,600\n";

fn script(output: &str, body: &str) -> String {
    format!("{PREAMBLE}set output '{output}'\n{body}")
}

fn summary_value(dir: &Path, column: &str) -> Result<f64, CommandError> {
    let row = read_single_row(&dir.join(SUMMARY_FILE))?;
    let raw = row
        .iter()
        .find(|(c, _)| c == column)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| {
            CommandError::MissingArtifacts(format!("{SUMMARY_FILE} lacks '{column}'"))
        })?;
    raw.parse().map_err(|_| {
        CommandError::MissingArtifacts(format!("{SUMMARY_FILE}: bad {column} '{raw}'"))
    })
}

fn profile_peak(dir: &Path) -> Result<f64, CommandError> {
    let text = fs::read_to_string(dir.join(PROFILE_FILE))?;
    let peak = text
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1)?.parse::<f64>().ok())
        .fold(f64::NEG_INFINITY, f64::max);
    if peak > 0.0 {
        Ok(peak)
    } else {
        Err(CommandError::MissingArtifacts(format!(
            "{PROFILE_FILE} has no positive value"
        )))
    }
}

fn run_scripts(dir: &Path) -> Result<Vec<(String, String)>, CommandError> {
    let alpha_star = summary_value(dir, "alpha_star")?;
    let sigma = summary_value(dir, "sigma_theory")?;
    let peak = profile_peak(dir)?;
    Ok(vec![
        (
            RUN_SCRIPTS[0].into(),
            script(
                "alpha.png",
                &format!(
                    "set xlabel 'n'\nset ylabel 'alpha_n'\n\
                     plot '{TRACE_FILE}' every ::1 using 1:2 with lines title 'alpha_n', \
                     {alpha_star} title 'alpha*' dashtype 2\n"
                ),
            ),
        ),
        (
            RUN_SCRIPTS[1].into(),
            script(
                "prefactor.png",
                &format!(
                    "set xlabel 'n'\nset ylabel 'A_n'\n\
                     plot '{TRACE_FILE}' every ::1 using 1:4 with lines title 'A_n'\n"
                ),
            ),
        ),
        (
            RUN_SCRIPTS[2].into(),
            script(
                "reldiff.png",
                &format!(
                    "set xlabel 'n'\nset ylabel 'relative difference'\nset logscale y\n\
                     plot '{TRACE_FILE}' every ::1 using 1:6 with lines title 'L1', \
                     '' every ::1 using 1:7 with lines title 'Linf'\n"
                ),
            ),
        ),
        (
            RUN_SCRIPTS[3].into(),
            script(
                "profile_log.png",
                &format!(
                    "set xlabel '-log phi*'\nset ylabel '-log phi'\n\
                     sigma = {sigma}\npeak = {peak}\n\
                     plot '{PROFILE_FILE}' every ::1 using ($1**2/(4*sigma)):($2 > 0 ? -log($2/peak) : 1/0) \
                     with points title 'profile', x with lines title 'fixed point'\n"
                ),
            ),
        ),
    ])
}

/// Writes every script whose inputs exist in `dir` and returns their paths.
/// Fails if `dir` holds no recognized artifacts or an incomplete run.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, CommandError> {
    if !dir.is_dir() {
        return Err(CommandError::MissingArtifacts(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let run_files = [TRACE_FILE, PROFILE_FILE, SUMMARY_FILE];
    let present: Vec<bool> = run_files.iter().map(|f| dir.join(f).is_file()).collect();
    let mut scripts = Vec::new();
    if present.iter().any(|&p| p) {
        if let Some(i) = present.iter().position(|&p| !p) {
            return Err(CommandError::MissingArtifacts(format!(
                "{} in {}",
                run_files[i],
                dir.display()
            )));
        }
        scripts.extend(run_scripts(dir)?);
    }
    if dir.join(BARENBLATT_FILE).is_file() {
        scripts.push((
            BARENBLATT_SCRIPT.into(),
            script(
                "alpha_vs_eps.png",
                &format!(
                    "set xlabel 'epsilon'\nset ylabel 'alpha'\nset key left\n\
                     slope = {}\n\
                     plot '{BARENBLATT_FILE}' every ::1 using 1:3 with points pt 3 title 'computed', \
                     0.5 + slope*x with lines title 'first order'\n",
                    barenblatt_slope()
                ),
            ),
        ));
    }
    if dir.join(RELEVANT_FILE).is_file() {
        scripts.push((
            RELEVANT_SCRIPT.into(),
            script(
                "alpha_vs_a.png",
                &format!(
                    "set xlabel 'a'\nset ylabel 'alpha'\nset xrange [1.2:3]\n\
                     plot '{RELEVANT_FILE}' every ::1 using 1:3 with points pt 3 title 'computed', \
                     1/(x-1) with lines title '1/(a-1)'\n"
                ),
            ),
        ));
    }
    if scripts.is_empty() {
        return Err(CommandError::MissingArtifacts(format!(
            "no run or sweep outputs in {}",
            dir.display()
        )));
    }
    let mut paths = Vec::with_capacity(scripts.len());
    for (name, body) in scripts {
        let p = dir.join(name);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

/// `plots`: exit status of [`emit_plots`].
pub fn cmd_plots(dir: &Path) -> i32 {
    match emit_plots(dir) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
