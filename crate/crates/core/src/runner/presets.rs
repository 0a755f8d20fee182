//! The fifteen reference simulations.
//!
//! Initial data `f1`, `f2`, `f3` are library shapes with the same center
//! value [`DEFAULT_AMPLITUDE`], so that `A* = mass(f0)` in the heat case:
//!
//! * `f1`: `gauss`, width 4
//! * `f2`: `bump`, width 3
//! * `f3`: `double_bump`, width 2

use super::config::{RunConfig, DEFAULT_AMPLITUDE};
use crate::equations::{
    EquationForm, EquationSpec, InitialCondition, InitialShape, MonomialTerm, PeriodicCoefficient,
};
use crate::error::{invalid, Result};

pub const PRESET_COUNT: usize = 15;

/// One row of the reference table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRow {
    pub mu: f64,
    pub g: &'static str,
    /// `(lambda, a, b, c)`, absent for linear rows.
    pub term: Option<(f64, f64, u32, u32)>,
    /// Index 1..=3 of the initial datum.
    pub f: u8,
}

const fn lin(mu: f64, g: &'static str, f: u8) -> PresetRow {
    PresetRow {
        mu,
        g,
        term: None,
        f,
    }
}

const fn nl(mu: f64, g: &'static str, t: (f64, f64, u32, u32), f: u8) -> PresetRow {
    PresetRow {
        mu,
        g,
        term: Some(t),
        f,
    }
}

pub const PRESETS: [PresetRow; PRESET_COUNT] = [
    lin(0.1, "g1", 1),
    lin(0.1, "g1", 2),
    lin(-0.15, "g1", 1),
    lin(0.1, "g1", 3),
    nl(0.1, "g1", (0.1, 4.0, 0, 0), 1),
    nl(0.1, "g1", (0.1, 2.0, 1, 0), 1),
    nl(0.1, "g2", (0.3, 8.0, 0, 0), 3),
    lin(0.8, "g1", 1),
    lin(0.1, "g3", 1),
    lin(0.8, "g3", 1),
    lin(0.0, "g1", 1),
    lin(0.0, "g1", 2),
    lin(0.0, "g1", 3),
    nl(0.1, "g1", (0.1, 1.0, 1, 1), 1),
    nl(0.6, "g3", (0.1, 0.0, 1, 1), 2),
];

/// Library stand-in for initial datum `f1`, `f2` or `f3`.
pub fn initial_datum(f: u8) -> Result<InitialCondition> {
    let (shape, width) = match f {
        1 => (InitialShape::Gauss, 4.0),
        2 => (InitialShape::Bump, 3.0),
        3 => (InitialShape::DoubleBump, 2.0),
        other => return Err(invalid(format!("no initial datum f{other}"))),
    };
    InitialCondition::new(shape, DEFAULT_AMPLITUDE, width)
}

/// Default-discretization config for table row `row` (1-based).
pub fn preset(row: usize) -> Result<RunConfig> {
    let p = row
        .checked_sub(1)
        .and_then(|i| PRESETS.get(i))
        .ok_or_else(|| invalid(format!("table rows are 1..={PRESET_COUNT}, got {row}")))?;
    let terms = match p.term {
        Some((lambda, a, b, c)) => vec![MonomialTerm::new(lambda, a, b, c)?],
        None => Vec::new(),
    };
    let equation = EquationSpec::new(
        p.mu,
        PeriodicCoefficient::builtin(p.g)?,
        EquationForm::Standard,
        terms,
    )?;
    Ok(RunConfig {
        equation,
        initial: initial_datum(p.f)?,
        ..RunConfig::default()
    })
}
