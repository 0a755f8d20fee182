//! Line-oriented run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys may be given
//! with or without their section prefix (`rg.L` or `L`). `equation.term` is
//! the only key that may repeat.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `equation.mu` | real | `0` |
//! | `equation.g` | `g1`, `g2`, `g3` or `fourier` | `g1` |
//! | `equation.g.cos`, `equation.g.sin` | list of reals (fourier only) | empty |
//! | `equation.form` | `standard`, `divergence`, `barenblatt` | `standard` |
//! | `equation.epsilon` | real >= 0 (barenblatt only) | `0` |
//! | `equation.term` | `lambda a b c` | none |
//! | `initial.name` | `gauss`, `bump`, `double_bump` | `gauss` |
//! | `initial.amplitude` | real | `1/sqrt(4 pi)` |
//! | `initial.width` | real > 0 | `4` |
//! | `grid.half_width` | real > 0 | `5` |
//! | `grid.count` | odd integer >= 3 | `27` |
//! | `rg.L` | real > 1 | `1.021` |
//! | `rg.policy` | `fixed_half`, `scaling_relation` | `fixed_half` |
//! | `rg.dominant_term` | term index (scaling_relation only) | `0` |
//! | `rg.max_iter` | integer >= 1 | `500` |
//! | `rg.reldiff_tol` | real >= 0, `0` disables | `1e-6` |
//! | `stepper.C` | real in (0, 0.5] | `0.45` |
//! | `stepper.trim` | real >= 0 | `1e-14` |
//! | `stepper.pad` | integer >= 1 | `1` |
//! | `output.dir` | path | `.` |
//! | `output.files` | subset of `trace, profile` | both |
//!
//! Lists are separated by commas and/or whitespace. `summary.csv` is always
//! written, so `summary` is accepted in `output.files` but changes nothing.

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::engine::{BetaPolicy, RgSettings, StopRule};
use crate::equations::{
    EquationForm, EquationSpec, InitialCondition, InitialShape, MonomialTerm, PeriodicCoefficient,
};
use crate::grid::Grid;
use crate::stepper::StepperConfig;

/// Center value giving `A* = mass(f0)` for the heat equation.
pub const DEFAULT_AMPLITUDE: f64 = 0.28209479177387814;
pub const DEFAULT_WIDTH: f64 = 4.0;
pub const DEFAULT_HALF_WIDTH: f64 = 5.0;
pub const DEFAULT_COUNT: usize = 27;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: key '{key}': {message}")]
pub struct ConfigError {
    /// 1-based; 0 when the offending value is a default or the key is absent.
    pub line: usize,
    pub key: String,
    pub message: String,
}

/// Optional artifacts of a run; `summary.csv` is unconditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFiles {
    pub trace: bool,
    pub profile: bool,
}

impl Default for OutputFiles {
    fn default() -> Self {
        OutputFiles {
            trace: true,
            profile: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub files: OutputFiles,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("."),
            files: OutputFiles::default(),
        }
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub equation: EquationSpec,
    pub initial: InitialCondition,
    pub grid: Grid,
    pub settings: RgSettings,
    pub stop: StopRule,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            equation: EquationSpec::heat(),
            initial: InitialCondition::new(InitialShape::Gauss, DEFAULT_AMPLITUDE, DEFAULT_WIDTH)
                .expect("default initial condition"),
            grid: Grid::symmetric(DEFAULT_HALF_WIDTH, DEFAULT_COUNT).expect("default grid"),
            settings: RgSettings::default(),
            stop: StopRule::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn initial_field(&self) -> crate::Result<crate::Field> {
        self.initial.sample(self.grid)
    }

    /// Renders the config in the format accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        let eq = &self.equation;
        kv("equation.mu", eq.mu.to_string());
        kv("equation.g", eq.g.name().to_string());
        if let Some((cos, sin)) = eq.g.fourier_coefficients() {
            kv("equation.g.cos", join(cos));
            kv("equation.g.sin", join(sin));
        }
        match eq.form {
            EquationForm::Standard => kv("equation.form", "standard".into()),
            EquationForm::Divergence => kv("equation.form", "divergence".into()),
            EquationForm::Barenblatt { epsilon } => {
                kv("equation.form", "barenblatt".into());
                kv("equation.epsilon", epsilon.to_string());
            }
        }
        for t in &eq.terms {
            kv(
                "equation.term",
                format!("{} {} {} {}", t.coeff, t.a, t.b, t.c),
            );
        }
        kv("initial.name", self.initial.shape.to_string());
        kv("initial.amplitude", self.initial.amplitude.to_string());
        kv("initial.width", self.initial.width.to_string());
        kv("grid.half_width", self.grid.half_width().to_string());
        kv("grid.count", self.grid.count().to_string());
        kv("rg.L", self.settings.l.to_string());
        match self.settings.policy {
            BetaPolicy::FixedHalf => kv("rg.policy", "fixed_half".into()),
            BetaPolicy::ScalingRelation { dominant_term } => {
                kv("rg.policy", "scaling_relation".into());
                kv("rg.dominant_term", dominant_term.to_string());
            }
        }
        kv("rg.max_iter", self.stop.max_iter.to_string());
        kv("rg.reldiff_tol", self.stop.reldiff_tol.to_string());
        kv(
            "stepper.C",
            self.settings.stepper.stability_constant.to_string(),
        );
        kv("stepper.trim", self.settings.stepper.trim_floor.to_string());
        kv(
            "stepper.pad",
            self.settings.stepper.pad_per_step.to_string(),
        );
        kv("output.dir", self.output.dir.display().to_string());
        let f = self.output.files;
        let names: Vec<&str> = [
            (f.trace, "trace"),
            (f.profile, "profile"),
            (true, "summary"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        kv("output.files", names.join(", "));
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

const KEYS: &[(&str, &str)] = &[
    ("equation.mu", "mu"),
    ("equation.g", "g"),
    ("equation.g.cos", "g.cos"),
    ("equation.g.sin", "g.sin"),
    ("equation.form", "form"),
    ("equation.epsilon", "epsilon"),
    ("equation.term", "term"),
    ("initial.name", "initial"),
    ("initial.amplitude", "amplitude"),
    ("initial.width", "width"),
    ("grid.half_width", "half_width"),
    ("grid.count", "count"),
    ("rg.L", "L"),
    ("rg.policy", "policy"),
    ("rg.dominant_term", "dominant_term"),
    ("rg.max_iter", "max_iter"),
    ("rg.reldiff_tol", "reldiff_tol"),
    ("stepper.C", "C"),
    ("stepper.trim", "trim"),
    ("stepper.pad", "pad"),
    ("output.dir", "dir"),
    ("output.files", "files"),
];

fn canonical(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(full, short)| *full == key || *short == key)
        .map(|(full, _)| *full)
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    single: HashMap<&'static str, Entry>,
    terms: Vec<Entry>,
}

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.single.get(key).map_or(0, |e| e.line)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line(key),
            key: key.into(),
            message: message.into(),
        }
    }

    fn get<T: std::str::FromStr>(
        &self,
        key: &str,
        default: T,
        what: &str,
    ) -> Result<T, ConfigError> {
        match self.single.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|_| self.err(key, format!("expected {what}, got '{}'", e.value))),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.single.get(key).map(|e| e.value.as_str())
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let Some(raw) = self.str(key) else {
            return Ok(Vec::new());
        };
        raw.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| self.err(key, format!("expected a list of reals, got '{s}'")))
            })
            .collect()
    }
}

fn strip_quotes(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries {
        single: HashMap::new(),
        terms: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError {
                line,
                key: content.into(),
                message: "expected 'key = value'".into(),
            });
        };
        let (k, v) = (k.trim(), strip_quotes(v.trim()).to_string());
        let key = canonical(k).ok_or_else(|| ConfigError {
            line,
            key: k.into(),
            message: "unknown key".into(),
        })?;
        if v.is_empty() {
            return Err(ConfigError {
                line,
                key: key.into(),
                message: "missing value".into(),
            });
        }
        let entry = Entry { line, value: v };
        if key == "equation.term" {
            entries.terms.push(entry);
        } else if let Some(prev) = entries.single.insert(key, entry) {
            return Err(ConfigError {
                line,
                key: key.into(),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
    }
    Ok(entries)
}

fn parse_term(e: &Entry) -> Result<MonomialTerm, ConfigError> {
    let err = |message: String| ConfigError {
        line: e.line,
        key: "equation.term".into(),
        message,
    };
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(err(format!("expected 'lambda a b c', got '{}'", e.value)));
    }
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| err(format!("expected a real, got '{s}'")))
    };
    let int = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| err(format!("expected a nonnegative integer, got '{s}'")))
    };
    MonomialTerm::new(
        real(parts[0])?,
        real(parts[1])?,
        int(parts[2])?,
        int(parts[3])?,
    )
    .map_err(|e| err(e.to_string()))
}

/// Parses and validates a configuration; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;
    let d = RunConfig::default();

    let g_name = e.str("equation.g").unwrap_or("g1");
    let (cos, sin) = (e.list("equation.g.cos")?, e.list("equation.g.sin")?);
    let g = if g_name == "fourier" {
        PeriodicCoefficient::fourier(cos, sin).map_err(|x| e.err("equation.g", x.to_string()))?
    } else {
        for k in ["equation.g.cos", "equation.g.sin"] {
            if e.single.contains_key(k) {
                return Err(e.err(k, "only allowed with g = fourier"));
            }
        }
        PeriodicCoefficient::builtin(g_name).map_err(|x| e.err("equation.g", x.to_string()))?
    };

    let epsilon: f64 = e.get("equation.epsilon", 0.0, "a real")?;
    let form = match e.str("equation.form").unwrap_or("standard") {
        "standard" => EquationForm::Standard,
        "divergence" => EquationForm::Divergence,
        "barenblatt" => EquationForm::Barenblatt { epsilon },
        other => {
            return Err(e.err(
                "equation.form",
                format!("expected standard, divergence or barenblatt, got '{other}'"),
            ))
        }
    };
    if e.single.contains_key("equation.epsilon") && !matches!(form, EquationForm::Barenblatt { .. })
    {
        return Err(e.err("equation.epsilon", "only allowed with form = barenblatt"));
    }
    let terms = e
        .terms
        .iter()
        .map(parse_term)
        .collect::<Result<Vec<_>, _>>()?;
    let mu: f64 = e.get("equation.mu", 0.0, "a real")?;
    let equation = EquationSpec::new(mu, g, form, terms).map_err(|x| {
        let key = if matches!(form, EquationForm::Barenblatt { .. })
            && x.to_string().contains("Barenblatt")
        {
            "equation.form"
        } else if x.to_string().contains("epsilon") {
            "equation.epsilon"
        } else {
            "equation.mu"
        };
        e.err(key, x.to_string())
    })?;

    let shape: InitialShape = match e.str("initial.name") {
        None => InitialShape::Gauss,
        Some(s) => s
            .parse()
            .map_err(|x: crate::RgError| e.err("initial.name", x.to_string()))?,
    };
    let amplitude = e.get("initial.amplitude", d.initial.amplitude, "a real")?;
    let width = e.get("initial.width", d.initial.width, "a real")?;
    let initial = InitialCondition::new(shape, amplitude, width).map_err(|x| {
        let key = if x.to_string().contains("width") {
            "initial.width"
        } else {
            "initial.amplitude"
        };
        e.err(key, x.to_string())
    })?;

    let half_width = e.get("grid.half_width", DEFAULT_HALF_WIDTH, "a real")?;
    let count = e.get("grid.count", DEFAULT_COUNT, "an odd integer")?;
    let grid = Grid::symmetric(half_width, count).map_err(|x| {
        let key = if x.to_string().contains("count") {
            "grid.count"
        } else {
            "grid.half_width"
        };
        e.err(key, x.to_string())
    })?;

    let l: f64 = e.get("rg.L", d.settings.l, "a real")?;
    if !(l > 1.0 && l.is_finite()) {
        return Err(e.err("rg.L", format!("L must be a finite real > 1, got {l}")));
    }
    let dominant_term = e.get("rg.dominant_term", 0usize, "a term index")?;
    let policy = match e.str("rg.policy").unwrap_or("fixed_half") {
        "fixed_half" => {
            if e.single.contains_key("rg.dominant_term") {
                return Err(e.err(
                    "rg.dominant_term",
                    "only allowed with policy = scaling_relation",
                ));
            }
            BetaPolicy::FixedHalf
        }
        "scaling_relation" => BetaPolicy::ScalingRelation { dominant_term },
        other => {
            return Err(e.err(
                "rg.policy",
                format!("expected fixed_half or scaling_relation, got '{other}'"),
            ))
        }
    };
    policy
        .validate(&equation.terms)
        .map_err(|x| e.err("rg.policy", x.to_string()))?;

    let max_iter = e.get("rg.max_iter", d.stop.max_iter, "a positive integer")?;
    if max_iter == 0 {
        return Err(e.err("rg.max_iter", "must be at least 1"));
    }
    let reldiff_tol: f64 = e.get("rg.reldiff_tol", d.stop.reldiff_tol, "a real")?;
    if !(reldiff_tol >= 0.0 && reldiff_tol.is_finite()) {
        return Err(e.err("rg.reldiff_tol", "must be a finite real >= 0"));
    }

    let ds = d.settings.stepper;
    let stepper = StepperConfig {
        stability_constant: e.get("stepper.C", ds.stability_constant, "a real")?,
        trim_floor: e.get("stepper.trim", ds.trim_floor, "a real")?,
        pad_per_step: e.get("stepper.pad", ds.pad_per_step, "a positive integer")?,
    };
    stepper.validate().map_err(|x| {
        let msg = x.to_string();
        let key = if msg.contains("trim") {
            "stepper.trim"
        } else if msg.contains("pad") {
            "stepper.pad"
        } else {
            "stepper.C"
        };
        e.err(key, msg)
    })?;

    let dir = e.str("output.dir").map_or(d.output.dir, PathBuf::from);
    let files = match e.str("output.files") {
        None => OutputFiles::default(),
        Some(raw) => {
            let mut f = OutputFiles {
                trace: false,
                profile: false,
            };
            for name in raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
            {
                match name {
                    "trace" => f.trace = true,
                    "profile" => f.profile = true,
                    "summary" => {}
                    other => {
                        return Err(e.err(
                            "output.files",
                            format!("expected trace, profile or summary, got '{other}'"),
                        ))
                    }
                }
            }
            f
        }
    };

    Ok(RunConfig {
        equation,
        initial,
        grid,
        settings: RgSettings { l, policy, stepper },
        stop: StopRule {
            max_iter,
            reldiff_tol,
        },
        output: OutputConfig { dir, files },
    })
}
