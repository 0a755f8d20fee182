//! Explicit Euler integration of one RG epoch `t in [1, L]`.

use crate::equations::{EquationSpec, Operator, RGCoefficients};
use crate::error::{invalid, Result, RgError};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// `C` in `max(1 + |mu g|) dt <= C dx^2`.
    pub stability_constant: f64,
    /// Zero nodes added on each side before every step.
    pub pad_per_step: usize,
    /// Relative level below which boundary nodes are trimmed after an epoch.
    pub trim_floor: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            stability_constant: 0.45,
            pad_per_step: 1,
            trim_floor: 1e-14,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let c = self.stability_constant;
        if !(c > 0.0 && c <= 0.5) {
            return Err(invalid(format!(
                "stability constant must lie in (0, 0.5], got {c}"
            )));
        }
        if self.pad_per_step == 0 {
            return Err(invalid("pad_per_step must be at least 1"));
        }
        if !(self.trim_floor >= 0.0 && self.trim_floor < 1.0) {
            return Err(invalid(format!(
                "trim floor must lie in [0, 1), got {}",
                self.trim_floor
            )));
        }
        Ok(())
    }
}

/// Largest stable step for the given spacing.
pub fn stable_dt(
    spec: &EquationSpec,
    coeffs: &RGCoefficients,
    spacing: f64,
    cfg: &StepperConfig,
) -> f64 {
    cfg.stability_constant * spacing * spacing / (coeffs.chi * spec.max_diffusivity())
}

/// Result of integrating one epoch.
#[derive(Debug, Clone)]
pub struct Epoch {
    pub field: Field,
    pub substeps: usize,
    pub dt: f64,
}

/// Integrates from `t = 1` to `t = t_end` with `m = ceil((t_end - 1)/dt_stable)`
/// uniform steps, zero-padding before each step.
///
/// The returned field lives on `f0`'s grid extended by `m * pad_per_step`
/// nodes per side. Nodes outside the current support are skipped when the
/// operator maps zero data to zero, which leaves the result unchanged.
pub fn evolve(
    spec: &EquationSpec,
    coeffs: &RGCoefficients,
    f0: &Field,
    t_end: f64,
    cfg: &StepperConfig,
) -> Result<Epoch> {
    cfg.validate()?;
    if !(t_end > 1.0 && t_end.is_finite()) {
        return Err(invalid(format!(
            "epoch end time must exceed 1, got {t_end}"
        )));
    }
    let span = t_end - 1.0;
    let dt_max = stable_dt(spec, coeffs, f0.grid().spacing(), cfg);
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(RgError::DivergingCoefficient {
            name: "chi".into(),
            value: coeffs.chi,
        });
    }
    let m = (span / dt_max).ceil().max(1.0) as usize;
    let dt = span / m as f64;

    let p = cfg.pad_per_step;
    let n = f0.len();
    let pad = m * p;
    let grid = f0.grid().extended(pad);
    // one permanent zero ghost per side: buffer index i is grid node i - 1
    let op = Operator::new(spec, coeffs, &f0.grid().extended(pad + 1))?;
    let base = pad + 1;

    let mut u = vec![0.0; n + 2 * base];
    u[base..base + n].copy_from_slice(f0.values());
    let mut next = u.clone();

    let track = op.preserves_zero();
    let (mut lo, mut hi) = match f0.values().iter().position(|v| *v != 0.0) {
        Some(first) => {
            let last = f0.values().iter().rposition(|v| *v != 0.0).unwrap_or(first);
            (base + first, base + last)
        }
        None if track => {
            return Ok(Epoch {
                field: Field::zeros(grid),
                substeps: m,
                dt,
            });
        }
        None => (base, base + n - 1),
    };
    if !track {
        lo = base;
        hi = base + n - 1;
    }

    for s in 1..=m {
        // the domain padded s times; its outer p nodes are still zero, so
        // no flux leaves it and conservative forms keep mass to round-off
        let wlo = base - p * s;
        let whi = base + n - 1 + p * s;
        let (a, b) = if track {
            (lo.saturating_sub(1).max(wlo), (hi + 1).min(whi))
        } else {
            (wlo, whi)
        };
        if a > b {
            continue;
        }
        if let Some(j) = op.euler_step(&u, &mut next, dt, a, b) {
            return Err(RgError::BlowUp {
                step: s,
                time: 1.0 + s as f64 * dt,
                node: j - 1,
                x: grid.x(j - 1),
            });
        }
        if track {
            // flush the advancing front instead of letting it crawl
            // through subnormals
            if a < lo {
                if next[a].abs() < f64::MIN_POSITIVE {
                    next[a] = 0.0;
                } else {
                    lo = a;
                }
            }
            if b > hi {
                if next[b].abs() < f64::MIN_POSITIVE {
                    next[b] = 0.0;
                } else {
                    hi = b;
                }
            }
        } else {
            lo = a;
            hi = b;
        }
        std::mem::swap(&mut u, &mut next);
    }

    u.truncate(n + 2 * base - 1);
    u.remove(0);
    Ok(Epoch {
        field: Field::from_parts_unchecked(grid, u),
        substeps: m,
        dt,
    })
}

/// Removes boundary nodes with `|value| < rel_floor * max|f|` symmetrically,
/// keeping the center node.
pub fn tail_trim(f: &Field, rel_floor: f64) -> Field {
    let threshold = rel_floor * f.max_abs();
    let v = f.values();
    let left = v.iter().take_while(|x| x.abs() < threshold).count();
    let right = v.iter().rev().take_while(|x| x.abs() < threshold).count();
    let k = left.min(right).min(f.grid().center_index());
    if k == 0 {
        return f.clone();
    }
    f.truncated_to_half_count(f.grid().center_index() - k)
}
