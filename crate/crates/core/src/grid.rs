//! Uniform symmetric 1-D grids and the fields sampled on them.
//!
//! Every grid has an odd node count so that `x = 0` is always a node; the
//! RG exponent extraction reads the profile there.

use crate::error::{invalid, Result, RgError};

/// Uniform node set `x_j = (j - center) * spacing`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    spacing: f64,
    count: usize,
}

impl Grid {
    /// Grid covering `[-half_width, half_width]` with `count` nodes.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if count < 3 || count.is_multiple_of(2) {
            return Err(invalid(format!(
                "node count must be odd and >= 3, got {count}"
            )));
        }
        Ok(Grid {
            spacing: 2.0 * half_width / (count - 1) as f64,
            count,
        })
    }

    /// Grid with explicit spacing.
    pub fn with_spacing(spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if count == 0 || count.is_multiple_of(2) {
            return Err(invalid(format!("node count must be odd, got {count}")));
        }
        Ok(Grid { spacing, count })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn center_index(&self) -> usize {
        (self.count - 1) / 2
    }

    /// Coordinate of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.center_index() as f64) * self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.center_index() as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |j| self.x(j))
    }

    /// Same nodes by index, spacing scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Grid::with_spacing(self.spacing * factor, self.count)
    }

    /// `k` extra nodes on each side.
    pub fn extended(&self, k: usize) -> Self {
        Grid {
            spacing: self.spacing,
            count: self.count + 2 * k,
        }
    }
}

/// Which norm `rel_diff` measures in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    Linf,
}

impl Norm {
    fn of(self, spacing: f64, values: impl Iterator<Item = f64>) -> f64 {
        match self {
            Norm::L1 => spacing * values.map(f64::abs).sum::<f64>(),
            Norm::Linf => values.fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Real samples on a [`Grid`]. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(invalid(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value at node {j}")));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.count(), values.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.count()],
        }
    }

    /// Samples `f` at every node. Fails if `f` returns a non-finite value.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds `k` zero nodes on each side. Mass and the `x = 0` node are preserved.
    pub fn extend_with_zeros(&self, k: usize) -> Field {
        let mut values = vec![0.0; self.values.len() + 2 * k];
        values[k..k + self.values.len()].copy_from_slice(&self.values);
        Field {
            grid: self.grid.extended(k),
            values,
        }
    }

    pub fn center_value(&self) -> f64 {
        self.values[self.grid.center_index()]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral `spacing * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        norm.of(self.grid.spacing(), self.values.iter().copied())
    }

    /// Linear interpolation onto `target`; zero outside this field's nodes.
    pub fn resample(&self, target: &Grid) -> Field {
        let src = &self.grid;
        let n = self.values.len();
        if src.spacing() == target.spacing() {
            let (cs, ct) = (src.center_index() as isize, target.center_index() as isize);
            let values = (0..target.count() as isize)
                .map(|j| {
                    let i = j - ct + cs;
                    if i >= 0 && (i as usize) < n {
                        self.values[i as usize]
                    } else {
                        0.0
                    }
                })
                .collect();
            return Field::from_parts_unchecked(*target, values);
        }

        let ratio = target.spacing() / src.spacing();
        let cs = src.center_index() as f64;
        let ct = target.center_index() as f64;
        let last = (n - 1) as f64;
        let values = (0..target.count())
            .map(|j| {
                let p = (j as f64 - ct) * ratio + cs;
                if !(0.0..=last).contains(&p) {
                    return 0.0;
                }
                let i = p.floor() as usize;
                if i + 1 >= n {
                    return self.values[n - 1];
                }
                let t = p - i as f64;
                let (a, b) = (self.values[i], self.values[i + 1]);
                a + t * (b - a)
            })
            .collect();
        Field::from_parts_unchecked(*target, values)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Relabels the nodes with a new spacing; values are untouched.
    pub fn with_grid_spacing(self, spacing: f64) -> Result<Field> {
        let grid = Grid::with_spacing(spacing, self.grid.count())?;
        Ok(Field {
            grid,
            values: self.values,
        })
    }

    /// Keeps `n_keep` nodes on each side of the center.
    pub(crate) fn truncated_to_half_count(&self, n_keep: usize) -> Field {
        let c = self.grid.center_index();
        let n_keep = n_keep.min(c);
        Field {
            grid: Grid {
                spacing: self.grid.spacing,
                count: 2 * n_keep + 1,
            },
            values: self.values[c - n_keep..=c + n_keep].to_vec(),
        }
    }
}

/// `||f - g|| / ||f||`, with `g` resampled onto the grid of `f` first.
pub fn rel_diff(f: &Field, g: &Field, norm: Norm) -> Result<f64> {
    let denom = f.norm(norm);
    if denom == 0.0 {
        return Err(RgError::DivisionByZero(
            "rel_diff reference field has zero norm",
        ));
    }
    let g = g.resample(f.grid());
    let diff = norm.of(
        f.grid().spacing(),
        f.values().iter().zip(g.values()).map(|(a, b)| a - b),
    );
    Ok(diff / denom)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn field() -> impl Strategy<Value = Field> {
        (1usize..40, 0.05f64..2.0)
            .prop_flat_map(|(half, h)| {
                (
                    Just(Grid::with_spacing(h, 2 * half + 1).unwrap()),
                    prop::collection::vec(-10.0f64..10.0, 2 * half + 1),
                )
            })
            .prop_map(|(g, v)| Field::new(g, v).unwrap())
    }

    proptest! {
        #[test]
        fn rel_diff_identity_and_scale_invariance(f in field(), g in field(), c in 0.01f64..100.0) {
            prop_assume!(f.max_abs() > 0.0);
            for norm in [Norm::L1, Norm::Linf] {
                prop_assert_eq!(rel_diff(&f, &f, norm).unwrap(), 0.0);
                let a = rel_diff(&f, &g, norm).unwrap();
                let b = rel_diff(&f.scaled(c), &g.scaled(c), norm).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn resample_stays_within_data_range(f in field(), count in 1usize..60, h in 0.05f64..2.0) {
            let target = Grid::with_spacing(h, 2 * count + 1).unwrap();
            let r = f.resample(&target);
            let lo = f.values().iter().cloned().fold(0.0, f64::min);
            let hi = f.values().iter().cloned().fold(0.0, f64::max);
            prop_assert_eq!(r.len(), target.count());
            for v in r.values() {
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
            prop_assert_eq!(r.center_value(), f.center_value());
            prop_assert_eq!(f.resample(f.grid()), f.clone());
        }

        #[test]
        fn zero_extension_keeps_mass_and_center(f in field(), k in 0usize..20) {
            let e = f.extend_with_zeros(k);
            prop_assert_eq!(e.len(), f.len() + 2 * k);
            prop_assert_eq!(e.center_value(), f.center_value());
            prop_assert!((e.mass() - f.mass()).abs() <= 1e-12 * f.norm(Norm::L1).max(1e-300));
            prop_assert_eq!(e.resample(f.grid()), f);
        }
    }
}
