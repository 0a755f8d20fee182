//! Independent oracles and post-processing of computed profiles.

use std::f64::consts::PI;

use crate::equations::{barenblatt_slope, PeriodicCoefficient};
use crate::error::{invalid, Result, RgError};
use crate::grid::{Field, Grid};

/// Default relative window (of the peak) used by [`sigma_fit`].
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.02, 0.9);

const START_PANELS: usize = 64;
const MAX_PANELS: usize = 1 << 24;

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Harmonic mean `[(1/T) int_0^T dx / (1 + mu g)]^{-1}` by composite Simpson
/// with panel doubling until successive estimates differ by less than `tol`.
///
/// Panel counts stay multiples of four, so kinks at quarter periods (the
/// triangle wave) always fall on panel boundaries.
pub fn harmonic_mean(g: &PeriodicCoefficient, mu: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if g.min_diffusivity(mu) <= 0.0 {
        return Err(invalid(format!("ellipticity violated for mu = {mu}")));
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    debug_assert!(!g.has_quarter_kinks() || START_PANELS.is_multiple_of(4));
    let t = g.period();
    let integrand = |x: f64| 1.0 / (1.0 + mu * g.eval(x));
    let estimate = |panels| t / simpson(&integrand, 0.0, t, panels);

    let mut panels = START_PANELS;
    let mut prev = estimate(panels);
    loop {
        panels *= 2;
        let next = estimate(panels);
        let delta = (next - prev).abs();
        if delta < tol {
            return Ok(next);
        }
        if panels >= MAX_PANELS {
            return Err(RgError::NotConverged { panels, delta });
        }
        prev = next;
    }
}

/// Result of fitting `-log(phi / peak) = (x^2 / 4) / sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFit {
    pub sigma: f64,
    /// RMS of the line-fit residual.
    pub fit_residual: f64,
    pub points_used: usize,
    /// Nodes skipped because their value was not positive.
    pub excluded: usize,
}

/// Effective diffusivity of a profile: the inverse slope of the points
/// `(x^2/4, -log(phi/peak))` fitted through the origin, using the nodes
/// whose normalized value lies strictly inside `window`.
pub fn sigma_fit(profile: &Field, window: (f64, f64)) -> Result<SigmaFit> {
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid(format!(
            "fit window must satisfy 0 <= lo < hi <= 1, got {window:?}"
        )));
    }
    let peak = profile
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(RgError::InsufficientData(
            "profile has no positive peak".into(),
        ));
    }
    let grid = profile.grid();
    let mut excluded = 0;
    let mut pts = Vec::new();
    for (j, &v) in profile.values().iter().enumerate() {
        if v <= 0.0 {
            excluded += 1;
            continue;
        }
        let r = v / peak;
        if r > lo && r < hi {
            let x = grid.x(j);
            pts.push((x * x / 4.0, -r.ln()));
        }
    }
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return Err(RgError::InsufficientData(format!(
            "{} usable points in the fit window",
            pts.len()
        )));
    }
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(RgError::InsufficientData(format!(
            "nonpositive fitted slope {slope}"
        )));
    }
    let ss: f64 = pts.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    Ok(SigmaFit {
        sigma: 1.0 / slope,
        fit_residual: (ss / pts.len() as f64).sqrt(),
        points_used: pts.len(),
        excluded,
    })
}

/// `amplitude * exp(-x^2 / 4 sigma) / sqrt(4 pi sigma)`.
pub fn gaussian_profile(sigma: f64, amplitude: f64, grid: Grid) -> Result<Field> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let norm = amplitude / (4.0 * PI * sigma).sqrt();
    Field::from_fn(grid, |x| norm * (-x * x / (4.0 * sigma)).exp())
}

/// First-order perturbative exponent of Barenblatt's equation.
pub fn barenblatt_alpha_first_order(epsilon: f64) -> f64 {
    0.5 + epsilon * barenblatt_slope()
}

/// Decay exponent `1/(a-1)` for absorption `-u^a`, `1 < a < 3`.
pub fn relevant_alpha(a: f64) -> Result<f64> {
    if !(a > 1.0 && a < 3.0) {
        return Err(invalid(format!(
            "absorption exponent must lie in (1, 3), got {a}"
        )));
    }
    Ok(1.0 / (a - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(name: &str) -> PeriodicCoefficient {
        PeriodicCoefficient::builtin(name).unwrap()
    }

    /// Closed form for the triangle wave: its values are uniform on [-1, 1].
    fn triangle_harmonic(mu: f64) -> f64 {
        2.0 * mu / ((1.0 + mu) / (1.0 - mu)).ln()
    }

    #[test]
    fn harmonic_mean_closed_forms() {
        assert_eq!(harmonic_mean(&g("g1"), 0.0, 1e-10).unwrap(), 1.0);
        assert_relative_eq!(
            harmonic_mean(&g("g1"), 0.8, 1e-10).unwrap(),
            0.6,
            epsilon = 1e-8
        );
        assert_relative_eq!(
            harmonic_mean(&g("g1"), 0.1, 1e-10).unwrap(),
            0.99f64.sqrt(),
            epsilon = 1e-8
        );
        let h3 = harmonic_mean(&g("g3"), 0.5, 1e-10).unwrap();
        assert_relative_eq!(h3, 1.0 / 3f64.ln(), epsilon = 1e-8);
        assert_relative_eq!(h3, 0.910239, epsilon = 1e-6);
        for mu in [0.1, 0.6, 0.8, -0.4] {
            let h = harmonic_mean(&g("g3"), mu, 1e-10).unwrap();
            assert_relative_eq!(h, triangle_harmonic(mu), epsilon = 1e-8);
        }
    }

    #[test]
    fn harmonic_mean_rejects_non_elliptic() {
        assert!(matches!(
            harmonic_mean(&g("g1"), 1.0, 1e-10),
            Err(RgError::InvalidArgument(_))
        ));
        assert!(harmonic_mean(&g("g1"), 0.5, 0.0).is_err());
    }

    #[test]
    fn harmonic_mean_self_check() {
        for name in ["g1", "g2", "g3"] {
            let a = harmonic_mean(&g(name), 0.3, 1e-8).unwrap();
            let b = harmonic_mean(&g(name), 0.3, 1e-9).unwrap();
            assert!((a - b).abs() < 1e-8);
            assert!(a < 1.0);
        }
    }

    #[test]
    fn sigma_fit_examples() {
        let grid = Grid::symmetric(8.0, 161).unwrap();
        let phi = Field::from_fn(grid, |x| (-x * x / 4.0).exp()).unwrap();
        let fit = sigma_fit(&phi, DEFAULT_FIT_WINDOW).unwrap();
        assert_relative_eq!(fit.sigma, 1.0, epsilon = 1e-12);
        assert!(fit.fit_residual < 1e-10);
        assert!(fit.points_used >= 2);

        let phi = Field::from_fn(grid, |x| 3.0 * (-x * x / (4.0 * 0.6)).exp()).unwrap();
        assert_relative_eq!(
            sigma_fit(&phi, DEFAULT_FIT_WINDOW).unwrap().sigma,
            0.6,
            epsilon = 1e-12
        );

        let s = 0.994987;
        let phi = Field::from_fn(grid, |x| (-x * x / (4.0 * s)).exp()).unwrap();
        assert_relative_eq!(
            sigma_fit(&phi, DEFAULT_FIT_WINDOW).unwrap().sigma,
            s,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sigma_fit_needs_data() {
        let grid = Grid::symmetric(1.0, 3).unwrap();
        let flat = Field::from_fn(grid, |_| 1.0).unwrap();
        assert!(matches!(
            sigma_fit(&flat, DEFAULT_FIT_WINDOW),
            Err(RgError::InsufficientData(_))
        ));
        let zero = Field::zeros(grid);
        assert!(sigma_fit(&zero, DEFAULT_FIT_WINDOW).is_err());
        let spiky = Field::new(grid, vec![-1.0, 1.0, 0.5]).unwrap();
        assert!(sigma_fit(&spiky, DEFAULT_FIT_WINDOW).is_err());
    }

    #[test]
    fn gaussian_profile_examples() {
        let grid = Grid::symmetric(12.0, 241).unwrap();
        let p = gaussian_profile(1.0, 1.0, grid).unwrap();
        assert_relative_eq!(p.center_value(), 0.2820948, epsilon = 1e-7);
        assert_relative_eq!(p.mass(), 1.0, epsilon = 1e-9);
        let p = gaussian_profile(0.7, 2.5, grid).unwrap();
        assert_relative_eq!(p.mass(), 2.5, epsilon = 1e-9);
        let z = gaussian_profile(1.0, 0.0, grid).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        assert!(gaussian_profile(0.0, 1.0, grid).is_err());
    }

    #[test]
    fn barenblatt_prediction() {
        assert_eq!(barenblatt_alpha_first_order(0.0), 0.5);
        assert_relative_eq!(barenblatt_alpha_first_order(0.1), 0.524197, epsilon = 1e-6);
        assert_relative_eq!(barenblatt_alpha_first_order(0.4), 0.596788, epsilon = 1e-6);
    }

    #[test]
    fn relevant_alpha_examples() {
        assert_eq!(relevant_alpha(2.0).unwrap(), 1.0);
        assert_eq!(relevant_alpha(1.5).unwrap(), 2.0);
        assert_relative_eq!(relevant_alpha(2.999).unwrap(), 0.50025, epsilon = 1e-5);
        assert!(relevant_alpha(3.0).is_err());
        assert!(relevant_alpha(1.0).is_err());
    }
}
