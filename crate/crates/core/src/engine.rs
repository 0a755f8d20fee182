//! The RG iteration: evolve one epoch, extract the exponents, rescale
//! amplitude and mesh, and flow the renormalized coefficients.
//!
//! Spatial rescaling changes only the mesh spacing, never the node indices,
//! so `omega * spacing` is constant along a run and the periodic coefficient
//! is always sampled at the same points per period.

use crate::diagnostics::{harmonic_mean, sigma_fit, DEFAULT_FIT_WINDOW};
use crate::equations::{EquationSpec, MonomialTerm, RGCoefficients};
use crate::error::{invalid, Result, RgError};
use crate::grid::{rel_diff, Field, Norm};
use crate::stepper::{evolve, tail_trim, StepperConfig};

/// How `beta_{n+1}` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaPolicy {
    /// `beta = 1/2`: the Laplacian is scale invariant.
    FixedHalf,
    /// `1 - (b + 2c) beta + (1 - a - b - c) alpha = 0` for the designated term,
    /// keeping that nonlinear operator invariant.
    ScalingRelation { dominant_term: usize },
}

impl BetaPolicy {
    pub fn validate(&self, terms: &[MonomialTerm]) -> Result<()> {
        if let BetaPolicy::ScalingRelation { dominant_term } = *self {
            let t = terms.get(dominant_term).ok_or_else(|| {
                RgError::InvalidPolicy(format!("no term with index {dominant_term}"))
            })?;
            if t.b + 2 * t.c == 0 {
                return Err(RgError::InvalidPolicy(
                    "dominant term must contain u_x or u_xx (b + 2c >= 1)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `ln(center_initial / center_final) / ln L`.
pub fn compute_alpha(center_initial: f64, center_final: f64, l: f64) -> Result<f64> {
    if !(l > 1.0) {
        return Err(invalid(format!("scale factor L must exceed 1, got {l}")));
    }
    if !(center_initial > 0.0) {
        return Err(RgError::DegenerateProfile(center_initial));
    }
    if !(center_final > 0.0) {
        return Err(RgError::DegenerateProfile(center_final));
    }
    Ok((center_initial / center_final).ln() / l.ln())
}

pub fn compute_beta(policy: BetaPolicy, alpha: f64, terms: &[MonomialTerm]) -> Result<f64> {
    match policy {
        BetaPolicy::FixedHalf => Ok(0.5),
        BetaPolicy::ScalingRelation { dominant_term } => {
            policy.validate(terms)?;
            let t = &terms[dominant_term];
            let (b, c) = (t.b as f64, t.c as f64);
            Ok((1.0 + (1.0 - t.a - b - c) * alpha) / (b + 2.0 * c))
        }
    }
}

/// `f(x) -> L^alpha u(L^beta x)`, realized by multiplying the values by
/// `L^alpha` and the spacing by `L^-beta`.
pub fn rescale(profile: &Field, alpha: f64, beta: f64, l: f64) -> Result<Field> {
    if !(l > 1.0) {
        return Err(invalid(format!("scale factor L must exceed 1, got {l}")));
    }
    let amp = l.powf(alpha);
    let scaled = profile.scaled(amp);
    if scaled.values().iter().any(|v| !v.is_finite()) {
        return Err(RgError::DivergingCoefficient {
            name: "profile amplitude".into(),
            value: amp,
        });
    }
    let spacing = profile.grid().spacing() * l.powf(-beta);
    scaled.with_grid_spacing(spacing)
}

/// One step of the coefficient flow:
/// `chi *= L^(1-2 beta)`, `omega *= L^beta`,
/// `lambda_i *= L^(1 - (b_i + 2 c_i) beta + (1 - a_i - b_i - c_i) alpha)`.
pub fn update_coefficients(
    coeffs: &RGCoefficients,
    terms: &[MonomialTerm],
    alpha: f64,
    beta: f64,
    l: f64,
) -> Result<RGCoefficients> {
    let positive = |name: &str, value: f64| {
        if value.is_finite() && value > 0.0 {
            Ok(value)
        } else {
            Err(RgError::DivergingCoefficient {
                name: name.into(),
                value,
            })
        }
    };
    let chi = positive("chi", coeffs.chi * l.powf(1.0 - 2.0 * beta))?;
    let omega = positive("omega", coeffs.omega * l.powf(beta))?;
    let lambdas = coeffs
        .lambdas
        .iter()
        .zip(terms)
        .enumerate()
        .map(|(i, (lam, t))| {
            let value = lam * l.powf(t.flow_exponent(alpha, beta));
            if value.is_finite() {
                Ok(value)
            } else {
                Err(RgError::DivergingCoefficient {
                    name: format!("lambda_{}", i + 1),
                    value,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RGCoefficients {
        chi,
        omega,
        lambdas,
    })
}

/// `A_n = L^(n alpha_n - sum alpha)`, `B_n = L^(n beta_n - sum beta)`.
pub fn prefactors(
    n: usize,
    alpha_n: f64,
    beta_n: f64,
    sum_alpha: f64,
    sum_beta: f64,
    l: f64,
) -> (f64, f64) {
    let n = n as f64;
    (
        l.powf(n * alpha_n - sum_alpha),
        l.powf(n * beta_n - sum_beta),
    )
}

#[derive(Debug, Clone)]
pub struct RGState {
    pub n: usize,
    pub profile: Field,
    pub coeffs: RGCoefficients,
    pub sum_alpha: f64,
    pub sum_beta: f64,
    pub last_alpha: f64,
    pub last_beta: f64,
}

impl RGState {
    pub fn initial(spec: &EquationSpec, f0: Field) -> Self {
        RGState {
            n: 0,
            profile: f0,
            coeffs: RGCoefficients::initial(spec),
            sum_alpha: 0.0,
            sum_beta: 0.0,
            last_alpha: f64::NAN,
            last_beta: f64::NAN,
        }
    }
}

/// Diagnostics of one completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub reldiff_l1: f64,
    pub reldiff_linf: f64,
    pub lambda_magnitudes: Vec<f64>,
    pub grid_count: usize,
    pub substeps: usize,
}

/// Scale factor, beta policy and integrator settings of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgSettings {
    pub l: f64,
    pub policy: BetaPolicy,
    pub stepper: StepperConfig,
}

impl Default for RgSettings {
    fn default() -> Self {
        RgSettings {
            l: 1.021,
            policy: BetaPolicy::FixedHalf,
            stepper: StepperConfig::default(),
        }
    }
}

/// Evolve, extract `alpha`/`beta`, rescale, flow the coefficients and trim.
pub fn rg_step(
    state: &RGState,
    spec: &EquationSpec,
    settings: &RgSettings,
) -> Result<(RGState, TraceRecord)> {
    let l = settings.l;
    let epoch = evolve(spec, &state.coeffs, &state.profile, l, &settings.stepper)?;
    let alpha = compute_alpha(state.profile.center_value(), epoch.field.center_value(), l)?;
    let beta = compute_beta(settings.policy, alpha, &spec.terms)?;
    let rescaled = rescale(&epoch.field, alpha, beta, l)?;
    let coeffs = update_coefficients(&state.coeffs, &spec.terms, alpha, beta, l)?;

    let n = state.n + 1;
    let sum_alpha = state.sum_alpha + alpha;
    let sum_beta = state.sum_beta + beta;
    let (a_n, b_n) = prefactors(n, alpha, beta, sum_alpha, sum_beta, l);
    let profile = tail_trim(&rescaled, settings.stepper.trim_floor);

    let record = TraceRecord {
        n,
        alpha,
        beta,
        a_n,
        b_n,
        reldiff_l1: rel_diff(&profile, &state.profile, Norm::L1)?,
        reldiff_linf: rel_diff(&profile, &state.profile, Norm::Linf)?,
        lambda_magnitudes: coeffs.lambdas.iter().map(|v| v.abs()).collect(),
        grid_count: profile.len(),
        substeps: epoch.substeps,
    };
    let next = RGState {
        n,
        profile,
        coeffs,
        sum_alpha,
        sum_beta,
        last_alpha: alpha,
        last_beta: beta,
    };
    Ok((next, record))
}

/// Stopping rule: `max_iter` iterations or `reldiff_Linf < reldiff_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    pub reldiff_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iter: 500,
            reldiff_tol: 1e-6,
        }
    }
}

/// Number of trailing `alpha_n` averaged into `alpha_star`.
pub const ALPHA_STAR_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub iterations: usize,
    pub alpha_star: f64,
    pub a_star: f64,
    /// NaN when the final profile admits no fit.
    pub sigma_fit: f64,
    pub fit_residual: f64,
    pub sigma_theory: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Vec<TraceRecord>,
    pub final_state: RGState,
    pub summary: Summary,
}

impl RunReport {
    pub fn final_profile(&self) -> &Field {
        &self.final_state.profile
    }
}

/// A failed run keeps everything computed before the failing iteration.
#[derive(Debug, Clone)]
pub struct RunFailure {
    /// 1-based index of the iteration that failed.
    pub iteration: usize,
    pub error: RgError,
    pub trace: Vec<TraceRecord>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "iteration {}: {}", self.iteration, self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Mean of the last [`ALPHA_STAR_WINDOW`] exponents; NaN for an empty trace.
pub fn alpha_star(trace: &[TraceRecord]) -> f64 {
    let tail = &trace[trace.len().saturating_sub(ALPHA_STAR_WINDOW)..];
    if tail.is_empty() {
        f64::NAN
    } else {
        tail.iter().map(|r| r.alpha).sum::<f64>() / tail.len() as f64
    }
}

pub fn summarize(trace: &[TraceRecord], state: &RGState, spec: &EquationSpec) -> Result<Summary> {
    let alpha_star = alpha_star(trace);
    let a_star = trace.last().map_or(f64::NAN, |r| r.a_n);
    let (sigma, residual) = match sigma_fit(&state.profile, DEFAULT_FIT_WINDOW) {
        Ok(fit) => (fit.sigma, fit.fit_residual),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(Summary {
        iterations: trace.len(),
        alpha_star,
        a_star,
        sigma_fit: sigma,
        fit_residual: residual,
        sigma_theory: harmonic_mean(&spec.g, spec.mu, 1e-10)?,
    })
}

/// Iterates [`rg_step`] from `f0` until the stop rule fires.
pub fn run(
    spec: &EquationSpec,
    f0: Field,
    settings: &RgSettings,
    stop: StopRule,
) -> std::result::Result<RunReport, RunFailure> {
    run_with_observer(spec, f0, settings, stop, |_, _| {})
}

/// Like [`run`], calling `observe` after every completed iteration.
pub fn run_with_observer(
    spec: &EquationSpec,
    f0: Field,
    settings: &RgSettings,
    stop: StopRule,
    mut observe: impl FnMut(&RGState, &TraceRecord),
) -> std::result::Result<RunReport, RunFailure> {
    let fail = |iteration, error, trace| RunFailure {
        iteration,
        error,
        trace,
    };
    if stop.max_iter == 0 {
        return Err(fail(0, invalid("max_iter must be at least 1"), vec![]));
    }
    if !(settings.l > 1.0 && settings.l.is_finite()) {
        return Err(fail(
            0,
            invalid(format!("L must exceed 1, got {}", settings.l)),
            vec![],
        ));
    }
    if let Err(e) = settings
        .policy
        .validate(&spec.terms)
        .and(settings.stepper.validate())
    {
        return Err(fail(0, e, vec![]));
    }

    let mut state = RGState::initial(spec, f0);
    let mut trace = Vec::with_capacity(stop.max_iter);
    while state.n < stop.max_iter {
        match rg_step(&state, spec, settings) {
            Ok((next, record)) => {
                observe(&next, &record);
                let converged = record.reldiff_linf < stop.reldiff_tol;
                trace.push(record);
                state = next;
                if converged {
                    break;
                }
            }
            Err(e) => return Err(fail(state.n + 1, e, trace)),
        }
    }
    match summarize(&trace, &state, spec) {
        Ok(summary) => Ok(RunReport {
            trace,
            final_state: state,
            summary,
        }),
        Err(e) => Err(fail(state.n, e, trace)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equations::{EquationForm, InitialCondition, InitialShape, PeriodicCoefficient};
    use crate::grid::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn heat_kernel_field(grid: Grid) -> Field {
        Field::from_fn(grid, |x| (-x * x / 4.0).exp() / (4.0 * PI).sqrt()).unwrap()
    }

    #[test]
    fn compute_alpha_examples() {
        assert_eq!(compute_alpha(1.0, 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(compute_alpha(2.0, 1.0, 2.0).unwrap(), 1.0);
        let l = 1.021;
        let a = compute_alpha((4.0 * PI).powf(-0.5), (4.0 * PI * l).powf(-0.5), l).unwrap();
        assert_relative_eq!(a, 0.5, epsilon = 1e-12);
        assert!(matches!(
            compute_alpha(0.0, 1.0, 2.0),
            Err(RgError::DegenerateProfile(_))
        ));
        assert!(matches!(
            compute_alpha(1.0, -1.0, 2.0),
            Err(RgError::DegenerateProfile(_))
        ));
        assert!(compute_alpha(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn compute_beta_examples() {
        let t = |a, b, c| MonomialTerm::new(1.0, a, b, c).unwrap();
        assert_eq!(compute_beta(BetaPolicy::FixedHalf, 0.7, &[]).unwrap(), 0.5);
        let p = BetaPolicy::ScalingRelation { dominant_term: 0 };
        assert_relative_eq!(compute_beta(p, 0.5, &[t(0.0, 1, 1)]).unwrap(), 1.0 / 6.0);
        assert_relative_eq!(compute_beta(p, 0.37, &[t(1.0, 1, 0)]).unwrap(), 1.0 - 0.37);
        assert!(matches!(
            compute_beta(p, 0.5, &[t(4.0, 0, 0)]),
            Err(RgError::InvalidPolicy(_))
        ));
        assert!(compute_beta(BetaPolicy::ScalingRelation { dominant_term: 3 }, 0.5, &[]).is_err());
    }

    #[test]
    fn rescale_examples() {
        let f = heat_kernel_field(Grid::symmetric(5.0, 27).unwrap());
        assert_eq!(rescale(&f, 0.0, 0.0, 1.021).unwrap(), f);
        let r = rescale(&f, 0.5, 0.5, 4.0).unwrap();
        assert_eq!(r.grid().spacing(), f.grid().spacing() / 2.0);
        assert_eq!(r.center_value(), 2.0 * f.center_value());
        assert_eq!(r.len(), f.len());
        let r = rescale(&f, 0.37, 0.5, 1.021).unwrap();
        assert_eq!(r.center_value(), f.center_value() * 1.021f64.powf(0.37));
    }

    #[test]
    fn update_coefficients_examples() {
        let l = 1.021;
        let terms = vec![MonomialTerm::new(0.1, 4.0, 0, 0).unwrap()];
        let c = RGCoefficients {
            chi: 1.0,
            omega: 1.0,
            lambdas: vec![0.1],
        };
        let u = update_coefficients(&c, &terms, 0.5, 0.5, l).unwrap();
        assert_eq!(u.chi, 1.0);
        assert_relative_eq!(u.omega, l.sqrt());
        assert_relative_eq!(u.lambdas[0], 0.1 * l.powf(-0.5), max_relative = 1e-15);

        let terms = vec![MonomialTerm::new(-1.0, 2.0, 0, 0).unwrap()];
        let c = RGCoefficients {
            chi: 1.0,
            omega: 1.0,
            lambdas: vec![-1.0],
        };
        let u = update_coefficients(&c, &terms, 1.0, 0.5, l).unwrap();
        assert_eq!(u.lambdas[0], -1.0);

        let huge = RGCoefficients {
            chi: 1.0,
            omega: 1.0,
            lambdas: vec![1e308],
        };
        let terms = vec![MonomialTerm::new(1.0, 0.0, 1, 0).unwrap()];
        assert!(matches!(
            update_coefficients(&huge, &terms, 0.5, 0.5, 1e3),
            Err(RgError::DivergingCoefficient { .. })
        ));
    }

    #[test]
    fn prefactor_examples() {
        let (a, b) = prefactors(3, 0.5, 0.5, 1.5, 1.5, 1.021);
        assert_eq!((a, b), (1.0, 1.0));
        let (a, _) = prefactors(2, 0.5, 0.5, 1.1, 1.0, 2.0);
        assert_relative_eq!(a, 2f64.powf(-0.1));
        assert_relative_eq!(a, 0.93303, epsilon = 1e-5);
    }

    #[test]
    fn heat_kernel_is_near_fixed_point() {
        let spec = EquationSpec::heat();
        let f0 = heat_kernel_field(Grid::symmetric(8.0, 161).unwrap());
        let state = RGState::initial(&spec, f0);
        let (next, rec) = rg_step(&state, &spec, &RgSettings::default()).unwrap();
        assert!((rec.alpha - 0.5).abs() < 1e-3, "alpha {}", rec.alpha);
        assert!(rec.reldiff_linf < 1e-3);
        assert_eq!(next.coeffs.chi, 1.0);
        assert_relative_eq!(next.coeffs.omega, 1.021f64.sqrt());
        assert_eq!(rec.b_n, 1.0);
    }

    #[test]
    fn zero_profile_is_degenerate() {
        let spec = EquationSpec::heat();
        let state = RGState::initial(&spec, Field::zeros(Grid::symmetric(5.0, 27).unwrap()));
        let err = rg_step(&state, &spec, &RgSettings::default()).unwrap_err();
        assert!(matches!(err, RgError::DegenerateProfile(_)));

        let failure = run(
            &spec,
            Field::zeros(Grid::symmetric(5.0, 27).unwrap()),
            &RgSettings::default(),
            StopRule::default(),
        )
        .unwrap_err();
        assert_eq!(failure.iteration, 1);
        assert!(failure.trace.is_empty());
    }

    #[test]
    fn coefficient_flow_matches_closed_form() {
        let terms = vec![
            MonomialTerm::new(0.1, 2.0, 1, 0).unwrap(),
            MonomialTerm::new(-0.3, 1.0, 1, 1).unwrap(),
        ];
        let spec = EquationSpec::new(
            0.1,
            PeriodicCoefficient::builtin("g1").unwrap(),
            EquationForm::Standard,
            terms.clone(),
        )
        .unwrap();
        let f0 = InitialCondition::new(InitialShape::Gauss, 0.2, 4.0)
            .unwrap()
            .sample(Grid::symmetric(5.0, 27).unwrap())
            .unwrap();
        let stop = StopRule {
            max_iter: 30,
            reldiff_tol: 0.0,
        };
        let rep = run(&spec, f0, &RgSettings::default(), stop).unwrap();
        let s = &rep.final_state;
        let l = 1.021f64;
        assert_eq!(s.coeffs.chi, 1.0);
        assert_relative_eq!(s.coeffs.omega.ln() / l.ln(), s.sum_beta, epsilon = 1e-10);
        assert_relative_eq!(s.sum_beta, 15.0, epsilon = 1e-12);
        for (t, lam) in terms.iter().zip(&s.coeffs.lambdas) {
            let (b, c) = (t.b as f64, t.c as f64);
            let expect = 30.0 + (1.0 - t.a - b - c) * s.sum_alpha - (b + 2.0 * c) * s.sum_beta;
            assert_relative_eq!((lam / t.coeff).ln() / l.ln(), expect, epsilon = 1e-9);
        }
        assert!(rep.trace.iter().all(|r| r.b_n == 1.0));
        for w in rep.trace.windows(2) {
            assert_eq!(w[1].n, w[0].n + 1);
        }
    }

    #[test]
    fn stops_on_reldiff_tolerance() {
        let spec = EquationSpec::heat();
        let f0 = heat_kernel_field(Grid::symmetric(5.0, 27).unwrap());
        let stop = StopRule {
            max_iter: 200,
            reldiff_tol: 1e-2,
        };
        let rep = run(&spec, f0, &RgSettings::default(), stop).unwrap();
        assert!(rep.trace.len() < 200);
        assert!(rep.trace.last().unwrap().reldiff_linf < 1e-2);
    }

    #[test]
    fn scaling_relation_run_keeps_identities() {
        let terms = vec![MonomialTerm::new(0.05, 0.0, 1, 1).unwrap()];
        let spec = EquationSpec::new(
            0.0,
            PeriodicCoefficient::builtin("g1").unwrap(),
            EquationForm::Standard,
            terms,
        )
        .unwrap();
        let f0 = InitialCondition::new(InitialShape::Gauss, 0.3, 4.0)
            .unwrap()
            .sample(Grid::symmetric(5.0, 27).unwrap())
            .unwrap();
        let settings = RgSettings {
            policy: BetaPolicy::ScalingRelation { dominant_term: 0 },
            ..RgSettings::default()
        };
        let stop = StopRule {
            max_iter: 5,
            reldiff_tol: 0.0,
        };
        let rep = run(&spec, f0, &settings, stop).unwrap();
        let s = &rep.final_state;
        let l = 1.021f64;
        // the dominant coefficient is invariant under its own scaling relation
        assert_relative_eq!(s.coeffs.lambdas[0], 0.05, max_relative = 1e-12);
        assert_relative_eq!(
            s.coeffs.chi.ln() / l.ln(),
            5.0 - 2.0 * s.sum_beta,
            epsilon = 1e-10
        );
        assert_relative_eq!(s.coeffs.omega.ln() / l.ln(), s.sum_beta, epsilon = 1e-10);
    }
}
