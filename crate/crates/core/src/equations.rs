//! Right-hand sides of the renormalized equations, the periodic
//! coefficients `g` and the initial-condition library.

use std::f64::consts::{E, PI, TAU};

use crate::error::{invalid, Result, RgError};
use crate::grid::{Field, Grid};

/// Divisor of `g2`; with it `min g2` is just above -1 and `max g2` about 0.78.
pub const G2_NORMALIZATION: f64 = 2.72;

#[derive(Debug, Clone, PartialEq)]
enum Waveform {
    Cos,
    Mixed,
    Triangle,
    /// `sum_k cos[k] cos((k+1) x) + sin[k] sin((k+1) x)`
    Fourier {
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

/// Zero-mean, `2π`-periodic coefficient `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCoefficient {
    name: String,
    waveform: Waveform,
    period: f64,
    sup_abs: f64,
    inf_val: f64,
    sup_val: f64,
}

impl PeriodicCoefficient {
    /// One of the built-in coefficients `g1`, `g2`, `g3`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "g1" => Ok(Self::analytic("g1", Waveform::Cos, -1.0, 1.0)),
            "g3" => Ok(Self::analytic("g3", Waveform::Triangle, -1.0, 1.0)),
            "g2" => Ok(Self::sampled("g2".into(), Waveform::Mixed)),
            other => Err(invalid(format!("unknown periodic coefficient '{other}'"))),
        }
    }

    /// Custom Fourier series without a constant term; harmonic `k` is at
    /// index `k - 1` of `cos` and `sin`.
    pub fn fourier(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.is_empty() && sin.is_empty() {
            return Err(invalid("fourier coefficient needs at least one harmonic"));
        }
        if cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(invalid("fourier coefficients must be finite"));
        }
        Ok(Self::sampled(
            "fourier".into(),
            Waveform::Fourier { cos, sin },
        ))
    }

    fn analytic(name: &str, waveform: Waveform, inf_val: f64, sup_val: f64) -> Self {
        PeriodicCoefficient {
            name: name.into(),
            waveform,
            period: TAU,
            sup_abs: inf_val.abs().max(sup_val.abs()),
            inf_val,
            sup_val,
        }
    }

    fn sampled(name: String, waveform: Waveform) -> Self {
        const SAMPLES: usize = 1 << 17;
        let mut g = Self::analytic(&name, waveform, 0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..SAMPLES {
            let v = g.eval(TAU * i as f64 / SAMPLES as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        g.inf_val = lo;
        g.sup_val = hi;
        g.sup_abs = lo.abs().max(hi.abs());
        g
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.waveform {
            Waveform::Cos => x.cos(),
            Waveform::Mixed => (x.cos() + (2.0 * x).sin() + (4.0 * x).cos()) / G2_NORMALIZATION,
            Waveform::Triangle => 1.0 - 2.0 * ((x / PI).rem_euclid(2.0) - 1.0).abs(),
            Waveform::Fourier { cos, sin } => {
                let c: f64 = cos
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * x).cos())
                    .sum();
                let s: f64 = sin
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b * ((k + 1) as f64 * x).sin())
                    .sum();
                c + s
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `(cos, sin)` harmonics of a custom series; `None` for the built-ins.
    pub fn fourier_coefficients(&self) -> Option<(&[f64], &[f64])> {
        match &self.waveform {
            Waveform::Fourier { cos, sin } => Some((cos, sin)),
            _ => None,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    pub fn inf_val(&self) -> f64 {
        self.inf_val
    }

    pub fn sup_val(&self) -> f64 {
        self.sup_val
    }

    /// `min_x 1 + mu g(x)`.
    pub fn min_diffusivity(&self, mu: f64) -> f64 {
        (1.0 + mu * self.inf_val).min(1.0 + mu * self.sup_val)
    }

    /// True if g has a kink at multiples of a quarter period (quadrature hint).
    pub(crate) fn has_quarter_kinks(&self) -> bool {
        matches!(self.waveform, Waveform::Triangle)
    }
}

/// Relevance class of a nonlinear term under diffusive scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relevance {
    Irrelevant,
    Marginal,
    Relevant,
}

/// `coeff * u^a * u_x^b * u_xx^c`.
///
/// `a` is real so that absorption terms `-u^a` with non-integer `a` can be
/// expressed; `b` and `c` are integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub a: f64,
    pub b: u32,
    pub c: u32,
}

impl MonomialTerm {
    pub fn new(coeff: f64, a: f64, b: u32, c: u32) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(invalid("term coefficient must be finite"));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(invalid(format!("exponent a must be nonnegative, got {a}")));
        }
        Ok(MonomialTerm { coeff, a, b, c })
    }

    /// `d_F = a + 2b + 3c - 3`.
    pub fn degree(&self) -> f64 {
        self.a + 2.0 * self.b as f64 + 3.0 * self.c as f64 - 3.0
    }

    pub fn relevance(&self) -> Relevance {
        let d = self.degree();
        if d > 0.0 {
            Relevance::Irrelevant
        } else if d == 0.0 {
            Relevance::Marginal
        } else {
            Relevance::Relevant
        }
    }

    /// Whether the term is nonzero on identically-zero data (`a = b = c = 0`).
    pub fn is_source(&self) -> bool {
        self.a == 0.0 && self.b == 0 && self.c == 0
    }

    /// Exponent of `L` by which the coefficient is multiplied in one RG step.
    pub fn flow_exponent(&self, alpha: f64, beta: f64) -> f64 {
        let (b, c) = (self.b as f64, self.c as f64);
        1.0 - (b + 2.0 * c) * beta + (1.0 - self.a - b - c) * alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquationForm {
    /// `[1 + mu g] u_xx + F`
    Standard,
    /// `((1 + mu g) u_x)_x + F`
    Divergence,
    /// `(1 + epsilon H(-u_t)) u_xx`
    Barenblatt { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub mu: f64,
    pub g: PeriodicCoefficient,
    pub form: EquationForm,
    pub terms: Vec<MonomialTerm>,
}

impl EquationSpec {
    pub fn new(
        mu: f64,
        g: PeriodicCoefficient,
        form: EquationForm,
        terms: Vec<MonomialTerm>,
    ) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("mu must be finite"));
        }
        if g.min_diffusivity(mu) <= 0.0 {
            return Err(invalid(format!(
                "ellipticity violated: 1 + mu g reaches {} for mu = {mu}",
                g.min_diffusivity(mu)
            )));
        }
        if let EquationForm::Barenblatt { epsilon } = form {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(invalid(format!(
                    "epsilon must be nonnegative, got {epsilon}"
                )));
            }
            if mu != 0.0 || !terms.is_empty() {
                return Err(invalid(
                    "Barenblatt form requires mu = 0 and no nonlinear terms",
                ));
            }
        }
        Ok(EquationSpec { mu, g, form, terms })
    }

    /// Heat equation `u_t = u_xx`.
    pub fn heat() -> Self {
        EquationSpec {
            mu: 0.0,
            g: PeriodicCoefficient::builtin("g1").expect("builtin"),
            form: EquationForm::Standard,
            terms: Vec::new(),
        }
    }

    /// Worst-case multiplier of `chi * u_xx` used by the time-step rule.
    pub fn max_diffusivity(&self) -> f64 {
        let eps = match self.form {
            EquationForm::Barenblatt { epsilon } => epsilon,
            _ => 0.0,
        };
        1.0 + self.mu.abs() * self.g.sup_abs() + eps
    }
}

/// Renormalized coefficients `chi_n`, `omega_n` and one `lambda_n` per term.
#[derive(Debug, Clone, PartialEq)]
pub struct RGCoefficients {
    pub chi: f64,
    pub omega: f64,
    pub lambdas: Vec<f64>,
}

impl RGCoefficients {
    pub fn initial(spec: &EquationSpec) -> Self {
        RGCoefficients {
            chi: 1.0,
            omega: 1.0,
            lambdas: spec.terms.iter().map(|t| t.coeff).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TermKernel {
    lambda: f64,
    a: f64,
    a_int: Option<i32>,
    b: i32,
    c: i32,
}

impl TermKernel {
    #[inline]
    fn eval(&self, u: f64, d1: f64, d2: f64) -> f64 {
        let ua = match self.a_int {
            Some(k) => u.powi(k),
            None => u.powf(self.a),
        };
        self.lambda * ua * d1.powi(self.b) * d2.powi(self.c)
    }
}

#[derive(Debug, Clone)]
enum Diffusion {
    /// `k[j] * D2u`, `k` already divided by `dx^2`.
    Nodal(Vec<f64>),
    /// `k[j] (u[j+1]-u[j]) - k[j-1] (u[j]-u[j-1])`, `k[j]` sits at `x_{j+1/2}`.
    Flux(Vec<f64>),
    /// `chi (1 + eps H(-D2u)) D2u`
    Barenblatt { chi_dx2: f64, epsilon: f64 },
}

/// Discrete right-hand side bound to one grid and one set of coefficients.
///
/// Coefficient arrays are built once, so the time loop only does stencil
/// arithmetic.
#[derive(Debug, Clone)]
pub struct Operator {
    diffusion: Diffusion,
    terms: Vec<TermKernel>,
    inv_dx2: f64,
    inv_2dx: f64,
}

impl Operator {
    pub fn new(spec: &EquationSpec, coeffs: &RGCoefficients, grid: &Grid) -> Result<Self> {
        if coeffs.lambdas.len() != spec.terms.len() {
            return Err(invalid("one renormalized coefficient per term is required"));
        }
        let h = grid.spacing();
        let inv_dx2 = 1.0 / (h * h);
        let k = |x: f64| coeffs.chi * (1.0 + spec.mu * spec.g.eval(coeffs.omega * x)) * inv_dx2;
        let diffusion = match spec.form {
            EquationForm::Standard => Diffusion::Nodal(grid.nodes().map(k).collect()),
            EquationForm::Divergence => {
                Diffusion::Flux(grid.nodes().map(|x| k(x + 0.5 * h)).collect())
            }
            EquationForm::Barenblatt { epsilon } => Diffusion::Barenblatt {
                chi_dx2: coeffs.chi * inv_dx2,
                epsilon,
            },
        };
        let terms = spec
            .terms
            .iter()
            .zip(&coeffs.lambdas)
            .map(|(t, &lambda)| TermKernel {
                lambda,
                a: t.a,
                a_int: (t.a.fract() == 0.0 && t.a <= i32::MAX as f64).then_some(t.a as i32),
                b: t.b as i32,
                c: t.c as i32,
            })
            .collect();
        Ok(Operator {
            diffusion,
            terms,
            inv_dx2,
            inv_2dx: 0.5 / h,
        })
    }

    /// Whether zero data stays exactly zero under this operator.
    pub fn preserves_zero(&self) -> bool {
        self.terms
            .iter()
            .all(|t| !(t.a == 0.0 && t.b == 0 && t.c == 0))
    }

    #[inline]
    fn node(&self, u: &[f64], j: usize) -> f64 {
        let (um, u0, up) = (u[j - 1], u[j], u[j + 1]);
        let lap = up - 2.0 * u0 + um;
        let mut r = match &self.diffusion {
            Diffusion::Nodal(k) => k[j] * lap,
            Diffusion::Flux(k) => k[j] * (up - u0) - k[j - 1] * (u0 - um),
            Diffusion::Barenblatt { chi_dx2, epsilon } => {
                let d2 = lap * chi_dx2;
                if d2 < 0.0 {
                    (1.0 + epsilon) * d2
                } else {
                    d2
                }
            }
        };
        if !self.terms.is_empty() {
            let d1 = (up - um) * self.inv_2dx;
            let d2 = lap * self.inv_dx2;
            for t in &self.terms {
                r += t.eval(u0, d1, d2);
            }
        }
        r
    }

    /// Writes `u + dt * rhs(u)` into `next` for nodes `lo..=hi`
    /// (`1 <= lo`, `hi + 1 < u.len()`). Returns the first node whose new
    /// value is not finite.
    pub fn euler_step(
        &self,
        u: &[f64],
        next: &mut [f64],
        dt: f64,
        lo: usize,
        hi: usize,
    ) -> Option<usize> {
        debug_assert!(lo >= 1 && hi + 1 < u.len() && next.len() == u.len());
        let mut finite = true;
        match (&self.diffusion, self.terms.is_empty()) {
            // hot path: linear nodal diffusion
            (Diffusion::Nodal(k), true) => {
                for j in lo..=hi {
                    let v = u[j] + dt * k[j] * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
                    finite &= v.is_finite();
                    next[j] = v;
                }
            }
            _ => {
                for j in lo..=hi {
                    let v = u[j] + dt * self.node(u, j);
                    finite &= v.is_finite();
                    next[j] = v;
                }
            }
        }
        if finite {
            None
        } else {
            (lo..=hi).find(|&j| !next[j].is_finite())
        }
    }
}

/// Discrete right-hand side on every node of `u`; boundary nodes get 0.
pub fn rhs(spec: &EquationSpec, coeffs: &RGCoefficients, u: &Field) -> Result<Field> {
    let n = u.len();
    if n < 3 {
        return Err(invalid("rhs needs at least 3 nodes"));
    }
    let op = Operator::new(spec, coeffs, u.grid())?;
    let vals = u.values();
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        *o = op.node(vals, j);
        if !o.is_finite() {
            return Err(RgError::BlowUp {
                step: 0,
                time: 0.0,
                node: j,
                x: u.grid().x(j),
            });
        }
    }
    Field::new(*u.grid(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialShape {
    Gauss,
    Bump,
    DoubleBump,
}

impl std::str::FromStr for InitialShape {
    type Err = RgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(InitialShape::Gauss),
            "bump" => Ok(InitialShape::Bump),
            "double_bump" => Ok(InitialShape::DoubleBump),
            other => Err(invalid(format!("unknown initial condition '{other}'"))),
        }
    }
}

impl std::fmt::Display for InitialShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialShape::Gauss => "gauss",
            InitialShape::Bump => "bump",
            InitialShape::DoubleBump => "double_bump",
        })
    }
}

/// Smooth, rapidly decaying initial data whose value at the origin is
/// `amplitude`.
///
/// * `gauss`: `A exp(-x^2 / w)`
/// * `bump`: `A exp(1 - 1 / (1 - (x/w)^2))` on `|x| < w`
/// * `double_bump`: two bumps of width `w` centered at `±3w/4`, scaled so the
///   (local minimum) value at the origin is `A`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub shape: InitialShape,
    pub amplitude: f64,
    pub width: f64,
}

const DOUBLE_BUMP_OFFSET: f64 = 0.75;

fn unit_bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

impl InitialCondition {
    pub fn new(shape: InitialShape, amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("width must be positive, got {width}")));
        }
        if !amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        Ok(InitialCondition {
            shape,
            amplitude,
            width,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, w) = (self.amplitude, self.width);
        match self.shape {
            InitialShape::Gauss => a * (-x * x / w).exp(),
            InitialShape::Bump => a * unit_bump(x / w),
            InitialShape::DoubleBump => {
                let pair = |x: f64| {
                    unit_bump(x / w - DOUBLE_BUMP_OFFSET) + unit_bump(x / w + DOUBLE_BUMP_OFFSET)
                };
                a * pair(x) / pair(0.0)
            }
        }
    }

    pub fn sample(&self, grid: Grid) -> Result<Field> {
        Field::from_fn(grid, |x| self.eval(x))
    }
}

/// `1/sqrt(2 pi e)`, the first-order slope of Barenblatt's exponent.
pub fn barenblatt_slope() -> f64 {
    1.0 / (2.0 * PI * E).sqrt()
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn builtins_are_periodic_and_bounded(x in -50.0f64..50.0, k in -3i32..3) {
            for name in ["g1", "g2", "g3"] {
                let g = PeriodicCoefficient::builtin(name).unwrap();
                let shifted = g.eval(x + k as f64 * g.period());
                prop_assert!((g.eval(x) - shifted).abs() <= 1e-9);
                prop_assert!(g.eval(x) >= g.inf_val() - 1e-9 && g.eval(x) <= g.sup_val() + 1e-9);
            }
        }

        #[test]
        fn linear_rhs_is_homogeneous(
            mu in -0.9f64..0.9,
            scale in -5.0f64..5.0,
            divergence in any::<bool>(),
        ) {
            let form = if divergence { EquationForm::Divergence } else { EquationForm::Standard };
            let spec = EquationSpec::new(mu, PeriodicCoefficient::builtin("g1").unwrap(), form, vec![]).unwrap();
            let coeffs = RGCoefficients::initial(&spec);
            let u = Field::from_fn(Grid::symmetric(4.0, 33).unwrap(), |x| (-x * x / 2.0).exp()).unwrap();
            let a = rhs(&spec, &coeffs, &u.scaled(scale)).unwrap();
            let b = rhs(&spec, &coeffs, &u).unwrap().scaled(scale);
            for (p, q) in a.values().iter().zip(b.values()) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
            }
        }
    }
}
