//! Distributions on the unit interval: the prior over states and the CDF of
//! the decision maker's outside option.
//!
//! Four representations are supported. `Uniform` and `Beta` are analytic,
//! `PiecewisePolynomial` takes a density given as polynomial pieces, and
//! `Tabulated` interpolates `(state, cdf)` pairs with a monotone piecewise
//! cubic (Fritsch–Carlson slopes), so the density is the derivative of the
//! interpolant and `g'` its second derivative.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::numeric::{self, bisect_root, golden_section_max, linspace};

/// Default number of points for grid validation.
pub const VALIDATION_GRID: usize = 2048;

/// Structured-text description of a distribution, `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum DistributionSpec {
    Uniform {},
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Density `h(w) = sum_p coefficients[j][p] w^p` on `[breakpoints[j], breakpoints[j+1]]`.
    PiecewisePolynomial {
        breakpoints: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
    },
    Tabulated {
        states: Vec<f64>,
        cdf: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
enum Kind {
    Uniform,
    Beta { alpha: f64, beta: f64, ln_norm: f64 },
    Polynomial(PolynomialPieces),
    Tabulated(MonotoneCubic),
}

/// A distribution on `[0, 1]` with a continuous density.
#[derive(Debug, Clone)]
pub struct Distribution {
    kind: Kind,
    spec: DistributionSpec,
    mean: f64,
}

impl Distribution {
    pub fn uniform() -> Self {
        Self::finish(Kind::Uniform, DistributionSpec::Uniform {})
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::Config(format!(
                "beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::finish(
            Kind::Beta {
                alpha,
                beta,
                ln_norm: ln_beta(alpha, beta),
            },
            DistributionSpec::Beta { alpha, beta },
        ))
    }

    pub fn piecewise_polynomial(
        breakpoints: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let spec = DistributionSpec::PiecewisePolynomial {
            breakpoints: breakpoints.clone(),
            coefficients: coefficients.clone(),
        };
        Ok(Self::finish(
            Kind::Polynomial(PolynomialPieces::new(breakpoints, coefficients)?),
            spec,
        ))
    }

    pub fn tabulated(states: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec::Tabulated {
            states: states.clone(),
            cdf: cdf.clone(),
        };
        Ok(Self::finish(
            Kind::Tabulated(MonotoneCubic::new(states, cdf)?),
            spec,
        ))
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Uniform {} => Ok(Self::uniform()),
            DistributionSpec::Beta { alpha, beta } => Self::beta(*alpha, *beta),
            DistributionSpec::PiecewisePolynomial {
                breakpoints,
                coefficients,
            } => Self::piecewise_polynomial(breakpoints.clone(), coefficients.clone()),
            DistributionSpec::Tabulated { states, cdf } => {
                Self::tabulated(states.clone(), cdf.clone())
            }
        }
    }

    fn finish(kind: Kind, spec: DistributionSpec) -> Self {
        let mut d = Distribution {
            kind,
            spec,
            mean: 0.0,
        };
        d.mean = d.partial_moment(0.0, 1.0);
        d
    }

    /// The description this distribution was built from.
    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Uniform => "uniform",
            Kind::Beta { .. } => "beta",
            Kind::Polynomial(_) => "piecewise_polynomial",
            Kind::Tabulated(_) => "tabulated",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Uniform => x,
            Kind::Beta { alpha, beta, .. } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(*alpha, *beta, x)
                }
            }
            Kind::Polynomial(p) => p.cdf(x),
            Kind::Tabulated(t) => t.value(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform => 1.0,
            Kind::Beta {
                alpha,
                beta,
                ln_norm,
            } => (x.powf(alpha - 1.0) * (1.0 - x).powf(beta - 1.0)) * (-ln_norm).exp(),
            Kind::Polynomial(p) => p.density(x),
            Kind::Tabulated(t) => t.derivative(x).max(0.0),
        }
    }

    /// Derivative of the density.
    pub fn pdf_derivative(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform => 0.0,
            Kind::Beta {
                alpha,
                beta,
                ln_norm,
            } => {
                let (a, b) = (*alpha, *beta);
                let left = if a == 1.0 {
                    0.0
                } else {
                    (a - 1.0) * x.powf(a - 2.0) * (1.0 - x).powf(b - 1.0)
                };
                let right = if b == 1.0 {
                    0.0
                } else {
                    (b - 1.0) * x.powf(a - 1.0) * (1.0 - x).powf(b - 2.0)
                };
                (left - right) * (-ln_norm).exp()
            }
            Kind::Polynomial(p) => p.density_derivative(x),
            Kind::Tabulated(t) => t.second_derivative(x),
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `H(b) - H(a)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    /// First partial moment `int_a^b w dH(w)`.
    pub fn partial_moment(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if a >= b {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform => 0.5 * (b * b - a * a),
            Kind::Beta { alpha, beta, .. } => {
                let upper = |x: f64| {
                    if x <= 0.0 {
                        0.0
                    } else if x >= 1.0 {
                        1.0
                    } else {
                        beta_reg(alpha + 1.0, *beta, x)
                    }
                };
                alpha / (alpha + beta) * (upper(b) - upper(a))
            }
            Kind::Polynomial(p) => p.moment(b) - p.moment(a),
            // integration by parts: [w H(w)]_a^b - int_a^b H
            Kind::Tabulated(t) => b * t.value(b) - a * t.value(a) - t.integral(a, b),
        }
    }

    /// Integrated CDF `I_H(m) = int_0^m H`.
    pub fn integrated_cdf(&self, m: f64) -> f64 {
        let m = m.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Uniform => 0.5 * m * m,
            Kind::Tabulated(t) => t.integral(0.0, m),
            _ => m * self.cdf(m) - self.partial_moment(0.0, m),
        }
    }

    /// Quantile function; for `p` in `[0, 1]` returns the smallest `x` with `H(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Uniform => p,
            _ => {
                if p <= 0.0 {
                    return 0.0;
                }
                if p >= 1.0 {
                    return 1.0;
                }
                bisect_root(|x| self.cdf(x) - p, 0.0, 1.0, 1e-14).unwrap_or(p)
            }
        }
    }

    /// Largest distance between consecutive breakpoints (zero for analytic kinds).
    pub fn knot_spacing(&self) -> f64 {
        let knots = match &self.kind {
            Kind::Polynomial(p) => &p.breaks,
            Kind::Tabulated(t) => &t.xs,
            _ => return 0.0,
        };
        knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Interior points where the representation changes piece.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Polynomial(p) => p.breaks[1..p.breaks.len() - 1].to_vec(),
            Kind::Tabulated(t) => t.xs[1..t.xs.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// `E[w | w in [a, b]]`; a point interval returns `a`.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::Domain(format!(
                "conditional mean needs 0 <= a <= b <= 1, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(a);
        }
        if let Kind::Uniform = self.kind {
            return Ok(0.5 * (a + b));
        }
        let mass = self.mass(a, b);
        if b - a < 1e-9 || mass < 1e-14 {
            return Ok(0.5 * (a + b));
        }
        let value = self.partial_moment(a, b) / mass;
        Ok(value.clamp(a, b))
    }

    /// Grid check of the CDF and density invariants.
    ///
    /// Positivity of the density is checked on interior grid points, so
    /// densities vanishing only at 0 or 1 (e.g. `h(w) = 2w`) are accepted.
    pub fn validate(&self, grid: usize) -> Result<()> {
        let grid = grid.max(16);
        let h0 = self.cdf(0.0);
        let h1 = self.cdf(1.0);
        if h0.abs() > 1e-10 || (h1 - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!(
                "{}: cdf(0) = {h0}, cdf(1) = {h1}",
                self.kind_name()
            )));
        }
        let xs = linspace(0.0, 1.0, grid);
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let c = self.cdf(x);
            if c < prev - 1e-12 {
                return Err(Error::Config(format!(
                    "{}: cdf decreases at {x}",
                    self.kind_name()
                )));
            }
            prev = c;
        }
        for &x in &xs[1..grid - 1] {
            let d = self.pdf(x);
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::Config(format!(
                    "{}: density not strictly positive at {x} (h = {d})",
                    self.kind_name()
                )));
            }
        }
        if let Kind::Polynomial(p) = &self.kind {
            for (j, &bp) in p.breaks.iter().enumerate().skip(1).take(p.breaks.len() - 2) {
                let left = eval_poly(&p.density[j - 1], bp);
                let right = eval_poly(&p.density[j], bp);
                if (left - right).abs() > 1e-9 * left.abs().max(1.0) {
                    return Err(Error::Config(format!(
                        "piecewise_polynomial: density jumps at {bp} ({left} vs {right})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Prior distribution of the state.
#[derive(Debug, Clone)]
pub struct PriorDistribution(Distribution);

impl PriorDistribution {
    pub fn new(dist: Distribution) -> Result<Self> {
        dist.validate(VALIDATION_GRID)?;
        Ok(PriorDistribution(dist))
    }

    pub fn uniform() -> Self {
        PriorDistribution(Distribution::uniform())
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        Self::new(Distribution::from_spec(spec)?)
    }

    /// Returns `t` with `E[w | w >= t] = y`.
    pub fn inverse_upper_conditional_mean(&self, y: f64) -> Result<f64> {
        let mu = self.mean();
        if !(y >= mu - 1e-14 && y <= 1.0) {
            return Err(Error::Domain(format!(
                "upper conditional mean {y} outside [mu, 1] = [{mu}, 1]"
            )));
        }
        if y <= mu {
            return Ok(0.0);
        }
        if y >= 1.0 {
            return Ok(1.0);
        }
        if let Kind::Uniform = self.0.kind {
            return Ok((2.0 * y - 1.0).max(0.0));
        }
        let f = |t: f64| self.conditional_mean(t, 1.0).map_or(f64::NAN, |v| v - y);
        bisect_root(f, 0.0, 1.0, numeric::ROOT_XTOL)
    }

    /// Returns `s` in `[0, x]` with `E[w | w in [s, t]] = x`.
    pub fn inverse_interval_conditional_mean(&self, t: f64, x: f64) -> Result<f64> {
        if !(0.0 <= x && x <= t && t <= 1.0) {
            return Err(Error::Domain(format!(
                "interval conditional mean needs 0 <= x <= t <= 1, got x = {x}, t = {t}"
            )));
        }
        if x == t {
            return Ok(t);
        }
        let bottom = self.conditional_mean(0.0, t)?;
        if bottom > x {
            return Err(Error::Infeasible {
                what: format!("E[w | w in [0, {t}]] exceeds target atom {x}"),
                boundary: bottom,
            });
        }
        if bottom == x {
            return Ok(0.0);
        }
        if let Kind::Uniform = self.0.kind {
            return Ok((2.0 * x - t).clamp(0.0, x));
        }
        let f = |s: f64| self.conditional_mean(s, t).map_or(f64::NAN, |v| v - x);
        bisect_root(f, 0.0, x, numeric::ROOT_XTOL)
    }
}

impl Deref for PriorDistribution {
    type Target = Distribution;
    fn deref(&self) -> &Distribution {
        &self.0
    }
}

/// CDF `G` of the decision maker's outside option, with the mode `r0` of its density.
#[derive(Debug, Clone)]
pub struct OutsideOptionDistribution {
    dist: Distribution,
    r0: f64,
}

impl OutsideOptionDistribution {
    pub fn new(dist: Distribution) -> Result<Self> {
        dist.validate(VALIDATION_GRID)?;
        let r0 = density_mode(&dist);
        Ok(OutsideOptionDistribution { dist, r0 })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Distribution::beta(alpha, beta)?)
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        Self::new(Distribution::from_spec(spec)?)
    }

    /// Maximizer of the density `g`.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `I_G(m) = int_0^m G`, the decision maker's interim value at posterior mean `m`.
    pub fn dm_value(&self, m: f64) -> f64 {
        self.integrated_cdf(m)
    }

    /// Grid check of S-shapedness: `g` rises then falls around an interior `r0`,
    /// and the second differences of `G` change sign once, near `r0`.
    pub fn s_shape_report(&self, grid: usize) -> SShapeReport {
        let grid = grid.max(16);
        let xs = linspace(0.0, 1.0, grid);
        let step = 1.0 / (grid - 1) as f64;
        let r0 = self.r0;
        let interior = r0 > 0.0 && r0 < 1.0;

        let g: Vec<f64> = xs.iter().map(|&x| self.pdf(x)).collect();
        let mut quasiconcave = true;
        for k in 0..grid - 1 {
            let diff = g[k + 1] - g[k];
            if xs[k + 1] <= r0 && diff < -1e-12 {
                quasiconcave = false;
            }
            if xs[k] >= r0 && diff > 1e-12 {
                quasiconcave = false;
            }
        }

        let big_g: Vec<f64> = xs.iter().map(|&x| self.cdf(x)).collect();
        let d2: Vec<f64> = (1..grid - 1)
            .map(|k| big_g[k + 1] - 2.0 * big_g[k] + big_g[k - 1])
            .collect();
        let floor = d2.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-6;
        let signs: Vec<(f64, f64)> = d2
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > floor.max(1e-14))
            .map(|(k, v)| (xs[k + 1], v.signum()))
            .collect();
        let mut changes = Vec::new();
        for w in signs.windows(2) {
            if w[0].1 != w[1].1 {
                changes.push((0.5 * (w[0].0 + w[1].0), w[0].1 > 0.0));
            }
        }
        let inflection = changes.first().map(|c| c.0);
        // interpolated tables may flicker within one knot spacing of the inflection
        let band = 2.0 * step.max(self.dist.knot_spacing());
        let convex_then_concave = !changes.is_empty()
            && signs.first().is_some_and(|s| s.1 > 0.0)
            && signs.last().is_some_and(|s| s.1 < 0.0)
            && changes.iter().all(|c| (c.0 - r0).abs() <= band);
        SShapeReport {
            r0,
            interior_mode: interior,
            density_quasiconcave: quasiconcave,
            second_difference_sign_changes: changes.len(),
            inflection,
            ok: interior && quasiconcave && convex_then_concave,
        }
    }
}

impl Deref for OutsideOptionDistribution {
    type Target = Distribution;
    fn deref(&self) -> &Distribution {
        &self.dist
    }
}

/// Outcome of the S-shape grid check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SShapeReport {
    pub r0: f64,
    pub interior_mode: bool,
    pub density_quasiconcave: bool,
    pub second_difference_sign_changes: usize,
    pub inflection: Option<f64>,
    pub ok: bool,
}

/// S-shape and informativeness diagnostics for a `(prior, G)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub s_shape_ok: bool,
    pub informativeness_ok: bool,
    pub r0: f64,
    pub mu: f64,
    /// `g(mu) mu - G(mu)`.
    pub margin: f64,
}

/// Evaluates both standing assumptions; failures are reported, not raised.
pub fn check_assumptions(
    prior: &PriorDistribution,
    g_dist: &OutsideOptionDistribution,
) -> AssumptionReport {
    let mu = prior.mean();
    let margin = informativeness_margin(g_dist, mu);
    AssumptionReport {
        s_shape_ok: g_dist.s_shape_report(VALIDATION_GRID).ok,
        informativeness_ok: margin > 0.0,
        r0: g_dist.r0(),
        mu,
        margin,
    }
}

/// `g(mu) mu - G(mu)` for an arbitrary prior mean.
pub fn informativeness_margin(g_dist: &OutsideOptionDistribution, mu: f64) -> f64 {
    g_dist.pdf(mu) * mu - g_dist.cdf(mu)
}

fn density_mode(dist: &Distribution) -> f64 {
    if let Kind::Beta { alpha, beta, .. } = dist.kind {
        if alpha > 1.0 && beta > 1.0 {
            return (alpha - 1.0) / (alpha + beta - 2.0);
        }
    }
    let xs = linspace(0.0, 1.0, VALIDATION_GRID);
    let (k, _) =
        xs.iter()
            .map(|&x| dist.pdf(x))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
    let lo = xs[k.saturating_sub(1)];
    let hi = xs[(k + 1).min(xs.len() - 1)];
    golden_section_max(|x| dist.pdf(x), lo, hi, 1e-12).0
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Density given as polynomial pieces in the global variable.
#[derive(Debug, Clone)]
struct PolynomialPieces {
    breaks: Vec<f64>,
    density: Vec<Vec<f64>>,
    /// Antiderivative of `h`, per piece.
    anti: Vec<Vec<f64>>,
    /// Antiderivative of `w h(w)`, per piece.
    anti_moment: Vec<Vec<f64>>,
    cdf_at: Vec<f64>,
    moment_at: Vec<f64>,
}

impl PolynomialPieces {
    fn new(breaks: Vec<f64>, density: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() < 2 || density.len() != breaks.len() - 1 {
            return Err(Error::Config(
                "piecewise_polynomial needs k+1 breakpoints for k coefficient rows".into(),
            ));
        }
        if breaks[0] != 0.0
            || *breaks.last().unwrap() != 1.0
            || breaks.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config(
                "piecewise_polynomial breakpoints must increase strictly from 0 to 1".into(),
            ));
        }
        let anti: Vec<Vec<f64>> = density
            .iter()
            .map(|c| {
                let mut a = vec![0.0];
                a.extend(c.iter().enumerate().map(|(p, &v)| v / (p + 1) as f64));
                a
            })
            .collect();
        let anti_moment: Vec<Vec<f64>> = density
            .iter()
            .map(|c| {
                let mut a = vec![0.0, 0.0];
                a.extend(c.iter().enumerate().map(|(p, &v)| v / (p + 2) as f64));
                a
            })
            .collect();
        let mut cdf_at = vec![0.0];
        let mut moment_at = vec![0.0];
        for j in 0..density.len() {
            let (lo, hi) = (breaks[j], breaks[j + 1]);
            cdf_at.push(cdf_at[j] + eval_poly(&anti[j], hi) - eval_poly(&anti[j], lo));
            moment_at.push(
                moment_at[j] + eval_poly(&anti_moment[j], hi) - eval_poly(&anti_moment[j], lo),
            );
        }
        let total = *cdf_at.last().unwrap();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "piecewise_polynomial density integrates to {total}, expected 1"
            )));
        }
        Ok(PolynomialPieces {
            breaks,
            density,
            anti,
            anti_moment,
            cdf_at,
            moment_at,
        })
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(self.density.len() - 1)
    }

    fn cdf(&self, x: f64) -> f64 {
        let j = self.piece(x);
        self.cdf_at[j] + eval_poly(&self.anti[j], x) - eval_poly(&self.anti[j], self.breaks[j])
    }

    fn moment(&self, x: f64) -> f64 {
        let j = self.piece(x);
        self.moment_at[j] + eval_poly(&self.anti_moment[j], x)
            - eval_poly(&self.anti_moment[j], self.breaks[j])
    }

    fn density(&self, x: f64) -> f64 {
        eval_poly(&self.density[self.piece(x)], x)
    }

    fn density_derivative(&self, x: f64) -> f64 {
        let c = &self.density[self.piece(x)];
        c.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (p, &v)| acc * x + p as f64 * v)
    }
}

/// Monotone piecewise-cubic Hermite interpolant with Fritsch–Carlson slopes.
#[derive(Debug, Clone)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Config(
                "tabulated needs at least two (state, cdf) pairs".into(),
            ));
        }
        if xs[0] != 0.0 || xs[n - 1] != 1.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "tabulated states must increase strictly from 0 to 1".into(),
            ));
        }
        if ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(
                "tabulated cdf values must be nondecreasing".into(),
            ));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    ds[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(MonotoneCubic { xs, ys, ds })
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let k = self
            .xs
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(self.xs.len() - 2);
        let h = self.xs[k + 1] - self.xs[k];
        (k, h, (x - self.xs[k]) / h)
    }

    fn value(&self, x: f64) -> f64 {
        let (k, h, t) = self.locate(x);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.ds[k] + h01 * self.ys[k + 1] + h11 * h * self.ds[k + 1]
    }

    fn derivative(&self, x: f64) -> f64 {
        let (k, h, t) = self.locate(x);
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[k] + d10 * self.ds[k] + d01 * self.ys[k + 1] + d11 * self.ds[k + 1]
    }

    /// Exact integral of the interpolant; Simpson's rule is exact on each cubic piece.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.xs.len() - 1 {
            let lo = a.max(self.xs[k]);
            let hi = b.min(self.xs[k + 1]);
            if hi > lo {
                let mid = 0.5 * (lo + hi);
                total +=
                    (hi - lo) / 6.0 * (self.value(lo) + 4.0 * self.value(mid) + self.value(hi));
            }
        }
        total
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let (k, h, t) = self.locate(x);
        let s00 = (12.0 * t - 6.0) / (h * h);
        let s10 = (6.0 * t - 4.0) / h;
        let s01 = (-12.0 * t + 6.0) / (h * h);
        let s11 = (6.0 * t - 2.0) / h;
        s00 * self.ys[k] + s10 * self.ds[k] + s01 * self.ys[k + 1] + s11 * self.ds[k + 1]
    }
}

// One-sided three-point slope, limited to keep the interpolant monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta22() -> OutsideOptionDistribution {
        OutsideOptionDistribution::beta(2.0, 2.0).unwrap()
    }

    fn linear_prior() -> PriorDistribution {
        PriorDistribution::new(Distribution::beta(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn conditional_mean_examples() {
        let u = PriorDistribution::uniform();
        assert!((u.conditional_mean(0.25, 1.0).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(u.conditional_mean(0.3, 0.3).unwrap(), 0.3);
        assert!((u.conditional_mean(0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = linear_prior();
        assert_eq!(p.conditional_mean(0.42, 0.42).unwrap(), 0.42);
        assert!(p.conditional_mean(0.5, 0.4).is_err());
    }

    #[test]
    fn inverse_upper_examples() {
        let u = PriorDistribution::uniform();
        assert!((u.inverse_upper_conditional_mean(2.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(u.inverse_upper_conditional_mean(0.5).unwrap(), 0.0);
        assert!(matches!(
            u.inverse_upper_conditional_mean(0.4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            u.inverse_upper_conditional_mean(1.2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inverse_upper_linear_density_matches_closed_form() {
        // (2/3)(1 - t^3)/(1 - t^2) = y  <=>  2 t^2 + (2 - 3y) t + (2 - 3y) = 0
        let y = 0.9;
        let (a, b, c): (f64, f64, f64) = (2.0, 2.0 - 3.0 * y, 2.0 - 3.0 * y);
        let oracle = (-b + ((b * b) - 4.0 * a * c).sqrt()) / (2.0 * a);
        let t = linear_prior().inverse_upper_conditional_mean(y).unwrap();
        assert!((t - oracle).abs() < 1e-10, "{t} vs {oracle}");
        let residual = (2.0 / 3.0) * (1.0 - t.powi(3)) / (1.0 - t * t) - y;
        assert!(residual.abs() <= 1e-10);
    }

    #[test]
    fn inverse_interval_examples() {
        let u = PriorDistribution::uniform();
        assert!(
            u.inverse_interval_conditional_mean(1.0 / 3.0, 1.0 / 6.0)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!((u.inverse_interval_conditional_mean(0.3, 0.2).unwrap() - 0.1).abs() < 1e-15);
        let p = linear_prior();
        let t = 0.6;
        let x = p.conditional_mean(0.0, t).unwrap();
        assert!(p.inverse_interval_conditional_mean(t, x).unwrap().abs() < 1e-12);
        let s = p.inverse_interval_conditional_mean(0.6, 0.5).unwrap();
        assert!((p.conditional_mean(s, 0.6).unwrap() - 0.5).abs() < 1e-10);
        match p.inverse_interval_conditional_mean(0.6, 0.2) {
            Err(Error::Infeasible { boundary, .. }) => assert!((boundary - 0.4).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn beta22_quantities() {
        let g = beta22();
        assert!((g.r0() - 0.5).abs() < 1e-15);
        assert!((g.cdf(0.5) - 0.5).abs() < 1e-14);
        assert!((g.pdf(0.5) - 1.5).abs() < 1e-14);
        assert!((g.pdf_derivative(0.25) - 3.0).abs() < 1e-13);
        for &m in &[0.1f64, 0.25, 0.625, 0.9] {
            let exact = m * m * m - m.powi(4) / 2.0;
            assert!((g.dm_value(m) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn assumption_report_examples() {
        let rep = check_assumptions(&PriorDistribution::uniform(), &beta22());
        assert!(rep.s_shape_ok);
        assert!(rep.informativeness_ok);
        assert!((rep.margin - 0.25).abs() < 1e-14);
        assert!((rep.r0 - 0.5).abs() < 1e-15);
        // margin at mu = 0.99: 6(0.99)(0.01)(0.99) - G(0.99)
        let m = informativeness_margin(&beta22(), 0.99);
        let oracle = 6.0 * 0.99 * 0.01 * 0.99 - (3.0 * 0.99f64.powi(2) - 2.0 * 0.99f64.powi(3));
        assert!((m - oracle).abs() < 1e-14 && m < 0.0);
        let high = PriorDistribution::new(Distribution::beta(20.0, 1.0).unwrap()).unwrap();
        let rep = check_assumptions(&high, &beta22());
        assert!((rep.mu - 20.0 / 21.0).abs() < 1e-12);
        assert!(!rep.informativeness_ok);
    }

    #[test]
    fn piecewise_polynomial_matches_beta() {
        // h(w) = 6w(1-w) split at 0.4
        let coeffs = vec![vec![0.0, 6.0, -6.0], vec![0.0, 6.0, -6.0]];
        let p = Distribution::piecewise_polynomial(vec![0.0, 0.4, 1.0], coeffs).unwrap();
        let b = Distribution::beta(2.0, 2.0).unwrap();
        for &x in &[0.0, 0.1, 0.4, 0.55, 0.9, 1.0] {
            assert!((p.cdf(x) - b.cdf(x)).abs() < 1e-14);
            assert!((p.pdf(x) - b.pdf(x)).abs() < 1e-13);
            assert!((p.pdf_derivative(x) - b.pdf_derivative(x)).abs() < 1e-12);
            assert!((p.partial_moment(0.0, x) - b.partial_moment(0.0, x)).abs() < 1e-14);
        }
        assert!(Distribution::piecewise_polynomial(vec![0.0, 1.0], vec![vec![2.0]]).is_err());
    }

    #[test]
    fn piecewise_polynomial_rejects_jumps() {
        // h = 0.5 on [0, 0.5), 1.5 on [0.5, 1]
        let p = Distribution::piecewise_polynomial(vec![0.0, 0.5, 1.0], vec![vec![0.5], vec![1.5]])
            .unwrap();
        assert!(p.validate(VALIDATION_GRID).is_err());
    }

    #[test]
    fn tabulated_reproduces_beta22() {
        let b = Distribution::beta(2.0, 2.0).unwrap();
        let states = linspace(0.0, 1.0, 401);
        let cdf = states.iter().map(|&x| b.cdf(x)).collect();
        let t = Distribution::tabulated(states, cdf).unwrap();
        t.validate(VALIDATION_GRID).unwrap();
        for &x in &[0.13, 0.5, 0.77] {
            assert!((t.cdf(x) - b.cdf(x)).abs() < 1e-8);
            assert!((t.pdf(x) - b.pdf(x)).abs() < 1e-4);
        }
        assert!((t.mean() - 0.5).abs() < 1e-8);
        let g = OutsideOptionDistribution::new(t).unwrap();
        assert!((g.r0() - 0.5).abs() < 1e-3);
        let rep = g.s_shape_report(1000);
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(Distribution::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 0.5]).is_err());
        assert!(Distribution::tabulated(vec![0.1, 0.5, 1.0], vec![0.0, 0.5, 1.0]).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let b = Distribution::beta(2.0, 3.0).unwrap();
        for &p in &[0.01, 0.3, 0.5, 0.99] {
            assert!((b.cdf(b.quantile(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn s_shape_rejects_uniform_g() {
        let g = OutsideOptionDistribution::new(Distribution::uniform()).unwrap();
        assert!(!g.s_shape_report(1000).ok);
    }

    #[test]
    fn spec_roundtrip_and_unknown_keys() {
        let spec: DistributionSpec =
            serde_json::from_str(r#"{"kind":"beta","params":{"alpha":2,"beta":2}}"#).unwrap();
        assert_eq!(
            spec,
            DistributionSpec::Beta {
                alpha: 2.0,
                beta: 2.0
            }
        );
        let spec: DistributionSpec =
            serde_json::from_str(r#"{"kind":"uniform","params":{}}"#).unwrap();
        assert_eq!(spec, DistributionSpec::Uniform {});
        assert!(serde_json::from_str::<DistributionSpec>(
            r#"{"kind":"beta","params":{"alpha":2,"beta":2,"gamma":1}}"#
        )
        .is_err());
        assert!(
            serde_json::from_str::<DistributionSpec>(r#"{"kind":"lognormal","params":{}}"#)
                .is_err()
        );
    }
}
