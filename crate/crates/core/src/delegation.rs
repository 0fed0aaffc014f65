//! Designer objectives over the MIC family and the optimal restriction.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{AssumptionReport, OutsideOptionDistribution};
use crate::error::{Error, MicCondition, Result};
use crate::experiments::DoubleCensorship;
use crate::mic::MicFamily;
use crate::numeric::{golden_section_max, integrate_piecewise, linspace};
use crate::table::write_csv;

/// Coarse grid size of [`optimize`].
pub const OPT_GRID: usize = 257;
/// Golden-section tolerance of [`optimize`].
pub const OPT_TOL: f64 = 1e-9;
/// Central-difference step for objectives without an analytic derivative.
pub const FD_STEP: f64 = 1e-6;
/// Grid size of the convexity check.
pub const CONVEXITY_GRID: usize = 1024;

const BOUNDARY_TOL: f64 = 1e-8;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied designer payoff.
#[derive(Clone)]
pub struct CustomObjective {
    name: String,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
}

impl CustomObjective {
    pub fn new<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CustomObjective {
            name: name.into(),
            value: Arc::new(value),
            derivative: None,
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// `sum c_k m^k` with its analytic derivative.
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        let deriv: Vec<f64> = coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        let name = format!("polynomial{coefficients:?}");
        CustomObjective::new(name, move |m| horner(&coefficients, m))
            .with_derivative(move |m| horner(&deriv, m))
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomObjective")
            .field("name", &self.name)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

fn horner(coefficients: &[f64], m: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * m + c)
}

/// The designer's payoff `u_D` as a function of the posterior mean.
#[derive(Debug, Clone)]
pub enum DesignerObjective {
    /// `u_D = I_G`, the decision maker's own value.
    DmValue,
    /// `u_D = lambda I_G + (1 - lambda) G`.
    WelfareWeighted {
        lambda: f64,
    },
    Custom(CustomObjective),
}

/// Serializable objective description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    DmValue {},
    WelfareWeighted { lambda: f64 },
    Polynomial { coefficients: Vec<f64> },
}

impl DesignerObjective {
    pub fn from_spec(spec: &ObjectiveSpec) -> Result<Self> {
        match spec {
            ObjectiveSpec::DmValue {} => Ok(DesignerObjective::DmValue),
            ObjectiveSpec::WelfareWeighted { lambda } => {
                DesignerObjective::welfare_weighted(*lambda)
            }
            ObjectiveSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config(
                        "polynomial objective needs finite coefficients".into(),
                    ));
                }
                Ok(DesignerObjective::Custom(CustomObjective::polynomial(
                    coefficients.clone(),
                )))
            }
        }
    }

    pub fn welfare_weighted(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!(
                "welfare weight {lambda} outside [0, 1]"
            )));
        }
        Ok(DesignerObjective::WelfareWeighted { lambda })
    }

    pub fn label(&self) -> String {
        match self {
            DesignerObjective::DmValue => "dm_value".into(),
            DesignerObjective::WelfareWeighted { lambda } => format!("welfare_weighted({lambda})"),
            DesignerObjective::Custom(c) => c.name.clone(),
        }
    }

    pub fn value(&self, g_dist: &OutsideOptionDistribution, m: f64) -> f64 {
        match self {
            DesignerObjective::DmValue => g_dist.dm_value(m),
            DesignerObjective::WelfareWeighted { lambda } => {
                lambda * g_dist.dm_value(m) + (1.0 - lambda) * g_dist.cdf(m)
            }
            DesignerObjective::Custom(c) => (c.value)(m),
        }
    }

    /// Analytic `u_D'` when available.
    pub fn analytic_derivative(&self, g_dist: &OutsideOptionDistribution, m: f64) -> Option<f64> {
        match self {
            DesignerObjective::DmValue => Some(g_dist.cdf(m)),
            DesignerObjective::WelfareWeighted { lambda } => {
                Some(lambda * g_dist.cdf(m) + (1.0 - lambda) * g_dist.pdf(m))
            }
            DesignerObjective::Custom(c) => c.derivative.as_ref().map(|d| d(m)),
        }
    }

    /// `u_D'`, by central differences when no analytic form is known.
    pub fn derivative(&self, g_dist: &OutsideOptionDistribution, m: f64) -> f64 {
        self.analytic_derivative(g_dist, m).unwrap_or_else(|| {
            let (lo, hi) = ((m - FD_STEP).max(0.0), (m + FD_STEP).min(1.0));
            (self.value(g_dist, hi) - self.value(g_dist, lo)) / (hi - lo)
        })
    }

    /// Nonnegative second differences on a [`CONVEXITY_GRID`]-point grid.
    /// Welfare-weighted objectives are exempt and always pass.
    pub fn is_convex(&self, g_dist: &OutsideOptionDistribution) -> bool {
        if matches!(self, DesignerObjective::WelfareWeighted { .. }) {
            return true;
        }
        let vals: Vec<f64> = linspace(0.0, 1.0, CONVEXITY_GRID)
            .into_iter()
            .map(|m| self.value(g_dist, m))
            .collect();
        let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        vals.windows(3)
            .all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-12 * scale)
    }
}

/// `U_D(y)` by the censorship formula
/// `int_0^s u_D dH + (H(t) - H(s)) u_D(x) + (1 - H(t)) u_D(y)`.
pub fn designer_payoff(objective: &DesignerObjective, family: &MicFamily, y: f64) -> Result<f64> {
    let params = family.mic_from_top_atom(y)?.params;
    censorship_payoff(objective, family, &params)
}

/// The same formula for given parameters.
pub fn censorship_payoff(
    objective: &DesignerObjective,
    family: &MicFamily,
    dc: &DoubleCensorship,
) -> Result<f64> {
    let prior = family.prior();
    let g = family.outside_option();
    let u = |m: f64| objective.value(g, m);
    let revealed = integrate_piecewise(|w| u(w) * prior.pdf(w), 0.0, dc.s, &prior.breakpoints())?;
    Ok(revealed + prior.mass(dc.s, dc.t) * u(dc.x) + (1.0 - prior.cdf(dc.t)) * u(dc.y))
}

/// `U_D(y)` as the expected payoff of the member's segments.
pub fn designer_payoff_via_segments(
    objective: &DesignerObjective,
    family: &MicFamily,
    y: f64,
) -> Result<f64> {
    let g = family.outside_option();
    family
        .mic_from_top_atom(y)?
        .experiment
        .expected_payoff(|m| objective.value(g, m))
}

/// Experimenter payoff `int G dF_y`.
pub fn experimenter_payoff(family: &MicFamily, y: f64) -> Result<f64> {
    let g = family.outside_option();
    family
        .mic_from_top_atom(y)?
        .experiment
        .expected_payoff(|m| g.cdf(m))
}

/// One row of a family sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub y: f64,
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub designer_payoff: f64,
    pub experimenter_payoff: f64,
}

/// Parameters and both payoffs at each top atom in `ys`, evaluated in parallel.
pub fn sweep(
    objective: &DesignerObjective,
    family: &MicFamily,
    ys: &[f64],
) -> Result<Vec<SweepRow>> {
    let g = family.outside_option();
    ys.par_iter()
        .map(|&y| {
            let member = family.mic_from_top_atom(y)?;
            let p = member.params;
            Ok(SweepRow {
                y,
                s: p.s,
                t: p.t,
                x: p.x,
                designer_payoff: censorship_payoff(objective, family, &p)?,
                experimenter_payoff: member.experiment.expected_payoff(|m| g.cdf(m))?,
            })
        })
        .collect()
}

/// Writes sweep rows with header `y,s,t,x,designer_payoff,experimenter_payoff`.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_csv(
        path,
        &["y", "s", "t", "x", "designer_payoff", "experimenter_payoff"],
        rows.iter()
            .map(|r| [r.y, r.s, r.t, r.x, r.designer_payoff, r.experimenter_payoff]),
    )
}

/// Optimal member of the family for an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelegationSolution {
    pub y_opt: f64,
    pub params: DoubleCensorship,
    pub payoff: f64,
    pub full_delegation_payoff: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub binding_at_y_max: bool,
    /// Constraint that ends the feasible range.
    pub binding_constraint: Option<MicCondition>,
    /// True when the optimum lies strictly inside the range.
    pub interior: bool,
    pub objective: String,
    pub assumptions: Option<AssumptionReport>,
}

impl DelegationSolution {
    /// Improvement over the upper-censorship outcome; never negative.
    pub fn gain(&self) -> f64 {
        self.payoff - self.full_delegation_payoff
    }
}

/// Grid scan over the feasible range, golden-section refinement around the
/// best grid point, then comparison with the endpoints. Ties go to the smaller `y`.
pub fn optimize(objective: &DesignerObjective, family: &MicFamily) -> Result<DelegationSolution> {
    let (y_min, y_max) = (family.y_min(), family.y_max());
    let eval = |y: f64| designer_payoff(objective, family, y);
    let full_delegation_payoff = eval(y_min)?;

    let (mut best_y, mut best_v) = (y_min, full_delegation_payoff);
    if y_max > y_min {
        let grid = linspace(y_min, y_max, OPT_GRID);
        let values: Vec<f64> = grid.par_iter().map(|&y| eval(y)).collect::<Result<_>>()?;
        let mut k_best = 0;
        for (k, &v) in values.iter().enumerate() {
            if v > values[k_best] {
                k_best = k;
            }
        }
        let lo = grid[k_best.saturating_sub(1)];
        let hi = grid[(k_best + 1).min(grid.len() - 1)];
        let (y_golden, v_golden) =
            golden_section_max(|y| eval(y).unwrap_or(f64::NEG_INFINITY), lo, hi, OPT_TOL);
        let mut candidates = vec![
            (grid[k_best], values[k_best]),
            (y_golden, v_golden),
            (y_max, values[values.len() - 1]),
        ];
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (y, v) in candidates {
            if v > best_v {
                best_y = y;
                best_v = v;
            }
        }
    }
    let params = family.mic_from_top_atom(best_y)?.params;
    let binding_at_y_max = y_max > y_min && (y_max - best_y).abs() <= BOUNDARY_TOL;
    let interior = best_y > y_min + BOUNDARY_TOL && !binding_at_y_max;
    Ok(DelegationSolution {
        y_opt: best_y,
        params,
        payoff: best_v,
        full_delegation_payoff,
        y_min,
        y_max,
        binding_at_y_max,
        binding_constraint: family.range().binding,
        interior,
        objective: objective.label(),
        assumptions: None,
    })
}

/// Right derivative of `U_D` at `y*`:
/// `(u_D'(y*) - (u_D(y*) - u_D(x*)) / (y* - x*)) (1 - H(x*))`.
pub fn perturbation_derivative(objective: &DesignerObjective, family: &MicFamily) -> f64 {
    let g = family.outside_option();
    let pair = family.pair();
    let chord = (objective.value(g, pair.y) - objective.value(g, pair.x)) / (pair.y - pair.x);
    (objective.derivative(g, pair.y) - chord) * (1.0 - family.prior().cdf(pair.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::PriorDistribution;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn family() -> &'static MicFamily {
        static FAMILY: OnceLock<MicFamily> = OnceLock::new();
        FAMILY.get_or_init(|| {
            MicFamily::new(
                PriorDistribution::uniform(),
                OutsideOptionDistribution::beta(2.0, 2.0).unwrap(),
            )
            .unwrap()
        })
    }

    fn i_g(m: f64) -> f64 {
        m.powi(3) - m.powi(4) / 2.0
    }

    #[test]
    fn closed_form_payoffs() {
        let top = designer_payoff(&DesignerObjective::DmValue, family(), 2.0 / 3.0).unwrap();
        let oracle_top = i_g(1.0 / 6.0) / 3.0 + 2.0 / 3.0 * i_g(2.0 / 3.0);
        assert!((oracle_top - 1035.0 / 7776.0).abs() < 1e-15);
        assert!((top - oracle_top).abs() < 1e-9);
        let bottom = designer_payoff(&DesignerObjective::DmValue, family(), 0.625).unwrap();
        // int_0^{1/4} (w^3 - w^4/2) dw = x^4/4 - x^5/10
        let x: f64 = 0.25;
        let oracle_bottom = x.powi(4) / 4.0 - x.powi(5) / 10.0 + 0.75 * i_g(0.625);
        assert!((bottom - oracle_bottom).abs() < 1e-9);
        assert!((oracle_bottom - 0.126764).abs() < 1e-6);
    }

    #[test]
    fn experimenter_aligned_designer_matches_experimenter_payoff() {
        let obj = DesignerObjective::welfare_weighted(0.0).unwrap();
        let v = designer_payoff(&obj, family(), 0.625).unwrap();
        assert!((v - experimenter_payoff(family(), 0.625).unwrap()).abs() < 1e-12);
        assert!((v - 539.0 / 1024.0).abs() < 1e-9);
    }

    #[test]
    fn optimize_examples() {
        let sol = optimize(&DesignerObjective::DmValue, family()).unwrap();
        assert!((sol.y_opt - 2.0 / 3.0).abs() < 1e-8);
        assert!(sol.binding_at_y_max && !sol.interior);
        assert!(sol.params.s.abs() < 1e-8);
        assert!((sol.params.x - 1.0 / 6.0).abs() < 1e-8 && (sol.params.t - 1.0 / 3.0).abs() < 1e-8);
        assert!(sol.payoff - sol.full_delegation_payoff > 0.006);

        let aligned =
            optimize(&DesignerObjective::welfare_weighted(0.0).unwrap(), family()).unwrap();
        assert_eq!(aligned.y_opt, family().y_min());
        let dm_weight =
            optimize(&DesignerObjective::welfare_weighted(1.0).unwrap(), family()).unwrap();
        assert!((dm_weight.y_opt - sol.y_opt).abs() < 1e-12);
    }

    #[test]
    fn optimize_is_deterministic() {
        let a = optimize(&DesignerObjective::DmValue, family()).unwrap();
        let b = optimize(&DesignerObjective::DmValue, family()).unwrap();
        assert_eq!(a.y_opt.to_bits(), b.y_opt.to_bits());
        let q = DesignerObjective::Custom(CustomObjective::polynomial(vec![0.0, 0.0, 1.0]));
        let a = optimize(&q, family()).unwrap();
        let b = optimize(&q, family()).unwrap();
        assert_eq!(a.y_opt.to_bits(), b.y_opt.to_bits());
        assert!(a.payoff > a.full_delegation_payoff);
    }

    #[test]
    fn perturbation_derivative_values() {
        let d = perturbation_derivative(&DesignerObjective::DmValue, family());
        // (G(5/8) - (I_G(5/8) - I_G(1/4)) / (3/8)) (3/4)
        let g58 = 3.0 * 0.625f64.powi(2) - 2.0 * 0.625f64.powi(3);
        let oracle = (g58 - (i_g(0.625) - i_g(0.25)) / 0.375) * 0.75;
        assert!((oracle - 837.0 / 4096.0).abs() < 1e-15);
        assert!((d - oracle).abs() < 1e-9);
        let zero =
            perturbation_derivative(&DesignerObjective::welfare_weighted(0.0).unwrap(), family());
        assert!(zero.abs() < 1e-9);
        let fd_only =
            DesignerObjective::Custom(CustomObjective::new("dm_value_fd", |m: f64| i_g(m)));
        assert!((perturbation_derivative(&fd_only, family()) - oracle).abs() < 1e-8);
    }

    #[test]
    fn welfare_weighted_derivative_matches_simplification() {
        let fam = family();
        let g = fam.outside_option();
        let (x, y) = (fam.pair().x, fam.pair().y);
        for lambda in [0.0, 0.25, 0.5, 1.0] {
            let d =
                perturbation_derivative(&DesignerObjective::welfare_weighted(lambda).unwrap(), fam);
            let simplified = lambda
                * (g.cdf(y) - (g.dm_value(y) - g.dm_value(x)) / (y - x))
                * (1.0 - fam.prior().cdf(x));
            assert!((d - simplified).abs() < 1e-9, "lambda = {lambda}");
        }
    }

    #[test]
    fn right_difference_quotients_approach_derivative() {
        let fam = family();
        let obj = DesignerObjective::DmValue;
        let d = perturbation_derivative(&obj, fam);
        let base = designer_payoff(&obj, fam, fam.y_min()).unwrap();
        for delta in [1e-2, 1e-3, 1e-4] {
            let q = (designer_payoff(&obj, fam, fam.y_min() + delta).unwrap() - base) / delta;
            assert!(q > 0.0);
            assert!(
                (q - d).abs() <= 10.0 * delta * (1.0 + (1.0 / delta).ln()),
                "delta = {delta}: {q} vs {d}"
            );
        }
    }

    #[test]
    fn convexity_of_objectives() {
        let g = family().outside_option();
        assert!(DesignerObjective::DmValue.is_convex(g));
        assert!(
            DesignerObjective::Custom(CustomObjective::polynomial(vec![0.0, 0.0, 1.0]))
                .is_convex(g)
        );
        assert!(
            !DesignerObjective::Custom(CustomObjective::polynomial(vec![0.0, 1.0, -1.0]))
                .is_convex(g)
        );
        assert!(DesignerObjective::welfare_weighted(1.5).is_err());
    }

    #[test]
    fn objective_spec_serde() {
        let spec: ObjectiveSpec =
            serde_json::from_str(r#"{"kind": "welfare_weighted", "lambda": 0.5}"#).unwrap();
        assert_eq!(spec, ObjectiveSpec::WelfareWeighted { lambda: 0.5 });
        let spec: ObjectiveSpec = serde_json::from_str(r#"{"kind": "dm_value"}"#).unwrap();
        assert_eq!(spec, ObjectiveSpec::DmValue {});
        assert!(
            serde_json::from_str::<ObjectiveSpec>(r#"{"kind": "dm_value", "extra": 1}"#).is_err()
        );
        let poly = DesignerObjective::from_spec(&ObjectiveSpec::Polynomial {
            coefficients: vec![1.0, 2.0, 3.0],
        })
        .unwrap();
        let g = family().outside_option();
        assert!((poly.value(g, 0.5) - 2.75).abs() < 1e-15);
        assert!((poly.derivative(g, 0.5) - 5.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn censorship_formula_matches_segments(u in 0.0f64..=1.0) {
            let fam = family();
            let y = fam.y_min() + u * (fam.y_max() - fam.y_min());
            for obj in [DesignerObjective::DmValue, DesignerObjective::welfare_weighted(0.3).unwrap()] {
                let a = designer_payoff(&obj, fam, y).unwrap();
                let b = designer_payoff_via_segments(&obj, fam, y).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
