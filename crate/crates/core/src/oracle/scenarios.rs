//! Oracle scenarios with outside-option payoffs that are not S-shaped.

use serde::{Deserialize, Serialize};

use super::structure::{bipooling_structure, StructureReport};
use super::{lp_best_reply, DiscreteInstance};
use crate::error::{Error, Result};
use crate::numeric::linspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub mu: f64,
    pub value: f64,
    pub support: Vec<f64>,
    pub max_support: f64,
    pub structure: StructureReport,
    /// Human-readable statement of what was checked.
    pub check: String,
    pub passed: bool,
}

/// The decision maker acts iff the posterior mean is at least `r0`.
///
/// With `mu > r0` the uninformative experiment already wins with probability
/// one. Otherwise the best reply never places posterior mass above the first
/// grid point at or above `r0`.
pub fn scenario_uninformed_dm(instance: &DiscreteInstance, r0: f64) -> Result<ScenarioReport> {
    if !(0.0..=1.0).contains(&r0) {
        return Err(Error::Domain(format!("step location {r0} outside [0, 1]")));
    }
    let step = instance.step();
    let payoff = instance
        .grid
        .iter()
        .map(|&w| if w >= r0 - 1e-12 { 1.0 } else { 0.0 })
        .collect();
    let inst = DiscreteInstance {
        payoff,
        designer: None,
        ..instance.clone()
    };
    let reply = lp_best_reply(&inst, &inst.prior_mass)?;
    let support: Vec<f64> = reply
        .experiment
        .support()
        .into_iter()
        .map(|k| inst.grid[k])
        .collect();
    let max_support = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu = inst.prior_mean();
    let (check, passed) = if mu > r0 {
        ("value = 1".to_string(), (reply.value - 1.0).abs() <= 1e-9)
    } else {
        let bound = r0 + step;
        (
            format!("max support <= {bound}"),
            max_support <= bound + 1e-12,
        )
    };
    Ok(ScenarioReport {
        name: format!("uninformed_dm(r0 = {r0})"),
        mu,
        value: reply.value,
        structure: bipooling_structure(&reply.experiment, &inst, Some(r0)),
        support,
        max_support,
        check,
        passed,
    })
}

/// Increasing payoff with peaks of its concave part at `lo` and `hi`:
/// `c m - (m - lo)^2 (m - hi)^2`, rescaled to map `[0, 1]` onto `[0, 1]`.
///
/// The linear term is constant across mean-preserving contractions, so the
/// persuasion optimum is driven by the quartic alone.
pub fn m_shaped_payoff(lo: f64, hi: f64) -> impl Fn(f64) -> f64 + Clone {
    let quartic = move |m: f64| (m - lo).powi(2) * (m - hi).powi(2);
    let slope = linspace(0.0, 1.0, 4097)
        .into_iter()
        .map(|m| 2.0 * (m - lo) * (m - hi) * (2.0 * m - lo - hi))
        .fold(0.0f64, f64::max)
        + 0.1;
    let raw = move |m: f64| slope * m - quartic(m);
    let (v0, v1) = (raw(0.0), raw(1.0));
    move |m: f64| (raw(m) - v0) / (v1 - v0)
}

/// Persuasion under an M-shaped payoff whose peaks straddle the prior mean:
/// the best reply is binary, supported on the two peaks.
pub fn scenario_m_shaped(instance: &DiscreteInstance, lo: f64, hi: f64) -> Result<ScenarioReport> {
    let u = m_shaped_payoff(lo, hi);
    let inst = DiscreteInstance {
        payoff: instance.grid.iter().map(|&m| u(m)).collect(),
        designer: None,
        ..instance.clone()
    };
    let reply = lp_best_reply(&inst, &inst.prior_mass)?;
    let support: Vec<f64> = reply
        .experiment
        .support()
        .into_iter()
        .map(|k| inst.grid[k])
        .collect();
    let max_support = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = inst.step();
    let at_peaks =
        support.len() == 2 && (support[0] - lo).abs() <= step && (support[1] - hi).abs() <= step;
    Ok(ScenarioReport {
        name: format!("m_shaped(peaks = {lo}, {hi})"),
        mu: inst.prior_mean(),
        value: reply.value,
        structure: bipooling_structure(&reply.experiment, &inst, None),
        support,
        max_support,
        check: "two support points at the peaks".into(),
        passed: at_peaks,
    })
}
