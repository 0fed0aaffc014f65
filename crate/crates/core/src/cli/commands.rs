//! One function per subcommand. Each returns a serializable report and,
//! given an output directory, writes its JSON and CSV files there.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Model, RunConfig};
use crate::delegation::{
    optimize, perturbation_derivative, sweep, write_sweep_csv, DelegationSolution,
    DesignerObjective, SweepRow,
};
use crate::distributions::{check_assumptions, AssumptionReport, VALIDATION_GRID};
use crate::error::{Error, Result};
use crate::experiments::{Experiment, ExperimentRecord};
use crate::ic_verification::{
    canonical_price_function, implementing_restriction, integral_condition_gap, verify_ic,
    CertificateReport,
};
use crate::mic::{FeasibleRange, MicFamily};
use crate::numeric::linspace;
use crate::oracle::{
    bipooling_structure, discretize_experiment, ic_check_discrete_with, ic_check_with_reply,
    lp_best_reply, scenario_m_shaped, scenario_uninformed_dm, write_plan_csv, DiscreteExperiment,
    DiscreteInstance, IcCheck, ScenarioReport, StructureReport,
};
use crate::persuasion::{solve_full_delegation, FullDelegation, TangencyPair};
use crate::table::write_csv;

/// Points in ICDF plot data.
pub const PLOT_GRID: usize = 401;

/// Smallest grid improvement read as a strict gain rather than LP round-off.
pub const REFUTATION_GAIN: f64 = 1e-6;

/// Named oracle scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    UninformedDm,
    MShaped,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uninformed_dm" => Ok(Scenario::UninformedDm),
            "m_shaped" => Ok(Scenario::MShaped),
            other => Err(Error::Config(format!(
                "unknown scenario {other:?} (expected uninformed_dm or m_shaped)"
            ))),
        }
    }
}

fn write_json<T: Serialize>(dir: Option<&Path>, name: &str, value: &T) -> Result<()> {
    if let Some(dir) = dir {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

/// Model objects plus the assumption report; fails with exit-code-2 errors.
fn checked_model(config: &RunConfig) -> Result<(Model, AssumptionReport)> {
    let model = config.model()?;
    let report = check_assumptions(&model.prior, &model.outside_option);
    if !report.informativeness_ok {
        return Err(Error::Assumption {
            margin: report.margin,
        });
    }
    if !report.s_shape_ok {
        let shape = model.outside_option.s_shape_report(VALIDATION_GRID);
        return Err(Error::NotSShaped(format!(
            "mode r0 = {:.6}, interior = {}, density quasiconcave = {}, second-difference sign changes = {}",
            shape.r0, shape.interior_mode, shape.density_quasiconcave, shape.second_difference_sign_changes
        )));
    }
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDelegationReport {
    pub x_star: f64,
    pub y_star: f64,
    pub atom_mass: f64,
    pub experimenter_payoff: f64,
    pub full_revelation_payoff: f64,
    pub uninformative_payoff: f64,
    /// Sign changes of the threshold equation on the diagnostic grid; 1 means a unique root.
    pub root_sign_changes: usize,
    pub assumptions: AssumptionReport,
}

pub fn full_delegation(config: &RunConfig, out: Option<&Path>) -> Result<FullDelegationReport> {
    let (model, assumptions) = checked_model(config)?;
    let g = &model.outside_option;
    let fd = solve_full_delegation(&model.prior, g)?;
    let payoff = |e: &Experiment| e.expected_payoff(|m| g.cdf(m));
    let report = FullDelegationReport {
        x_star: fd.pair.x,
        y_star: fd.pair.y,
        atom_mass: fd.atom_mass(),
        experimenter_payoff: payoff(&fd.experiment)?,
        full_revelation_payoff: payoff(&Experiment::full_revelation(&model.prior))?,
        uninformative_payoff: payoff(&Experiment::uninformative(&model.prior))?,
        root_sign_changes: fd.sign_changes,
        assumptions,
    };
    write_json(out, "full_delegation.json", &report)?;
    if let Some(dir) = out {
        fd.experiment
            .write_icdf_comparison_csv(&dir.join("icdf_full_delegation.csv"), PLOT_GRID)?;
        fd.experiment
            .write_plot_csv(&dir.join("cdf_full_delegation.csv"), PLOT_GRID)?;
        canonical_price_function(g, fd.pair)?
            .write_csv(&dir.join("certificate_full_delegation.csv"))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub range: FeasibleRange,
    pub objective: String,
    pub rows: Vec<SweepRow>,
}

pub fn mic_sweep(config: &RunConfig, out: Option<&Path>) -> Result<SweepReport> {
    let (model, _) = checked_model(config)?;
    let family = MicFamily::new(model.prior, model.outside_option)?;
    let rows = sweep(
        &model.objective,
        &family,
        &family.y_grid(config.sweep.points),
    )?;
    let report = SweepReport {
        range: family.range(),
        objective: model.objective.label(),
        rows,
    };
    write_json(out, "mic_sweep.json", &report)?;
    if let Some(dir) = out {
        write_sweep_csv(&report.rows, &dir.join("mic_sweep.csv"))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub solution: DelegationSolution,
    pub gain_over_full_delegation: f64,
    pub perturbation_derivative: f64,
    pub implementing_restriction: ExperimentRecord,
    pub certificate: CertificateReport,
    /// `|int p dF - int p dF_restriction|` for the optimum's certificate.
    pub integral_condition_gap: f64,
}

pub fn optimize_cmd(config: &RunConfig, out: Option<&Path>) -> Result<OptimizeReport> {
    let (model, assumptions) = checked_model(config)?;
    let family = MicFamily::new(model.prior.clone(), model.outside_option.clone())?;
    let mut solution = optimize(&model.objective, &family)?;
    solution.assumptions = Some(assumptions);
    let member = family.mic_from_top_atom(solution.y_opt)?;
    let restriction = implementing_restriction(family.prior(), &member.params);
    let g = family.outside_option();
    let p = canonical_price_function(
        g,
        TangencyPair {
            x: member.params.x,
            y: member.params.y,
        },
    )?;
    let report = OptimizeReport {
        gain_over_full_delegation: solution.gain(),
        perturbation_derivative: perturbation_derivative(&model.objective, &family),
        implementing_restriction: restriction.to_record(),
        certificate: verify_ic(g, &member.experiment, &p),
        integral_condition_gap: integral_condition_gap(&p, &member.experiment, &restriction)?,
        solution,
    };
    write_json(out, "optimize.json", &report)?;
    if let Some(dir) = out {
        member
            .experiment
            .write_icdf_comparison_csv(&dir.join("icdf_optimal.csv"), PLOT_GRID)?;
        member
            .experiment
            .write_plot_csv(&dir.join("cdf_optimal.csv"), PLOT_GRID)?;
        p.write_csv(&dir.join("certificate_optimal.csv"))?;
    }
    Ok(report)
}

/// One line of the verification matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    fn new(checks: Vec<CheckResult>) -> Self {
        let all_passed = checks.iter().all(|c| c.passed);
        VerifyReport { checks, all_passed }
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

fn summarize_failures(failures: &[String]) -> String {
    match failures {
        [] => "none".into(),
        [one] => one.clone(),
        [first, rest @ ..] => format!("{first} (+{} more)", rest.len()),
    }
}

/// Runs the full battery, or only a scenario's checks when one is named.
pub fn verify(
    config: &RunConfig,
    scenario: Option<Scenario>,
    out: Option<&Path>,
) -> Result<VerifyReport> {
    let report = match scenario {
        Some(s) => VerifyReport::new(scenario_checks(&run_scenario(config, s)?)),
        None => VerifyReport::new(battery(config)?),
    };
    write_json(out, "verify.json", &report)?;
    if let Some(dir) = out {
        let mut text = String::from("check,passed,detail\n");
        for c in &report.checks {
            text.push_str(&format!(
                "{},{},\"{}\"\n",
                c.name,
                c.passed,
                c.detail.replace('"', "'")
            ));
        }
        std::fs::write(dir.join("verify.csv"), text)?;
    }
    Ok(report)
}

fn scenario_checks(report: &ScenarioReport) -> Vec<CheckResult> {
    // a flat payoff region admits many optimal plans, so structure is reported, not gated
    vec![check(
        &report.name,
        report.passed,
        format!(
            "{}; value {:.6}, {} support points, max {:.6}, {} pooling intervals",
            report.check,
            report.value,
            report.support.len(),
            report.max_support,
            report.structure.intervals.len()
        ),
    )]
}

fn battery(config: &RunConfig) -> Result<Vec<CheckResult>> {
    let (model, assumptions) = checked_model(config)?;
    let mut checks = vec![check(
        "assumptions",
        assumptions.s_shape_ok && assumptions.informativeness_ok,
        format!(
            "margin {:.6e}, r0 {:.6}",
            assumptions.margin, assumptions.r0
        ),
    )];
    let family = MicFamily::new(model.prior.clone(), model.outside_option.clone())?;
    let fd: &FullDelegation = family.full_delegation();
    let g = family.outside_option();
    let r0 = g.r0();
    checks.push(check(
        "full_delegation_unique_root",
        fd.unique_root(),
        format!("{} sign changes", fd.sign_changes),
    ));
    let range = family.range();
    checks.push(check(
        "mic_range_is_interval",
        range.is_interval,
        format!(
            "[{:.9}, {:.9}], binding {:?}",
            range.y_min, range.y_max, range.binding
        ),
    ));

    let ys = family.y_grid(config.sweep.points);
    let tol = config.tolerances.certificate;
    let members: Vec<_> = ys
        .iter()
        .map(|&y| family.mic_from_top_atom(y))
        .collect::<Result<_>>()?;

    let cert_failures: Vec<String> = ys
        .par_iter()
        .zip(&members)
        .filter_map(|(&y, m)| {
            let pair = TangencyPair { x: m.params.x, y };
            match canonical_price_function(g, pair) {
                Ok(p) => {
                    let r = verify_ic(g, &m.experiment, &p);
                    let v = r.max_violations;
                    let worst = v.concavity.max(v.shortfall).max(v.contact);
                    (!r.continuity_ok || worst > tol)
                        .then(|| format!("y = {y:.9}: violation {worst:.3e}"))
                }
                Err(e) => Some(format!("y = {y:.9}: {e}")),
            }
        })
        .collect();
    checks.push(check(
        "certificates",
        cert_failures.is_empty(),
        format!(
            "{} members; failures: {}",
            ys.len(),
            summarize_failures(&cert_failures)
        ),
    ));

    let not_mic: Vec<String> = ys
        .iter()
        .zip(&members)
        .filter(|(_, m)| !family.is_mic(&m.experiment))
        .map(|(y, _)| format!("y = {y:.9}"))
        .collect();
    checks.push(check(
        "members_recognized_as_mic",
        not_mic.is_empty(),
        format!("failures: {}", summarize_failures(&not_mic)),
    ));

    let n = config.oracle.n;
    let ic_tol = config.tolerances.ic_factor / n as f64;
    let objective = &model.objective;
    let instance = DiscreteInstance::from_prior(family.prior(), n, |m| g.cdf(m))?.with_designer(
        linspace(0.0, 1.0, n)
            .into_iter()
            .map(|m| objective.value(g, m))
            .collect(),
    )?;

    let reply = lp_best_reply(&instance, &instance.prior_mass)?;
    let fd_disc = discretize_experiment(&fd.experiment, n);
    let fd_value = fd_disc.expectation(&instance.payoff);
    checks.push(check(
        "oracle_full_delegation_value",
        reply.value >= fd_value - 1e-9 && reply.value <= fd_value + ic_tol,
        format!(
            "LP {:.9} vs discretized upper censorship {:.9}",
            reply.value, fd_value
        ),
    ));
    let fd_ic = ic_check_discrete_with(&instance, &fd_disc.mass, ic_tol)?;
    checks.push(check(
        "oracle_ic_full_delegation",
        fd_ic.is_ic,
        format!(
            "improvement {:.3e} (tolerance {:.3e})",
            fd_ic.improvement, ic_tol
        ),
    ));
    let fr_ic = ic_check_discrete_with(&instance, &instance.prior_mass, ic_tol)?;
    checks.push(check(
        "oracle_refutes_full_revelation",
        fr_ic.improvement > REFUTATION_GAIN,
        format!(
            "improvement {:.6}; {} at tolerance {:.3e}",
            fr_ic.improvement,
            if fr_ic.is_ic {
                "not refuted"
            } else {
                "refuted"
            },
            ic_tol
        ),
    ));

    let discretized: Vec<_> = members
        .iter()
        .map(|m| discretize_experiment(&m.experiment, n))
        .collect();
    let ic_results: Vec<(f64, IcCheck, DiscreteExperiment)> = ys
        .par_iter()
        .zip(&discretized)
        .map(|(&y, d)| {
            ic_check_with_reply(&instance, &d.mass, ic_tol).map(|(c, r)| (y, c, r.experiment))
        })
        .collect::<Result<_>>()?;
    let ic_failures: Vec<String> = ic_results
        .iter()
        .filter(|(_, c, _)| !c.is_ic)
        .map(|(y, c, _)| format!("y = {y:.9}: improvement {:.3e}", c.improvement))
        .collect();
    checks.push(check(
        "oracle_ic_members",
        ic_failures.is_empty(),
        format!(
            "{} members; failures: {}",
            ys.len(),
            summarize_failures(&ic_failures)
        ),
    ));

    let mut structure_failures: Vec<String> = ys
        .iter()
        .zip(&discretized)
        .filter(|(_, d)| !bipooling_structure(d, &instance, Some(r0)).ok())
        .map(|(y, _)| format!("member y = {y:.9}"))
        .collect();
    for (y, _, best) in &ic_results {
        if !bipooling_structure(best, &instance, Some(r0)).ok() {
            structure_failures.push(format!("best reply to member y = {y:.9}"));
        }
    }
    if !bipooling_structure(&reply.experiment, &instance, Some(r0)).ok() {
        structure_failures.push("best reply to prior".into());
    }
    checks.push(check(
        "bipooling_structure",
        structure_failures.is_empty(),
        format!("failures: {}", summarize_failures(&structure_failures)),
    ));

    let derivative = perturbation_derivative(objective, &family);
    let aligned =
        matches!(objective, DesignerObjective::WelfareWeighted { lambda } if *lambda == 0.0);
    checks.push(check(
        "perturbation_derivative_sign",
        if aligned {
            derivative.abs() <= 1e-9
        } else {
            derivative > 0.0
        },
        format!("{derivative:.9}"),
    ));
    let solution = optimize(objective, &family)?;
    checks.push(check(
        "optimum_not_below_full_delegation",
        solution.payoff >= solution.full_delegation_payoff,
        format!("gain {:.9} at y = {:.9}", solution.gain(), solution.y_opt),
    ));
    Ok(checks)
}

fn run_scenario(config: &RunConfig, scenario: Scenario) -> Result<ScenarioReport> {
    let model = config.model()?;
    let instance = DiscreteInstance::from_prior(&model.prior, config.oracle.n, |m| m)?;
    match scenario {
        Scenario::UninformedDm => scenario_uninformed_dm(&instance, config.scenarios.uninformed_r0),
        Scenario::MShaped => {
            let [lo, hi] = config.scenarios.m_shaped_peaks;
            scenario_m_shaped(&instance, lo, hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub value: f64,
    pub designer_value: Option<f64>,
    pub pivots: usize,
    /// Analytic upper-censorship payoff, when the model assumptions hold.
    pub full_delegation_payoff: Option<f64>,
    pub support: Vec<f64>,
    pub structure: StructureReport,
    pub scenario: Option<ScenarioReport>,
}

/// Best reply to the discretized prior, or a named scenario.
pub fn oracle(
    config: &RunConfig,
    scenario: Option<Scenario>,
    out: Option<&Path>,
) -> Result<OracleReport> {
    let model = config.model()?;
    let n = config.oracle.n;
    if let Some(s) = scenario {
        let report = run_scenario(config, s)?;
        let oracle_report = OracleReport {
            n,
            value: report.value,
            designer_value: None,
            pivots: 0,
            full_delegation_payoff: None,
            support: report.support.clone(),
            structure: report.structure.clone(),
            scenario: Some(report),
        };
        write_json(out, "oracle.json", &oracle_report)?;
        return Ok(oracle_report);
    }
    let g = &model.outside_option;
    let objective = &model.objective;
    let instance = DiscreteInstance::from_prior(&model.prior, n, |m| g.cdf(m))?.with_designer(
        linspace(0.0, 1.0, n)
            .into_iter()
            .map(|m| objective.value(g, m))
            .collect(),
    )?;
    let reply = lp_best_reply(&instance, &instance.prior_mass)?;
    let full_delegation_payoff = match solve_full_delegation(&model.prior, g) {
        Ok(fd) => Some(fd.experiment.expected_payoff(|m| g.cdf(m))?),
        Err(_) => None,
    };
    let report = OracleReport {
        n,
        value: reply.value,
        designer_value: reply.designer_value,
        pivots: reply.pivots,
        full_delegation_payoff,
        support: reply
            .experiment
            .support()
            .into_iter()
            .map(|k| instance.grid[k])
            .collect(),
        structure: bipooling_structure(&reply.experiment, &instance, Some(g.r0())),
        scenario: None,
    };
    write_json(out, "oracle.json", &report)?;
    if let Some(dir) = out {
        instance.write_csv(&dir.join("oracle_instance.csv"))?;
        write_plan_csv(&reply.plan, &instance.grid, &dir.join("oracle_plan.csv"))?;
        let rows = (0..n).map(|k| {
            [
                instance.grid[k],
                instance.prior_mass[k],
                reply.experiment.mass[k],
            ]
        });
        write_csv(
            &dir.join("oracle_posterior.csv"),
            &["w", "prior_mass", "posterior_mass"],
            rows,
        )?;
    }
    Ok(report)
}

/// Certificate summaries for the family on `points` top atoms.
pub fn certificate_suite(
    family: &MicFamily,
    points: usize,
) -> Result<Vec<(f64, CertificateReport)>> {
    family
        .y_grid(points)
        .into_par_iter()
        .map(|y| {
            let m = family.mic_from_top_atom(y)?;
            let p = canonical_price_function(
                family.outside_option(),
                TangencyPair { x: m.params.x, y },
            )?;
            Ok((y, verify_ic(family.outside_option(), &m.experiment, &p)))
        })
        .collect()
}
