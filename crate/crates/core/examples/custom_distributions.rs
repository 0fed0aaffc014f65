//! Non-uniform priors, tabulated outside options and custom designer objectives.

use delegated_persuasion::delegation::{optimize, CustomObjective, DesignerObjective};
use delegated_persuasion::distributions::{
    check_assumptions, Distribution, OutsideOptionDistribution, PriorDistribution,
};
use delegated_persuasion::error::Result;
use delegated_persuasion::mic::MicFamily;
use delegated_persuasion::numeric::linspace;

fn main() -> Result<()> {
    // density 2w
    let prior = PriorDistribution::new(Distribution::piecewise_polynomial(
        vec![0.0, 1.0],
        vec![vec![0.0, 2.0]],
    )?)?;
    // Beta(3, 3) CDF sampled on 101 states
    let reference = Distribution::beta(3.0, 3.0)?;
    let states = linspace(0.0, 1.0, 101);
    let table: Vec<f64> = states.iter().map(|&w| reference.cdf(w)).collect();
    let g = OutsideOptionDistribution::new(Distribution::tabulated(states, table)?)?;

    let report = check_assumptions(&prior, &g);
    println!(
        "prior mean {:.4}, r0 {:.4}, margin {:.4}",
        report.mu, report.r0, report.margin
    );
    let family = MicFamily::new(prior, g)?;
    let range = family.range();
    println!("top atoms in [{:.6}, {:.6}]", range.y_min, range.y_max);

    let objectives = [
        DesignerObjective::DmValue,
        DesignerObjective::Custom(CustomObjective::polynomial(vec![0.0, 0.0, 1.0])),
        DesignerObjective::Custom(
            CustomObjective::new("sqrt", f64::sqrt).with_derivative(|m| 0.5 / m.sqrt()),
        ),
    ];
    for objective in &objectives {
        let sol = optimize(objective, &family)?;
        println!(
            "{:<12} y_opt = {:.6}, gain over full delegation = {:.3e}",
            objective.label(),
            sol.y_opt,
            sol.gain()
        );
    }
    Ok(())
}
