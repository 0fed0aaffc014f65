//! Upper censorship chosen by an unrestricted experimenter.

use delegated_persuasion::distributions::{
    check_assumptions, OutsideOptionDistribution, PriorDistribution,
};
use delegated_persuasion::error::Result;
use delegated_persuasion::experiments::Experiment;
use delegated_persuasion::persuasion::{rho, solve_full_delegation};

fn main() -> Result<()> {
    let prior = PriorDistribution::uniform();
    let g = OutsideOptionDistribution::beta(2.0, 2.0)?;
    let report = check_assumptions(&prior, &g);
    println!(
        "r0 = {:.4}, informativeness margin = {:.4}",
        report.r0, report.margin
    );

    let fd = solve_full_delegation(&prior, &g)?;
    println!(
        "threshold x* = {:.10}, atom y* = {:.10}, atom mass = {:.4}",
        fd.pair.x,
        fd.pair.y,
        fd.atom_mass()
    );
    println!("tangency residual = {:.2e}", rho(&g, fd.pair.x, fd.pair.y)?);

    let payoff = |e: &Experiment| e.expected_payoff(|m| g.cdf(m));
    println!("experimenter payoff:");
    println!("  upper censorship  {:.8}", payoff(&fd.experiment)?);
    println!(
        "  full revelation   {:.8}",
        payoff(&Experiment::full_revelation(&prior))?
    );
    println!(
        "  no information    {:.8}",
        payoff(&Experiment::uninformative(&prior))?
    );
    Ok(())
}
