//! Designer-optimal restriction for several objectives.

use delegated_persuasion::delegation::{optimize, perturbation_derivative, DesignerObjective};
use delegated_persuasion::distributions::{OutsideOptionDistribution, PriorDistribution};
use delegated_persuasion::error::Result;
use delegated_persuasion::ic_verification::implementing_restriction;
use delegated_persuasion::mic::MicFamily;

fn main() -> Result<()> {
    let family = MicFamily::new(
        PriorDistribution::uniform(),
        OutsideOptionDistribution::beta(2.0, 2.0)?,
    )?;
    let objectives = [
        DesignerObjective::DmValue,
        DesignerObjective::welfare_weighted(0.0)?,
        DesignerObjective::welfare_weighted(0.5)?,
        DesignerObjective::welfare_weighted(1.0)?,
    ];
    for objective in &objectives {
        let sol = optimize(objective, &family)?;
        println!(
            "{:<24} y_opt = {:.8}  payoff = {:.8}  gain = {:.8}  slope at y* = {:+.6}{}",
            objective.label(),
            sol.y_opt,
            sol.payoff,
            sol.gain(),
            perturbation_derivative(objective, &family),
            if sol.binding_at_y_max {
                "  (range end)"
            } else {
                ""
            }
        );
    }

    let sol = optimize(&DesignerObjective::DmValue, &family)?;
    let restriction = implementing_restriction(family.prior(), &sol.params);
    println!("implementing restriction:");
    for seg in restriction.segments() {
        println!("  {seg:?}");
    }
    Ok(())
}
