//! The one-parameter family of incentive-compatible double censorships.

use delegated_persuasion::delegation::{sweep, DesignerObjective};
use delegated_persuasion::distributions::{OutsideOptionDistribution, PriorDistribution};
use delegated_persuasion::error::Result;
use delegated_persuasion::experiments::is_mpc;
use delegated_persuasion::mic::MicFamily;

fn main() -> Result<()> {
    let family = MicFamily::new(
        PriorDistribution::uniform(),
        OutsideOptionDistribution::beta(2.0, 2.0)?,
    )?;
    let range = family.range();
    println!(
        "feasible top atoms: [{:.6}, {:.6}], ends at {:?}",
        range.y_min, range.y_max, range.binding
    );

    let rows = sweep(&DesignerObjective::DmValue, &family, &family.y_grid(9))?;
    println!(
        "{:>9} {:>9} {:>9} {:>9} {:>11} {:>11}",
        "y", "s", "t", "x", "designer", "experimenter"
    );
    for r in &rows {
        println!(
            "{:9.6} {:9.6} {:9.6} {:9.6} {:11.8} {:11.8}",
            r.y, r.s, r.t, r.x, r.designer_payoff, r.experimenter_payoff
        );
    }

    // distinct members are not ranked by informativeness
    let a = family.mic_from_top_atom(rows[2].y)?.experiment;
    let b = family.mic_from_top_atom(rows[6].y)?.experiment;
    println!(
        "is_mpc(a, b) = {}, is_mpc(b, a) = {}",
        is_mpc(&a, &b, 1e-9),
        is_mpc(&b, &a, 1e-9)
    );
    Ok(())
}
