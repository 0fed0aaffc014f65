//! Outside options outside the S-shaped class, solved by the grid oracle.

use delegated_persuasion::distributions::PriorDistribution;
use delegated_persuasion::error::Result;
use delegated_persuasion::oracle::{scenario_m_shaped, scenario_uninformed_dm, DiscreteInstance};

fn main() -> Result<()> {
    let instance = DiscreteInstance::from_prior(&PriorDistribution::uniform(), 201, |m| m)?;
    for r0 in [0.4, 0.7, 0.9] {
        let report = scenario_uninformed_dm(&instance, r0)?;
        println!(
            "step at {r0}: value {:.6}, largest posterior {:.3}, {} ({})",
            report.value,
            report.max_support,
            report.check,
            if report.passed { "pass" } else { "FAIL" }
        );
    }
    let report = scenario_m_shaped(&instance, 0.3, 0.7)?;
    println!(
        "M-shaped payoff: support {:?}, value {:.6} ({})",
        report.support,
        report.value,
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}
