//! Brute-force best replies on a grid, IC checks and pooling structure.

use delegated_persuasion::distributions::{OutsideOptionDistribution, PriorDistribution};
use delegated_persuasion::error::Result;
use delegated_persuasion::experiments::Experiment;
use delegated_persuasion::mic::MicFamily;
use delegated_persuasion::oracle::{
    bipooling_structure, discretize_experiment, ic_check_discrete, lp_best_reply, DiscreteInstance,
};

fn main() -> Result<()> {
    let n = 201;
    let g = OutsideOptionDistribution::beta(2.0, 2.0)?;
    let family = MicFamily::new(PriorDistribution::uniform(), g.clone())?;
    let instance = DiscreteInstance::from_prior(family.prior(), n, |m| g.cdf(m))?;

    let reply = lp_best_reply(&instance, &instance.prior_mass)?;
    let analytic = family
        .full_delegation()
        .experiment
        .expected_payoff(|m| g.cdf(m))?;
    println!(
        "LP value {:.8} vs analytic {:.8} ({} pivots)",
        reply.value, analytic, reply.pivots
    );
    let structure = bipooling_structure(&reply.experiment, &instance, Some(g.r0()));
    for iv in &structure.intervals {
        println!(
            "  pooling run [{:.3}, {:.3}]: clusters at {:?}",
            iv.lo, iv.hi, iv.cluster_locations
        );
    }

    let candidates = [
        (
            "full revelation",
            Experiment::full_revelation(family.prior()),
        ),
        (
            "upper censorship",
            family.full_delegation().experiment.clone(),
        ),
        (
            "optimal double censorship",
            family.mic_from_top_atom(family.y_max())?.experiment,
        ),
    ];
    for (name, exp) in &candidates {
        let check = ic_check_discrete(&instance, &discretize_experiment(exp, n).mass)?;
        println!(
            "{name:<26} IC = {:<5} improvement = {:.6}",
            check.is_ic, check.improvement
        );
    }
    Ok(())
}
