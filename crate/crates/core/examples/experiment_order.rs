//! Experiments as distributions of posterior means, ordered by informativeness.

use delegated_persuasion::distributions::PriorDistribution;
use delegated_persuasion::error::Result;
use delegated_persuasion::experiments::{is_mpc, make_double_censorship, Experiment, MPC_TOL};

fn main() -> Result<()> {
    let prior = PriorDistribution::uniform();
    let full = Experiment::full_revelation(&prior);
    let none = Experiment::uninformative(&prior);
    let (dc, censored) = make_double_censorship(&prior, 0.2, 0.5)?;
    println!(
        "double censorship s = {}, t = {}: atoms at x = {:.4}, y = {:.4}",
        dc.s, dc.t, dc.x, dc.y
    );
    println!(
        "  garbles full revelation: {}",
        is_mpc(&censored, &full, MPC_TOL)
    );
    println!(
        "  more informative than no information: {}",
        is_mpc(&none, &censored, MPC_TOL)
    );

    let coarse = Experiment::upper_censorship(&prior, 0.3)?;
    let fine = Experiment::upper_censorship(&prior, 0.6)?;
    println!(
        "upper censorship at 0.3 garbles the one at 0.6: {}",
        is_mpc(&coarse, &fine, MPC_TOL)
    );

    let record = serde_json::to_string(&censored.to_record()).expect("record serializes");
    println!("record: {record}");
    for [m, f, i] in censored.plot_samples(5) {
        println!("  m = {m:.2}  F = {f:.4}  I_F = {i:.4}");
    }
    Ok(())
}
