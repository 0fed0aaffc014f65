//! Price-function certificates of incentive compatibility, written as CSV.

use delegated_persuasion::delegation::DesignerObjective;
use delegated_persuasion::distributions::{OutsideOptionDistribution, PriorDistribution};
use delegated_persuasion::error::Result;
use delegated_persuasion::ic_verification::{
    canonical_price_function, point_mass_certificate, verify_ic, virtual_value, VIRTUAL_VALUE_EPS,
};
use delegated_persuasion::mic::MicFamily;
use delegated_persuasion::numeric::linspace;
use delegated_persuasion::persuasion::TangencyPair;

fn main() -> Result<()> {
    let g = OutsideOptionDistribution::beta(2.0, 2.0)?;
    let family = MicFamily::new(PriorDistribution::uniform(), g.clone())?;
    let out = std::env::temp_dir().join("delegated_persuasion_certificates");
    std::fs::create_dir_all(&out)?;

    for y in family.y_grid(5) {
        let member = family.mic_from_top_atom(y)?;
        let pair = TangencyPair {
            x: member.params.x,
            y,
        };
        let p = canonical_price_function(&g, pair)?;
        let report = verify_ic(&g, &member.experiment, &p);
        println!(
            "y = {y:.6}: ok = {}, worst violation = {:.2e}",
            report.ok(),
            report
                .max_violations
                .concavity
                .max(report.max_violations.shortfall)
        );
    }

    let top = family.mic_from_top_atom(family.y_max())?;
    let p_star = canonical_price_function(&g, family.pair())?;
    p_star.write_csv(&out.join("certificate_full_delegation.csv"))?;
    let point = point_mass_certificate(&g, 0.5)?;
    point.write_csv(&out.join("certificate_point_mass.csv"))?;

    let objective = DesignerObjective::DmValue;
    let vv = virtual_value(
        &g,
        |m| objective.value(&g, m),
        &top.experiment,
        &p_star,
        VIRTUAL_VALUE_EPS,
        &linspace(0.0, 1.0, 201),
    )?;
    let gap = vv
        .values
        .iter()
        .zip(&vv.envelope)
        .map(|(v, e)| e - v)
        .fold(f64::INFINITY, f64::min);
    println!("smallest envelope-minus-virtual-value gap: {gap:.3e}");
    println!("CSV files in {}", out.display());
    Ok(())
}
