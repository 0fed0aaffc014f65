use delegated_persuasion::distributions::{OutsideOptionDistribution, PriorDistribution};
use delegated_persuasion::experiments::{make_double_censorship, Experiment};
use delegated_persuasion::mic::MicFamily;
use delegated_persuasion::oracle::{discretize_experiment, lp_best_reply, DiscreteInstance};

fn setup(n: usize) -> (MicFamily, DiscreteInstance) {
    let g = OutsideOptionDistribution::beta(2.0, 2.0).unwrap();
    let family = MicFamily::new(PriorDistribution::uniform(), g.clone()).unwrap();
    let instance = DiscreteInstance::from_prior(family.prior(), n, |m| g.cdf(m)).unwrap();
    (family, instance)
}

/// Grid ICDF computed directly from masses, independent of the transport plan.
fn grid_icdf(grid: &[f64], mass: &[f64]) -> Vec<f64> {
    let mut cdf = 0.0;
    let mut out = vec![0.0];
    for k in 1..grid.len() {
        cdf += mass[k - 1];
        out.push(out[k - 1] + cdf * (grid[k] - grid[k - 1]));
    }
    out
}

#[test]
fn prior_value_is_sandwiched_by_censorship_payoffs() {
    let n = 201;
    let (family, instance) = setup(n);
    let lp = lp_best_reply(&instance, &instance.prior_mass)
        .unwrap()
        .value;
    let prior = family.prior();
    let mut candidates = vec![
        Experiment::full_revelation(prior),
        Experiment::uninformative(prior),
        family.full_delegation().experiment.clone(),
    ];
    for x in [0.1, 0.2, 0.3, 0.4] {
        candidates.push(Experiment::upper_censorship(prior, x).unwrap());
    }
    for (s, t) in [(0.1, 0.3), (0.2, 0.5), (0.0, 0.4)] {
        candidates.push(make_double_censorship(prior, s, t).unwrap().1);
    }
    candidates.extend(
        family
            .y_grid(5)
            .into_iter()
            .map(|y| family.mic_from_top_atom(y).unwrap().experiment),
    );
    for exp in &candidates {
        let v = discretize_experiment(exp, n).expectation(&instance.payoff);
        assert!(lp >= v - 1e-9, "LP {lp} below candidate {v}");
    }
    let best = discretize_experiment(&family.full_delegation().experiment, n)
        .expectation(&instance.payoff);
    assert!(lp <= best + 5.0 / n as f64);
}

#[test]
fn refinement_moves_the_value_by_less_than_the_tolerance() {
    let coarse = setup(101).1;
    let fine = setup(201).1;
    let a = lp_best_reply(&coarse, &coarse.prior_mass).unwrap().value;
    let b = lp_best_reply(&fine, &fine.prior_mass).unwrap().value;
    assert!((a - b).abs() <= 5.0 / 101.0, "{a} vs {b}");
    assert!((b - 539.0 / 1024.0).abs() < 1e-3);
}

#[test]
fn replies_are_contractions_of_their_restrictions() {
    let n = 101;
    let (family, instance) = setup(n);
    let mut restrictions = vec![instance.prior_mass.clone()];
    for y in family.y_grid(4) {
        let member = family.mic_from_top_atom(y).unwrap();
        restrictions.push(discretize_experiment(&member.experiment, n).mass);
    }
    for restriction in &restrictions {
        let reply = lp_best_reply(&instance, restriction).unwrap();
        let (row_err, martingale_err) = reply.plan.residuals(&instance.grid, restriction);
        assert!(row_err <= 1e-8 && martingale_err <= 1e-8);

        let ir = grid_icdf(&instance.grid, restriction);
        let ic = grid_icdf(&instance.grid, &reply.experiment.mass);
        assert!(ir.iter().zip(&ic).all(|(r, c)| *c <= r + 1e-10));
        let mean_r: f64 = instance
            .grid
            .iter()
            .zip(restriction)
            .map(|(w, m)| w * m)
            .sum();
        assert!((reply.experiment.mean() - mean_r).abs() < 1e-10);
        let candidate: f64 = restriction
            .iter()
            .zip(&instance.payoff)
            .map(|(m, u)| m * u)
            .sum();
        assert!(reply.value >= candidate - 1e-12);
    }
}
