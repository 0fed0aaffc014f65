//! Unrestricted persuasion: the tangency condition between the pooled top
//! atom and the revealed region, and the upper-censorship best reply to the prior.

use serde::{Deserialize, Serialize};

use crate::distributions::{informativeness_margin, OutsideOptionDistribution, PriorDistribution};
use crate::error::{Error, Result};
use crate::experiments::Experiment;
use crate::numeric::{bisect_boundary, bisect_root, linspace, ROOT_XTOL};

/// Bracket offset for the full-delegation search.
pub const BRACKET_EPS: f64 = 1e-9;
/// `rho` values below this are treated as zero when locating the smallest root.
pub const FLAT_TOL: f64 = 1e-13;
/// Points in the diagnostic scan for additional roots.
pub const DIAGNOSTIC_GRID: usize = 512;

const BAND_TOL: f64 = 1e-12;

/// A pair `x <= r0 <= y` whose chord from `G(x)` is tangent to `G` at `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyPair {
    pub x: f64,
    pub y: f64,
}

impl TangencyPair {
    pub fn residual(&self, g_dist: &OutsideOptionDistribution) -> f64 {
        rho_unchecked(g_dist, self.x, self.y)
    }
}

/// `rho(x, y) = G(x) + g(y)(y - x) - G(y)`, defined on `0 <= x <= r0 <= y <= 1`.
pub fn rho(g_dist: &OutsideOptionDistribution, x: f64, y: f64) -> Result<f64> {
    let r0 = g_dist.r0();
    if !(x >= -BAND_TOL && x <= r0 + BAND_TOL && y >= r0 - BAND_TOL && y <= 1.0 + BAND_TOL) {
        return Err(Error::Domain(format!(
            "rho needs 0 <= x <= r0 <= y <= 1 with r0 = {r0}, got x = {x}, y = {y}"
        )));
    }
    Ok(rho_unchecked(g_dist, x, y))
}

/// The same formula without the band check.
pub fn rho_unchecked(g_dist: &OutsideOptionDistribution, x: f64, y: f64) -> f64 {
    g_dist.cdf(x) + g_dist.pdf(y) * (y - x) - g_dist.cdf(y)
}

/// The `x` in `[0, r0]` paired with a top atom `y >= r0`.
///
/// `x -> rho(x, y)` crosses zero once, from above; `Error::Infeasible` carries
/// `rho(0, y)` when it is already negative at `x = 0`.
pub fn solve_x_given_y(g_dist: &OutsideOptionDistribution, y: f64) -> Result<f64> {
    let r0 = g_dist.r0();
    if !(y >= r0 - BAND_TOL && y <= 1.0) {
        return Err(Error::Domain(format!(
            "top atom {y} outside [r0, 1] with r0 = {r0}"
        )));
    }
    if y <= r0 {
        return Ok(r0);
    }
    let f = |x: f64| rho_unchecked(g_dist, x, y);
    let at_zero = f(0.0);
    if at_zero < 0.0 {
        return Err(Error::Infeasible {
            what: format!("rho(0, {y}) < 0: no tangency partner in [0, r0]"),
            boundary: at_zero,
        });
    }
    if f(r0) >= 0.0 {
        return Ok(r0);
    }
    bisect_root(f, 0.0, r0, ROOT_XTOL)
}

/// Best reply to the prior when every experiment is allowed.
#[derive(Debug, Clone)]
pub struct FullDelegation {
    pub pair: TangencyPair,
    pub experiment: Experiment,
    /// Sign changes of `x -> rho(x, E[w | w >= x])` seen on the diagnostic grid.
    pub sign_changes: usize,
}

impl FullDelegation {
    pub fn unique_root(&self) -> bool {
        self.sign_changes == 1
    }

    /// Mass of the pooled top atom, `1 - H(x*)`.
    pub fn atom_mass(&self) -> f64 {
        1.0 - self.experiment.prior().cdf(self.pair.x)
    }
}

/// Upper censorship at the threshold where `rho(x, E[w | w >= x])` vanishes.
///
/// Fails with `Error::Assumption` when `g(mu) mu - G(mu) <= 0`, in which case
/// the uninformative experiment is the unique best reply.
pub fn solve_full_delegation(
    prior: &PriorDistribution,
    g_dist: &OutsideOptionDistribution,
) -> Result<FullDelegation> {
    let margin = informativeness_margin(g_dist, prior.mean());
    if margin <= 0.0 {
        return Err(Error::Assumption { margin });
    }
    let r0 = g_dist.r0();
    if r0 <= 2.0 * BRACKET_EPS || r0 >= 1.0 {
        return Err(Error::Config(format!(
            "density mode r0 = {r0} is not interior"
        )));
    }
    let phi = |x: f64| -> f64 {
        match prior.conditional_mean(x, 1.0) {
            Ok(y) => rho_unchecked(g_dist, x, y),
            Err(_) => f64::NAN,
        }
    };
    let lo = BRACKET_EPS;
    let hi = r0 - BRACKET_EPS;
    let (f_lo, f_hi) = (phi(lo), phi(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Infeasible {
            what: format!(
                "full-delegation bracket [{lo}, {hi}] has values ({f_lo:.3e}, {f_hi:.3e})"
            ),
            boundary: f_lo,
        });
    }
    // smallest x at which rho stops being positive
    let x = bisect_boundary(lo, hi, ROOT_XTOL * 1e-2, |x| phi(x) > FLAT_TOL);
    let y = prior.conditional_mean(x, 1.0)?;
    let sign_changes = count_sign_changes(&phi, lo, hi);
    let experiment = Experiment::upper_censorship(prior, x)?;
    Ok(FullDelegation {
        pair: TangencyPair { x, y },
        experiment,
        sign_changes,
    })
}

fn count_sign_changes<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> usize {
    let values: Vec<f64> = linspace(lo, hi, DIAGNOSTIC_GRID)
        .into_iter()
        .map(f)
        .filter(|v| v.abs() > FLAT_TOL)
        .collect();
    values
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use proptest::prelude::*;

    fn beta22() -> OutsideOptionDistribution {
        OutsideOptionDistribution::beta(2.0, 2.0).unwrap()
    }

    fn linear_prior() -> PriorDistribution {
        PriorDistribution::new(Distribution::beta(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn rho_examples() {
        let g = beta22();
        assert!(rho(&g, 0.25, 0.625).unwrap().abs() < 1e-12);
        assert_eq!(rho(&g, 0.5, 0.5).unwrap(), 0.0);
        // closed form: G(1/4) + g(7/10)(7/10 - 1/4) - G(7/10)
        let oracle = 5.0 / 32.0 + 6.0 * 0.7 * 0.3 * 0.45 - (3.0 * 0.49 - 2.0 * 0.343);
        let v = rho(&g, 0.25, 0.7).unwrap();
        assert!(v < 0.0);
        assert!((v - oracle).abs() < 1e-14);
        assert!(matches!(rho(&g, 0.6, 0.7), Err(Error::Domain(_))));
        assert!(matches!(rho(&g, 0.2, 0.4), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_x_examples() {
        let g = beta22();
        assert!((solve_x_given_y(&g, 2.0 / 3.0).unwrap() - 1.0 / 6.0).abs() < 1e-11);
        assert!((solve_x_given_y(&g, 0.65).unwrap() - 0.2).abs() < 1e-11);
        assert_eq!(solve_x_given_y(&g, 0.5).unwrap(), 0.5);
        // x(y) = 3/2 - 2y reaches 0 at y = 3/4
        match solve_x_given_y(&g, 0.8).unwrap_err() {
            Error::Infeasible { boundary, .. } => assert!(boundary < 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(solve_x_given_y(&g, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn full_delegation_uniform_beta22() {
        let fd = solve_full_delegation(&PriorDistribution::uniform(), &beta22()).unwrap();
        assert!((fd.pair.x - 0.25).abs() < 1e-10);
        assert!((fd.pair.y - 0.625).abs() < 1e-10);
        assert!((fd.atom_mass() - 0.75).abs() < 1e-10);
        assert!(fd.unique_root());
    }

    #[test]
    fn full_delegation_linear_prior_against_scan() {
        let prior = linear_prior();
        let g = beta22();
        let fd = solve_full_delegation(&prior, &g).unwrap();
        // closed-form conditional mean for h(w) = 2w
        let cm = |t: f64| (2.0 / 3.0) * (1.0 - t.powi(3)) / (1.0 - t * t);
        let big_g = |m: f64| 3.0 * m * m - 2.0 * m.powi(3);
        let small_g = |m: f64| 6.0 * m * (1.0 - m);
        let phi = |x: f64| big_g(x) + small_g(cm(x)) * (cm(x) - x) - big_g(cm(x));
        let xs: Vec<f64> = (1..100_000).map(|k| 0.5 * k as f64 / 100_000.0).collect();
        let roots: Vec<f64> = xs
            .windows(2)
            .filter(|w| phi(w[0]) * phi(w[1]) <= 0.0)
            .map(|w| w[0])
            .collect();
        assert_eq!(roots.len(), 1);
        assert!((fd.pair.x - roots[0]).abs() < 1e-5);
        assert!(fd.pair.residual(&g).abs() < 1e-9);
        assert!((cm(fd.pair.x) - fd.pair.y).abs() < 1e-9);
        assert!(0.0 < fd.pair.x && fd.pair.x < g.r0() && g.r0() < fd.pair.y && fd.pair.y < 1.0);
    }

    #[test]
    fn full_delegation_requires_informativeness() {
        let prior = PriorDistribution::new(Distribution::beta(20.0, 1.0).unwrap()).unwrap();
        match solve_full_delegation(&prior, &beta22()).unwrap_err() {
            Error::Assumption { margin } => assert!(margin < 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_delegation_beats_benchmarks() {
        let g = beta22();
        for prior in [PriorDistribution::uniform(), linear_prior()] {
            let fd = solve_full_delegation(&prior, &g).unwrap();
            let star = fd.experiment.expected_payoff(|m| g.cdf(m)).unwrap();
            let full = Experiment::full_revelation(&prior)
                .expected_payoff(|m| g.cdf(m))
                .unwrap();
            let none = g.cdf(prior.mean());
            assert!(star > full.max(none));
        }
    }

    #[test]
    fn rho_y_derivative_has_density_slope_sign() {
        let g = beta22();
        let h = 1e-5;
        for k in 1..=20 {
            let y = 0.5 + 0.5 * k as f64 / 21.0;
            let x = 0.1;
            let fd = (rho_unchecked(&g, x, y + h) - rho_unchecked(&g, x, y - h)) / (2.0 * h);
            // the g(y) terms cancel, leaving g'(y)(y - x)
            assert!((fd - g.pdf_derivative(y) * (y - x)).abs() < 1e-6, "y = {y}");
            assert!(fd < 0.0 && g.pdf_derivative(y) < 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn tangency_pairs_are_nested(a in 0.5f64..0.75, b in 0.5f64..0.75) {
            prop_assume!((a - b).abs() > 1e-6);
            let g = beta22();
            let (y, y2) = if a < b { (a, b) } else { (b, a) };
            let x = solve_x_given_y(&g, y).unwrap();
            let x2 = solve_x_given_y(&g, y2).unwrap();
            prop_assert!(x2 <= x);
            prop_assert!(x2 <= x && y <= y2);
        }

        #[test]
        fn partner_decreases_in_top_atom(y in 0.51f64..0.74) {
            let g = beta22();
            let d = 1e-4;
            prop_assert!(solve_x_given_y(&g, y + d).unwrap() < solve_x_given_y(&g, y).unwrap());
        }
    }
}
