//! The one-parameter family of maximal incentive-compatible experiments.
//!
//! Each member is a double censorship indexed by its top atom `y`: the pooled
//! middle atom `x` is the tangency partner of `y`, the top pool is `[t, 1]`
//! with mean `y`, and the middle pool `[s, t]` has mean `x`.

use serde::{Deserialize, Serialize};

use crate::distributions::{OutsideOptionDistribution, PriorDistribution};
use crate::error::{Error, MicCondition, Result};
use crate::experiments::{double_censorship_experiment, DoubleCensorship, Experiment, Segment};
use crate::numeric::{bisect_boundary, linspace};
use crate::persuasion::{
    rho_unchecked, solve_full_delegation, solve_x_given_y, FullDelegation, TangencyPair,
};

/// Argument tolerance of the `y_max` bisection.
pub const RANGE_XTOL: f64 = 1e-12;
/// Upper end of the `y_max` search bracket.
pub const Y_UPPER: f64 = 1.0 - 1e-9;
/// Points in the feasibility scan that checks the range is an interval.
pub const RANGE_SCAN: usize = 256;
/// Tolerance of [`MicFamily::is_mic`].
pub const MIC_TOL: f64 = 1e-8;

// below this gap the middle pool degenerates to an upper censorship
const COLLAPSE_TOL: f64 = 1e-10;
// below this excess the middle pool starts at the bottom of the support
const FLOOR_TOL: f64 = 1e-12;

/// Feasible top atoms and the constraint that ends the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRange {
    pub y_min: f64,
    pub y_max: f64,
    /// First violated condition just above `y_max`; `None` if the range reaches [`Y_UPPER`].
    pub binding: Option<MicCondition>,
    /// False if the scan found a feasible point above `y_max` or an infeasible one below.
    pub is_interval: bool,
}

/// A member of the family.
#[derive(Debug, Clone)]
pub struct MicMember {
    pub params: DoubleCensorship,
    pub experiment: Experiment,
}

/// The family over a fixed `(prior, G)`.
#[derive(Debug, Clone)]
pub struct MicFamily {
    prior: PriorDistribution,
    g_dist: OutsideOptionDistribution,
    full: FullDelegation,
    range: FeasibleRange,
}

impl MicFamily {
    /// Solves full delegation and locates the feasible range.
    pub fn new(prior: PriorDistribution, g_dist: OutsideOptionDistribution) -> Result<Self> {
        let full = solve_full_delegation(&prior, &g_dist)?;
        let mut family = MicFamily {
            prior,
            g_dist,
            full,
            range: FeasibleRange {
                y_min: 0.0,
                y_max: 0.0,
                binding: None,
                is_interval: true,
            },
        };
        family.range = family.feasible_y_range();
        Ok(family)
    }

    pub fn prior(&self) -> &PriorDistribution {
        &self.prior
    }

    pub fn outside_option(&self) -> &OutsideOptionDistribution {
        &self.g_dist
    }

    pub fn full_delegation(&self) -> &FullDelegation {
        &self.full
    }

    pub fn pair(&self) -> TangencyPair {
        self.full.pair
    }

    pub fn range(&self) -> FeasibleRange {
        self.range
    }

    pub fn y_min(&self) -> f64 {
        self.range.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.range.y_max
    }

    /// Builds the member with top atom `y`, without checking `y <= y_max`.
    pub fn mic_from_top_atom(&self, y: f64) -> Result<MicMember> {
        let fail = |condition| Err(Error::MicInfeasible { y, condition });
        let x_star = self.full.pair.x;
        let y_star = self.full.pair.y;
        if !(y >= y_star - COLLAPSE_TOL && y < 1.0) {
            return fail(MicCondition::TopAtomRange);
        }
        if y <= y_star {
            let params = DoubleCensorship {
                s: x_star,
                t: x_star,
                x: x_star,
                y: y_star,
            };
            let experiment = self.full.experiment.clone();
            return Ok(MicMember { params, experiment });
        }
        let x = match solve_x_given_y(&self.g_dist, y) {
            Ok(x) if x > 0.0 => x,
            _ => return fail(MicCondition::XPositive),
        };
        if x > x_star + COLLAPSE_TOL {
            return fail(MicCondition::XBelowFullDelegation);
        }
        let t = self.prior.inverse_upper_conditional_mean(y)?;
        let s = if x >= t - COLLAPSE_TOL {
            t
        } else {
            let floor_mean = self.prior.conditional_mean(0.0, t)?;
            if floor_mean - x > FLOOR_TOL {
                return fail(MicCondition::SNonNegative);
            }
            if floor_mean >= x {
                0.0
            } else {
                match self.prior.inverse_interval_conditional_mean(t, x) {
                    Ok(s) => s,
                    Err(_) => return fail(MicCondition::SNonNegative),
                }
            }
        };
        if !(s <= x_star + COLLAPSE_TOL && x_star <= t + COLLAPSE_TOL) {
            return fail(MicCondition::XBelowFullDelegation);
        }
        if x.is_nan() || x >= y {
            return fail(MicCondition::XPositive);
        }
        let params = DoubleCensorship { s, t, x, y };
        let experiment = double_censorship_experiment(&self.prior, &params);
        Ok(MicMember { params, experiment })
    }

    /// `[y*, sup of feasible y]` by bisection on feasibility, plus a scan
    /// confirming the feasible set is an interval.
    pub fn feasible_y_range(&self) -> FeasibleRange {
        let y_min = self.full.pair.y;
        let feasible = |y: f64| self.mic_from_top_atom(y).is_ok();
        let y_max = bisect_boundary(y_min, Y_UPPER, RANGE_XTOL, feasible);
        let binding = if y_max >= Y_UPPER {
            None
        } else {
            let probe = (y_max + 2.0 * RANGE_XTOL).min(Y_UPPER);
            match self.mic_from_top_atom(probe) {
                Err(Error::MicInfeasible { condition, .. }) => Some(condition),
                _ => None,
            }
        };
        let is_interval = linspace(y_min, Y_UPPER, RANGE_SCAN)
            .into_iter()
            .all(|y| feasible(y) == (y <= y_max));
        FeasibleRange {
            y_min,
            y_max,
            binding,
            is_interval,
        }
    }

    /// `n` equally spaced top atoms covering the feasible range.
    pub fn y_grid(&self, n: usize) -> Vec<f64> {
        linspace(self.range.y_min, self.range.y_max, n)
    }

    /// Recognizes a canonical double censorship satisfying the tangency,
    /// threshold and consistency conditions of the family.
    pub fn is_mic(&self, exp: &Experiment) -> bool {
        let Some(dc) = self.parse_double_censorship(exp) else {
            return false;
        };
        let r0 = self.g_dist.r0();
        let x_star = self.full.pair.x;
        let ordered = 0.0 < dc.x && dc.x < dc.y && dc.y < 1.0;
        let banded = dc.x <= r0 + MIC_TOL && dc.y >= r0 - MIC_TOL;
        let tangent = rho_unchecked(&self.g_dist, dc.x, dc.y).abs() <= MIC_TOL;
        let straddles = dc.s <= x_star + MIC_TOL && x_star <= dc.t + MIC_TOL;
        ordered && banded && tangent && straddles && dc.is_consistent(&self.prior, MIC_TOL)
    }

    /// Reads `(s, t, x, y)` off segments of the form
    /// `[FollowsPrior(0, s)?, Atom(x)?, Atom(y)]`.
    pub fn parse_double_censorship(&self, exp: &Experiment) -> Option<DoubleCensorship> {
        let segs = exp.segments();
        let (s, rest) = match segs.first()? {
            Segment::FollowsPrior { a, b } if *a == 0.0 => (*b, &segs[1..]),
            Segment::FollowsPrior { .. } => return None,
            _ => (0.0, segs),
        };
        match *rest {
            [Segment::Atom { location: y, .. }] => Some(DoubleCensorship { s, t: s, x: s, y }),
            [Segment::Atom { location: x, mass }, Segment::Atom { location: y, .. }] => {
                let t = self.prior.quantile((self.prior.cdf(s) + mass).min(1.0));
                Some(DoubleCensorship { s, t, x, y })
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::experiments::is_mpc;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn uniform_family() -> &'static MicFamily {
        static FAMILY: OnceLock<MicFamily> = OnceLock::new();
        FAMILY.get_or_init(|| {
            MicFamily::new(
                PriorDistribution::uniform(),
                OutsideOptionDistribution::beta(2.0, 2.0).unwrap(),
            )
            .unwrap()
        })
    }

    fn linear_family() -> MicFamily {
        let prior = PriorDistribution::new(Distribution::beta(2.0, 1.0).unwrap()).unwrap();
        MicFamily::new(prior, OutsideOptionDistribution::beta(2.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn closed_form_members() {
        let fam = uniform_family();
        let top = fam.mic_from_top_atom(2.0 / 3.0).unwrap().params;
        assert!(
            top.s.abs() < 1e-9
                && (top.t - 1.0 / 3.0).abs() < 1e-9
                && (top.x - 1.0 / 6.0).abs() < 1e-9
        );
        let mid = fam.mic_from_top_atom(0.65).unwrap().params;
        assert!(
            (mid.s - 0.1).abs() < 1e-9 && (mid.t - 0.3).abs() < 1e-9 && (mid.x - 0.2).abs() < 1e-9
        );
        let bottom = fam.mic_from_top_atom(0.625).unwrap().params;
        for v in [bottom.s, bottom.t, bottom.x] {
            assert!((v - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn range_for_uniform_beta22() {
        let r = uniform_family().range();
        assert!((r.y_min - 0.625).abs() < 1e-9);
        assert!((r.y_max - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.binding, Some(MicCondition::SNonNegative));
        assert!(r.is_interval);
        let err = uniform_family().mic_from_top_atom(0.7).unwrap_err();
        assert_eq!(
            err,
            Error::MicInfeasible {
                y: 0.7,
                condition: MicCondition::SNonNegative
            }
        );
        assert!(matches!(
            uniform_family().mic_from_top_atom(0.6),
            Err(Error::MicInfeasible {
                condition: MicCondition::TopAtomRange,
                ..
            })
        ));
    }

    #[test]
    fn range_for_linear_prior_against_dense_scan() {
        let fam = linear_family();
        let r = fam.range();
        let ys = linspace(r.y_min, Y_UPPER, 10_000);
        let last_feasible = ys
            .iter()
            .copied()
            .filter(|&y| fam.mic_from_top_atom(y).is_ok())
            .fold(f64::NAN, f64::max);
        let step = ys[1] - ys[0];
        assert!(r.y_max >= last_feasible && r.y_max - last_feasible <= step);
        assert!(r.is_interval);
        assert!(r.binding.is_some());
    }

    #[test]
    fn recognizes_family_members_only() {
        let fam = uniform_family();
        assert!(fam.is_mic(&fam.full_delegation().experiment));
        for y in [0.63, 0.65, 2.0 / 3.0] {
            assert!(
                fam.is_mic(&fam.mic_from_top_atom(y).unwrap().experiment),
                "y = {y}"
            );
        }
        assert!(!fam.is_mic(&Experiment::uninformative(fam.prior())));
        assert!(!fam.is_mic(&Experiment::full_revelation(fam.prior())));
        // a double censorship off the tangency set
        let (_, off) = crate::experiments::make_double_censorship(fam.prior(), 0.1, 0.35).unwrap();
        assert!(!fam.is_mic(&off));
    }

    #[test]
    fn linear_prior_members_are_consistent() {
        let fam = linear_family();
        for y in fam.y_grid(9) {
            let m = fam.mic_from_top_atom(y).unwrap();
            assert!(m.params.is_consistent(fam.prior(), 1e-9));
            assert!(fam.is_mic(&m.experiment), "y = {y}");
        }
    }

    fn ordered_pair(a: f64, b: f64) -> (f64, f64) {
        let fam = uniform_family();
        let span = fam.y_max() - fam.y_min();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (fam.y_min() + lo * span, fam.y_min() + hi * span)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn members_are_ordered_by_top_atom(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!((a - b).abs() > 1e-3);
            let fam = uniform_family();
            let (y_lo, y_hi) = ordered_pair(a, b);
            let lo = fam.mic_from_top_atom(y_lo).unwrap().params;
            let hi = fam.mic_from_top_atom(y_hi).unwrap().params;
            // a smaller top atom has a larger middle atom and a nested middle pool
            prop_assert!(lo.x > hi.x);
            prop_assert!(hi.s <= lo.s && lo.t <= hi.t);
            prop_assert!(hi.s < lo.s || lo.t < hi.t);
            prop_assert!(hi.t > lo.t);
        }

        #[test]
        fn interior_members_are_incomparable(a in 0.01f64..0.99, b in 0.01f64..0.99) {
            prop_assume!((a - b).abs() > 1e-3);
            let fam = uniform_family();
            let (y_lo, y_hi) = ordered_pair(a, b);
            let f_lo = fam.mic_from_top_atom(y_lo).unwrap().experiment;
            let f_hi = fam.mic_from_top_atom(y_hi).unwrap().experiment;
            prop_assert!(!is_mpc(&f_lo, &f_hi, 1e-9));
            prop_assert!(!is_mpc(&f_hi, &f_lo, 1e-9));
        }
    }
}
