//! Experiments as distributions of posterior means.
//!
//! An [`Experiment`] is a finite list of segments: atoms, and intervals on
//! which the distribution coincides with the prior. Every experiment built
//! here is a mean-preserving contraction (MPC) of its reference prior, and
//! the MPC order is checked through integrated CDFs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, PriorDistribution};
use crate::error::{Error, Result};
use crate::numeric::{integrate_piecewise, linspace};
use crate::table::write_csv;

/// Default tolerance for MPC comparisons.
pub const MPC_TOL: f64 = 1e-9;
/// Size of the uniform grid used by [`is_mpc`] on top of the breakpoints.
pub const MPC_GRID: usize = 1024;

const MERGE_TOL: f64 = 1e-12;
const ZERO_MASS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Atom {
        location: f64,
        mass: f64,
    },
    /// Coincides with the prior on `[a, b]`, carrying mass `H(b) - H(a)`.
    FollowsPrior {
        a: f64,
        b: f64,
    },
}

impl Segment {
    fn position(&self) -> f64 {
        match *self {
            Segment::Atom { location, .. } => location,
            Segment::FollowsPrior { a, .. } => a,
        }
    }
}

/// Thresholds `(s, t)` and atoms `(x, y)` of a double-censorship experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleCensorship {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl DoubleCensorship {
    /// Computes the atoms from the thresholds.
    pub fn from_thresholds(prior: &PriorDistribution, s: f64, t: f64) -> Result<Self> {
        if !(0.0 <= s && s <= t && t <= 1.0) {
            return Err(Error::Domain(format!(
                "double censorship needs 0 <= s <= t <= 1, got s = {s}, t = {t}"
            )));
        }
        let x = prior.conditional_mean(s, t)?;
        let y = prior.conditional_mean(t, 1.0)?;
        Ok(DoubleCensorship { s, t, x, y })
    }

    /// Ordering `s <= x <= t <= y` and conditional-mean consistency within `tol`.
    pub fn is_consistent(&self, prior: &PriorDistribution, tol: f64) -> bool {
        let ordered = 0.0 <= self.s
            && self.s <= self.x + tol
            && self.x <= self.t + tol
            && self.t <= self.y + tol
            && self.y <= 1.0;
        if !ordered {
            return false;
        }
        let x = prior.conditional_mean(self.s, self.t.max(self.s));
        let y = prior.conditional_mean(self.t.min(1.0), 1.0);
        matches!((x, y), (Ok(x), Ok(y)) if (x - self.x).abs() <= tol && (y - self.y).abs() <= tol)
    }

    pub fn is_upper_censorship(&self) -> bool {
        self.t - self.s <= MERGE_TOL
    }
}

/// A state interval pooled into a single atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingRegion {
    pub lo: f64,
    pub hi: f64,
    pub location: f64,
    pub mass: f64,
}

/// A distribution of posterior means over a reference prior, in canonical segment form.
#[derive(Debug, Clone)]
pub struct Experiment {
    segments: Vec<Segment>,
    prior: PriorDistribution,
}

/// Serializable form of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub segments: Vec<Segment>,
    pub prior: DistributionSpec,
}

impl Experiment {
    /// Canonicalizes and validates total mass and mean.
    ///
    /// Canonical form: segments sorted by position, atoms at the same location
    /// merged, contiguous prior intervals joined, zero-mass atoms and empty
    /// intervals dropped.
    pub fn new(prior: PriorDistribution, segments: Vec<Segment>) -> Result<Self> {
        let mut segs: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            match seg {
                Segment::Atom { location, mass } => {
                    if !(0.0..=1.0).contains(&location) || mass < 0.0 || !mass.is_finite() {
                        return Err(Error::Domain(format!("invalid atom ({location}, {mass})")));
                    }
                    if mass > ZERO_MASS {
                        segs.push(seg);
                    }
                }
                Segment::FollowsPrior { a, b } => {
                    if !(0.0 <= a && a <= b && b <= 1.0) {
                        return Err(Error::Domain(format!("invalid prior interval [{a}, {b}]")));
                    }
                    if b > a {
                        segs.push(seg);
                    }
                }
            }
        }
        segs.sort_by(|p, q| p.position().total_cmp(&q.position()));
        let mut canonical: Vec<Segment> = Vec::with_capacity(segs.len());
        for seg in segs {
            if let (
                Some(Segment::Atom {
                    location: l0,
                    mass: m0,
                }),
                Segment::Atom { location, mass },
            ) = (canonical.last_mut(), seg)
            {
                if (location - *l0).abs() <= MERGE_TOL {
                    *l0 = (*l0 * *m0 + location * mass) / (*m0 + mass);
                    *m0 += mass;
                    continue;
                }
            }
            if let (Some(Segment::FollowsPrior { b: b0, .. }), Segment::FollowsPrior { a, b }) =
                (canonical.last_mut(), seg)
            {
                if (a - *b0).abs() <= MERGE_TOL {
                    *b0 = b.max(*b0);
                    continue;
                }
            }
            canonical.push(seg);
        }
        let intervals: Vec<(f64, f64)> = canonical
            .iter()
            .filter_map(|s| match *s {
                Segment::FollowsPrior { a, b } => Some((a, b)),
                _ => None,
            })
            .collect();
        if intervals.windows(2).any(|w| w[1].0 < w[0].1 - MERGE_TOL) {
            return Err(Error::Domain("prior-following intervals overlap".into()));
        }
        let exp = Experiment {
            segments: canonical,
            prior,
        };
        let mass = exp.total_mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("total mass {mass} differs from 1")));
        }
        let mean = exp.mean();
        let mu = exp.prior.mean();
        if (mean - mu).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "experiment mean {mean} differs from prior mean {mu}"
            )));
        }
        Ok(exp)
    }

    pub fn full_revelation(prior: &PriorDistribution) -> Self {
        Experiment {
            segments: vec![Segment::FollowsPrior { a: 0.0, b: 1.0 }],
            prior: prior.clone(),
        }
    }

    /// The degenerate experiment `delta_mu`.
    pub fn uninformative(prior: &PriorDistribution) -> Self {
        Experiment {
            segments: vec![Segment::Atom {
                location: prior.mean(),
                mass: 1.0,
            }],
            prior: prior.clone(),
        }
    }

    /// Reveals states below `x` and pools `[x, 1]` into its conditional mean.
    pub fn upper_censorship(prior: &PriorDistribution, x: f64) -> Result<Self> {
        make_double_censorship(prior, x, x).map(|(_, e)| e)
    }

    pub fn from_record(record: &ExperimentRecord) -> Result<Self> {
        let prior = PriorDistribution::from_spec(&record.prior)?;
        Experiment::new(prior, record.segments.clone())
    }

    pub fn to_record(&self) -> ExperimentRecord {
        ExperimentRecord {
            segments: self.segments.clone(),
            prior: self.prior.spec().clone(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn prior(&self) -> &PriorDistribution {
        &self.prior
    }

    pub fn total_mass(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Atom { mass, .. } => mass,
                Segment::FollowsPrior { a, b } => self.prior.mass(a, b),
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Atom { location, mass } => location * mass,
                Segment::FollowsPrior { a, b } => self.prior.partial_moment(a, b),
            })
            .sum()
    }

    /// CDF of posterior means.
    pub fn cdf(&self, m: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Atom { location, mass } => {
                    if location <= m {
                        mass
                    } else {
                        0.0
                    }
                }
                Segment::FollowsPrior { a, b } => {
                    if m <= a {
                        0.0
                    } else {
                        self.prior.mass(a, m.min(b))
                    }
                }
            })
            .sum::<f64>()
            .min(1.0)
    }

    /// Integrated CDF `I_F(m) = int_0^m F`, evaluated piece by piece.
    pub fn icdf(&self, m: f64) -> f64 {
        let m = m.clamp(0.0, 1.0);
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Atom { location, mass } => mass * (m - location).max(0.0),
                Segment::FollowsPrior { a, b } => {
                    if m <= a {
                        return 0.0;
                    }
                    let top = m.min(b);
                    let ha = self.prior.cdf(a);
                    let inner = self.prior.integrated_cdf(top)
                        - self.prior.integrated_cdf(a)
                        - ha * (top - a);
                    inner + (self.prior.cdf(b) - ha) * (m - b).max(0.0)
                }
            })
            .sum()
    }

    /// `(m, F(m), I_F(m))` on `points` equally spaced states.
    pub fn plot_samples(&self, points: usize) -> Vec<[f64; 3]> {
        linspace(0.0, 1.0, points)
            .into_iter()
            .map(|m| [m, self.cdf(m), self.icdf(m)])
            .collect()
    }

    /// Writes [`Experiment::plot_samples`] as CSV with header `m,F,I_F`.
    pub fn write_plot_csv(&self, path: &Path, points: usize) -> Result<()> {
        write_csv(path, &["m", "F", "I_F"], self.plot_samples(points))
    }

    /// Writes `(m, I_H, I_delta_mu, I_F)`: the ICDF next to those of full
    /// revelation and of the uninformative experiment.
    pub fn write_icdf_comparison_csv(&self, path: &Path, points: usize) -> Result<()> {
        let full = Experiment::full_revelation(&self.prior);
        let none = Experiment::uninformative(&self.prior);
        let rows = linspace(0.0, 1.0, points)
            .into_iter()
            .map(|m| [m, full.icdf(m), none.icdf(m), self.icdf(m)]);
        write_csv(path, &["m", "I_H", "I_delta_mu", "I_F"], rows)
    }

    /// Atom locations and interval endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            match *s {
                Segment::Atom { location, .. } => pts.push(location),
                Segment::FollowsPrior { a, b } => {
                    pts.push(a);
                    pts.push(b);
                }
            }
        }
        pts
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments.iter().filter_map(|s| match *s {
            Segment::Atom { location, mass } => Some((location, mass)),
            _ => None,
        })
    }

    pub fn prior_intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments.iter().filter_map(|s| match *s {
            Segment::FollowsPrior { a, b } => Some((a, b)),
            _ => None,
        })
    }

    /// `sum u(atom) mass + sum int_a^b u dH`.
    pub fn expected_payoff<U: Fn(f64) -> f64>(&self, u: U) -> Result<f64> {
        let breaks = self.prior.breakpoints();
        let mut total = 0.0;
        for s in &self.segments {
            total += match *s {
                Segment::Atom { location, mass } => u(location) * mass,
                Segment::FollowsPrior { a, b } => {
                    integrate_piecewise(|w| u(w) * self.prior.pdf(w), a, b, &breaks)?
                }
            };
        }
        Ok(total)
    }

    /// State intervals pooled into each atom, assuming the experiment is a
    /// monotone partition of the states (true for every censorship experiment).
    ///
    /// Atoms are matched in order to the gaps between prior-following
    /// intervals; returns `None` if masses or conditional means do not line up.
    pub fn pooling_regions(&self) -> Option<Vec<PoolingRegion>> {
        let mut gaps = Vec::new();
        let mut cursor = 0.0;
        for (a, b) in self.prior_intervals() {
            if a > cursor + MERGE_TOL {
                gaps.push((cursor, a));
            }
            cursor = cursor.max(b);
        }
        if cursor < 1.0 - MERGE_TOL {
            gaps.push((cursor, 1.0));
        }
        let atoms: Vec<(f64, f64)> = self.atoms().collect();
        let mut regions = Vec::with_capacity(atoms.len());
        let mut gap_iter = gaps.into_iter();
        let mut current = gap_iter.next();
        let mut lo = current.map(|g| g.0).unwrap_or(0.0);
        for (location, mass) in atoms {
            let (g_lo, g_hi) = current?;
            if lo < g_lo {
                lo = g_lo;
            }
            let target = self.prior.cdf(lo) + mass;
            let gap_top = self.prior.cdf(g_hi);
            if target > gap_top + 1e-9 {
                return None;
            }
            let hi = if gap_top - target <= 1e-9 {
                g_hi
            } else {
                self.prior.quantile(target).clamp(lo, g_hi)
            };
            let cm = self.prior.conditional_mean(lo, hi).ok()?;
            if (cm - location).abs() > 1e-6 {
                return None;
            }
            regions.push(PoolingRegion {
                lo,
                hi,
                location,
                mass,
            });
            lo = hi;
            if hi >= g_hi - MERGE_TOL {
                current = gap_iter.next();
                if let Some(g) = current {
                    lo = g.0;
                }
            }
        }
        if current.is_some() {
            return None;
        }
        Some(regions)
    }
}

/// `F` is a mean-preserving contraction of `fbar`: `I_F <= I_fbar + tol` on the
/// union of both breakpoint sets and a uniform grid, with means within `tol`.
pub fn is_mpc(f: &Experiment, fbar: &Experiment, tol: f64) -> bool {
    if (f.mean() - fbar.mean()).abs() > tol {
        return false;
    }
    let mut pts = linspace(0.0, 1.0, MPC_GRID);
    pts.extend(f.breakpoints());
    pts.extend(fbar.breakpoints());
    pts.iter().all(|&m| f.icdf(m) <= fbar.icdf(m) + tol)
}

/// Double censorship with thresholds `(s, t)`: reveal `[0, s)`, pool `[s, t]`
/// into `x` and `[t, 1]` into `y`.
pub fn make_double_censorship(
    prior: &PriorDistribution,
    s: f64,
    t: f64,
) -> Result<(DoubleCensorship, Experiment)> {
    let dc = DoubleCensorship::from_thresholds(prior, s, t)?;
    let exp = double_censorship_experiment(prior, &dc);
    Ok((dc, exp))
}

/// Experiment of a given parameter tuple (no consistency recomputation).
pub fn double_censorship_experiment(
    prior: &PriorDistribution,
    dc: &DoubleCensorship,
) -> Experiment {
    let mut segments = Vec::with_capacity(3);
    if dc.s > 0.0 {
        segments.push(Segment::FollowsPrior { a: 0.0, b: dc.s });
    }
    let middle = prior.mass(dc.s, dc.t);
    if middle > ZERO_MASS && !dc.is_upper_censorship() {
        segments.push(Segment::Atom {
            location: dc.x,
            mass: middle,
        });
    }
    // an upper censorship reveals up to t itself
    if dc.is_upper_censorship() && dc.t > dc.s {
        segments.push(Segment::FollowsPrior { a: dc.s, b: dc.t });
    }
    let top = 1.0 - prior.cdf(dc.t);
    if top > ZERO_MASS {
        segments.push(Segment::Atom {
            location: dc.y,
            mass: top,
        });
    }
    canonical_unchecked(prior, segments)
}

pub(crate) fn canonical_unchecked(prior: &PriorDistribution, segments: Vec<Segment>) -> Experiment {
    match Experiment::new(prior.clone(), segments.clone()) {
        Ok(e) => e,
        // only reachable through accumulated rounding; keep the segments as given
        Err(_) => Experiment {
            segments,
            prior: prior.clone(),
        },
    }
}
