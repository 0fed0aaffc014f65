//! Price-function certificates of incentive compatibility.
//!
//! A price function is convex, continuous, dominates `G`, and touches `G` on
//! the support of the experiment it certifies. All checks are grid based:
//! [`CHECK_GRID`] points plus every breakpoint.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{OutsideOptionDistribution, PriorDistribution};
use crate::error::{Error, Result};
use crate::experiments::{is_mpc, DoubleCensorship, Experiment, Segment, MPC_TOL};
use crate::numeric::{golden_section_max, linspace};
use crate::persuasion::{rho_unchecked, TangencyPair};
use crate::table::write_csv;

pub const CHECK_GRID: usize = 2048;
pub const CERT_TOL: f64 = 1e-8;
/// Interior points checked on each prior-following interval for support contact.
pub const CONTACT_POINTS: usize = 64;
/// Default weight on the certificate slack in virtual values.
pub const VIRTUAL_VALUE_EPS: f64 = 1e-3;

const JUMP_TOL: f64 = 1e-10;
const DOMINATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricePiece {
    /// `p = G` on `[a, b]`.
    FollowsG { a: f64, b: f64 },
    /// `p(m) = value + slope (m - a)` on `[a, b]`.
    Affine {
        a: f64,
        b: f64,
        value: f64,
        slope: f64,
    },
}

impl PricePiece {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            PricePiece::FollowsG { a, b } | PricePiece::Affine { a, b, .. } => (a, b),
        }
    }
}

/// A piecewise price function over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PriceFunction {
    pieces: Vec<PricePiece>,
    g_dist: OutsideOptionDistribution,
}

/// Outcome of [`PriceFunction::check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceCheck {
    pub max_jump: f64,
    /// Largest decrease of consecutive secant slopes.
    pub max_concavity: f64,
    /// Largest `G - p`.
    pub max_shortfall: f64,
}

impl PriceCheck {
    pub fn ok(&self) -> bool {
        self.max_jump <= JUMP_TOL
            && self.max_concavity <= CERT_TOL
            && self.max_shortfall <= DOMINATION_TOL
    }
}

impl PriceFunction {
    /// Pieces must tile `[0, 1]` in order.
    pub fn new(g_dist: &OutsideOptionDistribution, pieces: Vec<PricePiece>) -> Result<Self> {
        let tiled = !pieces.is_empty()
            && pieces.first().map(|p| p.bounds().0) == Some(0.0)
            && pieces.last().map(|p| p.bounds().1) == Some(1.0)
            && pieces
                .windows(2)
                .all(|w| w[0].bounds().1 == w[1].bounds().0)
            && pieces.iter().all(|p| p.bounds().0 <= p.bounds().1);
        if !tiled {
            return Err(Error::Certificate("price pieces do not tile [0, 1]".into()));
        }
        Ok(PriceFunction {
            pieces,
            g_dist: g_dist.clone(),
        })
    }

    pub fn pieces(&self) -> &[PricePiece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.pieces.iter().map(|p| p.bounds().0).collect();
        pts.push(1.0);
        pts
    }

    fn eval_piece(&self, piece: &PricePiece, m: f64) -> f64 {
        match *piece {
            PricePiece::FollowsG { .. } => self.g_dist.cdf(m),
            PricePiece::Affine {
                a, value, slope, ..
            } => value + slope * (m - a),
        }
    }

    pub fn value(&self, m: f64) -> f64 {
        let m = m.clamp(0.0, 1.0);
        let piece = self
            .pieces
            .iter()
            .find(|p| m <= p.bounds().1)
            .unwrap_or_else(|| self.pieces.last().expect("nonempty"));
        self.eval_piece(piece, m)
    }

    /// `p(m) - G(m)`.
    pub fn slack(&self, m: f64) -> f64 {
        self.value(m) - self.g_dist.cdf(m)
    }

    /// Sorted grid of [`CHECK_GRID`] points and all breakpoints.
    fn check_points(&self) -> Vec<f64> {
        let mut pts = linspace(0.0, 1.0, CHECK_GRID);
        pts.extend(self.breakpoints());
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }

    /// Continuity, convexity and domination of `G`.
    pub fn check(&self) -> PriceCheck {
        let mut max_jump: f64 = 0.0;
        for w in self.pieces.windows(2) {
            let b = w[0].bounds().1;
            max_jump = max_jump.max((self.eval_piece(&w[0], b) - self.eval_piece(&w[1], b)).abs());
        }
        let pts = self.check_points();
        let values: Vec<f64> = pts.iter().map(|&m| self.value(m)).collect();
        let slopes: Vec<f64> = (1..pts.len())
            .map(|k| (values[k] - values[k - 1]) / (pts[k] - pts[k - 1]))
            .collect();
        let max_concavity = slopes
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0f64, f64::max);
        let max_shortfall = pts
            .iter()
            .zip(&values)
            .map(|(&m, &p)| self.g_dist.cdf(m) - p)
            .fold(0.0f64, f64::max);
        PriceCheck {
            max_jump,
            max_concavity,
            max_shortfall,
        }
    }

    /// `(m, G(m), p(m))` on the check grid.
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        self.check_points()
            .into_iter()
            .map(|m| (m, self.g_dist.cdf(m), self.value(m)))
            .collect()
    }

    /// Writes [`PriceFunction::samples`] as CSV with header `m,G,p`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["m", "G", "p"],
            self.samples().into_iter().map(|(m, g, p)| [m, g, p]),
        )
    }

    /// `int p dF`.
    pub fn integrate_against(&self, exp: &Experiment) -> Result<f64> {
        exp.expected_payoff(|m| self.value(m))
    }
}

/// `p = G` on `[0, x]`, then the line through `(x, G(x))` with slope `g(y)`.
pub fn canonical_price_function(
    g_dist: &OutsideOptionDistribution,
    pair: TangencyPair,
) -> Result<PriceFunction> {
    let residual = rho_unchecked(g_dist, pair.x, pair.y);
    if residual.abs() > CERT_TOL {
        return Err(Error::Certificate(format!(
            "tangency residual {residual:.3e} at (x, y) = ({}, {})",
            pair.x, pair.y
        )));
    }
    let p = PriceFunction::new(
        g_dist,
        vec![
            PricePiece::FollowsG { a: 0.0, b: pair.x },
            PricePiece::Affine {
                a: pair.x,
                b: 1.0,
                value: g_dist.cdf(pair.x),
                slope: g_dist.pdf(pair.y),
            },
        ],
    )?;
    ensure_valid(&p)?;
    Ok(p)
}

/// Certificate for the uninformative experiment `delta_mu`.
///
/// If `mu <= r0` the canonical certificate of the degenerate pair `(r0, r0)`
/// already touches `G` at `mu`. Otherwise the price function is kinked at
/// `mu`: to the left it uses the smallest secant slope of `G` into `mu`, to
/// the right the tangent slope `g(mu)`.
pub fn point_mass_certificate(
    g_dist: &OutsideOptionDistribution,
    mu: f64,
) -> Result<PriceFunction> {
    let r0 = g_dist.r0();
    if mu <= r0 {
        return canonical_price_function(g_dist, TangencyPair { x: r0, y: r0 });
    }
    let g_mu = g_dist.cdf(mu);
    let secant = |m: f64| (g_mu - g_dist.cdf(m)) / (mu - m);
    let grid = linspace(0.0, mu, CHECK_GRID);
    let (k, _) = grid[..grid.len() - 1]
        .iter()
        .map(|&m| secant(m))
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |best, (k, v)| if v < best.1 { (k, v) } else { best },
        );
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 2)];
    let (_, neg_min) = golden_section_max(|m| -secant(m), lo, hi, 1e-12);
    let left_slope = (-neg_min).min(secant(grid[k])).min(g_dist.pdf(mu));
    let p = PriceFunction::new(
        g_dist,
        vec![
            PricePiece::Affine {
                a: 0.0,
                b: mu,
                value: g_mu - left_slope * mu,
                slope: left_slope,
            },
            PricePiece::Affine {
                a: mu,
                b: 1.0,
                value: g_mu,
                slope: g_dist.pdf(mu),
            },
        ],
    )?;
    ensure_valid(&p)?;
    Ok(p)
}

fn ensure_valid(p: &PriceFunction) -> Result<()> {
    let check = p.check();
    if check.ok() {
        Ok(())
    } else {
        Err(Error::Certificate(format!(
            "jump {:.3e}, concavity {:.3e}, shortfall {:.3e}",
            check.max_jump, check.max_concavity, check.max_shortfall
        )))
    }
}

/// Largest violation of each certificate condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub jump: f64,
    pub concavity: f64,
    pub shortfall: f64,
    /// Largest `|p - G|` on the support.
    pub contact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub continuity_ok: bool,
    pub convex_ok: bool,
    pub dominates_ok: bool,
    pub support_contact_ok: bool,
    pub max_violations: Violations,
}

impl CertificateReport {
    pub fn ok(&self) -> bool {
        self.continuity_ok && self.convex_ok && self.dominates_ok && self.support_contact_ok
    }
}

/// Checks that `p` certifies `exp`: the price-function conditions plus
/// `p = G` on every atom and on every prior-following interval.
pub fn verify_ic(
    g_dist: &OutsideOptionDistribution,
    exp: &Experiment,
    p: &PriceFunction,
) -> CertificateReport {
    let check = p.check();
    let gap = |m: f64| (p.value(m) - g_dist.cdf(m)).abs();
    let mut contact: f64 = 0.0;
    for seg in exp.segments() {
        match *seg {
            Segment::Atom { location, .. } => contact = contact.max(gap(location)),
            Segment::FollowsPrior { a, b } => {
                for m in linspace(a, b, CONTACT_POINTS + 2) {
                    contact = contact.max(gap(m));
                }
            }
        }
    }
    CertificateReport {
        continuity_ok: check.max_jump <= JUMP_TOL,
        convex_ok: check.max_concavity <= CERT_TOL,
        dominates_ok: check.max_shortfall <= CERT_TOL,
        support_contact_ok: contact <= CERT_TOL,
        max_violations: Violations {
            jump: check.max_jump,
            concavity: check.max_concavity,
            shortfall: check.max_shortfall,
            contact,
        },
    }
}

/// The restriction that pools `[s, t]` into `x` and reveals everything else.
/// The double censorship `dc` is a best reply to it.
pub fn implementing_restriction(prior: &PriorDistribution, dc: &DoubleCensorship) -> Experiment {
    let mut segments = vec![Segment::FollowsPrior { a: 0.0, b: dc.s }];
    if dc.t > dc.s {
        segments.push(Segment::Atom {
            location: dc.x,
            mass: prior.mass(dc.s, dc.t),
        });
    }
    segments.push(Segment::FollowsPrior { a: dc.t, b: 1.0 });
    crate::experiments::canonical_unchecked(prior, segments)
}

/// `|int p dF - int p dF_bar|` for a certificate `p`.
pub fn integral_condition_gap(
    p: &PriceFunction,
    f: &Experiment,
    f_bar: &Experiment,
) -> Result<f64> {
    Ok((p.integrate_against(f)? - p.integrate_against(f_bar)?).abs())
}

/// Designer envelope and virtual value sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualValue {
    pub grid: Vec<f64>,
    /// `p_F`: `u_D` off the pooling intervals, its chord across each of them.
    pub envelope: Vec<f64>,
    /// `v_F = p_F - eps (p* - G)`.
    pub values: Vec<f64>,
    pub epsilon: f64,
}

/// Builds `v_F = p_F - eps (p* - G)` on `grid`.
///
/// Fails if `exp` has no recognizable pooling intervals or if the envelope
/// is not convex.
pub fn virtual_value<U: Fn(f64) -> f64>(
    g_dist: &OutsideOptionDistribution,
    u_d: U,
    exp: &Experiment,
    p_star: &PriceFunction,
    epsilon: f64,
    grid: &[f64],
) -> Result<VirtualValue> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain(format!(
            "virtual-value weight must be positive, got {epsilon}"
        )));
    }
    let regions = exp
        .pooling_regions()
        .ok_or_else(|| Error::Certificate("experiment is not a monotone partition".into()))?;
    let envelope_at = |m: f64| -> f64 {
        for r in &regions {
            if m > r.lo && m < r.hi {
                let (ul, uh) = (u_d(r.lo), u_d(r.hi));
                return ul + (uh - ul) * (m - r.lo) / (r.hi - r.lo);
            }
        }
        u_d(m)
    };
    let mut check_pts = linspace(0.0, 1.0, CHECK_GRID);
    check_pts.extend(regions.iter().flat_map(|r| [r.lo, r.hi]));
    check_pts.sort_by(f64::total_cmp);
    check_pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let env: Vec<f64> = check_pts.iter().map(|&m| envelope_at(m)).collect();
    let slopes: Vec<f64> = (1..check_pts.len())
        .map(|k| (env[k] - env[k - 1]) / (check_pts[k] - check_pts[k - 1]))
        .collect();
    let concavity = slopes
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0f64, f64::max);
    if concavity > CERT_TOL {
        return Err(Error::Certificate(format!(
            "designer envelope is not convex ({concavity:.3e})"
        )));
    }
    let envelope: Vec<f64> = grid.iter().map(|&m| envelope_at(m)).collect();
    let values = grid
        .iter()
        .zip(&envelope)
        .map(|(&m, &e)| e - epsilon * (p_star.value(m) - g_dist.cdf(m)))
        .collect();
    Ok(VirtualValue {
        grid: grid.to_vec(),
        envelope,
        values,
        epsilon,
    })
}

/// Asserts the implementing restriction is a mean-preserving spread of `exp`.
pub fn restriction_contains(exp: &Experiment, restriction: &Experiment) -> bool {
    is_mpc(exp, restriction, MPC_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::experiments::make_double_censorship;
    use crate::mic::MicFamily;

    fn beta22() -> OutsideOptionDistribution {
        OutsideOptionDistribution::beta(2.0, 2.0).unwrap()
    }

    fn family() -> MicFamily {
        MicFamily::new(PriorDistribution::uniform(), beta22()).unwrap()
    }

    #[test]
    fn canonical_slopes() {
        let g = beta22();
        let p = canonical_price_function(&g, TangencyPair { x: 0.25, y: 0.625 }).unwrap();
        match p.pieces()[1] {
            PricePiece::Affine { slope, .. } => assert!((slope - 45.0 / 32.0).abs() < 1e-14),
            _ => panic!("expected affine piece"),
        }
        assert!(p.slack(0.625).abs() < 1e-9);
        let p = canonical_price_function(
            &g,
            TangencyPair {
                x: 1.0 / 6.0,
                y: 2.0 / 3.0,
            },
        )
        .unwrap();
        match p.pieces()[1] {
            PricePiece::Affine { slope, .. } => assert!((slope - 4.0 / 3.0).abs() < 1e-14),
            _ => panic!("expected affine piece"),
        }
        let p = canonical_price_function(&g, TangencyPair { x: 0.5, y: 0.5 }).unwrap();
        assert!(p.check().ok());
        assert!(canonical_price_function(&g, TangencyPair { x: 0.2, y: 0.7 }).is_err());
    }

    #[test]
    fn slack_at_half_for_full_delegation_certificate() {
        let g = beta22();
        let p = canonical_price_function(&g, TangencyPair { x: 0.25, y: 0.625 }).unwrap();
        assert!((p.slack(0.5) - 1.0 / 128.0).abs() < 1e-13);
    }

    #[test]
    fn certificates_for_benchmark_experiments() {
        let fam = family();
        let g = fam.outside_option();
        let p = canonical_price_function(g, fam.pair()).unwrap();
        assert!(verify_ic(g, &fam.full_delegation().experiment, &p).ok());

        let delta = Experiment::uninformative(fam.prior());
        let p0 = point_mass_certificate(g, fam.prior().mean()).unwrap();
        assert!(verify_ic(g, &delta, &p0).ok());

        let full = Experiment::full_revelation(fam.prior());
        let report = verify_ic(g, &full, &p);
        assert!(!report.support_contact_ok);
    }

    #[test]
    fn point_mass_certificate_above_mode() {
        let g = beta22();
        for mu in [0.55, 0.7, 0.9] {
            let p = point_mass_certificate(&g, mu).unwrap();
            assert!(p.check().ok(), "mu = {mu}");
            assert!(p.slack(mu).abs() < 1e-12);
        }
    }

    #[test]
    fn full_revelation_has_no_convex_certificate() {
        // any convex p >= G equal to G on [r0, 1] would make G convex there; probe
        // the family of chords of G between grid points in the concave part
        let g = beta22();
        let pts = linspace(0.5, 1.0, 41);
        for w in pts.windows(3) {
            let mid_chord = 0.5 * (g.cdf(w[0]) + g.cdf(w[2]));
            assert!(mid_chord < g.cdf(w[1]));
        }
    }

    #[test]
    fn implementing_restriction_examples() {
        let u = PriorDistribution::uniform();
        let (dc, mic) = make_double_censorship(&u, 0.0, 1.0 / 3.0).unwrap();
        let r = implementing_restriction(&u, &dc);
        assert_eq!(r.segments().len(), 2);
        match r.segments()[0] {
            Segment::Atom { location, mass } => {
                assert!((location - 1.0 / 6.0).abs() < 1e-15 && (mass - 1.0 / 3.0).abs() < 1e-15)
            }
            _ => panic!("expected the pooled atom first"),
        }
        assert_eq!(
            r.segments()[1],
            Segment::FollowsPrior {
                a: 1.0 / 3.0,
                b: 1.0
            }
        );
        assert!(restriction_contains(&mic, &r));
        assert!((r.mean() - 0.5).abs() < 1e-12);

        let uc = DoubleCensorship::from_thresholds(&u, 0.25, 0.25).unwrap();
        let r = implementing_restriction(&u, &uc);
        assert_eq!(r.segments(), &[Segment::FollowsPrior { a: 0.0, b: 1.0 }]);

        let lin = PriorDistribution::new(Distribution::beta(2.0, 1.0).unwrap()).unwrap();
        let (dc, mic) = make_double_censorship(&lin, 0.2, 0.5).unwrap();
        assert!(restriction_contains(
            &mic,
            &implementing_restriction(&lin, &dc)
        ));
    }

    #[test]
    fn integral_condition_for_family_members() {
        let fam = family();
        let g = fam.outside_option();
        for y in fam.y_grid(7) {
            let m = fam.mic_from_top_atom(y).unwrap();
            let p = canonical_price_function(g, TangencyPair { x: m.params.x, y }).unwrap();
            let r = implementing_restriction(fam.prior(), &m.params);
            assert!(integral_condition_gap(&p, &m.experiment, &r).unwrap() < 1e-9);
        }
    }

    #[test]
    fn virtual_value_examples() {
        let fam = family();
        let g = fam.outside_option();
        let p = canonical_price_function(g, fam.pair()).unwrap();
        let grid = linspace(0.0, 1.0, 201);
        let u = |m: f64| g.dm_value(m);
        let vv = virtual_value(
            g,
            u,
            &fam.full_delegation().experiment,
            &p,
            VIRTUAL_VALUE_EPS,
            &grid,
        )
        .unwrap();
        for (k, &m) in grid.iter().enumerate() {
            assert!(vv.values[k] <= vv.envelope[k] + 1e-15);
            if m <= 0.25 {
                assert!((vv.values[k] - vv.envelope[k]).abs() < 1e-12);
            }
        }
        let at = virtual_value(
            g,
            u,
            &fam.full_delegation().experiment,
            &p,
            VIRTUAL_VALUE_EPS,
            &[0.5, 0.625],
        )
        .unwrap();
        let chord = u(0.25) + (u(1.0) - u(0.25)) * (0.5 - 0.25) / 0.75;
        assert!((at.values[0] - (chord - 1e-3 / 128.0)).abs() < 1e-12);
        assert!((at.values[1] - at.envelope[1]).abs() < 1e-12);
        assert!(virtual_value(g, u, &fam.full_delegation().experiment, &p, 0.0, &grid).is_err());
    }
}
