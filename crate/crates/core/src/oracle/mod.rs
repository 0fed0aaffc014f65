//! Discretized persuasion as a linear program over mean-preserving
//! contractions, used as an independent check of the analytic solvers.
//!
//! States and posterior means share one uniform grid `w_i = i / (n - 1)`.
//! A plan `q[i][j]` moves mass of state `i` to posterior `j`; rows must add up
//! to the restriction and every column must have mean `w_j`.

pub mod scenarios;
mod simplex;
pub mod structure;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::PriorDistribution;
use crate::error::{Error, Result};
use crate::experiments::{Experiment, Segment};
use crate::numeric::linspace;
use crate::table::fmt_num;
use simplex::{Column, Simplex, PRICE_TOL};

pub use scenarios::{m_shaped_payoff, scenario_m_shaped, scenario_uninformed_dm, ScenarioReport};
pub use structure::{bipooling_structure, PoolingInterval, StructureReport};

/// Threshold for a grid point to count as support.
pub const SUPPORT_MASS: f64 = 1e-9;
/// Row-sum and martingale residual bound on every returned plan.
pub const PLAN_TOL: f64 = 1e-8;

const MAX_PIVOTS: usize = 500_000;

/// A grid, a reference distribution on it, and payoffs over posterior means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub grid: Vec<f64>,
    pub prior_mass: Vec<f64>,
    /// Experimenter payoff at each posterior location.
    pub payoff: Vec<f64>,
    /// Designer payoff used to break ties among best replies.
    pub designer: Option<Vec<f64>>,
}

/// A distribution on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteExperiment {
    pub grid: Vec<f64>,
    pub mass: Vec<f64>,
}

impl DiscreteExperiment {
    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.mass).map(|(w, m)| w * m).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.mass.len())
            .filter(|&k| self.mass[k] > SUPPORT_MASS)
            .collect()
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.mass.iter().zip(values).map(|(m, v)| m * v).sum()
    }
}

/// `q[i][j]`: mass of grid state `i` sent to posterior location `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub q: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn posterior_mass(&self) -> Vec<f64> {
        let n = self.q.len();
        (0..n)
            .map(|j| self.q.iter().map(|row| row[j]).sum())
            .collect()
    }

    /// Largest row-sum error against `rows` and largest martingale residual.
    pub fn residuals(&self, grid: &[f64], rows: &[f64]) -> (f64, f64) {
        let row_err = self
            .q
            .iter()
            .zip(rows)
            .map(|(row, r)| (row.iter().sum::<f64>() - r).abs())
            .fold(0.0, f64::max);
        let n = grid.len();
        let mart = (0..n)
            .map(|j| {
                self.q
                    .iter()
                    .zip(grid)
                    .map(|(row, w)| row[j] * (w - grid[j]))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        (row_err, mart)
    }
}

/// Outcome of [`lp_best_reply`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestReply {
    pub plan: TransportPlan,
    pub experiment: DiscreteExperiment,
    /// Optimal experimenter payoff.
    pub value: f64,
    /// Designer payoff of the selected best reply, if a tie-break vector was given.
    pub designer_value: Option<f64>,
    pub pivots: usize,
}

/// Outcome of [`ic_check_discrete`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcCheck {
    pub is_ic: bool,
    /// Best-reply value minus the candidate's own payoff.
    pub improvement: f64,
    pub best_value: f64,
    pub candidate_value: f64,
    pub tolerance: f64,
}

impl DiscreteInstance {
    /// Validates sizes, masses and the grid.
    pub fn new(grid: Vec<f64>, prior_mass: Vec<f64>, payoff: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 2 || prior_mass.len() != n || payoff.len() != n {
            return Err(Error::Domain(
                "grid, prior mass and payoff must have equal length >= 2".into(),
            ));
        }
        check_distribution(&prior_mass)?;
        Ok(DiscreteInstance {
            grid,
            prior_mass,
            payoff,
            designer: None,
        })
    }

    /// Uniform grid with the prior discretized by [`discretize_prior`].
    pub fn from_prior<U: Fn(f64) -> f64>(
        prior: &PriorDistribution,
        n: usize,
        payoff: U,
    ) -> Result<Self> {
        let grid = uniform_grid(n);
        let payoff = grid.iter().map(|&m| payoff(m)).collect();
        DiscreteInstance::new(grid, discretize_prior(prior, n), payoff)
    }

    pub fn with_designer(mut self, designer: Vec<f64>) -> Result<Self> {
        if designer.len() != self.grid.len() {
            return Err(Error::Domain("designer payoff has wrong length".into()));
        }
        self.designer = Some(designer);
        Ok(self)
    }

    pub fn with_payoff(mut self, payoff: Vec<f64>) -> Result<Self> {
        if payoff.len() != self.grid.len() {
            return Err(Error::Domain("payoff has wrong length".into()));
        }
        self.payoff = payoff;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn prior_mean(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.prior_mass)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn prior(&self) -> DiscreteExperiment {
        DiscreteExperiment {
            grid: self.grid.clone(),
            mass: self.prior_mass.clone(),
        }
    }

    /// Writes `(w, prior_mass, payoff[, designer])` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("w,prior_mass,payoff");
        if self.designer.is_some() {
            out.push_str(",designer");
        }
        out.push('\n');
        for k in 0..self.n() {
            let _ = write!(
                out,
                "{},{},{}",
                fmt_num(self.grid[k]),
                fmt_num(self.prior_mass[k]),
                fmt_num(self.payoff[k])
            );
            if let Some(d) = &self.designer {
                let _ = write!(out, ",{}", fmt_num(d[k]));
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Writes the plan as an `n x n` matrix with a header row of posterior locations.
pub fn write_plan_csv(plan: &TransportPlan, grid: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("state");
    for w in grid {
        let _ = write!(out, ",{}", fmt_num(*w));
    }
    out.push('\n');
    for (row, w) in plan.q.iter().zip(grid) {
        out.push_str(&fmt_num(*w));
        for v in row {
            let _ = write!(out, ",{}", fmt_num(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn check_distribution(mass: &[f64]) -> Result<()> {
    if mass.iter().any(|&m| !m.is_finite() || m < 0.0) {
        return Err(Error::Domain(
            "grid masses must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("grid masses sum to {total}, not 1")));
    }
    Ok(())
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    linspace(0.0, 1.0, n)
}

/// Splits mass `w` with mean `z` onto the two grid points around `z`,
/// preserving the mean.
fn split_onto(mass: &mut [f64], n: usize, w: f64, z: f64) {
    if w <= 0.0 {
        return;
    }
    let h = 1.0 / (n - 1) as f64;
    let pos = (z.clamp(0.0, 1.0) / h).min((n - 1) as f64);
    let k = (pos.floor() as usize).min(n - 2);
    let frac = (pos - k as f64).clamp(0.0, 1.0);
    mass[k] += w * (1.0 - frac);
    mass[k + 1] += w * frac;
}

/// Prior mass on the uniform `n`-grid.
///
/// The mass of each grid cell `[w_k, w_{k+1}]` is split between its two
/// endpoints in proportion to the cell's conditional mean. The result has
/// exactly the prior's mean and, applied to any MPC of the prior, yields an
/// MPC of the discretized prior.
pub fn discretize_prior(prior: &PriorDistribution, n: usize) -> Vec<f64> {
    let grid = uniform_grid(n);
    let mut mass = vec![0.0; n];
    for k in 0..n - 1 {
        let (a, b) = (grid[k], grid[k + 1]);
        let w = prior.mass(a, b);
        if w > 0.0 {
            let z = (prior.partial_moment(a, b) / w).clamp(a, b);
            split_onto(&mut mass, n, w, z);
        }
    }
    normalize(mass)
}

/// Discretizes an experiment with the same cell-splitting rule as
/// [`discretize_prior`]; atoms are split between their neighboring grid points.
pub fn discretize_experiment(exp: &Experiment, n: usize) -> DiscreteExperiment {
    let grid = uniform_grid(n);
    let prior = exp.prior();
    let mut mass = vec![0.0; n];
    for seg in exp.segments() {
        match *seg {
            Segment::Atom { location, mass: w } => split_onto(&mut mass, n, w, location),
            Segment::FollowsPrior { a, b } => {
                for k in 0..n - 1 {
                    let (lo, hi) = (grid[k].max(a), grid[k + 1].min(b));
                    if hi <= lo {
                        continue;
                    }
                    let w = prior.mass(lo, hi);
                    if w > 0.0 {
                        let z = (prior.partial_moment(lo, hi) / w).clamp(lo, hi);
                        split_onto(&mut mass, n, w, z);
                    }
                }
            }
        }
    }
    DiscreteExperiment {
        grid,
        mass: normalize(mass),
    }
}

fn normalize(mut mass: Vec<f64>) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    mass
}

/// Best reply of the experimenter to a restriction on the grid.
///
/// Maximizes `sum_j payoff[j] sum_i q[i][j]` over plans whose rows equal the
/// restriction. If the instance carries a designer vector, a second program
/// maximizes it over the optimal face of the first.
pub fn lp_best_reply(instance: &DiscreteInstance, restriction: &[f64]) -> Result<BestReply> {
    let n = instance.n();
    if restriction.len() != n {
        return Err(Error::Domain("restriction has wrong length".into()));
    }
    check_distribution(restriction)?;
    let grid = &instance.grid;
    let mean: f64 = grid.iter().zip(restriction).map(|(w, m)| w * m).sum();
    if (mean - instance.prior_mean()).abs() > instance.step() {
        return Err(Error::Domain(format!(
            "restriction mean {mean} differs from prior mean {} by more than one grid step",
            instance.prior_mean()
        )));
    }

    let rows: Vec<usize> = (0..n).filter(|&i| restriction[i] > 0.0).collect();
    let n_rows = rows.len();
    let m = n_rows + n;
    let mut cols = Vec::with_capacity(n_rows * n + n);
    let mut cost = Vec::with_capacity(n_rows * n + n);
    let mut basis = vec![0usize; m];
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            if j == i {
                basis[r] = cols.len();
            }
            cols.push(Column::new(&[(r, 1.0), (n_rows + j, grid[i] - grid[j])]));
            cost.push(instance.payoff[j]);
        }
    }
    for j in 0..n {
        basis[n_rows + j] = cols.len();
        cols.push(Column::artificial(n_rows + j));
        cost.push(0.0);
    }
    let mut b = vec![0.0; m];
    for (r, &i) in rows.iter().enumerate() {
        b[r] = restriction[i];
    }

    let n_cols = cols.len();
    let mut lp = Simplex::new(m, cols, b, basis)?;
    lp.optimize(&cost, MAX_PIVOTS)?;

    let designer_cost = instance.designer.as_ref().map(|d| {
        let mut c = Vec::with_capacity(n_cols);
        for _ in &rows {
            c.extend_from_slice(d);
        }
        c.resize(n_cols, 0.0);
        c
    });
    if let Some(dc) = &designer_cost {
        let reduced = lp.reduced_costs(&cost);
        let mask: Vec<bool> = reduced.iter().map(|&d| d < -PRICE_TOL).collect();
        lp.forbid(&mask);
        lp.optimize(dc, MAX_PIVOTS)?;
    }
    let x = lp.solution()?;

    let mut q = vec![vec![0.0; n]; n];
    for (r, &i) in rows.iter().enumerate() {
        q[i].copy_from_slice(&x[r * n..(r + 1) * n]);
    }
    let plan = TransportPlan { q };
    let (row_err, mart_err) = plan.residuals(grid, restriction);
    if row_err > PLAN_TOL || mart_err > PLAN_TOL {
        return Err(Error::Numeric(format!(
            "plan residuals exceed {PLAN_TOL:e}: rows {row_err:.3e}, martingale {mart_err:.3e}"
        )));
    }
    let experiment = DiscreteExperiment {
        grid: grid.clone(),
        mass: plan.posterior_mass(),
    };
    let value = experiment.expectation(&instance.payoff);
    let designer_value = instance
        .designer
        .as_ref()
        .map(|d| experiment.expectation(d));
    Ok(BestReply {
        plan,
        experiment,
        value,
        designer_value,
        pivots: lp.pivots,
    })
}

/// A candidate is incentive compatible on the grid if its best reply gains at most `5 / n`.
pub fn ic_check_discrete(instance: &DiscreteInstance, candidate: &[f64]) -> Result<IcCheck> {
    ic_check_discrete_with(instance, candidate, 5.0 / instance.n() as f64)
}

/// [`ic_check_discrete`] with an explicit tolerance on the improvement.
pub fn ic_check_discrete_with(
    instance: &DiscreteInstance,
    candidate: &[f64],
    tolerance: f64,
) -> Result<IcCheck> {
    ic_check_with_reply(instance, candidate, tolerance).map(|(check, _)| check)
}

/// [`ic_check_discrete_with`] that also returns the best reply it solved for.
pub fn ic_check_with_reply(
    instance: &DiscreteInstance,
    candidate: &[f64],
    tolerance: f64,
) -> Result<(IcCheck, BestReply)> {
    let reply = lp_best_reply(instance, candidate)?;
    let candidate_value: f64 = candidate
        .iter()
        .zip(&instance.payoff)
        .map(|(m, v)| m * v)
        .sum();
    let improvement = (reply.value - candidate_value).max(0.0);
    let check = IcCheck {
        is_ic: improvement <= tolerance,
        improvement,
        best_value: reply.value,
        candidate_value,
        tolerance,
    };
    Ok((check, reply))
}
