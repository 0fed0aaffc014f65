use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::delegation::{DesignerObjective, ObjectiveSpec};
use crate::distributions::{DistributionSpec, OutsideOptionDistribution, PriorDistribution};
use crate::error::{Error, Result};

/// One run, read from a JSON file. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub prior: DistributionSpec,
    pub outside_option: DistributionSpec,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub scenarios: ScenarioSettings,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    /// Grid size; odd and at least 51.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest accepted certificate violation.
    pub certificate: f64,
    /// The grid IC check accepts improvements up to `ic_factor / n`.
    pub ic_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// Top atoms in the sweep and in the verification battery.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSettings {
    /// Step location of the uninformed decision maker.
    pub uninformed_r0: f64,
    /// Peaks of the M-shaped payoff.
    pub m_shaped_peaks: [f64; 2],
}

fn default_objective() -> ObjectiveSpec {
    ObjectiveSpec::DmValue {}
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { n: 201 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            certificate: 1e-8,
            ic_factor: 5.0,
        }
    }
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { points: 257 }
    }
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        ScenarioSettings {
            uninformed_r0: 0.7,
            m_shaped_peaks: [0.3, 0.7],
        }
    }
}

impl Default for RunConfig {
    /// Uniform prior, Beta(2, 2) outside option, decision-maker-value designer.
    fn default() -> Self {
        RunConfig {
            prior: DistributionSpec::Uniform {},
            outside_option: DistributionSpec::Beta {
                alpha: 2.0,
                beta: 2.0,
            },
            objective: default_objective(),
            oracle: OracleSettings::default(),
            tolerances: Tolerances::default(),
            sweep: SweepSettings::default(),
            scenarios: ScenarioSettings::default(),
            output_dir: None,
        }
    }
}

/// Validated model objects built from a config.
#[derive(Debug, Clone)]
pub struct Model {
    pub prior: PriorDistribution,
    pub outside_option: OutsideOptionDistribution,
    pub objective: DesignerObjective,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Schema-level checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        let n = self.oracle.n;
        if n < 51 || n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "oracle.n must be odd and >= 51, got {n}"
            )));
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("tolerances.certificate", tol.certificate),
            ("tolerances.ic_factor", tol.ic_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sweep.points < 2 {
            return Err(Error::Config("sweep.points must be at least 2".into()));
        }
        let r0 = self.scenarios.uninformed_r0;
        if !(0.0..=1.0).contains(&r0) {
            return Err(Error::Config(format!(
                "scenarios.uninformed_r0 must lie in [0, 1], got {r0}"
            )));
        }
        let [lo, hi] = self.scenarios.m_shaped_peaks;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "scenarios.m_shaped_peaks must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Builds and validates the distributions and objective.
    pub fn model(&self) -> Result<Model> {
        let as_config = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        Ok(Model {
            prior: PriorDistribution::from_spec(&self.prior).map_err(as_config)?,
            outside_option: OutsideOptionDistribution::from_spec(&self.outside_option)
                .map_err(as_config)?,
            objective: DesignerObjective::from_spec(&self.objective).map_err(as_config)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(
            r#"{"prior": {"kind": "uniform", "params": {}},
                "outside_option": {"kind": "beta", "params": {"alpha": 2, "beta": 2}}}"#,
        )
        .unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.model().is_ok());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = RunConfig::default().to_json();
        assert!(RunConfig::from_json(&base).is_ok());
        let extra = base.replacen('{', r#"{"surprise": 1,"#, 1);
        assert!(matches!(
            RunConfig::from_json(&extra),
            Err(Error::Config(_))
        ));
        let nested = base.replace(r#""n": 201"#, r#""n": 201, "m": 3"#);
        assert!(RunConfig::from_json(&nested).is_err());
        let even = base.replace(r#""n": 201"#, r#""n": 200"#);
        assert!(RunConfig::from_json(&even).is_err());
        let small = base.replace(r#""n": 201"#, r#""n": 49"#);
        assert!(RunConfig::from_json(&small).is_err());
        let neg = base.replace(r#""certificate": 1e-8"#, r#""certificate": -1.0"#);
        assert!(RunConfig::from_json(&neg).is_err());
        assert!(RunConfig::from_json("{ not json").is_err());
    }

    #[test]
    fn invalid_distribution_is_a_config_error() {
        let c = RunConfig {
            prior: DistributionSpec::Beta {
                alpha: -1.0,
                beta: 2.0,
            },
            ..RunConfig::default()
        };
        assert!(matches!(c.model(), Err(Error::Config(_))));
    }
}
