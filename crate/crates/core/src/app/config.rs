use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretize::tustin;
use crate::frac::{OustaloupSettings, ReferenceModelSpec};
use crate::poly::Polynomial;
use crate::tf::{DiscreteTf, RationalTf};
use crate::tuning::{ControllerSpec, PsoSettings, SearchBounds, Structure};

use super::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Degrees.
    pub phi_m: f64,
    /// rad/s.
    pub omega_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub structure: Structure,
    pub theta0: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Defaults to the sampling time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantDomain {
    /// Coefficients in `s`, discretized with Tustin.
    Continuous,
    /// Coefficients in `z`.
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub domain: PlantDomain,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Seconds; the record holds `horizon / ts + 1` samples.
    pub horizon: f64,
    /// Step height of the reference input.
    pub amplitude: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Plant gain multipliers for the robustness table.
    pub gains: Vec<f64>,
    /// Named parameter vectors selectable with `--baseline`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub baselines: BTreeMap<String, Vec<f64>>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            gains: vec![0.5, 1.0, 1.5],
            baselines: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    /// Sampling time in seconds, shared by data, plant, controller and reference.
    pub ts: f64,
    /// Loss level below which a screened result may be `likely_bibo`.
    /// Defaults to 10 times the reference output energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_threshold: Option<f64>,
    pub reference: ReferenceSection,
    pub oustaloup: OustaloupSettings,
    pub controller: ControllerSection,
    #[serde(default)]
    pub pso: PsoSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default, skip_serializing_if = "is_default_paths")]
    pub paths: PathsSection,
}

fn is_default_paths(p: &PathsSection) -> bool {
    *p == PathsSection::default()
}

impl TuneConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, AppError> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            AppError::Config(msg) => AppError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let cfg = |m: String| Err(AppError::Config(m));
        crate::tf::check_ts(self.ts).map_err(|e| AppError::Config(format!("ts: {e}")))?;
        self.oustaloup
            .validate()
            .map_err(|e| AppError::Config(format!("oustaloup: {e}")))?;
        self.reference_spec()?;
        let dim = self.controller.structure.dim();
        for (name, v) in [
            ("theta0", &self.controller.theta0),
            ("lower", &self.controller.lower),
            ("upper", &self.controller.upper),
        ] {
            if v.len() != dim {
                return cfg(format!(
                    "controller.{name}: {:?} takes {dim} values ({}), got {}",
                    self.controller.structure,
                    self.controller.structure.parameter_names().join(", "),
                    v.len()
                ));
            }
        }
        self.bounds()?;
        self.controller_spec(&self.controller.theta0)
            .map_err(|e| AppError::Config(format!("controller.theta0: {e}")))?;
        for (name, th) in &self.evaluate.baselines {
            if th.len() != dim {
                return cfg(format!(
                    "evaluate.baselines.{name}: expected {dim} values, got {}",
                    th.len()
                ));
            }
        }
        self.pso.validate().map_err(|e| AppError::Config(format!("pso: {e}")))?;
        if let Some(j) = self.j_threshold {
            if !(j > 0.0) {
                return cfg(format!("j_threshold must be positive, got {j}"));
            }
        }
        if !(self.experiment.horizon > 0.0 && self.experiment.horizon.is_finite()) {
            return cfg(format!(
                "experiment.horizon must be positive, got {}",
                self.experiment.horizon
            ));
        }
        if !(self.experiment.amplitude != 0.0 && self.experiment.amplitude.is_finite()) {
            return cfg("experiment.amplitude must be nonzero".into());
        }
        if self.evaluate.gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return cfg("evaluate.gains must be finite and non-negative".into());
        }
        if self.plant.is_some() {
            self.plant().map_err(|e| AppError::Config(format!("plant: {e}")))?;
        }
        Ok(())
    }

    pub fn reference_spec(&self) -> Result<ReferenceModelSpec, AppError> {
        ReferenceModelSpec::new(self.reference.phi_m, self.reference.omega_c, self.oustaloup, self.ts)
            .map_err(|e| AppError::Config(format!("reference: {e}")))
    }

    pub fn bounds(&self) -> Result<SearchBounds, AppError> {
        SearchBounds::new(self.controller.lower.clone(), self.controller.upper.clone())
            .map_err(|e| AppError::Config(format!("controller bounds: {e}")))
    }

    pub fn controller_spec(&self, theta: &[f64]) -> crate::Result<ControllerSpec> {
        let mut spec = ControllerSpec {
            structure: self.controller.structure,
            theta: theta.to_vec(),
            tau: self.ts,
            ts: self.ts,
            oust: self.oustaloup,
        };
        if let Some(tau) = self.controller.tau {
            spec.tau = tau;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Discrete plant, if the configuration defines one.
    pub fn plant(&self) -> crate::Result<Option<DiscreteTf>> {
        let Some(p) = &self.plant else { return Ok(None) };
        let g = match p.domain {
            PlantDomain::Continuous => tustin(&RationalTf::from_coeffs(&p.num, &p.den)?, self.ts)?,
            PlantDomain::Discrete => {
                DiscreteTf::from_polys(&Polynomial::new(&p.num), &Polynomial::new(&p.den), self.ts)?
            }
        };
        Ok(Some(g))
    }

    /// Samples in an experiment over the configured horizon.
    pub fn samples(&self) -> usize {
        (self.experiment.horizon / self.ts).round() as usize + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
ts = 0.01

[reference]
phi_m = 80.0
omega_c = 1.0

[oustaloup]
order = 5
omega_b = 1e-4
omega_h = 1e4

[controller]
structure = "fopi"
theta0 = [1.0, 0.0, 1.0]
lower = [0.0, 0.0, 0.0]
upper = [5.0, 5.0, 2.0]
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = TuneConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.pso, PsoSettings::default());
        assert_eq!(cfg.evaluate.gains, vec![0.5, 1.0, 1.5]);
        assert_eq!(cfg.samples(), 1001);
        let again = TuneConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("omega_c = 1.0", "omega_c = 1.0\nomgea_b = 2.0");
        let err = TuneConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("omgea_b") && err.contains("line"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = MINIMAL.replace("theta0 = [1.0, 0.0, 1.0]", "theta0 = [1.0, 0.0]");
        let err = TuneConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("controller.theta0"), "{err}");
        let text = MINIMAL.replace("[controller]", "[experiment]\nhorizon = 0.0\n\n[controller]");
        assert!(TuneConfig::from_toml_str(&text).is_err());
    }
}
