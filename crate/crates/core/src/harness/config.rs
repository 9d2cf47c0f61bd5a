//! Run configuration with per-system defaults and JSON overrides.
//!
//! A user config is merged key by key over the defaults of its system, so a
//! file only needs the fields it changes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::DEFAULT_STEP;
use crate::error::{Error, Result};
use crate::regions::{BoxRegion, Region};
use crate::spectral::{SelectionCriteria, DEFAULT_REG};

use super::benchmark_regions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Box of initial points. `None` means the working domain.
    pub domain: Option<BoxRegion>,
    pub n_traj: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub step: f64,
    pub guard: Option<BoxRegion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub degree: u32,
    pub reg: f64,
    pub max_residual: f64,
    pub targets: Option<Vec<Complex64>>,
    pub count: usize,
    pub target_tol: f64,
}

impl LearnConfig {
    pub fn criteria(&self) -> SelectionCriteria {
        SelectionCriteria {
            max_residual: self.max_residual,
            targets: self.targets.clone(),
            count: self.count,
            target_tol: self.target_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub x0: Option<Region>,
    pub xf: Option<Region>,
    /// `None` picks ten times the slowest magnitude time scale.
    pub t_max: Option<f64>,
    pub delta: f64,
    /// Sampling tolerance. When `n_samples` is also set both are used as
    /// given; when only one is set the other is derived from it.
    pub eps: Option<f64>,
    pub n_samples: Option<usize>,
    pub max_samples: usize,
    pub max_weight: u32,
    /// Probe samples per set for the plug-in estimate of `P_eps`.
    pub n_probe: usize,
    /// Error-field bounds used when no reference eigenfunction exists.
    pub assumed_l_eps: f64,
    pub assumed_a_eps: f64,
    /// Name of a system with analytic eigenfunctions to measure against.
    pub reference: Option<String>,
    pub n_val: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_trials: usize,
    pub n_samples: usize,
    pub degrees: Vec<u32>,
    pub sample_counts: Vec<usize>,
    pub truth_degree: u32,
    pub truth_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: String,
    pub simulate: SimulateConfig,
    pub learn: LearnConfig,
    pub verify: VerifyConfig,
    pub experiment: ExperimentConfig,
}

fn base(system: &str) -> RunConfig {
    RunConfig {
        system: system.to_string(),
        simulate: SimulateConfig {
            domain: None,
            n_traj: 1000,
            n_steps: 10,
            dt: 0.05,
            step: DEFAULT_STEP,
            guard: None,
        },
        learn: LearnConfig {
            degree: 6,
            reg: DEFAULT_REG,
            max_residual: 0.5,
            targets: None,
            count: 2,
            target_tol: 0.15,
        },
        verify: VerifyConfig {
            x0: None,
            xf: None,
            t_max: None,
            delta: 0.1,
            eps: None,
            n_samples: Some(5000),
            max_samples: 1_000_000,
            max_weight: crate::reachtime::DEFAULT_MAX_WEIGHT,
            n_probe: 20_000,
            assumed_l_eps: 0.0,
            assumed_a_eps: 0.0,
            reference: None,
            n_val: 2000,
        },
        experiment: ExperimentConfig {
            n_trials: 200,
            n_samples: 5000,
            degrees: vec![8, 10, 12],
            sample_counts: vec![50, 5000],
            truth_degree: 14,
            truth_samples: 100_000,
        },
    }
}

impl RunConfig {
    /// Benchmark settings for a named system; generic defaults otherwise.
    pub fn for_system(system: &str) -> Result<RunConfig> {
        let mut c = base(system);
        match benchmark_regions(system) {
            Ok((x0, xf)) => {
                c.verify.x0 = Some(x0);
                c.verify.xf = Some(xf);
            }
            // data from elsewhere: regions must come from the user config
            Err(Error::UnknownSystem(_)) => {}
            Err(e) => return Err(e),
        }
        match system {
            "example1" => {
                c.learn.targets = Some(vec![Complex64::new(-1.0, 0.0), Complex64::new(2.5, 0.0)]);
                c.verify.reference = Some("example1".into());
            }
            "duffing" => {
                // a box inside the basin of the stable focus at (1, 0)
                c.simulate.domain = Some(BoxRegion::new(vec![0.9, 0.9], vec![1.2, 1.2])?);
                c.simulate.n_traj = 500;
                c.simulate.n_steps = 200;
                c.learn.degree = 12;
                c.learn.targets = Some(vec![Complex64::new(-0.25, 1.39194), Complex64::new(-0.25, -1.39194)]);
                c.verify.t_max = Some(6.0);
            }
            "roessler" => {
                c.simulate.domain = Some(BoxRegion::new(vec![-12.0, -12.0, -1.0], vec![12.0, 12.0, 1.0])?);
                c.simulate.n_traj = 2000;
                c.simulate.n_steps = 10;
                c.learn.degree = 3;
                c.learn.targets = Some(vec![Complex64::new(0.097, 0.995), Complex64::new(0.097, -0.995)]);
                c.verify.t_max = Some(1.0);
            }
            _ => {}
        }
        Ok(c)
    }

    /// Defaults for `system` with `overrides` merged over them.
    pub fn with_overrides(system: &str, overrides: Option<&Value>) -> Result<RunConfig> {
        let mut v = serde_json::to_value(Self::for_system(system)?).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if let Some(o) = overrides {
            if !o.is_object() {
                return Err(Error::InvalidInput("config must be a JSON object".into()));
            }
            merge(&mut v, o);
        }
        let c: RunConfig = serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        if c.system != system {
            return Err(Error::InvalidInput(format!(
                "config names system {:?} but {system:?} was requested",
                c.system
            )));
        }
        Ok(c)
    }

    /// Reads the system name from the config, falling back to `default`.
    pub fn from_json(overrides: Option<&Value>, default_system: Option<&str>) -> Result<RunConfig> {
        let named = overrides
            .and_then(|o| o.get("system"))
            .and_then(|s| s.as_str())
            .map(str::to_string);
        let system = named
            .or_else(|| default_system.map(str::to_string))
            .ok_or_else(|| Error::InvalidInput("no system given in config or arguments".into()))?;
        Self::with_overrides(&system, overrides)
    }
}

/// Recursive object merge; arrays and scalars replace.
fn merge(into: &mut Value, from: &Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        a.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_merge_into_defaults() {
        let c = RunConfig::with_overrides("duffing", Some(&json!({"learn": {"degree": 10}}))).unwrap();
        assert_eq!(c.learn.degree, 10);
        assert_eq!(c.simulate.n_traj, 500);
        assert_eq!(c.verify.t_max, Some(6.0));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::with_overrides("example1", Some(&json!({"learn": {"degre": 3}}))).is_err());
    }

    #[test]
    fn custom_systems_get_generic_defaults() {
        let c = RunConfig::for_system("lorenz").unwrap();
        assert!(c.verify.x0.is_none());
        assert_eq!(c.learn.degree, 6);
    }

    #[test]
    fn system_comes_from_config() {
        let c = RunConfig::from_json(Some(&json!({"system": "roessler"})), None).unwrap();
        assert_eq!(c.learn.degree, 3);
        assert!(RunConfig::from_json(None, None).is_err());
    }

    #[test]
    fn default_config_round_trips() {
        for s in ["example1", "duffing", "roessler"] {
            let c = RunConfig::for_system(s).unwrap();
            let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
        }
    }
}
