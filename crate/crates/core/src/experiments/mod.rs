//! Numerical experiments.
//!
//! Each experiment takes a serde config with defaults for every field and
//! returns an [`ExperimentReport`]. Reports are deterministic: rerunning the
//! recorded `config` parameter reproduces the JSON byte for byte.

pub mod checks;
pub mod decay;
pub mod fit;
pub mod limits;
pub mod oscillation;
pub mod report;
pub mod wings;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{config, Error, Result};

pub use checks::*;
pub use decay::*;
pub use fit::{aitken, basis_fit, decay_fit, fit_decay_exponent, linear_fit, LinearFit};
pub use limits::*;
pub use oscillation::*;
pub use report::{format_f64, to_canonical_json, ExperimentReport, Samples, Verdict};
pub use wings::*;

macro_rules! registry {
    ($($variant:ident($cfg:ty) = $name:literal => $run:path,)*) => {
        #[derive(Debug, Clone, PartialEq)]
        pub enum ExperimentConfig {
            $($variant($cfg),)*
        }

        /// Every experiment name accepted by [`ExperimentConfig::from_parts`].
        pub const EXPERIMENT_NAMES: &[&str] = &[$($name,)*];

        impl ExperimentConfig {
            pub fn name(&self) -> &'static str {
                match self {
                    $(ExperimentConfig::$variant(_) => $name,)*
                }
            }

            /// Default config for a named experiment.
            pub fn default_for(name: &str) -> Result<Self> {
                match name {
                    $($name => Ok(ExperimentConfig::$variant(<$cfg>::default())),)*
                    _ => config(format!("unknown experiment `{name}`")),
                }
            }

            /// Builds a config from a name and a (possibly partial) JSON object.
            pub fn from_parts(name: &str, value: Value) -> Result<Self> {
                match name {
                    $($name => Ok(ExperimentConfig::$variant(
                        serde_json::from_value(value).map_err(|e| Error::Config(format!("{name}: {e}")))?,
                    )),)*
                    _ => config(format!("unknown experiment `{name}`")),
                }
            }

            pub fn config_value(&self) -> Value {
                match self {
                    $(ExperimentConfig::$variant(c) => to_value(c),)*
                }
            }

            fn run_inner(&self) -> Result<ExperimentReport> {
                match self {
                    $(ExperimentConfig::$variant(c) => $run(c),)*
                }
            }
        }
    };
}

registry! {
    SpecialFunctions(SpecialFunctionsConfig) = "special-functions" => run_special_functions,
    ModelResiduals(ModelResidualsConfig) = "model-residuals" => run_model_residuals,
    Doubling(DoublingConfig) = "doubling-obstruction" => run_doubling,
    DuffinMass(DuffinMassConfig) = "duffin-mass" => run_duffin_mass,
    Relaxation(RelaxationConfig) = "relaxation" => run_relaxation,
    DecayUpward(UpwardDecayConfig) = "decay-upward" => run_upward_decay,
    DecayGeneral(GeneralDecayConfig) = "decay-general" => run_general_decay,
    ExponentialWedge(ExponentialWedgeConfig) = "exponential-wedge" => run_exponential_wedge,
    DownwardLimit(DownwardLimitConfig) = "downward-limit" => run_downward_limit,
    PeriodicLimit(PeriodicLimitConfig) = "periodic-limit" => run_periodic_limit,
    ExteriorLimits(ExteriorLimitsConfig) = "exterior-limits" => run_exterior_limits,
    OscillationPersistence(OscillationPersistenceConfig) = "oscillation-persistence" => run_oscillation_persistence,
    Counterexample(CounterexampleConfig) = "counterexample" => run_counterexample,
    LimitConfiguration(LimitConfigurationConfig) = "limit-configuration" => run_limit_configuration,
    RayScan(RayScanConfig) = "ray-scan" => run_ray_scan,
}

fn to_value<T: Serialize>(c: &T) -> Value {
    serde_json::to_value(c).expect("configs serialize")
}

impl ExperimentConfig {
    /// Runs the experiment, stamping the wall-clock time and the seed.
    pub fn run(&self) -> Result<ExperimentReport> {
        let start = Instant::now();
        let mut r = self.run_inner()?;
        let seed = self.config_value().get("seed").cloned().unwrap_or(Value::Null);
        r.parameters.entry("seed".into()).or_insert(seed);
        r.runtime_seconds = start.elapsed().as_secs_f64();
        Ok(r)
    }
}

/// Applies `key = value` overrides to a config object. Keys may be given in
/// kebab case and may address nested objects with dots.
pub fn apply_overrides(base: &mut Value, overrides: &[(String, Value)]) -> Result<()> {
    for (key, v) in overrides {
        let path: Vec<String> = key.split('.').map(|k| k.replace('-', "_")).collect();
        let mut cur = &mut *base;
        for (i, k) in path.iter().enumerate() {
            let obj = match cur {
                Value::Object(m) => m,
                _ => return config(format!("override `{key}` does not address an object field")),
            };
            if i + 1 == path.len() {
                obj.insert(k.clone(), v.clone());
                break;
            }
            cur = obj.entry(k.clone()).or_insert_with(|| Value::Object(Map::new()));
        }
    }
    Ok(())
}

/// Default acceptance battery, in report order.
pub fn default_suite() -> Vec<ExperimentConfig> {
    let mut v = Vec::new();
    for name in ["special-functions", "model-residuals", "doubling-obstruction", "duffin-mass", "relaxation"] {
        v.push(ExperimentConfig::default_for(name).expect("registered"));
    }
    v.push(ExperimentConfig::DecayUpward(UpwardDecayConfig::default()));
    v.push(ExperimentConfig::DecayGeneral(GeneralDecayConfig::default()));
    v.push(ExperimentConfig::ExponentialWedge(ExponentialWedgeConfig::default()));
    for (c_minus, c_plus) in [(0.0, 1.0), (-2.0, 3.0), (1.0, 1.0)] {
        v.push(ExperimentConfig::DownwardLimit(DownwardLimitConfig { c_minus, c_plus, ..Default::default() }));
    }
    for name in [
        "periodic-limit",
        "exterior-limits",
        "oscillation-persistence",
        "counterexample",
        "limit-configuration",
        "ray-scan",
    ] {
        v.push(ExperimentConfig::default_for(name).expect("registered"));
    }
    v
}

/// Error record used in place of a report when an experiment fails to run.
pub fn error_value(name: &str, e: &Error) -> Value {
    json!({ "name": name, "error": { "kind": e.kind(), "message": e.to_string() } })
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub configs: Vec<ExperimentConfig>,
    pub results: Vec<Result<ExperimentReport>>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| matches!(r, Ok(rep) if rep.passed()))
    }

    pub fn errored(&self) -> bool {
        self.results.iter().any(|r| r.is_err())
    }

    /// Aggregate report; independent of worker count and timing.
    pub fn to_value(&self) -> Value {
        let reports: Vec<Value> = self
            .configs
            .iter()
            .zip(&self.results)
            .map(|(c, r)| match r {
                Ok(rep) => rep.to_value(),
                Err(e) => error_value(c.name(), e),
            })
            .collect();
        json!({ "passed": self.passed(), "reports": reports })
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(&self.to_value())
    }
}

/// Runs `configs` on a pool of `workers` threads; results keep input order.
pub fn run_suite(configs: Vec<ExperimentConfig>, workers: usize) -> Result<SuiteOutcome> {
    if workers == 0 {
        return config("suite needs at least one worker");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results = pool.install(|| configs.par_iter().map(|c| c.run()).collect());
    Ok(SuiteOutcome { configs, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for &n in EXPERIMENT_NAMES {
            let c = ExperimentConfig::default_for(n).unwrap();
            assert_eq!(c.name(), n);
            let back = ExperimentConfig::from_parts(n, c.config_value()).unwrap();
            assert_eq!(back, c);
        }
        assert!(ExperimentConfig::default_for("nope").is_err());
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let mut v = json!({});
        apply_overrides(&mut v, &[("c-minus".into(), json!(-2.0)), ("newton.max-iters".into(), json!(7))]).unwrap();
        let c = ExperimentConfig::from_parts("downward-limit", v).unwrap();
        match c {
            ExperimentConfig::DownwardLimit(d) => {
                assert_eq!(d.c_minus, -2.0);
                assert_eq!(d.newton.max_iters, 7);
            }
            _ => unreachable!(),
        }
        assert!(ExperimentConfig::from_parts("downward-limit", json!({"bogus": 1})).is_err());
    }

    #[test]
    fn suite_keeps_order() {
        let cfgs = vec![
            ExperimentConfig::default_for("limit-configuration").unwrap(),
            ExperimentConfig::default_for("doubling-obstruction").unwrap(),
            ExperimentConfig::default_for("ray-scan").unwrap(),
        ];
        let a = run_suite(cfgs.clone(), 1).unwrap();
        let b = run_suite(cfgs, 3).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let names: Vec<&str> = a.results.iter().map(|r| r.as_ref().unwrap().name.as_str()).collect();
        assert_eq!(names, ["limit-configuration", "doubling-obstruction", "ray-scan"]);
    }
}
