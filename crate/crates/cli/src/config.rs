//! Run configuration: a JSON document plus `--set` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;
use serde_json::{Map, Value};

use ped2_core::experiments::{generate_instance, ExperimentSpec, Steps};
use ped2_core::graph::TopologyFile;
use ped2_core::problem::ProblemFile;
use ped2_core::solvers::{step_size_bounds, DEFAULT_MAX_ITER, DEFAULT_STOP_TOL};
use ped2_core::{CombinationSet, Mode, SharingProblem, SolverConfig, Topology};

/// Either a generated experiment or an explicit problem on a topology.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<ExperimentSpec>,
    pub problem: Option<ProblemFile>,
    pub topology: Option<TopologyFile>,
    pub steps: Option<Steps>,
    pub max_iter: Option<usize>,
    pub stop_tol: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
}

/// A parse failure with enough location to find it.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

pub fn read_document(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| ParseError(format!("{}: {e}", path.display())).into())
}

/// Applies `key.path=value`; the value is parsed as JSON and kept as a
/// string if that fails.
pub fn apply_override(doc: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ParseError(format!("--set {assignment}: expected KEY=VALUE")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        bail!(ParseError(format!(
            "--set {assignment}: empty path segment in '{key}'"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if !node.is_object() {
            let at = segments[..i].join(".");
            bail!(ParseError(format!(
                "--set {assignment}: '{at}' is not an object"
            )));
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(seg.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("non-empty key")
}

pub fn parse(doc: Value, origin: &str) -> anyhow::Result<Config> {
    serde_json::from_value(doc).map_err(|e| ParseError(format!("{origin}: {e}")).into())
}

/// A fully materialized instance with its solver settings.
pub struct Resolved {
    pub spec: Option<ExperimentSpec>,
    pub problem: SharingProblem,
    pub cs: CombinationSet,
    pub config: SolverConfig,
}

impl Config {
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let (spec, problem, topology) = match (&self.experiment, &self.problem, &self.topology) {
            (Some(spec), None, None) => {
                let mut spec = spec.clone();
                if let Some(s) = self.steps {
                    spec.steps = s;
                }
                if let Some(m) = self.max_iter {
                    spec.max_iter = m;
                }
                if let Some(t) = self.stop_tol {
                    spec.stop_tol = t;
                }
                let (p, t) = generate_instance(&spec)?;
                (Some(spec), p, t)
            }
            (None, Some(pf), Some(tf)) => (None, pf.to_problem()?, Topology::from_file(tf)?),
            (None, _, _) => bail!(ParseError(
                "config needs either 'experiment' or both 'problem' and 'topology'".into()
            )),
            (Some(_), _, _) => bail!(ParseError(
                "'experiment' cannot be combined with 'problem' or 'topology'".into()
            )),
        };
        if topology.num_agents() != problem.num_agents() {
            bail!(
                "topology has {} agents but the problem has {}",
                topology.num_agents(),
                problem.num_agents()
            );
        }
        let cs = CombinationSet::from_topology(&topology)?;
        let config = match &spec {
            Some(s) => s.solver_config(&problem)?,
            None => {
                let (mu_w, mu_y) = match self.steps {
                    Some(Steps::Fixed { mu_w, mu_y }) => (mu_w, mu_y),
                    _ => step_size_bounds(&problem)?.auto(),
                };
                SolverConfig::new(mu_w, mu_y)?
                    .with_max_iter(self.max_iter.unwrap_or(DEFAULT_MAX_ITER))
                    .with_stop_tol(self.stop_tol.unwrap_or(DEFAULT_STOP_TOL))
            }
        }
        .with_mode(self.mode);
        Ok(Resolved {
            spec,
            problem,
            cs,
            config,
        })
    }
}

/// Loads the config file (or `base` when absent) and applies overrides.
pub fn load(path: Option<&Path>, base: Option<Value>, sets: &[String]) -> anyhow::Result<Config> {
    let mut doc = match (path, base) {
        (Some(p), _) => read_document(p)?,
        (None, Some(b)) => b,
        (None, None) => bail!(ParseError("this command needs --config PATH".into())),
    };
    for s in sets {
        apply_override(&mut doc, s)?;
    }
    let origin = path.map_or_else(
        || "built-in config".to_string(),
        |p| p.display().to_string(),
    );
    parse(doc, &origin).map_err(|e| anyhow!(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_nested_paths() {
        let mut doc = json!({"experiment": {"agents": 3}});
        apply_override(&mut doc, "experiment.agents=5").unwrap();
        apply_override(&mut doc, "experiment.steps.mu_w=0.1").unwrap();
        apply_override(&mut doc, "mode=general_form").unwrap();
        assert_eq!(doc["experiment"]["agents"], json!(5));
        assert_eq!(doc["experiment"]["steps"]["mu_w"], json!(0.1));
        assert_eq!(doc["mode"], json!("general_form"));
    }

    #[test]
    fn malformed_overrides_are_parse_errors() {
        let mut doc = json!({"a": 1});
        for bad in ["novalue", "=3", "a..b=1", "a.b=2"] {
            let err = apply_override(&mut doc, bad).unwrap_err();
            assert!(err.downcast_ref::<ParseError>().is_some(), "{bad}");
        }
    }
}
