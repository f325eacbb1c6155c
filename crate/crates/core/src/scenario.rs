//! JSON scenario files: initial positions, constraints with targets, and
//! simulation parameters, shared by the CLI and the browser demo.
//!
//! Vertex indices in scenario files are 1-based. Angle targets accept either
//! `target_cos` or `target_deg` (exactly one); degrees are converted to
//! cosines at parse time since the dynamics operate on cosines. Unknown keys
//! are warned about by default and rejected in strict mode.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::Gains;
use crate::dynamics::{Integrator, SimConfig};
use crate::graph::{Configuration, FrameworkSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub i: usize,
    pub j: usize,
    pub target_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleEntry {
    pub apex: usize,
    pub i: usize,
    pub j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_cos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_dist: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Analyze,
    Simulate,
    Montecarlo,
    CheckGradient,
    Equilibrium,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_half: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_col: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    #[serde(rename = "type")]
    pub kind: ExperimentKind,
    #[serde(default)]
    pub parameters: ExperimentParams,
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dimension: usize,
    pub agents: Vec<Vec<f64>>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub angles: Vec<AngleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

/// Everything a subcommand needs, converted to internal types.
#[derive(Debug, Clone)]
pub struct ScenarioInstance {
    pub spec: FrameworkSpec,
    pub initial: Configuration,
    pub sim: SimConfig,
    pub seed: u64,
    pub experiment: Option<ExperimentSection>,
}

const TOP_KEYS: &[&str] = &["dimension", "agents", "edges", "angles", "sim", "experiment"];
const EDGE_KEYS: &[&str] = &["i", "j", "target_sq"];
const ANGLE_KEYS: &[&str] = &["apex", "i", "j", "target_cos", "target_deg"];
const SIM_KEYS: &[&str] = &[
    "dt",
    "t_max",
    "err_tol",
    "gain_dist",
    "gain_angle",
    "seed",
    "integrator",
    "record_every",
];
const EXPERIMENT_KEYS: &[&str] = &["type", "parameters"];
const PARAM_KEYS: &[&str] = &["trials", "samples", "box", "zeta", "tol_col"];

fn scan_object(value: &Value, path: &str, allowed: &[&str], unknown: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                unknown.push(format!("{path}{key}"));
            }
        }
    }
}

fn scan_unknown_keys(root: &Value) -> Vec<String> {
    let mut unknown = Vec::new();
    scan_object(root, "", TOP_KEYS, &mut unknown);
    if let Some(Value::Array(edges)) = root.get("edges") {
        for (idx, entry) in edges.iter().enumerate() {
            scan_object(entry, &format!("edges[{idx}]."), EDGE_KEYS, &mut unknown);
        }
    }
    if let Some(Value::Array(angles)) = root.get("angles") {
        for (idx, entry) in angles.iter().enumerate() {
            scan_object(entry, &format!("angles[{idx}]."), ANGLE_KEYS, &mut unknown);
        }
    }
    if let Some(sim) = root.get("sim") {
        scan_object(sim, "sim.", SIM_KEYS, &mut unknown);
    }
    if let Some(experiment) = root.get("experiment") {
        scan_object(experiment, "experiment.", EXPERIMENT_KEYS, &mut unknown);
        if let Some(params) = experiment.get("parameters") {
            scan_object(params, "experiment.parameters.", PARAM_KEYS, &mut unknown);
        }
    }
    unknown
}

/// Parse a scenario from JSON text. In strict mode unknown keys are an error;
/// otherwise they come back as warnings.
pub fn parse_scenario(text: &str, strict: bool) -> Result<(Scenario, Vec<String>)> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let unknown = scan_unknown_keys(&value);
    if strict && !unknown.is_empty() {
        return Err(Error::Parse(format!("unknown keys: {}", unknown.join(", "))));
    }
    let warnings =
        unknown.into_iter().map(|k| format!("ignoring unknown key `{k}`")).collect();
    Ok((scenario, warnings))
}

impl Scenario {
    /// Convert to internal types, validating the framework on the way.
    pub fn build(&self) -> Result<ScenarioInstance> {
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut edge_targets = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push((e.i, e.j));
            edge_targets.push(e.target_sq);
        }
        let mut angles = Vec::with_capacity(self.angles.len());
        let mut angle_targets = Vec::with_capacity(self.angles.len());
        for (idx, a) in self.angles.iter().enumerate() {
            angles.push((a.apex, a.i, a.j));
            let target = match (a.target_cos, a.target_deg) {
                (Some(c), None) => c,
                (None, Some(deg)) => {
                    if !(deg > 0.0 && deg < 180.0) {
                        return Err(Error::Parse(format!(
                            "angle #{}: target_deg {deg} must lie strictly between 0 and 180",
                            idx + 1
                        )));
                    }
                    deg.to_radians().cos()
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Parse(format!(
                        "angle #{}: give exactly one of target_cos/target_deg, not both",
                        idx + 1
                    )));
                }
                (None, None) => {
                    return Err(Error::Parse(format!(
                        "angle #{}: one of target_cos/target_deg is required",
                        idx + 1
                    )));
                }
            };
            angle_targets.push(target);
        }

        let spec = FrameworkSpec::from_one_based(
            self.agents.len(),
            self.dimension,
            &edges,
            &edge_targets,
            &angles,
            &angle_targets,
        );
        spec.ensure_valid()?;
        let initial = Configuration::from_points(self.dimension, &self.agents)?;

        let defaults = SimConfig::default();
        let section = self.sim.clone().unwrap_or_default();
        let sim = SimConfig {
            dt: section.dt.unwrap_or(defaults.dt),
            t_max: section.t_max.unwrap_or(defaults.t_max),
            err_tol: section.err_tol.unwrap_or(defaults.err_tol),
            integrator: section.integrator.unwrap_or(defaults.integrator),
            record_every: section.record_every.unwrap_or(defaults.record_every),
            gains: Gains::new(
                section.gain_dist.unwrap_or(1.0),
                section.gain_angle.unwrap_or(1.0),
            ),
        };
        sim.validate()?;

        Ok(ScenarioInstance {
            spec,
            initial,
            sim,
            seed: section.seed.unwrap_or(0),
            experiment: self.experiment.clone(),
        })
    }
}

/// Read and build a scenario from a file path.
pub fn load_scenario(path: &std::path::Path, strict: bool) -> Result<(ScenarioInstance, Vec<String>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (scenario, warnings) = parse_scenario(&text, strict)?;
    Ok((scenario.build()?, warnings))
}
