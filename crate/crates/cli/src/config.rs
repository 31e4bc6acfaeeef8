//! JSON scenario files. Angles are in degrees here and radians everywhere
//! else.

use std::path::Path;

use ambiform::beamform::BeamformOptions;
use ambiform::gating::{confusion_table, ConfusionMethod};
use ambiform::graph::threshold_graph;
use ambiform::scene::{AntennaArray, Target};
use ambiform::{AmbiguityGraph, Scene};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArraySpec,
    pub targets: Vec<TargetSpec>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayType {
    Ula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    #[serde(rename = "type")]
    pub kind: ArrayType,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub azimuth_deg: f64,
    pub tau_mean: f64,
    pub omega_mean: f64,
    pub tau_std: f64,
    pub omega_std: f64,
    #[serde(default = "one")]
    pub rcs_re: f64,
    #[serde(default)]
    pub rcs_im: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Complete,
    Empty,
    Path,
    Threshold,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub mode: GraphMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub delta: f64,
    pub kkt_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub sdp_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = BeamformOptions::<f64>::default();
        Self {
            delta: d.interference_bound,
            kkt_tolerance: d.kkt_tolerance,
            feasibility_tolerance: d.feasibility_tolerance,
            sdp_tolerance: d.sdp.tolerance,
            max_iterations: d.sdp.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub noise_std: f64,
    /// Detection threshold; `None` picks `1e-7` without noise and
    /// `4·noise_std` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub bandwidth: f64,
    pub duration: f64,
    pub ideal: bool,
    /// True `(tau, omega)` per target; prior means when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<(f64, f64)>>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            noise_std: 0.0,
            threshold: None,
            seed: 0,
            samples: 100_000,
            bandwidth: 100.0,
            duration: 1.0,
            ideal: true,
            truth: None,
        }
    }
}

impl SimulationSpec {
    pub fn detection_threshold(&self) -> f64 {
        self.threshold
            .unwrap_or(if self.noise_std > 0.0 { 4.0 * self.noise_std } else { 1e-7 })
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("malformed scenario: {e}")))
    }

    pub fn scene(&self) -> Result<Scene, Failure> {
        let array = match self.array.kind {
            ArrayType::Ula => AntennaArray::ula(self.array.n),
        }
        .map_err(Failure::config_from)?;
        let targets = self
            .targets
            .iter()
            .map(|t| {
                Target::new(t.azimuth_deg.to_radians(), t.tau_mean, t.omega_mean, t.tau_std, t.omega_std)
                    .with_rcs(Complex::new(t.rcs_re, t.rcs_im))
            })
            .collect();
        Scene::new(array, targets).map_err(Failure::config_from)
    }

    pub fn confusion_method(&self, samples: usize, seed: u64) -> ConfusionMethod {
        ConfusionMethod::Auto { samples, seed }
    }

    /// Resolves the graph spec; a `gamma` override forces threshold mode.
    pub fn graph(&self, scene: &Scene, gamma: Option<f64>) -> Result<AmbiguityGraph, Failure> {
        let k = scene.n_targets();
        let mode = if gamma.is_some() { GraphMode::Threshold } else { self.graph.mode };
        Ok(match mode {
            GraphMode::Complete => AmbiguityGraph::complete(k),
            GraphMode::Empty => AmbiguityGraph::empty(k),
            GraphMode::Path => AmbiguityGraph::path(k),
            GraphMode::Explicit => AmbiguityGraph::from_edges(k, &self.graph.edges).map_err(Failure::config_from)?,
            GraphMode::Threshold => {
                let gamma = gamma
                    .or(self.graph.gamma)
                    .ok_or_else(|| Failure::config("threshold graph mode needs `gamma`"))?;
                let method = self.confusion_method(self.simulation.samples, self.simulation.seed);
                let table = confusion_table(scene, method).map_err(Failure::config_from)?;
                threshold_graph(&table, gamma)
            }
        })
    }

    pub fn beamform_options(&self, delta: Option<f64>) -> Result<BeamformOptions<f64>, Failure> {
        let s = &self.solver;
        let delta = delta.unwrap_or(s.delta);
        if !(delta >= 0.0) || !(s.kkt_tolerance > 0.0) || !(s.sdp_tolerance > 0.0) || s.max_iterations == 0 {
            return Err(Failure::config("solver tolerances must be positive and delta non-negative"));
        }
        let mut options = BeamformOptions::default();
        options.interference_bound = delta;
        options.kkt_tolerance = s.kkt_tolerance;
        options.feasibility_tolerance = s.feasibility_tolerance;
        options.sdp.tolerance = s.sdp_tolerance;
        options.sdp.max_iterations = s.max_iterations;
        Ok(options)
    }

    /// The same scenario with the graph written out edge by edge.
    pub fn canonical(&self, graph: &AmbiguityGraph) -> Self {
        let mut out = self.clone();
        out.graph = GraphSpec {
            mode: GraphMode::Explicit,
            gamma: None,
            edges: graph.edges().collect(),
        };
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "array": {"type": "ula", "N": 3},
        "targets": [
            {"azimuth_deg": -60, "tau_mean": 0, "omega_mean": 0, "tau_std": 1, "omega_std": 1},
            {"azimuth_deg": 0, "tau_mean": 1, "omega_mean": 0, "tau_std": 1, "omega_std": 1},
            {"azimuth_deg": 60, "tau_mean": 2, "omega_mean": 0, "tau_std": 1, "omega_std": 1}
        ],
        "graph": {"mode": "path"}
    }"#;

    #[test]
    fn parses_minimal_scenario() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        let scene = cfg.scene().unwrap();
        assert_eq!(scene.n_targets(), 3);
        assert!((scene.targets()[0].azimuth + std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert_eq!(cfg.graph(&scene, None).unwrap(), AmbiguityGraph::path(3));
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = SAMPLE.replace("\"mode\": \"path\"", "\"mode\": \"path\", \"colour\": 1");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().code, 2);
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        let scene = cfg.scene().unwrap();
        let graph = cfg.graph(&scene, Some(0.9)).unwrap();
        let canon = cfg.canonical(&graph);
        let again = ScenarioConfig::parse(&serde_json::to_string(&canon).unwrap()).unwrap();
        assert_eq!(again, canon);
        assert_eq!(again.scene().unwrap(), scene);
        assert_eq!(again.graph(&scene, None).unwrap(), graph);
    }

    #[test]
    fn threshold_without_gamma_is_a_config_error() {
        let cfg = ScenarioConfig::parse(&SAMPLE.replace("path", "threshold")).unwrap();
        let scene = cfg.scene().unwrap();
        assert_eq!(cfg.graph(&scene, None).unwrap_err().code, 2);
    }
}
