//! Serde model of the scenario JSON document, schema version 1.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "id": "split_four",
//!   "n": 4,
//!   "x0": [1, -1, -1, -1],
//!   "beta": 0.1,
//!   "schedule": { "static": [[0.25, 0.25, 0.25, 0.25], ...] },
//!   "kind": "stubborn_neutral",
//!   "stop": { "max_steps": 1000000, "consensus_epsilon": 1e-9 },
//!   "seed": 0
//! }
//! ```
//!
//! `x0` is either a list of opinions or `{"uniform": {"lo": .., "hi": ..}}`.
//! `schedule` is one of `static`, `periodic`, `seeded_random`,
//! `random_strongly_connected` or `random_periodic`. `kind` is one of
//! `"degroot"`, `"stubborn_positive"`, `"stubborn_neutral"`,
//! `"stubborn_extremist"` or `{"constant": [..]}`. Unknown fields are
//! rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Target, DEFAULT_CONSENSUS_EPSILON, DEFAULT_MAX_STEPS};

pub const SCHEMA_VERSION: u32 = 1;
/// Floor used when a document does not declare `beta`.
pub const DEFAULT_BETA: f64 = 1e-6;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub x0: InitialSpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub schedule: ScheduleSpec,
    /// Caps the number of steps the schedule serves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub kind: KindSpec,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Values(Vec<f64>),
    Generated(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub uniform: Interval,
}

/// Sampling interval. Samples fall strictly inside; `lo == hi` gives a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Static(Rows),
    Periodic(Vec<Rows>),
    SeededRandom {
        pool: Vec<Rows>,
        /// Defaults to a stream derived from the scenario seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// One generated strongly connected matrix, used at every step.
    RandomStronglyConnected {
        edge_probability: f64,
    },
    /// `matrices` generated matrices cycled periodically; none needs to be
    /// strongly connected, their union is.
    RandomPeriodic {
        matrices: usize,
        edge_probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Degroot,
    Constant(Vec<f64>),
    StubbornPositive,
    StubbornNeutral,
    StubbornExtremist,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_epsilon")]
    pub consensus_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

fn default_epsilon() -> f64 {
    DEFAULT_CONSENSUS_EPSILON
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            max_steps: DEFAULT_MAX_STEPS,
            consensus_epsilon: DEFAULT_CONSENSUS_EPSILON,
            target: None,
        }
    }
}
