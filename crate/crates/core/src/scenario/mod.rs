//! Experiments: loading and resolving scenario documents, running them, and
//! writing trajectories and run summaries.

mod generate;
pub mod schema;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use generate::{generate_initial, random_jointly_connected, random_strongly_connected};
pub use schema::{
    GeneratorSpec, InitialSpec, Interval, KindSpec, ScenarioDocument, ScheduleSpec, StopSpec, DEFAULT_BETA,
    SCHEMA_VERSION,
};

use crate::analysis::{
    check_lemmas, classify_limit, detect_consensus, estimate_rate, LemmaReport, LimitClassification, RateEstimate,
};
use crate::dynamics::{
    simulate, DynamicsError, OpinionVector, StopReason, StopRule, SusceptibilityKind, TrajectoryRecord,
};
use crate::graph::{is_repeatedly_jointly_connected, GraphError, GraphSchedule, ScheduleKind, WeightMatrix};
use crate::rng;

/// Longest horizon searched when judging connectivity of a random schedule.
pub const CONNECTIVITY_SEARCH_HORIZON: usize = 256;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("matrix {index}: {source}")]
    Matrix {
        index: usize,
        #[source]
        source: GraphError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("susceptibility {0:?} has no scenario representation")]
    Unrepresentable(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ScenarioError {
    pub fn is_io(&self) -> bool {
        matches!(self, ScenarioError::Io { .. })
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub x0: OpinionVector,
    pub schedule: GraphSchedule,
    pub kind: SusceptibilityKind,
    pub stop: StopRule,
    pub seed: u64,
}

/// Parses a document, rejecting unknown fields with their path.
pub fn parse_document(text: &str) -> Result<ScenarioDocument, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::schema(path, e.into_inner().to_string())
    })
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_document(&parse_document(text)?)
}

pub fn read_document(path: &Path) -> Result<ScenarioDocument, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_document(&text)
}

fn matrix(rows: &[Vec<f64>], n: usize, beta: f64, index: usize) -> Result<WeightMatrix, ScenarioError> {
    let w = WeightMatrix::new(rows.to_vec(), beta).map_err(|source| ScenarioError::Matrix { index, source })?;
    if w.n() != n {
        return Err(ScenarioError::Matrix {
            index,
            source: GraphError::VertexCountMismatch {
                expected: n,
                found: w.n(),
            },
        });
    }
    Ok(w)
}

fn matrices(list: &[Vec<Vec<f64>>], n: usize, beta: f64) -> Result<Vec<WeightMatrix>, ScenarioError> {
    list.iter()
        .enumerate()
        .map(|(index, rows)| matrix(rows, n, beta, index))
        .collect()
}

impl Scenario {
    pub fn from_document(doc: &ScenarioDocument) -> Result<Self, ScenarioError> {
        if doc.schema != SCHEMA_VERSION {
            return Err(ScenarioError::schema(
                "schema",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", doc.schema),
            ));
        }
        let n = doc.n;
        if n < 2 {
            return Err(ScenarioError::schema(
                "n",
                format!("at least 2 agents are required, got {n}"),
            ));
        }
        if !(doc.beta.is_finite() && doc.beta > 0.0) {
            return Err(ScenarioError::schema(
                "beta",
                format!("must be positive, got {}", doc.beta),
            ));
        }

        let x0 = match &doc.x0 {
            InitialSpec::Values(values) => {
                if values.len() != n {
                    return Err(ScenarioError::schema(
                        "x0",
                        format!("expected {n} opinions, found {}", values.len()),
                    ));
                }
                if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
                    return Err(ScenarioError::schema(
                        format!("x0[{k}]"),
                        format!("opinion {v} is outside [-1, 1]"),
                    ));
                }
                OpinionVector::new(values.clone())?
            }
            InitialSpec::Generated(g) => generate_initial(g.uniform, n, doc.seed)?,
        };

        let schedule_kind = match &doc.schedule {
            ScheduleSpec::Static(rows) => ScheduleKind::Static(matrix(rows, n, doc.beta, 0)?),
            ScheduleSpec::Periodic(list) => ScheduleKind::Periodic(matrices(list, n, doc.beta)?),
            ScheduleSpec::SeededRandom { pool, seed } => ScheduleKind::SeededRandom {
                pool: matrices(pool, n, doc.beta)?,
                seed: seed.unwrap_or_else(|| rng::derive_seed(doc.seed, 2)),
            },
            ScheduleSpec::RandomStronglyConnected { edge_probability } => ScheduleKind::Static(
                random_strongly_connected(n, *edge_probability, doc.seed, doc.beta)
                    .map_err(|source| ScenarioError::Matrix { index: 0, source })?,
            ),
            ScheduleSpec::RandomPeriodic {
                matrices,
                edge_probability,
            } => ScheduleKind::Periodic(
                random_jointly_connected(n, *matrices, *edge_probability, doc.seed, doc.beta)
                    .map_err(|source| ScenarioError::Matrix { index: 0, source })?,
            ),
        };
        let schedule = GraphSchedule::new(schedule_kind)
            .map_err(|e| ScenarioError::schema("schedule", e.to_string()))?
            .with_horizon(doc.horizon);

        let kind = match &doc.kind {
            KindSpec::Degroot => SusceptibilityKind::DeGroot,
            KindSpec::StubbornPositive => SusceptibilityKind::StubbornPositive,
            KindSpec::StubbornNeutral => SusceptibilityKind::StubbornNeutral,
            KindSpec::StubbornExtremist => SusceptibilityKind::StubbornExtremist,
            KindSpec::Constant(lambdas) => {
                if lambdas.len() != n {
                    return Err(ScenarioError::schema(
                        "kind.constant",
                        format!("expected {n} values, found {}", lambdas.len()),
                    ));
                }
                if let Some((k, v)) = lambdas.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                    return Err(ScenarioError::schema(
                        format!("kind.constant[{k}]"),
                        format!("susceptibility {v} is outside [0, 1]"),
                    ));
                }
                SusceptibilityKind::constant(lambdas.clone())?
            }
        };

        let stop = StopRule {
            max_steps: doc.stop.max_steps,
            consensus_epsilon: doc.stop.consensus_epsilon,
            target: doc.stop.target,
        };
        stop.validate()
            .map_err(|e| ScenarioError::schema("stop", e.to_string()))?;

        Ok(Scenario {
            id: doc.id.clone().unwrap_or_else(|| "scenario".to_string()),
            x0,
            schedule,
            kind,
            stop,
            seed: doc.seed,
        })
    }

    /// Explicit document for this scenario: generated opinions and matrices
    /// are written out as values, so reloading needs no generator.
    pub fn to_document(&self) -> Result<ScenarioDocument, ScenarioError> {
        let kind = match &self.kind {
            SusceptibilityKind::DeGroot => KindSpec::Degroot,
            SusceptibilityKind::StubbornPositive => KindSpec::StubbornPositive,
            SusceptibilityKind::StubbornNeutral => KindSpec::StubbornNeutral,
            SusceptibilityKind::StubbornExtremist => KindSpec::StubbornExtremist,
            SusceptibilityKind::Constant(l) => KindSpec::Constant(l.as_slice().to_vec()),
            SusceptibilityKind::Custom(c) => return Err(ScenarioError::Unrepresentable(c.name().to_string())),
        };
        let schedule = match self.schedule.kind() {
            ScheduleKind::Static(w) => ScheduleSpec::Static(w.to_rows()),
            ScheduleKind::Periodic(ms) => ScheduleSpec::Periodic(ms.iter().map(WeightMatrix::to_rows).collect()),
            ScheduleKind::SeededRandom { pool, seed } => ScheduleSpec::SeededRandom {
                pool: pool.iter().map(WeightMatrix::to_rows).collect(),
                seed: Some(*seed),
            },
        };
        Ok(ScenarioDocument {
            schema: SCHEMA_VERSION,
            id: Some(self.id.clone()),
            n: self.x0.len(),
            x0: InitialSpec::Values(self.x0.as_slice().to_vec()),
            beta: self.schedule.beta(),
            schedule,
            horizon: self.schedule.horizon(),
            kind,
            stop: StopSpec {
                max_steps: self.stop.max_steps,
                consensus_epsilon: self.stop.consensus_epsilon,
                target: self.stop.target,
            },
            seed: self.seed,
        })
    }

    /// Whether the schedule is repeatedly jointly strongly connected; exact
    /// for static and periodic schedules, searched for random ones.
    pub fn is_connected(&self) -> bool {
        let horizon = self.stop.max_steps.min(CONNECTIVITY_SEARCH_HORIZON);
        is_repeatedly_jointly_connected(&self.schedule, horizon)
    }

    /// Same scenario under another susceptibility kind.
    pub fn with_kind(&self, kind: SusceptibilityKind) -> Self {
        Scenario { kind, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario_id: String,
    pub kind: String,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub final_state: Vec<f64>,
    /// Present exactly when the run stopped on consensus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus_value: Option<f64>,
    pub connected: bool,
    pub classification: LimitClassification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateEstimate>,
    pub lemma_check: LemmaReport,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, traj: &TrajectoryRecord, connected: bool) -> Self {
        let final_state = traj.final_state().unwrap_or_default().to_vec();
        let consensus_value = match traj.stop_reason() {
            StopReason::Consensus => OpinionVector::new(final_state.clone())
                .ok()
                .and_then(|x| detect_consensus(&x, scenario.stop.consensus_epsilon)),
            _ => None,
        };
        RunSummary {
            scenario_id: scenario.id.clone(),
            kind: scenario.kind.name().to_string(),
            stop_reason: traj.stop_reason(),
            steps: traj.steps(),
            final_state,
            consensus_value,
            connected,
            classification: classify_limit(&scenario.x0, &scenario.kind, connected),
            rate: estimate_rate(traj).ok(),
            lemma_check: check_lemmas(traj),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trajectory: TrajectoryRecord,
    pub summary: RunSummary,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, ScenarioError> {
    let trajectory = simulate(&scenario.x0, &scenario.schedule, &scenario.kind, &scenario.stop)?;
    let summary = RunSummary::new(scenario, &trajectory, scenario.is_connected());
    Ok(ScenarioRun { trajectory, summary })
}

/// Runs independent scenarios in parallel; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<ScenarioRun, ScenarioError>> {
    scenarios.par_iter().map(run_scenario).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, ScenarioError> {
    let io_err = |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ScenarioError> {
    let mut out = create(path)?;
    let io_err = |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io_err(e.into()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err)
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<(), ScenarioError> {
    write_json(summary, path)
}

pub fn write_document(doc: &ScenarioDocument, path: &Path) -> Result<(), ScenarioError> {
    write_json(doc, path)
}

pub fn write_trajectory(traj: &TrajectoryRecord, path: &Path) -> Result<(), ScenarioError> {
    let out = create(path)?;
    traj.write_csv(out).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Outcome;

    const SPLIT_FOUR: &str = r#"{
        "schema": 1,
        "id": "split_four",
        "n": 4,
        "x0": [1, -1, -1, -1],
        "beta": 0.1,
        "schedule": {"static": [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25],
                                [0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]]},
        "kind": "stubborn_neutral"
    }"#;

    #[test]
    fn split_four_document() {
        let s = load_scenario(SPLIT_FOUR).unwrap();
        assert_eq!(s.id, "split_four");
        assert_eq!(s.x0.as_slice(), &[1.0, -1.0, -1.0, -1.0]);
        assert_eq!(s.kind.name(), "stubborn_neutral");
        let run = run_scenario(&s).unwrap();
        assert_eq!(run.summary.stop_reason, StopReason::Consensus);
        assert_eq!(run.summary.steps, 1);
        assert_eq!(run.summary.consensus_value, Some(-0.5));
        assert_eq!(run.summary.classification.outcome, Outcome::Unknown);
        assert!(run.summary.connected);
    }

    #[test]
    fn defaults_are_applied() {
        let s = load_scenario(
            r#"{"schema": 1, "n": 2, "x0": [0.1, 0.2],
                "schedule": {"static": [[0.5, 0.5], [0.5, 0.5]]}, "kind": "degroot"}"#,
        )
        .unwrap();
        assert_eq!(s.stop, StopRule::default());
        assert_eq!(s.stop.max_steps, 1_000_000);
        assert_eq!(s.stop.consensus_epsilon, 1e-9);
        assert_eq!(s.schedule.beta(), DEFAULT_BETA);
        assert_eq!(s.id, "scenario");
    }

    #[test]
    fn out_of_range_opinion_is_named() {
        let text = SPLIT_FOUR.replace("[1, -1, -1, -1]", "[1, -1, 1.5, -1]");
        match load_scenario(&text) {
            Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "x0[2]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_rejected_with_path() {
        let text = SPLIT_FOUR.replace("\"kind\"", "\"stop\": {\"max_step\": 3}, \"kind\"");
        match load_scenario(&text) {
            Err(ScenarioError::Schema { path, message }) => {
                assert_eq!(path, "stop.max_step");
                assert!(message.contains("max_step"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = SPLIT_FOUR.replace("\"kind\"", "\"colour\": 1, \"kind\"");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Schema { .. })));
    }

    #[test]
    fn bad_matrix_reports_its_index() {
        let text = r#"{"schema": 1, "n": 2, "x0": [0.1, 0.2], "beta": 0.1,
            "schedule": {"periodic": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.6], [0.5, 0.5]]]},
            "kind": "degroot"}"#;
        match load_scenario(text) {
            Err(ScenarioError::Matrix {
                index,
                source: GraphError::Invalid(report),
            }) => {
                assert_eq!(index, 1);
                assert_eq!(report.violations.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version() {
        let text = SPLIT_FOUR.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Schema { path, .. }) if path == "schema"));
    }

    #[test]
    fn generated_scenario_round_trips() {
        let text = r#"{"schema": 1, "id": "gen", "n": 7, "x0": {"uniform": {"lo": -1, "hi": 1}},
            "schedule": {"random_periodic": {"matrices": 3, "edge_probability": 0.2}},
            "kind": {"constant": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]}, "seed": 99,
            "stop": {"max_steps": 50, "target": {"value": 0.0, "epsilon": 0.5}}}"#;
        let s = load_scenario(text).unwrap();
        let doc = s.to_document().unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        let back = load_scenario(&json).unwrap();
        assert_eq!(back.to_document().unwrap(), doc);
        assert_eq!(back.schedule, s.schedule);
        assert_eq!(back.x0, s.x0);
    }

    #[test]
    fn max_steps_summary_has_no_consensus() {
        let text = SPLIT_FOUR
            .replace("[1, -1, -1, -1]", "[0.9, -0.1, 0.2, 0.3]")
            .replace("\"kind\"", "\"stop\": {\"max_steps\": 2}, \"kind\"");
        let run = run_scenario(&load_scenario(&text).unwrap()).unwrap();
        assert_eq!(run.summary.stop_reason, StopReason::MaxSteps);
        assert_eq!(run.summary.consensus_value, None);
        let json = serde_json::to_value(&run.summary).unwrap();
        assert!(json.get("consensus_value").is_none());
        assert_eq!(json["stop_reason"], "max_steps");
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let s = load_scenario(&SPLIT_FOUR.replace("[1, -1, -1, -1]", "[0.5, 0.5, 0.5, 0.5]")).unwrap();
        let run = run_scenario(&s).unwrap();
        let csv = dir.path().join("nested/run.csv");
        write_trajectory(&run.trajectory, &csv).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
        let summary = dir.path().join("run.summary.json");
        write_summary(&run.summary, &summary).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
        assert_eq!(v["steps"], 0);
        assert_eq!(v["consensus_value"], 0.5);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let traj = TrajectoryRecord::from_states(vec![vec![0.0, 0.0]], StopReason::Consensus);
        let err = write_trajectory(&traj, &blocker.join("out.csv")).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("file"));
    }
}
