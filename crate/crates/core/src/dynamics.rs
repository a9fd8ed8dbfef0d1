//! The opinion update `x(t+1) = S(x(t), t) x(t)` with
//! `S = I - F(x) + F(x) W(t)`, where `F(x)` is the diagonal of each agent's
//! susceptibility evaluated at her own opinion.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphSchedule, WeightMatrix};

/// Largest accepted deviation of a system-matrix row sum from 1.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_CONSENSUS_EPSILON: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
/// Grid spacing used to range-check user supplied susceptibility functions.
pub const PROBE_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("opinion vector is empty")]
    Empty,
    #[error("opinion {value} at index {index} is outside [-1, 1]")]
    OpinionOutOfRange { index: usize, value: f64 },
    #[error("lambda {value} for agent {index} is outside [0, 1]")]
    LambdaOutOfRange { index: usize, value: f64 },
    #[error("susceptibility {name} evaluates to {value} at x = {x}, outside [0, 1]")]
    SusceptibilityOutOfRange { name: String, x: f64, value: f64 },
    #[error("no susceptibility parameter for agent {index} (kind covers {len} agents)")]
    MissingAgent { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid stop rule: {0}")]
    InvalidStopRule(String),
}

/// Agents' opinions, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct OpinionVector(Vec<f64>);

impl OpinionVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DynamicsError> {
        if values.is_empty() {
            return Err(DynamicsError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
            return Err(DynamicsError::OpinionOutOfRange { index, value });
        }
        Ok(OpinionVector(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self, DynamicsError> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// Per-agent constant susceptibilities, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambdas(Vec<f64>);

impl Lambdas {
    pub fn new(values: Vec<f64>) -> Result<Self, DynamicsError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(DynamicsError::LambdaOutOfRange { index, value });
        }
        Ok(Lambdas(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

type SusceptibilityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user supplied susceptibility shared by all agents.
///
/// Construction probes the function on a grid of spacing
/// [`PROBE_GRID_STEP`] over `[-1, 1]`; evaluation still checks every value.
#[derive(Clone)]
pub struct CustomSusceptibility {
    name: String,
    f: Arc<SusceptibilityFn>,
}

impl CustomSusceptibility {
    pub fn new<F>(name: impl Into<String>, f: F) -> Result<Self, DynamicsError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let points = (2.0 / PROBE_GRID_STEP).round() as usize;
        for k in 0..=points {
            let x = (-1.0 + k as f64 * PROBE_GRID_STEP).clamp(-1.0, 1.0);
            let value = f(x);
            if !(0.0..=1.0).contains(&value) {
                return Err(DynamicsError::SusceptibilityOutOfRange { name, x, value });
            }
        }
        Ok(CustomSusceptibility { name, f: Arc::new(f) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomSusceptibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSusceptibility")
            .field("name", &self.name)
            .finish()
    }
}

/// How an agent's openness to influence depends on her own opinion.
#[derive(Debug, Clone)]
pub enum SusceptibilityKind {
    /// `f = 1`.
    DeGroot,
    /// `f_i = lambda_i`.
    Constant(Lambdas),
    /// `f = (1 - x) / 2`: immovable at `+1`, fully open at `-1`.
    StubbornPositive,
    /// `f = x^2`: immovable at `0`, fully open at `+-1`.
    StubbornNeutral,
    /// `f = 1 - x^2`: immovable at `+-1`.
    StubbornExtremist,
    Custom(CustomSusceptibility),
}

impl SusceptibilityKind {
    pub fn constant(lambdas: Vec<f64>) -> Result<Self, DynamicsError> {
        Lambdas::new(lambdas).map(SusceptibilityKind::Constant)
    }

    pub fn name(&self) -> &str {
        match self {
            SusceptibilityKind::DeGroot => "degroot",
            SusceptibilityKind::Constant(_) => "constant",
            SusceptibilityKind::StubbornPositive => "stubborn_positive",
            SusceptibilityKind::StubbornNeutral => "stubborn_neutral",
            SusceptibilityKind::StubbornExtremist => "stubborn_extremist",
            SusceptibilityKind::Custom(c) => c.name(),
        }
    }

    /// Agents the kind has parameters for; `None` if it applies to any count.
    pub fn agent_count(&self) -> Option<usize> {
        match self {
            SusceptibilityKind::Constant(l) => Some(l.0.len()),
            _ => None,
        }
    }

    pub fn evaluate(&self, agent: usize, x: f64) -> Result<f64, DynamicsError> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(DynamicsError::OpinionOutOfRange { index: agent, value: x });
        }
        let value = match self {
            SusceptibilityKind::DeGroot => 1.0,
            SusceptibilityKind::Constant(l) => *l.0.get(agent).ok_or(DynamicsError::MissingAgent {
                index: agent,
                len: l.0.len(),
            })?,
            SusceptibilityKind::StubbornPositive => 0.5 * (1.0 - x),
            SusceptibilityKind::StubbornNeutral => x * x,
            SusceptibilityKind::StubbornExtremist => 1.0 - x * x,
            SusceptibilityKind::Custom(c) => {
                let value = (c.f)(x);
                if !(0.0..=1.0).contains(&value) {
                    return Err(DynamicsError::SusceptibilityOutOfRange {
                        name: c.name.clone(),
                        x,
                        value,
                    });
                }
                value
            }
        };
        Ok(value)
    }

    fn check_agents(&self, n: usize) -> Result<(), DynamicsError> {
        match self.agent_count() {
            Some(len) if len != n => Err(DynamicsError::DimensionMismatch {
                expected: n,
                found: len,
            }),
            _ => Ok(()),
        }
    }
}

/// Susceptibility of agent `agent` holding opinion `x`.
pub fn susceptibility(kind: &SusceptibilityKind, agent: usize, x: f64) -> Result<f64, DynamicsError> {
    kind.evaluate(agent, x)
}

/// The one-step transition `S(x, t)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SystemMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `max_i |sum_j s_ij - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.entries
            .chunks(self.n)
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().zip(x).map(|(s, v)| s * v).sum())
            .collect()
    }
}

fn check_dims(x: &OpinionVector, w: &WeightMatrix, kind: &SusceptibilityKind) -> Result<(), DynamicsError> {
    if x.len() != w.n() {
        return Err(DynamicsError::DimensionMismatch {
            expected: w.n(),
            found: x.len(),
        });
    }
    kind.check_agents(w.n())
}

/// Builds `S = I - F(x) + F(x) W` row by row without forming the diagonals.
pub fn system_matrix(
    x: &OpinionVector,
    w: &WeightMatrix,
    kind: &SusceptibilityKind,
) -> Result<SystemMatrix, DynamicsError> {
    check_dims(x, w, kind)?;
    let n = w.n();
    let mut entries = Vec::with_capacity(n * n);
    for (i, &xi) in x.as_slice().iter().enumerate() {
        let f = kind.evaluate(i, xi)?;
        entries.extend(w.row(i).iter().map(|&wij| f * wij));
        entries[i * n + i] += 1.0 - f;
    }
    Ok(SystemMatrix { n, entries })
}

/// One update, computed agent-wise as `x_i + f_i(x_i) sum_j w_ij (x_j - x_i)`.
///
/// Each new opinion is a convex combination of the old ones, so the result
/// is clamped to `[min x, max x]`; this only ever removes rounding error.
pub fn step(x: &OpinionVector, w: &WeightMatrix, kind: &SusceptibilityKind) -> Result<OpinionVector, DynamicsError> {
    check_dims(x, w, kind)?;
    step_unchecked(x.as_slice(), w, kind).map(OpinionVector)
}

fn step_unchecked(x: &[f64], w: &WeightMatrix, kind: &SusceptibilityKind) -> Result<Vec<f64>, DynamicsError> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let f = kind.evaluate(i, xi)?;
            let influence: f64 = w.row(i).iter().zip(x).map(|(wij, xj)| wij * (xj - xi)).sum();
            Ok((xi + f * influence).clamp(lo, hi))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub epsilon: f64,
}

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_steps: usize,
    /// Stop once `max - min` falls below this.
    pub consensus_epsilon: f64,
    /// Stop once every agent is within `epsilon` of `value`. Meant for limits
    /// approached too slowly for the consensus test to be practical.
    pub target: Option<Target>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_steps: DEFAULT_MAX_STEPS,
            consensus_epsilon: DEFAULT_CONSENSUS_EPSILON,
            target: None,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.max_steps == 0 {
            return Err(DynamicsError::InvalidStopRule("max_steps must be at least 1".into()));
        }
        if self.consensus_epsilon.is_nan() || self.consensus_epsilon <= 0.0 {
            return Err(DynamicsError::InvalidStopRule(
                "consensus_epsilon must be positive".into(),
            ));
        }
        if let Some(t) = self.target {
            if t.epsilon.is_nan() || t.epsilon <= 0.0 || !t.value.is_finite() {
                return Err(DynamicsError::InvalidStopRule(
                    "target needs a finite value and a positive epsilon".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Consensus,
    TargetReached,
    MaxSteps,
    /// A schedule with a horizon ran out before any other rule fired.
    ScheduleExhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Consensus => "consensus",
            StopReason::TargetReached => "target_reached",
            StopReason::MaxSteps => "max_steps",
            StopReason::ScheduleExhausted => "schedule_exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub state: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

impl TrajectoryRow {
    pub fn new(t: usize, state: Vec<f64>) -> Self {
        let min = state.iter().copied().fold(f64::INFINITY, f64::min);
        let max = state.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TrajectoryRow {
            t,
            state,
            min,
            max,
            spread: max - min,
        }
    }
}

/// States `x(0), x(1), ...` with per-step extremes and the stop reason.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    rows: Vec<TrajectoryRow>,
    stop_reason: StopReason,
}

impl TrajectoryRecord {
    /// Builds a record from raw states, numbered from `t = 0`. No range
    /// checks are made, so hand-made records can exercise the lemma checker.
    pub fn from_states(states: Vec<Vec<f64>>, stop_reason: StopReason) -> Self {
        let rows = states
            .into_iter()
            .enumerate()
            .map(|(t, s)| TrajectoryRow::new(t, s))
            .collect();
        TrajectoryRecord { rows, stop_reason }
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop_reason
    }

    /// Number of updates performed.
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn initial_state(&self) -> Option<&[f64]> {
        self.rows.first().map(|r| r.state.as_slice())
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.state.as_slice())
    }

    pub fn spreads(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().map(|r| (r.t, r.spread))
    }

    /// CSV with header `t,x_1,...,x_n,spread`, values at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        let n = self.rows.first().map_or(0, |r| r.state.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("spread".into());
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut record = Vec::with_capacity(n + 2);
            record.push(row.t.to_string());
            record.extend(row.state.iter().map(|v| format!("{v:.16e}")));
            record.push(format!("{:.16e}", row.spread));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Last state of a run that did not keep its history.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalState {
    pub state: OpinionVector,
    pub steps: usize,
    pub stop_reason: StopReason,
}

fn stop_check(state: &[f64], t: usize, stop: &StopRule) -> Option<StopReason> {
    let lo = state.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = state.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < stop.consensus_epsilon {
        return Some(StopReason::Consensus);
    }
    if let Some(target) = stop.target {
        if state.iter().all(|v| (v - target.value).abs() < target.epsilon) {
            return Some(StopReason::TargetReached);
        }
    }
    (t >= stop.max_steps).then_some(StopReason::MaxSteps)
}

fn iterate<F>(
    x0: &OpinionVector,
    schedule: &GraphSchedule,
    kind: &SusceptibilityKind,
    stop: &StopRule,
    mut observe: F,
) -> Result<FinalState, DynamicsError>
where
    F: FnMut(usize, &[f64]),
{
    stop.validate()?;
    if x0.len() != schedule.n() {
        return Err(DynamicsError::DimensionMismatch {
            expected: schedule.n(),
            found: x0.len(),
        });
    }
    kind.check_agents(schedule.n())?;
    let mut state = x0.as_slice().to_vec();
    let mut t = 0;
    loop {
        observe(t, &state);
        let reason = match stop_check(&state, t, stop) {
            Some(reason) => Some(reason),
            None => match schedule.matrix_at(t) {
                Some(w) => {
                    state = step_unchecked(&state, w, kind)?;
                    t += 1;
                    None
                }
                None => Some(StopReason::ScheduleExhausted),
            },
        };
        if let Some(stop_reason) = reason {
            return Ok(FinalState {
                state: OpinionVector(state),
                steps: t,
                stop_reason,
            });
        }
    }
}

/// Iterates the update from `x0` and records every state.
pub fn simulate(
    x0: &OpinionVector,
    schedule: &GraphSchedule,
    kind: &SusceptibilityKind,
    stop: &StopRule,
) -> Result<TrajectoryRecord, DynamicsError> {
    let mut rows = Vec::new();
    let end = iterate(x0, schedule, kind, stop, |t, s| {
        rows.push(TrajectoryRow::new(t, s.to_vec()))
    })?;
    Ok(TrajectoryRecord {
        rows,
        stop_reason: end.stop_reason,
    })
}

/// Same iteration as [`simulate`] without keeping the history.
pub fn run_to_stop(
    x0: &OpinionVector,
    schedule: &GraphSchedule,
    kind: &SusceptibilityKind,
    stop: &StopRule,
) -> Result<FinalState, DynamicsError> {
    iterate(x0, schedule, kind, stop, |_, _| {})
}
