//! Trajectory checks, consensus detection, limit classification, rate fits
//! and the spectral consensus value of fixed-graph DeGroot dynamics.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{OpinionVector, SusceptibilityKind, TrajectoryRecord};
use crate::graph::{graph_of_matrix, is_strongly_connected, WeightMatrix};

/// Tolerance for the interval and monotone-extreme checks.
pub const LEMMA_SLACK: f64 = 1e-12;
/// Spreads at or below this are float noise and are left out of rate fits.
pub const RATE_FLOOR: f64 = 1e2 * f64::EPSILON;
pub const MIN_RATE_POINTS: usize = 10;
/// Residual `|c^T W - c^T|_inf` at which power iteration stops.
pub const SPECTRAL_RESIDUAL: f64 = 1e-12;
pub const SPECTRAL_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("the graph of W is not strongly connected")]
    NotStronglyConnected,
    #[error("power iteration stopped after {iterations} iterations with residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("{usable} steps have spread above the noise floor, {required} are needed")]
    InsufficientSteps { usable: usize, required: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// First step index at which each property fails, if any.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    /// Some opinion left `[-1, 1]`.
    pub interval: Option<usize>,
    /// The smallest opinion decreased.
    pub min_monotone: Option<usize>,
    /// The largest opinion increased.
    pub max_monotone: Option<usize>,
}

impl LemmaReport {
    pub fn is_clean(&self) -> bool {
        self.interval.is_none() && self.min_monotone.is_none() && self.max_monotone.is_none()
    }
}

pub fn check_lemmas(traj: &TrajectoryRecord) -> LemmaReport {
    let mut report = LemmaReport::default();
    let rows = traj.rows();
    for (k, row) in rows.iter().enumerate() {
        if report.interval.is_none() && row.state.iter().any(|v| v.is_nan() || v.abs() > 1.0 + LEMMA_SLACK) {
            report.interval = Some(row.t);
        }
        if k == 0 {
            continue;
        }
        let prev = &rows[k - 1];
        if report.min_monotone.is_none() && row.min < prev.min - LEMMA_SLACK {
            report.min_monotone = Some(row.t);
        }
        if report.max_monotone.is_none() && row.max > prev.max + LEMMA_SLACK {
            report.max_monotone = Some(row.t);
        }
    }
    report
}

/// The mean opinion, if the spread is below `epsilon`.
pub fn detect_consensus(x: &OpinionVector, epsilon: f64) -> Option<f64> {
    (x.spread() < epsilon).then(|| x.mean())
}

/// Predicted limit of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    ConsensusAtOne,
    ConsensusAtMinusOne,
    ConsensusAtZero,
    /// All initial opinions already agree on a value other than -1, 0, 1.
    ConsensusAtValue {
        value: f64,
    },
    ConsensusInOpenInterval {
        lo: f64,
        hi: f64,
    },
    Unknown,
}

impl Outcome {
    /// Whether a simulated consensus value agrees with the prediction.
    /// Points match within `tol`; intervals must contain the value strictly.
    /// `None` for [`Outcome::Unknown`].
    pub fn admits(&self, value: f64, tol: f64) -> Option<bool> {
        let point = |p: f64| Some((value - p).abs() <= tol);
        match *self {
            Outcome::ConsensusAtOne => point(1.0),
            Outcome::ConsensusAtMinusOne => point(-1.0),
            Outcome::ConsensusAtZero => point(0.0),
            Outcome::ConsensusAtValue { value: v } => point(v),
            Outcome::ConsensusInOpenInterval { lo, hi } => Some(lo < value && value < hi),
            Outcome::Unknown => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::ConsensusAtOne => write!(f, "ConsensusAtOne"),
            Outcome::ConsensusAtMinusOne => write!(f, "ConsensusAtMinusOne"),
            Outcome::ConsensusAtZero => write!(f, "ConsensusAtZero"),
            Outcome::ConsensusAtValue { value } => write!(f, "ConsensusAtValue({value})"),
            Outcome::ConsensusInOpenInterval { lo, hi } => write!(f, "ConsensusInOpenInterval({lo}, {hi})"),
            Outcome::Unknown => write!(f, "Unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitClassification {
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Which convergence result was applied, in words.
    pub basis: String,
}

impl LimitClassification {
    fn new(outcome: Outcome, basis: &str) -> Self {
        LimitClassification {
            outcome,
            basis: basis.to_string(),
        }
    }
}

impl fmt::Display for LimitClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.outcome, self.basis)
    }
}

pub const BASIS_NOT_CONNECTED: &str =
    "no prediction: the neighbor graphs are not known to be repeatedly jointly strongly connected";
pub const BASIS_ALREADY_AGREED: &str = "all initial opinions are equal, and consensus states are fixed points";
pub const BASIS_NO_RESULT: &str = "no prediction: no convergence result covers this susceptibility";
pub const BASIS_POSITIVE_ALL_MINUS_ONE: &str =
    "stubborn positives: consensus at -1 if and only if every initial opinion is -1";
pub const BASIS_POSITIVE_ONE_PRESENT: &str =
    "stubborn positives: an initial opinion at 1 is never abandoned, so everyone converges to 1";
pub const BASIS_POSITIVE_BELOW_ONE: &str = "stubborn positives: all initial opinions below 1 and not all -1 \
     give exponential consensus in [-1, 1), never at -1";
pub const BASIS_NEUTRAL_ALL_ONE: &str = "stubborn neutrals: consensus at 1 if and only if every initial opinion is 1";
pub const BASIS_NEUTRAL_ALL_MINUS_ONE: &str =
    "stubborn neutrals: consensus at -1 if and only if every initial opinion is -1";
pub const BASIS_NEUTRAL_POSITIVE: &str =
    "stubborn neutrals: all initial opinions positive, not all 1, give consensus in (0, 1)";
pub const BASIS_NEUTRAL_NEGATIVE: &str =
    "stubborn neutrals: all initial opinions negative, not all -1, give consensus in (-1, 0)";
pub const BASIS_NEUTRAL_ZERO: &str =
    "stubborn neutrals: an initial opinion at 0 never moves, so everyone converges to 0";
pub const BASIS_NEUTRAL_MIXED: &str = "no prediction: stubborn neutrals with opinions of both signs and none at 0 \
     can agree on a positive, negative or zero value depending on the graph";

fn point_outcome(value: f64) -> Outcome {
    if value == 1.0 {
        Outcome::ConsensusAtOne
    } else if value == -1.0 {
        Outcome::ConsensusAtMinusOne
    } else if value == 0.0 {
        Outcome::ConsensusAtZero
    } else {
        Outcome::ConsensusAtValue { value }
    }
}

/// Predicts the consensus value from the initial opinions alone.
///
/// `rjsc` states that the neighbor graphs are repeatedly jointly strongly
/// connected; without it nothing is predicted. Apart from the all-equal case
/// only the stubborn-positive and stubborn-neutral kinds have results:
///
/// | kind | initial opinions | outcome |
/// |---|---|---|
/// | positive | all `-1` | `-1` |
/// | positive | some `1` | `1` |
/// | positive | all `< 1`, not all `-1` | `(-1, 1)` |
/// | neutral | all `1` / all `-1` | `1` / `-1` |
/// | neutral | some `0` | `0` |
/// | neutral | all `> 0` / all `< 0` | `(0, 1)` / `(-1, 0)` |
/// | neutral | mixed signs, no `0` | unknown |
pub fn classify_limit(x0: &OpinionVector, kind: &SusceptibilityKind, rjsc: bool) -> LimitClassification {
    use Outcome::*;
    if !rjsc {
        return LimitClassification::new(Unknown, BASIS_NOT_CONNECTED);
    }
    let x = x0.as_slice();
    if x.iter().all(|&v| v == x[0]) {
        return LimitClassification::new(point_outcome(x[0]), BASIS_ALREADY_AGREED);
    }
    match kind {
        SusceptibilityKind::StubbornPositive => {
            if x.contains(&1.0) {
                LimitClassification::new(ConsensusAtOne, BASIS_POSITIVE_ONE_PRESENT)
            } else {
                // Not all -1 here: that case was caught as all-equal.
                LimitClassification::new(ConsensusInOpenInterval { lo: -1.0, hi: 1.0 }, BASIS_POSITIVE_BELOW_ONE)
            }
        }
        SusceptibilityKind::StubbornNeutral => {
            if x.contains(&0.0) {
                LimitClassification::new(ConsensusAtZero, BASIS_NEUTRAL_ZERO)
            } else if x.iter().all(|&v| v > 0.0) {
                LimitClassification::new(ConsensusInOpenInterval { lo: 0.0, hi: 1.0 }, BASIS_NEUTRAL_POSITIVE)
            } else if x.iter().all(|&v| v < 0.0) {
                LimitClassification::new(ConsensusInOpenInterval { lo: -1.0, hi: 0.0 }, BASIS_NEUTRAL_NEGATIVE)
            } else {
                LimitClassification::new(Unknown, BASIS_NEUTRAL_MIXED)
            }
        }
        _ => LimitClassification::new(Unknown, BASIS_NO_RESULT),
    }
}

/// Normalized left eigenvector of `W` at eigenvalue 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryVector {
    pub weights: Vec<f64>,
    /// `|c^T W - c^T|_inf` of the returned vector.
    pub residual: f64,
    pub iterations: usize,
}

fn left_multiply(c: &[f64], w: &WeightMatrix) -> Vec<f64> {
    let n = w.n();
    let mut out = vec![0.0; n];
    for (i, &ci) in c.iter().enumerate() {
        for (o, wij) in out.iter_mut().zip(w.row(i)) {
            *o += ci * wij;
        }
    }
    out
}

fn residual(c: &[f64], w: &WeightMatrix) -> f64 {
    left_multiply(c, w)
        .iter()
        .zip(c)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Power iteration `c <- W^T c` from `1/n`, renormalized to sum 1 each round.
///
/// Requires a strongly connected neighbor graph. Self-loops make `W`
/// aperiodic as well, so the iteration converges.
pub fn left_stationary_vector(w: &WeightMatrix) -> Result<StationaryVector, AnalysisError> {
    if !is_strongly_connected(&graph_of_matrix(w)) {
        return Err(AnalysisError::NotStronglyConnected);
    }
    let n = w.n();
    let mut c = vec![1.0 / n as f64; n];
    let mut res = residual(&c, w);
    let mut iterations = 0;
    while res > SPECTRAL_RESIDUAL {
        if iterations >= SPECTRAL_MAX_ITERATIONS {
            return Err(AnalysisError::NotConverged {
                iterations,
                residual: res,
            });
        }
        let next = left_multiply(&c, w);
        let total: f64 = next.iter().sum();
        c = next.into_iter().map(|v| v / total).collect();
        res = residual(&c, w);
        iterations += 1;
    }
    Ok(StationaryVector {
        weights: c,
        residual: res,
        iterations,
    })
}

/// The limit `c^T x0` of DeGroot dynamics on the fixed matrix `W`.
pub fn degroot_consensus_value(w: &WeightMatrix, x0: &OpinionVector) -> Result<f64, AnalysisError> {
    if x0.len() != w.n() {
        return Err(AnalysisError::DimensionMismatch {
            expected: w.n(),
            found: x0.len(),
        });
    }
    let c = left_stationary_vector(w)?;
    Ok(c.weights.iter().zip(x0.as_slice()).map(|(a, b)| a * b).sum())
}

/// Geometric fit `spread(t) ~ A rho^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rho: f64,
    pub r_squared: f64,
    /// Steps that entered the fit.
    pub points: usize,
}

/// Least-squares slope of `ln(spread)` against `t` over the steps whose
/// spread exceeds [`RATE_FLOOR`]; `rho = exp(slope)`.
pub fn estimate_rate(traj: &TrajectoryRecord) -> Result<RateEstimate, AnalysisError> {
    let points: Vec<(f64, f64)> = traj
        .spreads()
        .filter(|&(_, s)| s > RATE_FLOOR)
        .map(|(t, s)| (t as f64, s.ln()))
        .collect();
    if points.len() < MIN_RATE_POINTS {
        return Err(AnalysisError::InsufficientSteps {
            usable: points.len(),
            required: MIN_RATE_POINTS,
        });
    }
    let m = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &points {
        let (dt, dy) = (t - mean_t, y - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let ss_res = (syy - slope * sty).max(0.0);
    // A flat log-spread is fit exactly by the zero slope.
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateEstimate {
        rho: slope.exp(),
        r_squared,
        points: points.len(),
    })
}
