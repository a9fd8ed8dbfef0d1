//! Influence matrices, neighbor graphs and connectivity checks.
//!
//! Arc convention: the neighbor graph of a weight matrix `W` has an arc
//! `j -> i` whenever `w_ij > 0`. Arcs point the way opinions flow, which is
//! the transpose of the usual "row i lists the out-neighbors of i" reading
//! of an adjacency matrix. [`graph_of_matrix`] and [`DirectedGraph::of_entries`]
//! are the only places that translate between the two.
//!
//! Schedules index matrices by update step starting at 0: the matrix at
//! step `t` maps `x(t)` to `x(t + 1)`. Neighbor graphs are numbered from 1,
//! so `N(k)` is the graph of the matrix applied at step `k - 1`.

use std::collections::BTreeSet;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng;

/// Largest accepted deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("at least 2 agents are required, got {0}")]
    TooFewAgents(usize),
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("weight matrix violates its invariants: {0}")]
    Invalid(ValidationReport),
    #[error("vertex count mismatch: expected {expected}, found {found}")]
    VertexCountMismatch { expected: usize, found: usize },
    #[error("arc ({from}, {to}) is outside the vertex range 0..{n}")]
    ArcOutOfRange { from: usize, to: usize, n: usize },
    #[error("cannot take the union of an empty graph sequence")]
    EmptyUnion,
    #[error("a schedule needs at least one matrix")]
    EmptySchedule,
    #[error("all matrices in a schedule must share beta ({expected} vs {found})")]
    MixedBeta { expected: f64, found: f64 },
    #[error("window parameters must be positive, got p = {p}, q = {q}")]
    InvalidWindow { p: usize, q: usize },
    #[error("horizon {horizon} ends before the first window (steps {q}..={last})")]
    HorizonTooShort { horizon: usize, q: usize, last: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
}

/// One broken clause of the weight-matrix invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    NonFinite {
        row: usize,
        col: usize,
    },
    RowSum {
        row: usize,
        sum: f64,
    },
    /// A nonzero entry below the floor. Negative entries land here too.
    BelowFloor {
        row: usize,
        col: usize,
        value: f64,
    },
    ZeroDiagonal {
        row: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { row, col } => write!(f, "entry ({row}, {col}) is not finite"),
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum:.17}, not 1"),
            Violation::BelowFloor { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is nonzero but below beta")
            }
            Violation::ZeroDiagonal { row } => write!(f, "diagonal entry ({row}, {row}) is zero"),
        }
    }
}

/// Every violated clause, in row-major discovery order. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<(), GraphError> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(GraphError::InvalidBeta(beta))
    }
}

fn check_square(rows: &[Vec<f64>]) -> Result<usize, GraphError> {
    let n = rows.len();
    if n < 2 {
        return Err(GraphError::TooFewAgents(n));
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(GraphError::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    Ok(n)
}

fn report_row_major(n: usize, entries: &[f64], beta: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for row in 0..n {
        let r = &entries[row * n..(row + 1) * n];
        let mut finite = true;
        for (col, &value) in r.iter().enumerate() {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { row, col });
                finite = false;
            } else if value != 0.0 && value < beta {
                violations.push(Violation::BelowFloor { row, col, value });
            }
        }
        if r[row] == 0.0 {
            violations.push(Violation::ZeroDiagonal { row });
        }
        if finite {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                violations.push(Violation::RowSum { row, sum });
            }
        }
    }
    ValidationReport { violations }
}

/// Checks a raw square array against the weight-matrix invariants.
///
/// Structural problems (ragged or non-square input, fewer than two agents, a
/// bad `beta`) are errors; invariant violations are collected in the report.
pub fn validate_weight_matrix(rows: &[Vec<f64>], beta: f64) -> Result<ValidationReport, GraphError> {
    check_beta(beta)?;
    let n = check_square(rows)?;
    let entries: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(report_row_major(n, &entries, beta))
}

/// A validated row-stochastic influence matrix; `w_ij` is the weight agent
/// `i` puts on agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
    beta: f64,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>, beta: f64) -> Result<Self, GraphError> {
        check_beta(beta)?;
        let n = check_square(&rows)?;
        let entries = rows.into_iter().flatten().collect();
        Self::from_row_major(n, entries, beta)
    }

    pub fn from_row_major(n: usize, entries: Vec<f64>, beta: f64) -> Result<Self, GraphError> {
        check_beta(beta)?;
        if n < 2 {
            return Err(GraphError::TooFewAgents(n));
        }
        if entries.len() != n * n {
            return Err(GraphError::NotSquare {
                row: entries.len() / n,
                len: entries.len() % n,
                expected: n,
            });
        }
        let report = report_row_major(n, &entries, beta);
        if !report.is_valid() {
            return Err(GraphError::Invalid(report));
        }
        Ok(WeightMatrix { n, entries, beta })
    }

    /// Complete graph, every weight `1/n`.
    pub fn uniform(n: usize) -> Result<Self, GraphError> {
        let w = 1.0 / n as f64;
        Self::from_row_major(n, vec![w; n * n], w)
    }

    pub fn identity(n: usize) -> Result<Self, GraphError> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self::from_row_major(n, entries, 1.0)
    }

    /// Same entries, validated against a different floor.
    pub fn with_beta(self, beta: f64) -> Result<Self, GraphError> {
        Self::from_row_major(self.n, self.entries, beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
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

    /// Reads the plain-text dense format: a line holding `n`, then `n` lines
    /// of `n` whitespace-separated decimals. Blank lines and `#` comments are
    /// skipped.
    pub fn parse_dense(text: &str, beta: f64) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            message: "missing agent count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| GraphError::Parse {
            line,
            message: format!("expected agent count, found {header:?}"),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (line, l) in lines {
            let row = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| GraphError::Parse {
                        line,
                        message: format!("invalid number {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(GraphError::Parse {
                line: text.lines().count(),
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Self::new(rows, beta)
    }

    /// Writes the dense text format with 17 significant digits per entry.
    pub fn to_dense_string(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.entries.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// A directed graph on vertices `0..n`; arc `(i, j)` means information flows
/// from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        DirectedGraph {
            n,
            arcs: BTreeSet::new(),
        }
    }

    pub fn self_loops(n: usize) -> Self {
        DirectedGraph {
            n,
            arcs: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n);
        for (from, to) in arcs {
            g.add_arc(from, to)?;
        }
        Ok(g)
    }

    /// Graph of an `n x n` row-major array: arc `(i, j)` whenever entry
    /// `(j, i)` is nonzero.
    pub fn of_entries(n: usize, entries: &[f64]) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        let mut arcs = BTreeSet::new();
        for row in 0..n {
            for col in 0..n {
                if entries[row * n + col] != 0.0 {
                    arcs.insert((col, row));
                }
            }
        }
        DirectedGraph { n, arcs }
    }

    pub fn add_arc(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        if from >= self.n || to >= self.n {
            return Err(GraphError::ArcOutOfRange { from, to, n: self.n });
        }
        self.arcs.insert((from, to));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    fn to_petgraph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::with_capacity(self.n, self.arcs.len());
        for _ in 0..self.n {
            g.add_node(());
        }
        for &(a, b) in &self.arcs {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
        }
        g
    }

    /// Strongly connected components, each as a sorted vertex list.
    pub fn components(&self) -> Vec<Vec<usize>> {
        tarjan_scc(&self.to_petgraph())
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(NodeIndex::index).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }
}

/// The neighbor graph of `w`: arc `j -> i` whenever `w_ij != 0`.
pub fn graph_of_matrix(w: &WeightMatrix) -> DirectedGraph {
    DirectedGraph::of_entries(w.n, &w.entries)
}

pub fn is_strongly_connected(g: &DirectedGraph) -> bool {
    g.n <= 1 || g.components().len() == 1
}

pub fn union_graph(graphs: &[DirectedGraph]) -> Result<DirectedGraph, GraphError> {
    let first = graphs.first().ok_or(GraphError::EmptyUnion)?;
    let mut out = DirectedGraph::empty(first.n);
    for g in graphs {
        if g.n != first.n {
            return Err(GraphError::VertexCountMismatch {
                expected: first.n,
                found: g.n,
            });
        }
        out.arcs.extend(g.arcs.iter().copied());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Static(WeightMatrix),
    /// Cycles through the list; the period is its length.
    Periodic(Vec<WeightMatrix>),
    /// Draws uniformly from the pool at every step. The draw at step `t`
    /// depends only on `(seed, t)`.
    SeededRandom {
        pool: Vec<WeightMatrix>,
        seed: u64,
    },
}

/// The rule producing `W(t)` for every step.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSchedule {
    kind: ScheduleKind,
    horizon: Option<usize>,
    n: usize,
    beta: f64,
}

impl GraphSchedule {
    fn check_shared(matrices: &[WeightMatrix]) -> Result<(usize, f64), GraphError> {
        let first = matrices.first().ok_or(GraphError::EmptySchedule)?;
        for w in matrices {
            if w.n != first.n {
                return Err(GraphError::VertexCountMismatch {
                    expected: first.n,
                    found: w.n,
                });
            }
            if w.beta != first.beta {
                return Err(GraphError::MixedBeta {
                    expected: first.beta,
                    found: w.beta,
                });
            }
        }
        Ok((first.n, first.beta))
    }

    pub fn new(kind: ScheduleKind) -> Result<Self, GraphError> {
        let (n, beta) = match &kind {
            ScheduleKind::Static(w) => (w.n, w.beta),
            ScheduleKind::Periodic(ms) => Self::check_shared(ms)?,
            ScheduleKind::SeededRandom { pool, .. } => Self::check_shared(pool)?,
        };
        Ok(GraphSchedule {
            kind,
            horizon: None,
            n,
            beta,
        })
    }

    pub fn fixed(w: WeightMatrix) -> Self {
        let (n, beta) = (w.n, w.beta);
        GraphSchedule {
            kind: ScheduleKind::Static(w),
            horizon: None,
            n,
            beta,
        }
    }

    pub fn periodic(matrices: Vec<WeightMatrix>) -> Result<Self, GraphError> {
        Self::new(ScheduleKind::Periodic(matrices))
    }

    pub fn seeded_random(pool: Vec<WeightMatrix>, seed: u64) -> Result<Self, GraphError> {
        Self::new(ScheduleKind::SeededRandom { pool, seed })
    }

    /// Caps the number of steps the schedule can serve.
    pub fn with_horizon(mut self, horizon: Option<usize>) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Length of the repeating cycle, if the schedule has one.
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            ScheduleKind::Static(_) => Some(1),
            ScheduleKind::Periodic(ms) => Some(ms.len()),
            ScheduleKind::SeededRandom { .. } => None,
        }
    }

    /// Matrix applied at update step `step` (0-based), or `None` past the horizon.
    pub fn matrix_at(&self, step: usize) -> Option<&WeightMatrix> {
        if self.horizon.is_some_and(|h| step >= h) {
            return None;
        }
        Some(match &self.kind {
            ScheduleKind::Static(w) => w,
            ScheduleKind::Periodic(ms) => &ms[step % ms.len()],
            ScheduleKind::SeededRandom { pool, seed } => {
                let mut r = rng::stream(*seed, step as u64);
                &pool[r.gen_range(0..pool.len())]
            }
        })
    }

    /// Neighbor graph `N(k)` for `k >= 1`.
    pub fn neighbor_graph(&self, k: usize) -> Option<DirectedGraph> {
        if k == 0 {
            return None;
        }
        self.matrix_at(k - 1).map(graph_of_matrix)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn window_connected(schedule: &GraphSchedule, start: usize, p: usize) -> bool {
    let graphs: Option<Vec<DirectedGraph>> = (start..start + p).map(|k| schedule.neighbor_graph(k)).collect();
    match graphs {
        Some(gs) => union_graph(&gs).map(|u| is_strongly_connected(&u)).unwrap_or(false),
        None => false,
    }
}

/// Checks that every window `N(q + kp), ..., N(q + (k+1)p - 1)` lying inside
/// `1..=horizon` has a strongly connected union.
///
/// Cyclic schedules are decided exactly for all time: window contents repeat
/// once `kp` wraps the period, so only `period / gcd(period, p)` windows are
/// checked and the horizon only has to hold the first one.
pub fn verify_repeated_joint_connectivity(
    schedule: &GraphSchedule,
    p: usize,
    q: usize,
    horizon: usize,
) -> Result<bool, GraphError> {
    if p == 0 || q == 0 {
        return Err(GraphError::InvalidWindow { p, q });
    }
    let last = q + p - 1;
    let horizon = schedule.horizon.map_or(horizon, |h| h.min(horizon));
    if last > horizon {
        return Err(GraphError::HorizonTooShort { horizon, q, last });
    }
    let windows = match schedule.period() {
        Some(period) if schedule.horizon.is_none() => period / gcd(period, p),
        _ => (horizon - q + 1) / p,
    };
    Ok((0..windows).all(|k| window_connected(schedule, q + k * p, p)))
}

/// Smallest `p <= horizon - q + 1` for which the windows starting at `q`
/// verify, found by exhaustive search.
pub fn find_window_length(schedule: &GraphSchedule, q: usize, horizon: usize) -> Option<usize> {
    if q == 0 || q > horizon {
        return None;
    }
    (1..=horizon - q + 1).find(|&p| verify_repeated_joint_connectivity(schedule, p, q, horizon).unwrap_or(false))
}

/// Decides repeated joint strong connectivity for a schedule.
///
/// Exact for static and periodic schedules without a horizon: any window
/// union is contained in the union over one period, so the property holds
/// iff that union is strongly connected. Random schedules are searched over
/// windows starting at `q = 1` inside `horizon`.
pub fn is_repeatedly_jointly_connected(schedule: &GraphSchedule, horizon: usize) -> bool {
    match schedule.period() {
        Some(period) if schedule.horizon.is_none() => {
            verify_repeated_joint_connectivity(schedule, period, 1, period).unwrap_or(false)
        }
        _ => find_window_length(schedule, 1, horizon).is_some(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, forward: bool) -> DirectedGraph {
        let mut g = DirectedGraph::self_loops(n);
        for i in 0..n {
            let j = (i + 1) % n;
            if forward {
                g.add_arc(i, j).unwrap();
            } else {
                g.add_arc(j, i).unwrap();
            }
        }
        g
    }

    #[test]
    fn complete_quarter_matrix_is_valid() {
        let rows = vec![vec![0.25; 4]; 4];
        assert!(validate_weight_matrix(&rows, 0.1).unwrap().is_valid());
    }

    #[test]
    fn identity_is_valid() {
        let w = WeightMatrix::identity(3).unwrap();
        assert!(validate_weight_matrix(&w.to_rows(), 0.5).unwrap().is_valid());
    }

    #[test]
    fn row_sum_violation_is_reported_on_its_row() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.1], vec![0.0, 0.0, 1.0]];
        let report = validate_weight_matrix(&rows, 0.05).unwrap();
        assert_eq!(report.violations.len(), 1);
        match report.violations[0] {
            Violation::RowSum { row, sum } => {
                assert_eq!(row, 1);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            ref other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_clause_is_listed() {
        let rows = vec![vec![0.0, 1.0], vec![0.05, 0.95]];
        let report = validate_weight_matrix(&rows, 0.1).unwrap();
        assert!(report.violations.contains(&Violation::ZeroDiagonal { row: 0 }));
        assert!(report.violations.contains(&Violation::BelowFloor {
            row: 1,
            col: 0,
            value: 0.05
        }));
        assert_eq!(report.violations.len(), 2);
    }

    #[test]
    fn negative_entry_is_below_floor() {
        let rows = vec![vec![1.2, -0.2], vec![0.5, 0.5]];
        let report = validate_weight_matrix(&rows, 0.1).unwrap();
        assert!(matches!(
            report.violations[0],
            Violation::BelowFloor { row: 0, col: 1, .. }
        ));
    }

    #[test]
    fn structural_errors_are_distinct() {
        let ragged = vec![vec![0.5, 0.5], vec![1.0]];
        assert!(matches!(
            validate_weight_matrix(&ragged, 0.1),
            Err(GraphError::NotSquare {
                row: 1,
                len: 1,
                expected: 2
            })
        ));
        assert!(matches!(
            validate_weight_matrix(&[vec![1.0]], 0.1),
            Err(GraphError::TooFewAgents(1))
        ));
        assert!(matches!(
            validate_weight_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0.0),
            Err(GraphError::InvalidBeta(_))
        ));
    }

    #[test]
    fn uniform_third_passes_tolerance() {
        let w = WeightMatrix::uniform(3).unwrap();
        assert_eq!(w.beta(), 1.0 / 3.0);
    }

    #[test]
    fn graph_of_complete_matrix_is_complete() {
        let g = graph_of_matrix(&WeightMatrix::uniform(4).unwrap());
        assert_eq!(g.arc_count(), 16);
    }

    #[test]
    fn graph_of_identity_has_only_self_loops() {
        let g = graph_of_matrix(&WeightMatrix::identity(3).unwrap());
        assert_eq!(g, DirectedGraph::self_loops(3));
    }

    #[test]
    fn graph_uses_transpose_convention() {
        // w_12 > 0 (0-based w_01): agent 1 listens to agent 2, so 2 -> 1.
        let w = WeightMatrix::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]], 0.1).unwrap();
        let g = graph_of_matrix(&w);
        let mut expected = DirectedGraph::self_loops(2);
        expected.add_arc(1, 0).unwrap();
        assert_eq!(g, expected);
        assert!(!g.has_arc(0, 1));
    }

    #[test]
    fn strong_connectivity_examples() {
        let complete = graph_of_matrix(&WeightMatrix::uniform(4).unwrap());
        assert!(is_strongly_connected(&complete));
        assert!(!is_strongly_connected(&DirectedGraph::self_loops(2)));
        assert!(is_strongly_connected(&ring(3, true)));
        let mut path = DirectedGraph::self_loops(3);
        path.add_arc(0, 1).unwrap();
        path.add_arc(1, 2).unwrap();
        assert!(!is_strongly_connected(&path));
    }

    #[test]
    fn union_examples() {
        let both = union_graph(&[ring(4, true), ring(4, false)]).unwrap();
        assert_eq!(both.arc_count(), 4 + 8);
        assert!(both.has_arc(0, 1) && both.has_arc(1, 0));

        let g = ring(5, true);
        assert_eq!(union_graph(&[g.clone(), g.clone()]).unwrap(), g);

        let a = DirectedGraph::from_arcs(2, [(0, 0), (1, 1), (0, 1)]).unwrap();
        let b = DirectedGraph::from_arcs(2, [(0, 0), (1, 1), (1, 0)]).unwrap();
        assert!(!is_strongly_connected(&a));
        assert!(is_strongly_connected(&union_graph(&[a, b]).unwrap()));
    }

    #[test]
    fn union_rejects_mismatch_and_empty() {
        assert_eq!(union_graph(&[]), Err(GraphError::EmptyUnion));
        assert!(matches!(
            union_graph(&[DirectedGraph::empty(2), DirectedGraph::empty(3)]),
            Err(GraphError::VertexCountMismatch { .. })
        ));
    }

    fn one_way(listener: usize) -> WeightMatrix {
        let mut rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        rows[listener] = vec![0.5, 0.5];
        WeightMatrix::new(rows, 0.5).unwrap()
    }

    #[test]
    fn alternating_one_way_arcs_need_window_two() {
        // Agent 1 listens to 2 at odd steps, agent 2 listens to 1 at even steps.
        let s = GraphSchedule::periodic(vec![one_way(0), one_way(1)]).unwrap();
        assert!(verify_repeated_joint_connectivity(&s, 2, 1, 10).unwrap());
        assert!(!verify_repeated_joint_connectivity(&s, 1, 1, 10).unwrap());
        assert_eq!(find_window_length(&s, 1, 10), Some(2));
        assert!(is_repeatedly_jointly_connected(&s, 10));
    }

    #[test]
    fn static_schedules() {
        let s = GraphSchedule::fixed(WeightMatrix::uniform(3).unwrap());
        assert!(verify_repeated_joint_connectivity(&s, 1, 1, 1).unwrap());
        let id = GraphSchedule::fixed(WeightMatrix::identity(3).unwrap());
        for p in 1..6 {
            assert!(!verify_repeated_joint_connectivity(&id, p, 1, 10).unwrap());
        }
        assert!(!is_repeatedly_jointly_connected(&id, 10));
    }

    #[test]
    fn window_errors() {
        let s = GraphSchedule::fixed(WeightMatrix::uniform(3).unwrap());
        assert!(matches!(
            verify_repeated_joint_connectivity(&s, 0, 1, 5),
            Err(GraphError::InvalidWindow { .. })
        ));
        assert!(matches!(
            verify_repeated_joint_connectivity(&s, 3, 2, 3),
            Err(GraphError::HorizonTooShort { last: 4, .. })
        ));
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let pool = vec![
            one_way(0),
            one_way(1),
            WeightMatrix::uniform(2).unwrap().with_beta(0.5).unwrap(),
        ];
        let a = GraphSchedule::seeded_random(pool.clone(), 11).unwrap();
        let b = GraphSchedule::seeded_random(pool, 11).unwrap();
        for t in 0..50 {
            assert_eq!(a.matrix_at(t), b.matrix_at(t));
        }
        let capped = a.clone().with_horizon(Some(5));
        assert!(capped.matrix_at(4).is_some());
        assert!(capped.matrix_at(5).is_none());
    }

    #[test]
    fn schedule_rejects_mixed_beta() {
        let a = WeightMatrix::uniform(2).unwrap();
        let b = WeightMatrix::uniform(2).unwrap().with_beta(0.1).unwrap();
        assert!(matches!(
            GraphSchedule::periodic(vec![a, b]),
            Err(GraphError::MixedBeta { .. })
        ));
    }

    #[test]
    fn dense_text_round_trip() {
        let w = WeightMatrix::new(vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![0.1, 0.9]], 0.05).unwrap();
        let back = WeightMatrix::parse_dense(&w.to_dense_string(), 0.05).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn dense_text_errors() {
        assert!(matches!(
            WeightMatrix::parse_dense("2\n0.5 0.5\n", 0.1),
            Err(GraphError::Parse { .. })
        ));
        assert!(matches!(
            WeightMatrix::parse_dense("2\n0.5 x\n0.5 0.5\n", 0.1),
            Err(GraphError::Parse { line: 2, .. })
        ));
        let parsed = WeightMatrix::parse_dense("# comment\n2\n0.5 0.5\n\n0.25 0.75\n", 0.1).unwrap();
        assert_eq!(parsed.get(1, 1), 0.75);
    }
}
