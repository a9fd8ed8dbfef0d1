//! Seeded generators for initial opinions and influence matrices.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_xoshiro::SplitMix64;

use super::schema::Interval;
use super::ScenarioError;
use crate::dynamics::OpinionVector;
use crate::graph::{GraphError, WeightMatrix};
use crate::rng;

/// Raw weights are drawn from this range before row normalization, which
/// keeps every normalized weight at or above `1 / (3n)`.
const RAW_WEIGHT_RANGE: std::ops::Range<f64> = 0.5..1.5;

/// `n` i.i.d. opinions uniform on the open interval `(lo, hi)`.
///
/// Endpoint draws are rejected. `lo == hi` yields the constant vector.
pub fn generate_initial(interval: Interval, n: usize, seed: u64) -> Result<OpinionVector, ScenarioError> {
    let Interval { lo, hi } = interval;
    let schema = |message: String| ScenarioError::Schema {
        path: "x0.uniform".into(),
        message,
    };
    if !(lo.is_finite() && hi.is_finite()) || lo < -1.0 || hi > 1.0 {
        return Err(schema(format!("interval ({lo}, {hi}) is not inside [-1, 1]")));
    }
    if lo > hi || (lo < hi && lo.next_up() >= hi) {
        return Err(schema(format!("interval ({lo}, {hi}) is empty")));
    }
    if lo == hi {
        return Ok(OpinionVector::constant(n, lo)?);
    }
    let mut r = rng::stream(seed, 0);
    let values = (0..n)
        .map(|_| loop {
            let v = lo + (hi - lo) * r.gen::<f64>();
            if lo < v && v < hi {
                break v;
            }
        })
        .collect();
    Ok(OpinionVector::new(values)?)
}

fn normalized_rows(support: &[Vec<bool>], r: &mut SplitMix64) -> Vec<Vec<f64>> {
    support
        .iter()
        .map(|row| {
            let raw: Vec<f64> = row
                .iter()
                .map(|&on| if on { r.gen_range(RAW_WEIGHT_RANGE) } else { 0.0 })
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect()
}

fn check_probability(p: f64) -> Result<(), GraphError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::InvalidProbability(p))
    }
}

/// Random row-stochastic matrix whose neighbor graph is strongly connected.
///
/// Support: self-loops, independent off-diagonal arcs with probability
/// `edge_probability`, and a random Hamiltonian cycle. Weights on the
/// support are uniform draws normalized per row.
pub fn random_strongly_connected(
    n: usize,
    edge_probability: f64,
    seed: u64,
    beta: f64,
) -> Result<WeightMatrix, GraphError> {
    let mut ms = random_jointly_connected(n, 1, edge_probability, seed, beta)?;
    Ok(ms.remove(0))
}

/// `count` random matrices whose neighbor graphs are jointly strongly
/// connected. The arcs of one random Hamiltonian cycle are dealt round-robin
/// across the matrices; each matrix also gets self-loops and independent
/// extra arcs with probability `edge_probability`.
pub fn random_jointly_connected(
    n: usize,
    count: usize,
    edge_probability: f64,
    seed: u64,
    beta: f64,
) -> Result<Vec<WeightMatrix>, GraphError> {
    check_probability(edge_probability)?;
    if n < 2 {
        return Err(GraphError::TooFewAgents(n));
    }
    if count == 0 {
        return Err(GraphError::EmptySchedule);
    }
    let mut r = rng::stream(seed, 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut supports = vec![vec![vec![false; n]; n]; count];
    for (k, support) in supports.iter_mut().enumerate() {
        for (i, row) in support.iter_mut().enumerate() {
            for (j, on) in row.iter_mut().enumerate() {
                *on = i == j || (edge_probability > 0.0 && r.gen_bool(edge_probability));
            }
        }
        // Cycle arc order[m] -> order[m + 1]: the listener order[m + 1]
        // weights order[m].
        for m in (k..n).step_by(count) {
            let (from, to) = (order[m], order[(m + 1) % n]);
            support[to][from] = true;
        }
    }
    supports
        .iter()
        .map(|s| WeightMatrix::new(normalized_rows(s, &mut r), beta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_of_matrix, is_strongly_connected, union_graph};

    #[test]
    fn thirty_uniform_values_are_reproducible() {
        let iv = Interval { lo: 0.0, hi: 1.0 };
        let a = generate_initial(iv, 30, 42).unwrap();
        let b = generate_initial(iv, 30, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        assert!(a.as_slice().iter().all(|&v| 0.0 < v && v < 1.0));
        assert_ne!(a, generate_initial(iv, 30, 43).unwrap());
    }

    #[test]
    fn degenerate_interval_is_constant() {
        let x = generate_initial(Interval { lo: -0.3, hi: -0.3 }, 5, 1).unwrap();
        assert_eq!(x.as_slice(), &[-0.3; 5]);
    }

    #[test]
    fn bad_intervals() {
        assert!(generate_initial(Interval { lo: 0.5, hi: 0.2 }, 3, 0).is_err());
        assert!(generate_initial(Interval { lo: -1.5, hi: 0.2 }, 3, 0).is_err());
        assert!(generate_initial(
            Interval {
                lo: 0.5,
                hi: 0.5f64.next_up()
            },
            3,
            0
        )
        .is_err());
    }

    #[test]
    fn generated_matrix_is_strongly_connected() {
        for seed in 0..20 {
            let w = random_strongly_connected(12, 0.0, seed, 1e-6).unwrap();
            assert!(is_strongly_connected(&graph_of_matrix(&w)));
            assert!(w.entries().iter().all(|&v| v == 0.0 || v >= 1.0 / 36.0));
        }
    }

    #[test]
    fn generated_sequence_is_jointly_connected() {
        for seed in 0..20 {
            let ms = random_jointly_connected(6, 3, 0.05, seed, 1e-6).unwrap();
            assert_eq!(ms.len(), 3);
            let graphs: Vec<_> = ms.iter().map(graph_of_matrix).collect();
            assert!(is_strongly_connected(&union_graph(&graphs).unwrap()));
        }
    }

    #[test]
    fn generator_rejects_large_beta() {
        assert!(matches!(
            random_strongly_connected(10, 1.0, 3, 0.2),
            Err(GraphError::Invalid(_))
        ));
    }
}
