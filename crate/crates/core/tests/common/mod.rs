//! Random inputs shared by the integration tests.

#![allow(dead_code)]

use opinion_core::dynamics::{OpinionVector, SusceptibilityKind};
use opinion_core::graph::{GraphSchedule, WeightMatrix};
use opinion_core::rng;
use opinion_core::scenario::{random_jointly_connected, random_strongly_connected};
use rand::Rng;
use rand_xoshiro::SplitMix64;

pub const BETA: f64 = 1e-6;

pub fn rng_for(trial: u64, salt: u64) -> SplitMix64 {
    rng::stream(salt.wrapping_mul(1_000_003).wrapping_add(trial), 0)
}

/// Row-stochastic matrix with a positive diagonal and random sparse support.
/// Not necessarily strongly connected.
pub fn random_matrix(n: usize, r: &mut SplitMix64) -> WeightMatrix {
    let density: f64 = r.gen_range(0.0..1.0);
    let rows = (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j || r.gen_bool(density) {
                        r.gen_range(0.05..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    WeightMatrix::new(rows, BETA).expect("normalized rows with a positive diagonal")
}

/// Opinions uniform on `[lo, hi]`, with each entry replaced by an endpoint of
/// `[-1, 1]` with probability `endpoint_rate`.
pub fn random_opinions(n: usize, lo: f64, hi: f64, endpoint_rate: f64, r: &mut SplitMix64) -> OpinionVector {
    let values = (0..n)
        .map(|_| {
            if r.gen_bool(endpoint_rate) {
                if r.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            } else {
                r.gen_range(lo..=hi)
            }
        })
        .collect();
    OpinionVector::new(values).expect("opinions inside [-1, 1]")
}

pub fn random_kind(n: usize, r: &mut SplitMix64) -> SusceptibilityKind {
    match r.gen_range(0..5) {
        0 => SusceptibilityKind::DeGroot,
        1 => SusceptibilityKind::constant((0..n).map(|_| r.gen_range(0.0..=1.0)).collect()).unwrap(),
        2 => SusceptibilityKind::StubbornPositive,
        3 => SusceptibilityKind::StubbornNeutral,
        _ => SusceptibilityKind::StubbornExtremist,
    }
}

/// Strongly connected static schedule or jointly connected periodic one.
pub fn connected_schedule(n: usize, periodic: bool, r: &mut SplitMix64) -> GraphSchedule {
    connected_schedule_with(n, periodic, 0.0..0.6, r)
}

/// As [`connected_schedule`], with extra-arc probability drawn from `density`.
pub fn connected_schedule_with(
    n: usize,
    periodic: bool,
    density: std::ops::Range<f64>,
    r: &mut SplitMix64,
) -> GraphSchedule {
    let seed = r.gen();
    let p = r.gen_range(density);
    if periodic {
        let count = r.gen_range(2..=3);
        GraphSchedule::periodic(random_jointly_connected(n, count, p, seed, BETA).unwrap()).unwrap()
    } else {
        GraphSchedule::fixed(random_strongly_connected(n, p, seed, BETA).unwrap())
    }
}
