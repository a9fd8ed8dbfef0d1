//! Discrete-time opinion dynamics in which each agent's susceptibility to
//! influence depends on her own current opinion, over time-varying directed
//! influence graphs.
//!
//! Each step updates every opinion as
//! `x_i <- x_i + f_i(x_i) * sum_j w_ij(t) (x_j - x_i)`, with `W(t)`
//! row-stochastic and `f_i` valued in `[0, 1]`.
//!
//! * [`graph`]: weight matrices, neighbor graphs, schedules, connectivity.
//! * [`dynamics`]: susceptibility kinds, the update and simulation.
//! * [`analysis`]: trajectory checks, limit classification, rate fits and
//!   the DeGroot spectral consensus value.
//! * [`scenario`]: experiment documents, generators and output files.

pub mod analysis;
pub mod dynamics;
pub mod graph;
pub mod rng;
pub mod scenario;
