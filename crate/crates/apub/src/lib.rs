//! Average percentile upper bounds (APUB) for Monte Carlo estimates, and a
//! bootstrap-risk formulation of two-stage linear stochastic programming
//! with random recourse.
//!
//! The crate has three layers:
//!
//! - statistics: VaR/CVaR of finite samples, bootstrap percentile bounds,
//!   and APUB in exact and bootstrap-approximation form ([`bounds`]), backed
//!   by reproducible substreamed sampling ([`sampling`]);
//! - optimization: a dense two-phase revised simplex solver ([`lp`]),
//!   two-stage problem representation and extensive-form construction
//!   ([`model`]), and the cut-generating decomposition solver ([`lshaped`]);
//! - experiments: instance generators, the Monte Carlo replication harness,
//!   and CSV/JSON emission ([`experiments`]), surfaced through the `apub`
//!   command-line binary.

pub mod bounds;
pub mod experiments;
pub mod lp;
pub mod lshaped;
pub mod matrix;
pub mod model;
pub mod sampling;

pub use bounds::{ApubEstimate, SampleSet};
pub use matrix::Mat;
pub use sampling::{BootstrapWeights, RngStream};
