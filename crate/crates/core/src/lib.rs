//! Min-rule distributed hypothesis testing over agent networks.
//!
//! Agents on a strongly connected network observe private signals, run a
//! local Bayesian update, and aggregate beliefs with their neighbors by a
//! componentwise minimum. Sharing can be full (whole belief vectors) or
//! partial (one hypothesis per round), with neighbor beliefs on the missing
//! hypotheses reconstructed either from stored estimates or from the
//! receiver's own belief.
//!
//! | module | contents |
//! |---|---|
//! | [`graph`] | topology, k-regular generation, connectivity |
//! | [`model`] | likelihood tables, sampling, KL divergence, identifiability |
//! | [`belief`] | log-domain belief vectors and the update rules |
//! | [`engine`] | synchronous rounds, sharing modes, trajectories |
//! | [`metrics`] | rejection rates, rate bounds, convergence times |
//! | [`oracle`] | linear-domain reference implementation |
//! | [`runner`] | experiment specs, CSV/SVG output, CLI commands |
//!
//! Runnable walkthroughs live in `examples/`, e.g.
//! `cargo run --release -p minrule --example compare_modes`.

pub mod belief;
pub mod engine;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod runner;

pub use belief::{BeliefVector, SharedMessage};
pub use engine::{run, RecordFlags, SharingMode, SimulationConfig, TauMode, Trajectory};
pub use error::{Error, Result};
pub use graph::{AgentId, Network};
pub use model::{HypothesisId, LikelihoodModel, ModelParams};
