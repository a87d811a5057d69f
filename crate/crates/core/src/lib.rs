//! Belief-consistency engine.
//!
//! Layers a persistent belief store (the belief bank) over any yes/no QA
//! oracle and improves the oracle's answers two ways: a weighted-MaxSAT
//! constraint solver flips beliefs that clash with others, and a
//! feedback pass re-asks the oracle with clashing beliefs rendered into
//! the query context.
//!
//! Module map:
//! - [`domain`]: statements, beliefs, constraints, the constraint graph,
//!   and the belief bank.
//! - [`metrics`]: consistency (1 - tau) and true-class F1.
//! - [`solver`]: MaxSAT encoding, exact branch-and-bound, local search.
//! - [`feedback`]: random and graph-relevance context selection.
//! - [`oracle`]: the ask(question, context) boundary; synthetic and
//!   remote implementations.
//! - [`dataset`]: synthetic taxonomy generation, label propagation,
//!   file schemas.
//! - [`calibration`]: sigmoid weight scaling and grid search.
//! - [`runner`]: the experiment pipelines and report table.
//! - [`quality`]: brute-force and fuzzing oracles for verification.

pub mod calibration;
pub mod dataset;
pub mod domain;
pub mod error;
pub mod feedback;
pub mod metrics;
pub mod oracle;
pub mod quality;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};
