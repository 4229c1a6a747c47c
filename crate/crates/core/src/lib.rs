//! Deterministic federated-learning simulator for label-skewed clients.
//!
//! Each round the server distributes the global encoder and classifier
//! together with a set of *anchor vectors*, one per class, each copied
//! verbatim from whichever client's classifier vector for that class is
//! least similar to its other class vectors. Clients train on
//! cross-entropy plus a contrastive term that pulls representations toward
//! their class anchor; the classifier itself only follows cross-entropy.
//! FedAvg, minor-vector and random-vector selection are available for
//! comparison.
//!
//! Modules, bottom up: [`numkit`] (vectors, softmax, cosine, seeded RNG,
//! Dirichlet), [`model`] (encoder, classifier, manual backprop),
//! [`losses`], [`data`] (synthetic clusters, feature files, partitioning),
//! [`server`] (aggregation, similarity, selection), [`client`] (local
//! SGD), [`metrics`], and [`harness`] (config, experiment loop, CSV
//! output).
//!
//! ```
//! use fedcmc::harness::{run_experiment, ExperimentConfig};
//!
//! let cfg = ExperimentConfig {
//!     classes: 3,
//!     per_class_counts: vec![60, 50, 40],
//!     clients: 3,
//!     alpha: 0.5,
//!     rounds: 2,
//!     ..ExperimentConfig::default()
//! };
//! let run = run_experiment(&cfg)?;
//! assert_eq!(run.rounds.len(), 2);
//! assert_eq!(run.rounds[1].provenance.len(), 3);
//! # Ok::<(), fedcmc::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod client;
pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod numkit;
pub mod server;

pub use error::{Error, Result};
pub use server::SelectionMode;
