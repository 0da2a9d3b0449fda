//! Decentralized SGD over a wireless network with random-access broadcast.
//!
//! Nodes of an undirected graph each broadcast their model with some access
//! probability per slot. A receiver decodes a packet only when exactly one
//! of its neighbors transmits and it is silent itself. Failed links are
//! compensated by returning their mixing weight to the receiver's own model.
//!
//! Modules, bottom-up:
//! - [`linalg`]: dense matrices and a nonsymmetric eigenvalue solver
//! - [`topology`]: ring, complete, Erdos-Renyi and edge-list graphs
//! - [`mac`]: broadcast sampling, collision model, expected throughput
//! - [`mixing`]: base, masked, compensated and expected mixing matrices
//! - [`learning`]: data generation, gradients and the D-SGD training loop
//! - [`experiments`]: config parsing and the analyze/sweep/train/topology drivers

pub mod error;
pub mod experiments;
pub mod learning;
pub mod linalg;
pub mod mac;
pub mod mixing;
pub mod optimize;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use learning::{MetricRecord, MetricTrace, TaskKind, TrainConfig, TrainState};
pub use linalg::{ComplexValue, DenseMatrix};
pub use mac::{AccessPolicy, BroadcastVector, TransmissionMatrix};
pub use mixing::MixingMatrix;
pub use topology::Graph;
