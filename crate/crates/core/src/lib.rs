//! Randomly wired graph neural networks.
//!
//! The crate is organised around the life of a random architecture:
//!
//! * [`arch`] samples Erdős–Rényi DAGs over architecture nodes, embeds the
//!   sequential path and wires input/output terminals.
//! * [`paths`] treats a DAG as an ensemble of source→sink paths: exact
//!   per-length path counts, closed-form expectations under the random
//!   generator, brute-force expectation oracles and receptive-field radius
//!   distributions.
//! * [`tensor`] is a small dense reverse-mode autodiff engine.
//! * [`gnn`] holds domain graphs and the GCN / GraphSage / GIN / GatedGCN
//!   convolutions, batch normalization and readouts.
//! * [`model`] assembles a DAG into a trainable network with sigmoid-weighted
//!   aggregation, DropPath and MonteCarlo inference.
//! * [`train`] has the synthetic k-hop task, Adam, the plateau schedule and
//!   sweeps.
//! * [`lemmas`] and [`dist`] produce the verification report and the path
//!   distribution tables/figures used by the command line tool.
//!
//! Path length is always counted in **nodes**: a single edge `i → j` is a
//! path of length 2.

pub mod arch;
pub mod dist;
pub mod error;
pub mod gnn;
pub mod lemmas;
pub mod model;
pub mod paths;
pub mod rng;
pub mod tensor;
pub mod train;

pub use arch::{embed_sequential_path, generate_er_dag, wire_terminals, ArchDag, Edge, WiredArch};
pub use error::{Error, Result};
pub use gnn::{ConvType, DomainGraph, GraphBatch, Target};
pub use model::{DropPathMask, ModelConfig, NodeMode, RanGnnModel, Task};
pub use paths::{PathLengthHistogram, RadiusDistribution};
pub use tensor::{Tape, Tensor, Var};
pub use train::{RunMetrics, TrainConfig};
