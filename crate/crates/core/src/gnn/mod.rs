//! Domain graphs and graph-convolution layers.

mod conv;
mod graph;
mod io;
mod norm;
mod params;
mod readout;

pub use conv::{gated_conv, gcn_conv, gin_conv, sage_conv, ConvParams, ConvType, GatedWeights, GinWeights};
pub use graph::{DomainGraph, GraphBatch, Target};
pub use io::{read_dataset, read_graph, write_dataset, write_graph, Dataset};
pub use norm::{batch_norm, BnMode, BnState, BnStats, BN_EPS, BN_MOMENTUM};
pub use params::{ParamId, ParamStore};
pub use readout::{readout, Head, Task};
