//! Path-ensemble statistics of architecture DAGs.
//!
//! Lengths count nodes, not hops: `i → j` has length 2, and a path from `k`
//! to the sink `L` has length between 2 and `L - k + 1`.

mod closed_form;
mod histogram;
mod oracle;
mod radius;

pub use closed_form::{binomial, expected_edge_path_length, expected_path_stats, PathExpectations};
pub use histogram::{enumerate_paths, path_length_histogram, PathLengthHistogram};
pub use oracle::{
    er_edge_length_table, er_moment_table, exact_er_expectation, EdgeLengthTable, Estimate, MomentTable, OracleMode, Statistic, EXACT_MAX_NODES,
    MC_MAX_NODES, MC_MIN_SAMPLES,
};
pub use radius::{parse_edge_weights, radius_distribution, uniform_weights, RadiusDistribution};
