//! Discrete probability tables, channels and information measures.

mod conditional;
mod info;
mod joint;
mod maxent;
pub(crate) mod serde_rows;
mod space;

pub use conditional::ConditionalTable;
pub(crate) use conditional::{matrix_from_rows, matrix_to_rows, renormalize_columns};
pub use info::{conditional_entropy, conditional_mutual_information, kl_divergence, kl_vectors};
pub use joint::JointTable;
pub use maxent::{conditional_entropy_given_output, max_conditional_entropy, MaxEntropy, MaxEntropyOptions};
pub use space::{Variable, VariableSpace};

/// Tolerance for normalization checks on tables and channels.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// What `condition` does with a zero-mass conditioning cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroHandling {
    #[default]
    Error,
    /// Fill the undefined column with the uniform distribution.
    UniformFill,
}
