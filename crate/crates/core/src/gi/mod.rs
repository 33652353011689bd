//! Generalized inverses: Moore-Penrose, unit-consistent and mixed.
//!
//! The free functions ([`mp_inverse`], [`uc_inverse`], [`mx_inverse`]) are the
//! numerical kernels. Planners reach them through the [`GeneralizedInverse`]
//! trait so the backend can be picked by name at runtime (see [`registry`]).

mod backend;
mod mp;
mod mx;
mod scaling;
mod svd;
mod uc;

pub use backend::{
    registry, BackendKind, BackendRegistry, CountingInverse, GeneralizedInverse, MixedBackend, MoorePenroseBackend,
    UnitConsistentBackend,
};
pub use mp::{mp_inverse, rank_tolerance};
pub use mx::{mx_inverse, PartitionSpec};
pub use scaling::{scaling_decomposition, ScalingFactors};
pub use svd::{svd, SvdFactors};
pub use uc::uc_inverse;

use nalgebra::DMatrix;
use thiserror::Error;

/// Dense real matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GiError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate input{}: {reason}", block_label(.block))]
    Degenerate {
        block: Option<&'static str>,
        reason: String,
    },
    #[error("invalid partition: {0}")]
    Partition(String),
}

fn block_label(block: &Option<&'static str>) -> String {
    match block {
        Some(b) => format!(" in block {b}"),
        None => String::new(),
    }
}

impl GiError {
    pub(crate) fn in_block(self, name: &'static str) -> Self {
        match self {
            GiError::Degenerate { reason, .. } => GiError::Degenerate {
                block: Some(name),
                reason,
            },
            other => other,
        }
    }
}

/// Rejects empty matrices and non-finite entries.
pub fn validate(a: &Matrix) -> Result<(), GiError> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(GiError::InvalidInput(format!(
            "matrix must be at least 1x1, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(GiError::InvalidInput(format!(
                    "non-finite entry {v} at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}
