//! Experiment orchestration for DFN-regularized LS-GANs on audio
//! spectrograms and on a 2-D Gaussian mixture.

pub mod config;
pub mod data;
pub mod dfn;
pub mod eval;
pub mod gmm;
pub mod manifest;
pub mod spectrograms;
pub mod train;

pub use config::{ExperimentConfig, Variant};

/// Result of a command that processes many independent items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some items failed and were logged.
    Partial,
    /// Every item failed.
    Failure,
}

impl Outcome {
    pub fn from_counts(total: usize, failed: usize) -> Self {
        if failed == 0 {
            Outcome::Success
        } else if failed == total {
            Outcome::Failure
        } else {
            Outcome::Partial
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
            Outcome::Partial => 2,
        }
    }

    /// The worse of two outcomes.
    pub fn and(self, other: Outcome) -> Outcome {
        match (self, other) {
            (Outcome::Failure, _) | (_, Outcome::Failure) => Outcome::Failure,
            (Outcome::Partial, _) | (_, Outcome::Partial) => Outcome::Partial,
            _ => Outcome::Success,
        }
    }
}
