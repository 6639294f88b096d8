//! Dense real linear algebra: Schur decomposition, eigen-spectra and the
//! departure-from-normality metric with its gradient.

mod dfn;
mod eigen;
mod matrix;
mod schur;
mod sqrt;

use thiserror::Error;

pub use dfn::{
    dfn, dfn_detailed, dfn_epsilon_bound, dfn_from_schur_factor, dfn_gradient, dfn_gradient_fd, dfn_gradient_or_fd,
    modulus_ratio, suggest_epsilon, Departure, EpsilonOptions, GradientOptions, GradientRoute,
};
pub use eigen::{eigenvalues, eigenvectors, EigenSpectrum, Eigenvectors, SeparationOptions};
pub use matrix::{frobenius_norm_sq, Matrix};
pub use schur::{complex_schur, diagonal_blocks, hessenberg_reduce, real_schur, ComplexSchur, SchurForm, SchurOptions};
pub use sqrt::{matrix_sqrt_psd, symmetric_eigen};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("data length {len} does not fit a {rows}x{cols} matrix")]
    ShapeData { rows: usize, cols: usize, len: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("iteration did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("defective or clustered spectrum: {0}")]
    DefectiveMatrix(String),
    #[error("every eigenvalue is below the zero threshold")]
    AllZeroSpectrum,
    #[error("empty batch")]
    EmptyBatch,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("samples are not uniformly spaced at the given spacing")]
    NonUniformSpacing,
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
}

#[cfg(test)]
pub(crate) mod testing {
    use super::Matrix;
    use rand::Rng;

    pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }
}
