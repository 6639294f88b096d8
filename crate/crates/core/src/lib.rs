//! Departure-from-normality (DFN) regularized least-squares GAN training for
//! 2D audio representations.
//!
//! - [`linalg`]: real Schur decomposition, eigen-spectra, DFN and its gradient.
//! - [`signal`]: WAV ingestion, complex Morlet spectrograms, inversion, SNR.
//! - [`gan`]: small conv generator/discriminator with hand-written backward
//!   passes, LS-GAN losses and the DFN-constrained generator objective.
//! - [`eval`]: Fréchet distance, Gaussian-mixture mode counting.
//! - [`tensorfile`]: the on-disk tensor format shared by all of the above.

pub mod eval;
pub mod gan;
pub mod linalg;
pub mod signal;
pub mod tensorfile;
