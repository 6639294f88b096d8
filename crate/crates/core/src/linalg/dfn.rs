//! Departure from normality: `Δ²(m) = ‖m‖_F² − Σ|λ_i|²`.
//!
//! Δ² is the squared Frobenius norm of the strictly upper-triangular part
//! of the complex Schur factor, so it is invariant under orthogonal changes
//! of basis and vanishes exactly on normal matrices.

use num_complex::Complex64;

use super::eigen::{triangular_eigenpair, to_original_basis, EigenSpectrum, SeparationOptions};
use super::matrix::frobenius_norm_sq;
use super::schur::{complex_schur, real_schur, SchurOptions};
use super::{LinalgError, Matrix};

/// A departure value together with the unclamped difference it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    pub value: f64,
    pub raw: f64,
}

impl Departure {
    /// True when round-off drove the raw difference below zero.
    pub fn clamped(&self) -> bool {
        self.raw < 0.0
    }
}

pub fn dfn_detailed(m: &Matrix) -> Result<Departure, LinalgError> {
    m.ensure_square()?;
    let form = real_schur(m, &SchurOptions::default())?;
    let spectrum = EigenSpectrum::from_schur(&form);
    let raw = frobenius_norm_sq(m) - spectrum.modulus_sq_sum();
    Ok(Departure {
        value: raw.max(0.0),
        raw,
    })
}

/// `max(0, ‖m‖_F² − Σ|λ_i|²)`.
pub fn dfn(m: &Matrix) -> Result<f64, LinalgError> {
    dfn_detailed(m).map(|d| d.value)
}

/// Δ² read directly off the strictly upper-triangular complex Schur factor.
/// Kept as an independent route for cross-checking [`dfn`].
pub fn dfn_from_schur_factor(m: &Matrix) -> Result<f64, LinalgError> {
    m.ensure_square()?;
    let form = real_schur(m, &SchurOptions::default())?;
    let cs = complex_schur(&form);
    let mut acc = 0.0;
    for i in 0..cs.n {
        for j in i + 1..cs.n {
            acc += cs.t(i, j).norm_sqr();
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOptions {
    pub separation: SeparationOptions,
    /// Eigenvalues with `|λ| ≤ zero_tol·‖m‖_F` contribute no eigen term.
    pub zero_tol: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            separation: SeparationOptions::default(),
            zero_tol: 1e-12,
        }
    }
}

/// Analytic gradient of Δ² with respect to the entries of `m`:
///
/// `∇Δ² = 2m − Σ_i 2·Re(conj(λ_i)·y_iᵀ x_iᵀ / (y_i·x_i))`
///
/// where `x_i`/`y_i` are the right/left eigenvectors. Requires every
/// nonzero eigenvalue to be simple; otherwise returns `DefectiveMatrix`.
pub fn dfn_gradient(m: &Matrix, opts: &GradientOptions) -> Result<Matrix, LinalgError> {
    let n = m.ensure_square()?;
    let form = real_schur(m, &SchurOptions::default())?;
    let cs = complex_schur(&form);
    let scale = m.frobenius_norm();
    let zero = opts.zero_tol * scale;
    let min_sep = opts.separation.sep_tol * scale;

    let mut grad = m.scale(2.0);
    for k in 0..n {
        let lambda = cs.t(k, k);
        if lambda.norm() <= zero {
            continue;
        }
        let (v, u) = triangular_eigenpair(&cs, k, min_sep)?;
        let (x, y) = to_original_basis(&cs, &v, &u);
        let denom: Complex64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        if denom.norm() <= f64::EPSILON {
            return Err(LinalgError::DefectiveMatrix(format!(
                "left/right eigenvectors of {lambda} are orthogonal"
            )));
        }
        let coef = 2.0 * lambda.conj() / denom;
        for a in 0..n {
            let ya = coef * y[a];
            for b in 0..n {
                grad[(a, b)] -= (ya * x[b]).re;
            }
        }
    }
    if !grad.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(grad)
}

/// Central-difference gradient of Δ² with step `1e-5·(1+‖m‖_F)`.
/// Costs `2n²` Schur decompositions.
pub fn dfn_gradient_fd(m: &Matrix) -> Result<Matrix, LinalgError> {
    let n = m.ensure_square()?;
    let h = 1e-5 * (1.0 + m.frobenius_norm());
    let mut probe = m.clone();
    let mut grad = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let orig = probe[(a, b)];
            probe[(a, b)] = orig + h;
            let plus = dfn_detailed(&probe)?.raw;
            probe[(a, b)] = orig - h;
            let minus = dfn_detailed(&probe)?.raw;
            probe[(a, b)] = orig;
            grad[(a, b)] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// How a gradient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientRoute {
    Analytic,
    FiniteDifference,
}

/// Analytic gradient, falling back to finite differences on clustered
/// spectra.
pub fn dfn_gradient_or_fd(m: &Matrix, opts: &GradientOptions) -> Result<(Matrix, GradientRoute), LinalgError> {
    match dfn_gradient(m, opts) {
        Ok(g) => Ok((g, GradientRoute::Analytic)),
        Err(LinalgError::DefectiveMatrix(_)) => Ok((dfn_gradient_fd(m)?, GradientRoute::FiniteDifference)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonOptions {
    /// Lower floor on the returned tolerance.
    pub eps_min: f64,
    /// Moduli below `zero_tol·max|λ|` are left out of the denominator.
    pub zero_tol: f64,
}

impl Default for EpsilonOptions {
    fn default() -> Self {
        Self {
            eps_min: 1e-6,
            zero_tol: 1e-12,
        }
    }
}

/// Ratio `max|λ| / min_{λ≠0}|λ|` of one spectrum.
pub fn modulus_ratio(spectrum: &EigenSpectrum, zero_tol: f64) -> Result<f64, LinalgError> {
    let max = spectrum.max_modulus();
    let threshold = zero_tol * max;
    let min = spectrum
        .values
        .iter()
        .map(|v| v.norm())
        .filter(|&r| r > threshold && r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(LinalgError::AllZeroSpectrum);
    }
    Ok(max / min)
}

/// DFN tolerance suggestion: the smallest per-matrix modulus ratio over
/// the batch, floored at `eps_min`.
pub fn suggest_epsilon(batch: &[Matrix], opts: &EpsilonOptions) -> Result<f64, LinalgError> {
    if batch.is_empty() {
        return Err(LinalgError::EmptyBatch);
    }
    let mut best = f64::INFINITY;
    for m in batch {
        let s = super::eigenvalues(m)?;
        best = best.min(modulus_ratio(&s, opts.zero_tol)?);
    }
    Ok(best.max(opts.eps_min))
}

/// Linear-interpolation error bound `max|g''|/8 · h²`, with `g''` estimated
/// by second central differences of uniformly spaced samples `(x, g(x))`.
pub fn dfn_epsilon_bound(samples: &[(f64, f64)], spacing: f64) -> Result<f64, LinalgError> {
    if samples.len() < 3 {
        return Err(LinalgError::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    if !(spacing > 0.0) {
        return Err(LinalgError::NonUniformSpacing);
    }
    for w in samples.windows(2) {
        if ((w[1].0 - w[0].0) - spacing).abs() > 1e-9 * spacing.max(w[0].0.abs()) {
            return Err(LinalgError::NonUniformSpacing);
        }
    }
    let h2 = spacing * spacing;
    let max_second = samples
        .windows(3)
        .map(|w| ((w[2].1 - 2.0 * w[1].1 + w[0].1) / h2).abs())
        .fold(0.0, f64::max);
    Ok(max_second / 8.0 * h2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_closed_forms() {
        assert_eq!(dfn(&Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(), 1.0);
        assert!((dfn(&Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 3.0]])).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_has_no_departure() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 6, 6).symmetrized();
        let scale = frobenius_norm_sq(&a);
        assert!(dfn(&a).unwrap() <= 1e-8 * scale);
    }

    #[test]
    fn both_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 3, 5, 9] {
            let a = random_matrix(&mut rng, n, n);
            let d1 = dfn(&a).unwrap();
            let d2 = dfn_from_schur_factor(&a).unwrap();
            assert!((d1 - d2).abs() <= 1e-10 * (1.0 + frobenius_norm_sq(&a)), "{d1} vs {d2}");
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(dfn(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn gradient_of_symmetric_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 5, 5).symmetrized();
        let g = dfn_gradient(&a, &GradientOptions::default()).unwrap();
        assert!(g.max_abs() < 1e-9 * a.frobenius_norm(), "{g:?}");
    }

    #[test]
    fn gradient_of_nilpotent() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let g = dfn_gradient(&m, &GradientOptions::default()).unwrap();
        assert_eq!(g, Matrix::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]));
        let fd = dfn_gradient_fd(&m).unwrap();
        assert!(fd.sub(&g).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn clustered_spectrum_falls_back() {
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            dfn_gradient(&m, &GradientOptions::default()),
            Err(LinalgError::DefectiveMatrix(_))
        ));
        let (_, route) = dfn_gradient_or_fd(&m, &GradientOptions::default()).unwrap();
        assert_eq!(route, GradientRoute::FiniteDifference);
    }

    #[test]
    fn epsilon_examples() {
        let eye = vec![Matrix::identity(3); 4];
        assert_eq!(suggest_epsilon(&eye, &EpsilonOptions::default()).unwrap(), 1.0);
        let d = Matrix::from_diag(&[4.0, 2.0]);
        assert_eq!(suggest_epsilon(&[d], &EpsilonOptions::default()).unwrap(), 2.0);
        assert_eq!(
            suggest_epsilon(&[Matrix::zeros(3, 3)], &EpsilonOptions::default()),
            Err(LinalgError::AllZeroSpectrum)
        );
        assert_eq!(suggest_epsilon(&[], &EpsilonOptions::default()), Err(LinalgError::EmptyBatch));
        // zero eigenvalue excluded from the denominator
        let s = Matrix::from_diag(&[6.0, 0.0, 3.0]);
        assert_eq!(suggest_epsilon(&[s], &EpsilonOptions::default()).unwrap(), 2.0);
    }

    #[test]
    fn epsilon_bound_examples() {
        let h = 0.05;
        let quad: Vec<(f64, f64)> = (0..20).map(|i| i as f64 * h).map(|x| (x, x * x)).collect();
        assert!((dfn_epsilon_bound(&quad, h).unwrap() - h * h / 4.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = (0..20).map(|i| i as f64 * h).map(|x| (x, 3.0 * x - 1.0)).collect();
        assert!(dfn_epsilon_bound(&lin, h).unwrap() < 1e-12);
        assert!(matches!(
            dfn_epsilon_bound(&quad[..2], h),
            Err(LinalgError::InsufficientSamples { .. })
        ));
        assert_eq!(dfn_epsilon_bound(&quad, 0.07), Err(LinalgError::NonUniformSpacing));
    }
}
