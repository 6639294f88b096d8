use num_complex::Complex64;

use super::schur::{block_eigenvalues, complex_schur, diagonal_blocks, real_schur, ComplexSchur, SchurOptions};
use super::{LinalgError, Matrix, SchurForm};

/// Eigenvalues of a real square matrix, in Schur diagonal order. Complex
/// values come in adjacent conjugate pairs, positive imaginary part first.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub values: Vec<Complex64>,
}

impl EigenSpectrum {
    pub fn from_schur(form: &SchurForm) -> Self {
        let t = &form.t;
        let mut values = Vec::with_capacity(t.rows());
        for (k, size) in diagonal_blocks(t) {
            if size == 1 {
                values.push(Complex64::new(t[(k, k)], 0.0));
            } else {
                values.extend(block_eigenvalues(t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]));
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.values.iter().product()
    }

    /// `Σ|λ|²`
    pub fn modulus_sq_sum(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Smallest pairwise distance between eigenvalues, or infinity for
    /// fewer than two.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, a) in self.values.iter().enumerate() {
            for b in &self.values[i + 1..] {
                gap = gap.min((a - b).norm());
            }
        }
        gap
    }
}

pub fn eigenvalues(m: &Matrix) -> Result<EigenSpectrum, LinalgError> {
    let form = real_schur(m, &SchurOptions::default())?;
    Ok(EigenSpectrum::from_schur(&form))
}

/// Right and left eigenvectors, unit 2-norm, in the order of the
/// requested spectrum. `left[i]` is the row vector `y` with `y·m = λ·y`.
#[derive(Debug, Clone)]
pub struct Eigenvectors {
    pub right: Vec<Vec<Complex64>>,
    pub left: Vec<Vec<Complex64>>,
}

/// Relative thresholds for treating eigenvalues as distinct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationOptions {
    /// Eigenvalues closer than `sep_tol·‖m‖_F` are treated as a cluster.
    pub sep_tol: f64,
    /// Residual bound `‖m·x − λx‖ ≤ residual_tol·‖m‖_F`.
    pub residual_tol: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self {
            sep_tol: 1e-6,
            residual_tol: 1e-6,
        }
    }
}

/// Unnormalized eigenvector pair of a triangular factor for diagonal index
/// `k`: `v` solves `(t − λI)v = 0` with `v[k] = 1`, `u` solves
/// `u(t − λI) = 0` with `u[k] = 1`.
pub(crate) fn triangular_eigenpair(
    cs: &ComplexSchur,
    k: usize,
    min_sep: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), LinalgError> {
    let n = cs.n;
    let lambda = cs.t(k, k);
    let zero = Complex64::new(0.0, 0.0);

    let mut v = vec![zero; n];
    v[k] = Complex64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let denom = cs.t(i, i) - lambda;
        if denom.norm() <= min_sep {
            return Err(LinalgError::DefectiveMatrix(format!(
                "eigenvalues {} and {} are closer than {min_sep:e}",
                cs.t(i, i),
                lambda
            )));
        }
        let acc: Complex64 = (i + 1..=k).map(|j| cs.t(i, j) * v[j]).sum();
        v[i] = -acc / denom;
    }

    let mut u = vec![zero; n];
    u[k] = Complex64::new(1.0, 0.0);
    for j in k + 1..n {
        let denom = lambda - cs.t(j, j);
        if denom.norm() <= min_sep {
            return Err(LinalgError::DefectiveMatrix(format!(
                "eigenvalues {} and {} are closer than {min_sep:e}",
                cs.t(j, j),
                lambda
            )));
        }
        let acc: Complex64 = (k..j).map(|i| u[i] * cs.t(i, j)).sum();
        u[j] = acc / denom;
    }
    Ok((v, u))
}

/// Maps triangular-factor vectors back to the original basis:
/// `x = q·v`, `y = u·qᴴ`.
pub(crate) fn to_original_basis(cs: &ComplexSchur, v: &[Complex64], u: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = cs.n;
    let x = (0..n).map(|a| (0..n).map(|j| cs.q(a, j) * v[j]).sum()).collect();
    let y = (0..n).map(|a| (0..n).map(|j| u[j] * cs.q(a, j).conj()).sum()).collect();
    (x, y)
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
}

fn right_residual(m: &Matrix, lambda: Complex64, x: &[Complex64]) -> f64 {
    let n = m.rows();
    (0..n)
        .map(|i| {
            let mx: Complex64 = (0..n).map(|j| x[j] * m[(i, j)]).sum();
            (mx - lambda * x[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

fn left_residual(m: &Matrix, lambda: Complex64, y: &[Complex64]) -> f64 {
    let n = m.rows();
    (0..n)
        .map(|j| {
            let ym: Complex64 = (0..n).map(|i| y[i] * m[(i, j)]).sum();
            (ym - lambda * y[j]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Right/left eigenvectors for each value in `spectrum`, computed by
/// substitution on the complex Schur factor.
pub fn eigenvectors(m: &Matrix, spectrum: &EigenSpectrum, opts: &SeparationOptions) -> Result<Eigenvectors, LinalgError> {
    let n = m.ensure_square()?;
    if spectrum.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "spectrum has {} values for a {n}x{n} matrix",
            spectrum.len()
        )));
    }
    let form = real_schur(m, &SchurOptions::default())?;
    let cs = complex_schur(&form);
    let diag = cs.diagonal();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let min_sep = opts.sep_tol * scale;

    let mut used = vec![false; n];
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for &lambda in &spectrum.values {
        let k = (0..n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| (diag[a] - lambda).norm().total_cmp(&(diag[b] - lambda).norm()))
            .expect("spectrum length checked");
        used[k] = true;

        let (v, u) = triangular_eigenpair(&cs, k, min_sep)?;
        let (mut x, mut y) = to_original_basis(&cs, &v, &u);
        normalize(&mut x);
        normalize(&mut y);
        let bound = opts.residual_tol * scale;
        let (rr, lr) = (right_residual(m, diag[k], &x), left_residual(m, diag[k], &y));
        if rr > bound || lr > bound {
            return Err(LinalgError::DefectiveMatrix(format!(
                "eigenpair residual {:e} exceeds {bound:e}",
                rr.max(lr)
            )));
        }
        right.push(x);
        left.push(y);
    }
    Ok(Eigenvectors { right, left })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sorted_re(s: &EigenSpectrum) -> Vec<f64> {
        let mut v: Vec<f64> = s.values.iter().map(|c| c.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn symmetric_pair() {
        let s = eigenvalues(&Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let re = sorted_re(&s);
        assert!((re[0] - 1.0).abs() < 1e-14 && (re[1] - 3.0).abs() < 1e-14);
        assert!(s.values.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn triangular_diagonal() {
        let s = eigenvalues(&Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 3.0]])).unwrap();
        assert_eq!(sorted_re(&s), vec![1.0, 3.0]);
    }

    #[test]
    fn conjugate_closed_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..12 {
            let a = random_matrix(&mut rng, n, n);
            let s = eigenvalues(&a).unwrap();
            assert_eq!(s.len(), n);
            let tr = a.trace();
            assert!((s.sum().re - tr).abs() <= 1e-8 * (1.0 + tr.abs()));
            assert!(s.sum().im.abs() <= 1e-12);
            let mut i = 0;
            while i < n {
                if s.values[i].im != 0.0 {
                    assert_eq!(s.values[i + 1], s.values[i].conj());
                    i += 2;
                } else {
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn eigenvectors_of_diagonal_are_basis() {
        let m = Matrix::from_diag(&[5.0, 2.0, -1.0]);
        let s = eigenvalues(&m).unwrap();
        let ev = eigenvectors(&m, &s, &SeparationOptions::default()).unwrap();
        for (k, (x, y)) in ev.right.iter().zip(&ev.left).enumerate() {
            for i in 0..3 {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((x[i].norm() - expect).abs() < 1e-14);
                assert!((y[i].norm() - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigenvectors_of_symmetric_pair() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = eigenvalues(&m).unwrap();
        let ev = eigenvectors(&m, &s, &SeparationOptions::default()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (lambda, x) in s.values.iter().zip(&ev.right) {
            let probe = if (lambda.re - 3.0).abs() < 1e-9 { [h, h] } else { [h, -h] };
            let dot: Complex64 = x.iter().zip(probe).map(|(a, b)| a * b).sum();
            assert!((dot.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvectors_random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 6, 6);
        let s = eigenvalues(&a).unwrap();
        let ev = eigenvectors(&a, &s, &SeparationOptions::default()).unwrap();
        let bound = 1e-6 * a.frobenius_norm();
        for (i, &lambda) in s.values.iter().enumerate() {
            assert!(right_residual(&a, lambda, &ev.right[i]) <= bound);
            assert!(left_residual(&a, lambda, &ev.left[i]) <= bound);
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let s = eigenvalues(&m).unwrap();
        assert!(matches!(
            eigenvectors(&m, &s, &SeparationOptions::default()),
            Err(LinalgError::DefectiveMatrix(_))
        ));
    }
}
