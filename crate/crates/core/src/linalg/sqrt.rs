use super::{LinalgError, Matrix};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// `(values, vectors)` with eigenvectors in the columns of `vectors`.
/// Only the symmetric part of `m` is used.
pub fn symmetric_eigen(m: &Matrix, max_sweeps: usize) -> Result<(Vec<f64>, Matrix), LinalgError> {
    let n = m.ensure_square()?;
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) <= f64::EPSILON * scale;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= f64::EPSILON * scale;
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure { sweeps: max_sweeps });
    }
    Ok(((0..n).map(|i| a[(i, i)]).collect(), v))
}

/// Principal square root of a symmetric positive-semidefinite matrix.
/// Eigenvalues down to `-1e-9·max(1, max|λ|)` are treated as round-off and
/// clipped to zero; anything more negative is `NotPsd`.
pub fn matrix_sqrt_psd(m: &Matrix, max_sweeps: usize) -> Result<Matrix, LinalgError> {
    let n = m.ensure_square()?;
    let (values, vecs) = symmetric_eigen(m, max_sweeps)?;
    let largest = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = -1e-9 * largest.max(1.0);
    if let Some(&bad) = values.iter().find(|&&v| v < floor) {
        return Err(LinalgError::NotPsd(bad));
    }
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(matrix_sqrt_psd(&Matrix::identity(4), 50).unwrap(), Matrix::identity(4));
        let r = matrix_sqrt_psd(&Matrix::from_diag(&[4.0, 9.0]), 50).unwrap();
        assert_eq!(r, Matrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn gram_matrix_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 6, 6);
        let m = a.transpose().matmul(&a).unwrap();
        let r = matrix_sqrt_psd(&m, 50).unwrap();
        let resid = r.matmul(&r).unwrap().sub(&m).unwrap().frobenius_norm();
        assert!(resid <= 1e-6 * m.frobenius_norm());
        assert_eq!(r, r.transpose());
        let (vals, _) = symmetric_eigen(&r, 50).unwrap();
        assert!(vals.iter().all(|&v| v > -1e-10));
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = Matrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(matrix_sqrt_psd(&m, 50), Err(LinalgError::NotPsd(_))));
    }
}
