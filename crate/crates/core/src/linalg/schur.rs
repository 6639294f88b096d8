//! Hessenberg reduction and the real Schur decomposition.
//!
//! The QR iteration is the implicit Francis double-shift scheme in the
//! EISPACK `hqr2` arrangement: deflate on a negligible subdiagonal entry,
//! otherwise chase a 3×3 Householder bulge down the active window. Real
//! 2×2 blocks are split by a Givens rotation, so the final `t` only keeps
//! 2×2 blocks for complex-conjugate pairs.

use num_complex::Complex64;

use super::{LinalgError, Matrix};

/// Orthogonal factor `q` and quasi-upper-triangular factor `t` with
/// `m = q·t·qᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurForm {
    pub q: Matrix,
    pub t: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOptions {
    /// Relative deflation threshold: `h[i+1,i]` is dropped once it falls
    /// below `tol·(|h[i,i]| + |h[i+1,i+1]|)`.
    pub tol: f64,
    /// Total QR sweeps allowed; `None` means `30·n`.
    pub max_sweeps: Option<usize>,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self {
            tol: f64::EPSILON,
            max_sweeps: None,
        }
    }
}

/// Householder reduction to upper-Hessenberg form: returns `(h, q)` with
/// `m = q·h·qᵀ`. Columns that are already zero below the subdiagonal are
/// left untouched, so triangular input comes back unchanged with `q = I`.
pub fn hessenberg_reduce(m: &Matrix) -> Result<(Matrix, Matrix), LinalgError> {
    let n = m.ensure_square()?;
    let mut h = m.clone();
    let mut q = Matrix::identity(n);
    let mut v = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let x0 = h[(k + 1, k)];
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)] * h[(i, k)]).sum();
        if tail == 0.0 {
            continue;
        }
        let norm = (x0 * x0 + tail).sqrt();
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let len = n - k - 1;
        v[0] = x0 - alpha;
        for i in 1..len {
            v[i] = h[(k + 1 + i, k)];
        }
        let vv: f64 = v[..len].iter().map(|a| a * a).sum();
        let beta = 2.0 / vv;

        // h <- P h
        for j in 0..n {
            let s: f64 = (0..len).map(|i| v[i] * h[(k + 1 + i, j)]).sum::<f64>() * beta;
            for i in 0..len {
                h[(k + 1 + i, j)] -= s * v[i];
            }
        }
        // h <- h P, q <- q P
        for target in [&mut h, &mut q] {
            for i in 0..n {
                let s: f64 = (0..len).map(|j| target[(i, k + 1 + j)] * v[j]).sum::<f64>() * beta;
                for j in 0..len {
                    target[(i, k + 1 + j)] -= s * v[j];
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    Ok((h, q))
}

/// Real Schur decomposition `m = q·t·qᵀ`.
pub fn real_schur(m: &Matrix, opts: &SchurOptions) -> Result<SchurForm, LinalgError> {
    let n = m.ensure_square()?;
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let (mut h, mut q) = hessenberg_reduce(m)?;
    if n > 1 {
        francis_qr(&mut h, &mut q, opts)?;
    }
    Ok(SchurForm { q, t: h })
}

fn francis_qr(h: &mut Matrix, v: &mut Matrix, opts: &SchurOptions) -> Result<(), LinalgError> {
    let nn = h.rows();
    let eps = opts.tol;
    let max_sweeps = opts.max_sweeps.unwrap_or(30 * nn);
    let mut sweeps = 0usize;

    let norm: f64 = (0..nn)
        .flat_map(|i| (i.saturating_sub(1)..nn).map(move |j| (i, j)))
        .map(|(i, j)| h[(i, j)].abs())
        .sum();

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut z): (f64, f64, f64, f64, f64);
    let (mut w, mut x, mut y): (f64, f64, f64);

    while n >= 0 {
        let nu = n as usize;
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > 0 {
            let lu = l as usize;
            s = h[(lu - 1, lu - 1)].abs() + h[(lu, lu)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(lu, lu - 1)].abs() <= eps * s {
                h[(lu, lu - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root.
            h[(nu, nu)] += exshift;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots.
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;

            if q >= 0.0 {
                // Real pair: rotate the block to upper-triangular.
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nn {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in 0..nn {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
                h[(nu, nu - 1)] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(LinalgError::ConvergenceFailure { sweeps: max_sweeps });
            }
            let lu = l as usize;
            // Form shift.
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            // Exceptional shifts break cycles on pathological inputs.
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n, columns m..=n.
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = 0.0;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if lu != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * z;
                    }
                    h[(k, j)] -= p * x;
                    h[(k + 1, j)] -= p * y;
                }
                for i in 0..=nu.min(k + 3) {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k)] -= p;
                    h[(i, k + 1)] -= p * q;
                }
                for i in 0..nn {
                    p = x * v[(i, k)] + y * v[(i, k + 1)];
                    if notlast {
                        p += z * v[(i, k + 2)];
                        v[(i, k + 2)] -= p * r;
                    }
                    v[(i, k)] -= p;
                    v[(i, k + 1)] -= p * q;
                }
            }
        }
    }

    // Everything below the first subdiagonal is structurally zero.
    for i in 2..nn {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Diagonal blocks of a quasi-upper-triangular matrix: `(start, size)`.
pub fn diagonal_blocks(t: &Matrix) -> Vec<(usize, usize)> {
    let n = t.rows();
    let mut blocks = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Eigenvalues of the 2×2 block `[[a, b], [c, d]]`, the one with
/// non-negative imaginary part first.
pub(crate) fn block_eigenvalues(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 2] {
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    let mid = 0.5 * (a + d);
    if disc >= 0.0 {
        let root = disc.sqrt();
        [Complex64::new(mid + root, 0.0), Complex64::new(mid - root, 0.0)]
    } else {
        let root = (-disc).sqrt();
        [Complex64::new(mid, root), Complex64::new(mid, -root)]
    }
}

/// Complex Schur form `m = q·t·qᴴ` with `t` upper-triangular, stored
/// row-major.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub n: usize,
    pub q: Vec<Complex64>,
    pub t: Vec<Complex64>,
}

impl ComplexSchur {
    #[inline]
    pub fn t(&self, i: usize, j: usize) -> Complex64 {
        self.t[i * self.n + j]
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> Complex64 {
        self.q[i * self.n + j]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.t(i, i)).collect()
    }
}

/// Triangularizes every complex 2×2 block of a real Schur form with a
/// unitary 2×2 transform.
pub fn complex_schur(form: &SchurForm) -> ComplexSchur {
    let n = form.t.rows();
    let mut t: Vec<Complex64> = form.t.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut q: Vec<Complex64> = form.q.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();

    for (k, size) in diagonal_blocks(&form.t) {
        if size != 2 {
            continue;
        }
        let (a, b) = (form.t[(k, k)], form.t[(k, k + 1)]);
        let (c, d) = (form.t[(k + 1, k)], form.t[(k + 1, k + 1)]);
        let lambda = block_eigenvalues(a, b, c, d)[0];
        // Eigenvector of the block; pick the better-conditioned formula.
        let (v0, v1) = if b.abs() >= c.abs() {
            (Complex64::new(b, 0.0), lambda - a)
        } else {
            (lambda - d, Complex64::new(c, 0.0))
        };
        let nv = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        let (v0, v1) = (v0 / nv, v1 / nv);
        // U = [[v0, -conj(v1)], [v1, conj(v0)]]
        let u = [[v0, -v1.conj()], [v1, v0.conj()]];

        // Rows k, k+1: t <- Uᴴ t
        for j in 0..n {
            let r0 = t[k * n + j];
            let r1 = t[(k + 1) * n + j];
            t[k * n + j] = u[0][0].conj() * r0 + u[1][0].conj() * r1;
            t[(k + 1) * n + j] = u[0][1].conj() * r0 + u[1][1].conj() * r1;
        }
        // Columns k, k+1: t <- t U and q <- q U
        for mat in [&mut t, &mut q] {
            for i in 0..n {
                let c0 = mat[i * n + k];
                let c1 = mat[i * n + k + 1];
                mat[i * n + k] = c0 * u[0][0] + c1 * u[1][0];
                mat[i * n + k + 1] = c0 * u[0][1] + c1 * u[1][1];
            }
        }
        t[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
    }
    ComplexSchur { n, q, t }
}
