use super::GanError;

fn mean_sq_dev(scores: &[f64], target: f64) -> Result<f64, GanError> {
    if scores.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    Ok(scores.iter().map(|s| (s - target) * (s - target)).sum::<f64>() / scores.len() as f64)
}

/// `½·mean((D(x) − b)²) + mean((D(G(z)) − a)²)`; with `symmetric` both
/// terms are halved.
pub fn d_loss(real: &[f64], fake: &[f64], a: f64, b: f64, symmetric: bool) -> Result<f64, GanError> {
    let fake_coef = if symmetric { 0.5 } else { 1.0 };
    Ok(0.5 * mean_sq_dev(real, b)? + fake_coef * mean_sq_dev(fake, a)?)
}

/// Gradients of [`d_loss`] with respect to each score.
pub fn d_loss_grad(real: &[f64], fake: &[f64], a: f64, b: f64, symmetric: bool) -> (Vec<f64>, Vec<f64>) {
    let fake_coef = if symmetric { 1.0 } else { 2.0 };
    let gr = real.iter().map(|s| (s - b) / real.len() as f64).collect();
    let gf = fake.iter().map(|s| fake_coef * (s - a) / fake.len() as f64).collect();
    (gr, gf)
}

/// Plain least-squares generator loss `½·mean((D(G(z)) − c)²)`.
pub fn g_ls_loss(fake: &[f64], c: f64) -> Result<f64, GanError> {
    Ok(0.5 * mean_sq_dev(fake, c)?)
}

/// `λ·max(0, |gap| − ε)`.
pub fn hinge_penalty(gap: f64, epsilon: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * (gap.abs() - epsilon).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GLossParts {
    pub total: f64,
    pub ls: f64,
    pub penalty: f64,
    /// `dfn_fake_mean − dfn_real_mean`.
    pub gap: f64,
}

/// Least-squares generator loss plus the DFN hinge penalty. With `λ = 0`
/// the total is the plain least-squares loss, bit for bit.
pub fn g_loss(
    fake: &[f64],
    c: f64,
    dfn_fake_mean: f64,
    dfn_real_mean: f64,
    epsilon: f64,
    lambda: f64,
) -> Result<GLossParts, GanError> {
    let ls = g_ls_loss(fake, c)?;
    let gap = dfn_fake_mean - dfn_real_mean;
    let penalty = hinge_penalty(gap, epsilon, lambda);
    let total = if penalty == 0.0 { ls } else { ls + penalty };
    Ok(GLossParts { total, ls, penalty, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminator_closed_forms() {
        for (a, b) in [(0.0, 1.0), (-1.0, 1.0)] {
            assert_eq!(d_loss(&[b; 4], &[a; 4], a, b, false).unwrap(), 0.0);
            assert_eq!(d_loss(&[b + 1.0; 5], &[a; 3], a, b, false).unwrap(), 0.5);
        }
        // Fake term is not halved unless asked.
        assert_eq!(d_loss(&[1.0], &[1.0], 0.0, 1.0, false).unwrap(), 1.0);
        assert_eq!(d_loss(&[1.0], &[1.0], 0.0, 1.0, true).unwrap(), 0.5);
        assert!(d_loss(&[], &[1.0], 0.0, 1.0, false).is_err());
    }

    #[test]
    fn discriminator_matches_scalar_formula() {
        let real = [0.3, -1.2, 2.5, 0.0];
        let fake = [1.1, -0.4, 0.9];
        let (a, b) = (-1.0, 1.0);
        let mut want = 0.0;
        for r in real {
            want += 0.5 * (r - b) * (r - b) / 4.0;
        }
        for f in fake {
            want += (f - a) * (f - a) / 3.0;
        }
        assert!((d_loss(&real, &fake, a, b, false).unwrap() - want).abs() < 1e-15);

        let h = 1e-6;
        let (gr, gf) = d_loss_grad(&real, &fake, a, b, false);
        for i in 0..real.len() {
            let mut up = real;
            up[i] += h;
            let mut dn = real;
            dn[i] -= h;
            let fd = (d_loss(&up, &fake, a, b, false).unwrap() - d_loss(&dn, &fake, a, b, false).unwrap()) / (2.0 * h);
            assert!((fd - gr[i]).abs() < 1e-8);
        }
        for i in 0..fake.len() {
            let mut up = fake;
            up[i] += h;
            let mut dn = fake;
            dn[i] -= h;
            let fd = (d_loss(&real, &up, a, b, false).unwrap() - d_loss(&real, &dn, a, b, false).unwrap()) / (2.0 * h);
            assert!((fd - gf[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn generator_closed_forms() {
        let p = g_loss(&[1.0; 3], 1.0, 2.0, 2.05, 0.1, 10.0).unwrap();
        assert_eq!(p.total, 0.0);
        let p = g_loss(&[3.0; 2], 1.0, 7.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(p.total, 2.0);
        let p = g_loss(&[0.0; 2], 0.0, 1.0 + 0.25 + 0.5, 1.0, 0.25, 10.0).unwrap();
        assert!((p.penalty - 5.0).abs() < 1e-12);
        assert!((p.gap - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_is_plain_ls_bitwise() {
        let scores = [0.123456789, -3.3, 7.77, 1e-9];
        for c in [0.0, 1.0] {
            let plain = g_ls_loss(&scores, c).unwrap();
            let full = g_loss(&scores, c, 123.0, -5.0, 0.0, 0.0).unwrap();
            assert_eq!(full.total.to_bits(), plain.to_bits());
        }
    }

    #[test]
    fn hinge_shape() {
        assert_eq!(hinge_penalty(0.3, 0.5, 2.0), 0.0);
        assert_eq!(hinge_penalty(-0.5, 0.5, 2.0), 0.0);
        assert!((hinge_penalty(-1.5, 0.5, 2.0) - 2.0).abs() < 1e-15);
    }
}
