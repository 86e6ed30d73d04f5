//! Gaussian log-likelihood of the B-type structural model and its analytic
//! gradient.
//!
//! With unit-variance structural shocks, `u_t = B eps_t` implies
//! `E[u u'] = BB'`, and the concentrated log-likelihood given the
//! maximum-likelihood residual covariance `Sigma` is
//!
//! `ll(B) = -(NT/2) ln(2 pi) - (T/2) ln|B|^2 - (T/2) tr(B^-T B^-1 Sigma)`.
//!
//! `ln|B|^2` is evaluated as twice the log of |det B| accumulated from an
//! LU factorization, which is insensitive to the determinant's sign.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Determinant magnitudes below this bound are treated as singular.
const DET_FLOOR: f64 = 1e-12;

/// Log-likelihood of the structural matrix `b` given the ML residual
/// covariance and sample size.
pub fn svar_loglik<S: Scalar>(b: &Matrix<S>, sigma_ml: &Matrix<S>, t: usize) -> Result<S> {
    let n = b.rows();
    assert!(b.is_square() && sigma_ml.rows() == n && sigma_ml.is_square());
    let lu = b.lu();
    let ln_abs_det = lu.ln_abs_det();
    if lu.is_singular() || ln_abs_det < S::from_f64_lossy(DET_FLOOR.ln()) {
        return Err(Error::Singularity(format!(
            "|det B| below {DET_FLOOR}; likelihood undefined"
        )));
    }
    let b_inv = lu.solve_mat(&Matrix::identity(n))?;
    // tr(B^-T B^-1 Sigma) = <Gram(B^-1), Sigma> elementwise (Sigma symmetric)
    let mut trace = S::zero();
    for i in 0..n {
        for j in 0..n {
            let mut gram = S::zero();
            for k in 0..n {
                gram += b_inv[(k, i)] * b_inv[(k, j)];
            }
            trace += gram * sigma_ml[(j, i)];
        }
    }
    let tf = S::from_usize_lossy(t);
    let nf = S::from_usize_lossy(n);
    let half = S::from_f64_lossy(0.5);
    let ln2pi = S::from_f64_lossy((2.0 * std::f64::consts::PI).ln());
    let two = S::from_f64_lossy(2.0);
    Ok(-(nf * tf * half) * ln2pi - tf * half * (two * ln_abs_det) - tf * half * trace)
}

/// Analytic gradient of [`svar_loglik`] with respect to every entry of `b`:
/// `T (B^-T B^-1 Sigma B^-T - B^-T)`.
pub fn svar_loglik_gradient<S: Scalar>(
    b: &Matrix<S>,
    sigma_ml: &Matrix<S>,
    t: usize,
) -> Result<Matrix<S>> {
    let n = b.rows();
    let lu = b.lu();
    if lu.is_singular() || lu.ln_abs_det() < S::from_f64_lossy(DET_FLOOR.ln()) {
        return Err(Error::Singularity(
            "gradient undefined at singular B".into(),
        ));
    }
    let b_inv = lu.solve_mat(&Matrix::identity(n))?;
    let b_inv_t = b_inv.transpose();
    let core = b_inv_t.matmul(&b_inv).matmul(sigma_ml).matmul(&b_inv_t);
    Ok(core.sub(&b_inv_t).scale(S::from_usize_lossy(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::fd_gradient;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_pd(seed: u64, n: usize) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut s = m.matmul(&m.transpose());
        for i in 0..n {
            s[(i, i)] += 0.5;
        }
        s
    }

    #[test]
    fn identity_case_closed_form() {
        for (n, t) in [(2usize, 50usize), (4, 100), (6, 5000)] {
            let ll = svar_loglik(&Matrix::<f64>::identity(n), &Matrix::identity(n), t).unwrap();
            let nt = (n * t) as f64;
            let expected =
                -(nt / 2.0) * (2.0 * std::f64::consts::PI).ln() - (t as f64 / 2.0) * n as f64;
            assert!((ll - expected).abs() < 1e-10, "ll {ll} vs {expected}");
        }
    }

    #[test]
    fn scalar_matrix_closed_form() {
        // B = c I, Sigma = I, N = 2, T = 100:
        // ll = -(NT/2) ln(2 pi) - NT ln c - (T/2) N / c^2
        let (n, t, c) = (2usize, 100usize, 1.7f64);
        let b = Matrix::<f64>::identity(n).scale(c);
        let ll = svar_loglik(&b, &Matrix::identity(n), t).unwrap();
        let nt = (n * t) as f64;
        let expected = -(nt / 2.0) * (2.0 * std::f64::consts::PI).ln()
            - nt * c.ln()
            - (t as f64 / 2.0) * n as f64 / (c * c);
        assert!((ll - expected).abs() < 1e-9, "ll {ll} vs {expected}");
    }

    #[test]
    fn negative_determinant_is_handled_by_magnitude() {
        // swapping columns flips the determinant sign but not |det|
        let b = Matrix::from_rows(vec![vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        let sigma = Matrix::<f64>::identity(2);
        let ll = svar_loglik(&b, &sigma, 10).unwrap();
        let b_pos = Matrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ll_pos = svar_loglik(&b_pos, &sigma, 10).unwrap();
        assert!((ll - ll_pos).abs() < 1e-12);
    }

    #[test]
    fn singular_b_is_an_error() {
        let b = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            svar_loglik(&b, &Matrix::identity(2), 10),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn cholesky_factor_attains_the_maximum() {
        let sigma = random_pd(3, 4);
        let b0 = sigma.cholesky().unwrap();
        let t = 200;
        let ll0 = svar_loglik(&b0, &sigma, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let pert = Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let b = b0.add(&pert.scale(0.01));
            let ll = svar_loglik(&b, &sigma, t).unwrap();
            assert!(
                ll0 >= ll,
                "perturbed point beats the first-order optimum: {ll} > {ll0}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let n = 3 + (seed % 2) as usize;
            let sigma = random_pd(seed.wrapping_add(100), n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // random B away from singularity: diagonal-dominant perturbation
            let mut b = Matrix::from_fn(n, n, |_, _| rng.random_range(-0.4..0.4));
            for i in 0..n {
                b[(i, i)] += 1.5;
            }
            let t = 100;
            let analytic = svar_loglik_gradient(&b, &sigma, t).unwrap();

            let flat: Vec<f64> = (0..n * n).map(|k| b[(k / n, k % n)]).collect();
            let f = |x: &[f64]| {
                let bm = Matrix::from_fn(n, n, |i, j| x[i * n + j]);
                svar_loglik(&bm, &sigma, t).unwrap_or(f64::NEG_INFINITY)
            };
            let fd = fd_gradient(&f, &flat);
            for k in 0..n * n {
                let a = analytic[(k / n, k % n)];
                let scale = a.abs().max(1.0);
                assert!(
                    (fd[k] - a).abs() / scale < 1e-5,
                    "seed {seed} entry {k}: fd {} vs analytic {a}",
                    fd[k]
                );
            }
        }
    }
}
