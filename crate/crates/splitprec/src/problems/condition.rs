//! Condition-number estimation for built operators: exact at dense-oracle
//! scale, power iteration plus a solver-realized inverse beyond it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::densify;
use crate::error::{Error, Result};
use crate::operator::{LinearMap, DENSE_ORACLE_DIM};
use crate::solvers::{run_algorithm, Algorithm, SolverConfig, Status};
use crate::vector::{random_unit, ComplexVector};

/// Largest-magnitude eigenvalue of a Hermitian positive map by power
/// iteration with a Rayleigh-quotient estimate.
fn power_extremal<F>(dim: usize, mut apply: F, iters: usize, tol: f64) -> Result<f64>
where
    F: FnMut(&ComplexVector) -> Result<ComplexVector>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let mut v = random_unit(dim, &mut rng);
    let mut lambda = 0.0f64;
    for _ in 0..iters {
        let av = apply(&v)?;
        let next = v.inner(&av).re;
        let norm = av.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = av.scale(num_complex::Complex64::new(1.0 / norm, 0.0));
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Ratio of extremal eigenvalues of `op`.
///
/// Dense-oracle dimensions get the exact singular-value ratio. Larger
/// operators must be Hermitian positive definite (the Schrödinger path):
/// the largest eigenvalue comes from power iteration on `op`, the smallest
/// from power iteration on the inverse realized by `algorithm`.
pub fn estimate_condition_number(
    op: &LinearMap,
    algorithm: Algorithm,
    config: &SolverConfig,
) -> Result<f64> {
    if op.dim() <= DENSE_ORACLE_DIM {
        return Ok(densify(op)?.condition_number());
    }
    let lambda_max = power_extremal(op.dim(), |x| Ok(op.apply(x)), 2000, 1e-10)?;
    let inv_lambda_max = power_extremal(
        op.dim(),
        |x| {
            let (y, report) = run_algorithm(op, x, algorithm, config)?;
            if report.status != Status::Converged {
                return Err(Error::InnerSolve(format!(
                    "condition-number inverse solve ended with status {:?}",
                    report.status
                )));
            }
            Ok(y)
        },
        200,
        1e-8,
    )?;
    if lambda_max <= 0.0 || inv_lambda_max <= 0.0 {
        return Err(Error::InvalidArgument(
            "estimate_condition_number: operator not positive on probes".into(),
        ));
    }
    Ok(lambda_max * inv_lambda_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::Rng;

    fn config() -> SolverConfig {
        SolverConfig {
            tol: 1e-12,
            max_iter: 10_000,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn identity_is_one() {
        let id = LinearMap::identity(10);
        let kappa = estimate_condition_number(&id, Algorithm::Gmres, &config()).unwrap();
        assert!((kappa - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diagonal_ratio() {
        let d = LinearMap::diagonal((1..=10).map(|i| Complex64::new(i as f64, 0.0)).collect());
        let kappa = estimate_condition_number(&d, Algorithm::Gmres, &config()).unwrap();
        assert!((kappa - 10.0).abs() < 1e-9);
    }

    #[test]
    fn random_spd_matches_dense_eigen_ratio() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let n = 32;
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let spd = &g * g.adjoint() + DMatrix::identity(n, n) * Complex64::new(0.5, 0.0);
        let map = crate::dense::DenseOperator::new(spd.clone()).unwrap().to_linear_map();
        let kappa = estimate_condition_number(&map, Algorithm::Gmres, &config()).unwrap();
        let eig = nalgebra::SymmetricEigen::new(spd);
        let exact = eig.eigenvalues.max() / eig.eigenvalues.min();
        assert!((kappa - exact).abs() / exact < 0.01, "{kappa} vs {exact}");
    }

    #[test]
    fn large_diagonal_uses_iterative_path() {
        let n = 128;
        let entries: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + 4.0 * (i as f64) / (n as f64 - 1.0), 0.0))
            .collect();
        let d = LinearMap::diagonal(entries);
        let kappa = estimate_condition_number(&d, Algorithm::Gmres, &config()).unwrap();
        assert!((kappa - 5.0).abs() / 5.0 < 0.01, "{kappa}");
    }
}
