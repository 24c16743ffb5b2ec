//! Small dense operators used as oracles for the matrix-free machinery.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Kernel, LinearMap, DENSE_ORACLE_DIM};
use crate::vector::ComplexVector;

/// A dense square operator, capped at [`DENSE_ORACLE_DIM`] so the O(n³)
/// factorizations behind it stay instantaneous.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    entries: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidArgument("dense operator must be square".into()));
        }
        if entries.nrows() > DENSE_ORACLE_DIM {
            return Err(Error::InvalidArgument(format!(
                "dense operator dim {} exceeds cap {}",
                entries.nrows(),
                DENSE_ORACLE_DIM
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).unwrap()
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(diag.to_vec()))).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn to_linear_map(&self) -> LinearMap {
        LinearMap::from_kernel(Arc::new(DenseKernel {
            entries: self.entries.clone(),
        }))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let sv = self.entries.clone().svd(false, false).singular_values;
        sv.iter().copied().collect()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values().into_iter().fold(0.0, f64::max)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// `σ_max / σ_min`; infinite for numerically singular operators.
    pub fn condition_number(&self) -> f64 {
        let smin = self.sigma_min();
        if smin == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_max() / smin
        }
    }

    /// Minimum eigenvalue of the Hermitian part `(A + Aᴴ)/2`.
    pub fn hermitian_part_eigmin(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        nalgebra::SymmetricEigen::new(herm).eigenvalues.min()
    }

    /// Exact inverse. Rejects inputs that are singular to tolerance
    /// (condition number above 1e12).
    pub fn inverse(&self) -> Result<DenseOperator> {
        let cond = self.condition_number();
        if !cond.is_finite() || cond >= 1e12 {
            return Err(Error::Singular { cond });
        }
        let inv = self
            .entries
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { cond })?;
        Ok(Self { entries: inv })
    }

    pub fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let v = DVector::from_vec(x.data.clone());
        let out = &self.entries * v;
        ComplexVector::flat(out.iter().copied().collect())
    }
}

struct DenseKernel {
    entries: DMatrix<Complex64>,
}

impl Kernel for DenseKernel {
    fn dim(&self) -> usize {
        self.entries.nrows()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let v = DVector::from_vec(x.data.clone());
        let out = &self.entries * v;
        ComplexVector::flat(out.iter().copied().collect())
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        let v = DVector::from_vec(x.data.clone());
        let out = self.entries.adjoint() * v;
        Some(ComplexVector::flat(out.iter().copied().collect()))
    }
    fn dense(&self) -> Option<DMatrix<Complex64>> {
        Some(self.entries.clone())
    }
}

/// Dense-backed map without the oracle dimension cap. Builders use this for
/// moderate-size factored operators (e.g. the pantograph time grid).
pub(crate) fn raw_dense_map(entries: DMatrix<Complex64>) -> LinearMap {
    LinearMap::from_kernel(Arc::new(DenseKernel { entries }))
}

/// Build a dense operator holding a matrix-free map (basis-vector probing).
pub fn densify(map: &LinearMap) -> Result<DenseOperator> {
    DenseOperator::new(map.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_identity() {
        let id = DenseOperator::identity(4);
        let inv = id.inverse().unwrap();
        assert_eq!(inv.entries(), id.entries());
    }

    #[test]
    fn inverse_of_diagonal() {
        let d = DenseOperator::from_diagonal(&[Complex64::new(2.0, 0.0), Complex64::new(0.0, 4.0)]);
        let inv = d.inverse().unwrap();
        assert!((inv.entries()[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((inv.entries()[(1, 1)] - Complex64::new(0.0, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn multiply_back_residual_small() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        // Diagonally dominated so it is well conditioned.
        let m = DMatrix::from_fn(n, n, |i, j| {
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            if i == j {
                z + Complex64::new(4.0, 0.0)
            } else {
                z
            }
        });
        let op = DenseOperator::new(m.clone()).unwrap();
        let inv = op.inverse().unwrap();
        let resid = (&m * inv.entries()) - DMatrix::<Complex64>::identity(n, n);
        assert!(resid.norm() < 1e-10);
    }

    #[test]
    fn singular_input_rejected() {
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert!(matches!(
            DenseOperator::new(z).unwrap().inverse(),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn dim_cap_enforced() {
        let big = DMatrix::<Complex64>::identity(65, 65);
        assert!(DenseOperator::new(big).is_err());
    }
}
