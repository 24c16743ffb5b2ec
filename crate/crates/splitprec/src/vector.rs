//! Flat complex state vectors with an attached grid-shape descriptor.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex-valued state vector on a (possibly multi-dimensional) grid.
///
/// `shape` lists the grid extents; their product equals `data.len()`.
/// `spacing`, when present, gives the grid step per axis in problem units.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    pub data: Vec<Complex64>,
    pub shape: Vec<usize>,
    pub spacing: Option<Vec<f64>>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() || shape.iter().any(|&s| s == 0) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: data.len(),
            });
        }
        Ok(Self {
            data,
            shape,
            spacing: None,
        })
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Self {
        assert_eq!(spacing.len(), self.shape.len());
        self.spacing = Some(spacing);
        self
    }

    /// Flat vector without grid structure.
    pub fn flat(data: Vec<Complex64>) -> Self {
        let n = data.len();
        Self {
            data,
            shape: vec![n],
            spacing: None,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::flat(vec![Complex64::ZERO; len])
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            data: vec![Complex64::ZERO; other.data.len()],
            shape: other.shape.clone(),
            spacing: other.spacing.clone(),
        }
    }

    /// Unit basis vector `e_i`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.data[i] = Complex64::ONE;
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Inner product, conjugate-linear in the first argument: `⟨x, y⟩ = Σ x̄ᵢ yᵢ`.
    ///
    /// Summation runs in fixed sequential order so residual histories are
    /// bit-reproducible run to run.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = Complex64::ZERO;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a.conj() * b;
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for z in &self.data {
            acc += z.norm_sqr();
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= c;
        }
        out
    }

    pub fn scale_in_place(&mut self, c: Complex64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex64::ONE, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-Complex64::ONE, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize zero vector");
        self.scale(Complex64::new(1.0 / n, 0.0))
    }
}

/// Seeded random unit vector, used for probing operators.
pub fn random_unit(len: usize, rng: &mut impl rand::Rng) -> ComplexVector {
    let data: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    ComplexVector::flat(data).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_is_conjugate_linear_in_first_slot() {
        let x = ComplexVector::flat(vec![Complex64::new(0.0, 1.0)]);
        let y = ComplexVector::flat(vec![Complex64::new(1.0, 0.0)]);
        // ⟨i, 1⟩ = conj(i) * 1 = -i
        assert_eq!(x.inner(&y), Complex64::new(0.0, -1.0));
        // ⟨1, i⟩ = i
        assert_eq!(y.inner(&x), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn shape_product_must_match_len() {
        assert!(ComplexVector::new(vec![Complex64::ZERO; 6], vec![2, 3]).is_ok());
        assert!(ComplexVector::new(vec![Complex64::ZERO; 5], vec![2, 3]).is_err());
    }
}
