//! Matrix-free linear operators with evaluation counting.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::{random_unit, ComplexVector};

/// Dimension cap for falling back to dense realizations of a matrix-free
/// operator (oracle paths only).
pub const DENSE_ORACLE_DIM: usize = 64;

/// The action of a linear operator. Implementations must be linear in the
/// input; `apply_adjoint`, when provided, must satisfy
/// `⟨y, A x⟩ = ⟨Aᴴ y, x⟩`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &ComplexVector) -> ComplexVector;
    fn apply_adjoint(&self, _x: &ComplexVector) -> Option<ComplexVector> {
        None
    }
    /// Dense realization, if one is cheaply available.
    fn dense(&self) -> Option<DMatrix<Complex64>> {
        None
    }
}

/// A matrix-free linear operator. Immutable after construction except for the
/// evaluation counter, which is safe under concurrent increment.
#[derive(Clone)]
pub struct LinearMap {
    kernel: Arc<dyn Kernel>,
    evals: Arc<AtomicU64>,
}

impl LinearMap {
    pub fn from_kernel(kernel: Arc<dyn Kernel>) -> Self {
        Self {
            kernel,
            evals: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn apply(&self, x: &ComplexVector) -> ComplexVector {
        debug_assert_eq!(x.len(), self.dim());
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.kernel.apply(x)
    }

    pub fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.kernel.apply_adjoint(x)
    }

    pub fn has_adjoint(&self) -> bool {
        let probe = ComplexVector::zeros(self.dim());
        self.kernel.apply_adjoint(&probe).is_some()
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evals(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    /// Dense realization. Uses the kernel's own dense form when available,
    /// otherwise applies the operator to every basis vector (without touching
    /// the evaluation counter).
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        if let Some(m) = self.kernel.dense() {
            return m;
        }
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.kernel.apply(&ComplexVector::basis(n, j));
            for i in 0..n {
                m[(i, j)] = col.data[i];
            }
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kernel(Arc::new(IdentityKernel { dim }))
    }

    pub fn diagonal(entries: Vec<Complex64>) -> Self {
        Self::from_kernel(Arc::new(DiagonalKernel { entries }))
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&ComplexVector) -> ComplexVector + Send + Sync + 'static,
    {
        Self::from_kernel(Arc::new(FnKernel {
            dim,
            f: Box::new(f),
            fa: None,
        }))
    }

    pub fn from_fn_with_adjoint<F, G>(dim: usize, f: F, fa: G) -> Self
    where
        F: Fn(&ComplexVector) -> ComplexVector + Send + Sync + 'static,
        G: Fn(&ComplexVector) -> ComplexVector + Send + Sync + 'static,
    {
        Self::from_kernel(Arc::new(FnKernel {
            dim,
            f: Box::new(f),
            fa: Some(Box::new(fa)),
        }))
    }

    /// `c * self`
    pub fn scaled(&self, c: Complex64) -> Self {
        Self::linear_combination(vec![(c, self.clone())])
    }

    /// `a + b`
    pub fn sum(a: &LinearMap, b: &LinearMap) -> Self {
        Self::linear_combination(vec![(Complex64::ONE, a.clone()), (Complex64::ONE, b.clone())])
    }

    /// `Σ cᵢ Aᵢ`
    pub fn linear_combination(terms: Vec<(Complex64, LinearMap)>) -> Self {
        assert!(!terms.is_empty());
        let dim = terms[0].1.dim();
        assert!(terms.iter().all(|(_, m)| m.dim() == dim));
        Self::from_kernel(Arc::new(LinCombKernel { dim, terms }))
    }

    /// `outer ∘ inner` (apply `inner` first).
    pub fn compose(outer: &LinearMap, inner: &LinearMap) -> Self {
        assert_eq!(outer.dim(), inner.dim());
        Self::from_kernel(Arc::new(ComposeKernel {
            outer: outer.clone(),
            inner: inner.clone(),
        }))
    }

    /// The adjoint as an operator (only valid if the kernel provides one).
    pub fn adjoint_map(&self) -> Result<LinearMap> {
        if !self.has_adjoint() {
            return Err(Error::AdjointUnavailable);
        }
        Ok(Self::from_kernel(Arc::new(AdjointKernel {
            inner: self.clone(),
        })))
    }
}

struct IdentityKernel {
    dim: usize,
}

impl Kernel for IdentityKernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        x.clone()
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        Some(x.clone())
    }
    fn dense(&self) -> Option<DMatrix<Complex64>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
}

struct DiagonalKernel {
    entries: Vec<Complex64>,
}

impl Kernel for DiagonalKernel {
    fn dim(&self) -> usize {
        self.entries.len()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let mut out = x.clone();
        for (z, d) in out.data.iter_mut().zip(&self.entries) {
            *z *= d;
        }
        out
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        let mut out = x.clone();
        for (z, d) in out.data.iter_mut().zip(&self.entries) {
            *z *= d.conj();
        }
        Some(out)
    }
    fn dense(&self) -> Option<DMatrix<Complex64>> {
        Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            self.entries.clone(),
        )))
    }
}

type ApplyFn = Box<dyn Fn(&ComplexVector) -> ComplexVector + Send + Sync>;

struct FnKernel {
    dim: usize,
    f: ApplyFn,
    fa: Option<ApplyFn>,
}

impl Kernel for FnKernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        (self.f)(x)
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        self.fa.as_ref().map(|fa| fa(x))
    }
}

struct LinCombKernel {
    dim: usize,
    terms: Vec<(Complex64, LinearMap)>,
}

impl Kernel for LinCombKernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let mut out = ComplexVector::zeros_like(x);
        for (c, m) in &self.terms {
            out.axpy(*c, &m.apply(x));
        }
        out
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        let mut out = ComplexVector::zeros_like(x);
        for (c, m) in &self.terms {
            out.axpy(c.conj(), &m.apply_adjoint(x)?);
        }
        Some(out)
    }
}

struct ComposeKernel {
    outer: LinearMap,
    inner: LinearMap,
}

impl Kernel for ComposeKernel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        self.outer.apply(&self.inner.apply(x))
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        // (A B)ᴴ = Bᴴ Aᴴ
        self.inner.apply_adjoint(&self.outer.apply_adjoint(x)?)
    }
}

struct AdjointKernel {
    inner: LinearMap,
}

impl Kernel for AdjointKernel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        self.inner.apply_adjoint(x).expect("adjoint available")
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        Some(self.inner.apply(x))
    }
}

/// Result of a power-iteration norm estimate. `converged` is false when the
/// iteration ran out of budget; the estimate is still reported.
#[derive(Clone, Copy, Debug)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
}

/// Largest singular value of `map` by power iteration on `AᴴA`.
///
/// Falls back to a dense SVD when no adjoint is available and the dimension
/// is within the dense-oracle cap.
pub fn operator_norm_estimate(map: &LinearMap, max_iters: usize, tol: f64) -> Result<NormEstimate> {
    if !map.has_adjoint() {
        if map.dim() <= DENSE_ORACLE_DIM {
            let m = map.to_dense();
            let sv = m.svd(false, false).singular_values;
            return Ok(NormEstimate {
                value: sv.max(),
                converged: true,
            });
        }
        return Err(Error::AdjointUnavailable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0a17);
    let mut v = random_unit(map.dim(), &mut rng);
    let mut sigma = 0.0f64;
    for _ in 0..max_iters {
        let av = map.apply(&v);
        let w = map.apply_adjoint(&av).expect("adjoint checked above");
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                converged: true,
            });
        }
        let next = wn.sqrt();
        let rel = (next - sigma).abs() / next.max(f64::MIN_POSITIVE);
        v = w.scale(Complex64::new(1.0 / wn, 0.0));
        sigma = next;
        if rel < tol {
            return Ok(NormEstimate {
                value: sigma,
                converged: true,
            });
        }
    }
    Ok(NormEstimate {
        value: sigma,
        converged: false,
    })
}

/// Lower bound on the accretivity `Re⟨x, A x⟩` over unit vectors.
///
/// For small operators the exact infimum is computed as the minimum
/// eigenvalue of the Hermitian part; otherwise seeded random unit probes give
/// an upper bound on the infimum.
pub fn accretivity_lower_bound(map: &LinearMap, n_samples: usize, seed: u64) -> f64 {
    assert!(n_samples >= 1);
    if map.dim() <= DENSE_ORACLE_DIM {
        let m = map.to_dense();
        let herm = (&m + m.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm);
        return eig.eigenvalues.min();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    for _ in 0..n_samples {
        let x = random_unit(map.dim(), &mut rng);
        let ax = map.apply(&x);
        lo = lo.min(x.inner(&ax).re);
    }
    lo
}
