//! The canonical split system `A = (L+1) − B` and its preconditioned form.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{operator_norm_estimate, Kernel, LinearMap};
use crate::splitting::scale::{ScaleFactor, ScaleRecord};
use crate::vector::ComplexVector;

/// Step size default for general systems. Theorem-5-optimal worst case is
/// `Re[B⁻¹] ≈ ½` but practical optima sit in `[0.8, 1.0]`; 0.75 is a robust
/// middle ground.
pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_TARGET_NORM: f64 = 0.95;

type ShiftedInvFactory = Arc<dyn Fn(Complex64) -> LinearMap + Send + Sync>;

/// A linear problem in canonical preconditioned form.
///
/// Invariants: `certified_v_norm < 1`; `(L+1)⁻¹` is an exact inverse of the
/// stored forward map on the grid; for accretive-path systems the implied
/// `A = (L+1) − B` is probe-accretive.
#[derive(Clone)]
pub struct SplitSystem {
    /// `(L+1)⁻¹`
    pub inv_l_plus_one: LinearMap,
    /// `L+1`, kept for residual checks and round-trip verification.
    pub l_plus_one: LinearMap,
    /// `B = 1 − V`
    pub b_map: LinearMap,
    pub scale: ScaleRecord,
    pub alpha: f64,
    /// Already-scaled right-hand side.
    pub source: ComplexVector,
    pub certified_v_norm: f64,
    /// True when the certification came from power iteration rather than a
    /// pointwise/diagonal bound.
    pub v_norm_is_estimate: bool,
    /// Optional factory for `((L+1) + σ)⁻¹`, used by the shift-splitting
    /// baseline.
    pub shifted_inv: Option<ShiftedInvFactory>,
}

impl SplitSystem {
    pub fn dim(&self) -> usize {
        self.b_map.dim()
    }

    /// The forward operator `A = (L+1) − B`.
    pub fn forward_map(&self) -> LinearMap {
        LinearMap::linear_combination(vec![
            (Complex64::ONE, self.l_plus_one.clone()),
            (-Complex64::ONE, self.b_map.clone()),
        ])
    }

    /// `((L+1) + σ)⁻¹` when the split exposes it.
    pub fn shifted_inverse(&self, sigma: Complex64) -> Option<LinearMap> {
        self.shifted_inv.as_ref().map(|f| f(sigma))
    }

    /// Assemble the preconditioned operator of the residual form.
    pub fn build_preconditioned(&self) -> PreconditionedSystem {
        build_preconditioned(self)
    }

    /// Build a split directly from dense `A` and `V` (`B = 1 − V`,
    /// `L + 1 = A + B`). Used by dense studies and small oracle problems; the
    /// `‖V‖` certificate is the exact largest singular value.
    pub fn from_dense_parts(
        a: &DMatrix<Complex64>,
        v: &DMatrix<Complex64>,
        source: ComplexVector,
        alpha: f64,
    ) -> Result<SplitSystem> {
        let n = a.nrows();
        if !a.is_square() || v.nrows() != n || !v.is_square() || source.len() != n {
            return Err(Error::InvalidArgument(
                "from_dense_parts: inconsistent dimensions".into(),
            ));
        }
        let v_norm = v.clone().svd(false, false).singular_values.max();
        if v_norm >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "from_dense_parts: ‖V‖ = {v_norm} must be < 1"
            )));
        }
        let b = DMatrix::<Complex64>::identity(n, n) - v;
        let l_plus_one = a + &b;
        let inv = l_plus_one
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { cond: f64::INFINITY })?;
        let lp1 = l_plus_one.clone();
        let factory: ShiftedInvFactory = Arc::new(move |sigma: Complex64| {
            let shifted = &lp1 + DMatrix::<Complex64>::identity(lp1.nrows(), lp1.nrows()) * sigma;
            let inv = shifted.try_inverse().expect("shifted (L+1) invertible");
            dense_map(inv)
        });
        Ok(SplitSystem {
            inv_l_plus_one: dense_map(inv),
            l_plus_one: dense_map(l_plus_one),
            b_map: dense_map(b),
            scale: ScaleRecord {
                factor: ScaleFactor::Scalar(Complex64::ONE),
                target_norm: v_norm.max(f64::MIN_POSITIVE),
                degenerate: false,
            },
            alpha,
            source,
            certified_v_norm: v_norm,
            v_norm_is_estimate: false,
            shifted_inv: Some(factory),
        })
    }
}

/// The preconditioned problem `Γ⁻¹A x = Γ⁻¹b`.
///
/// `precond_op(x) = αB[x − (L+1)⁻¹(Bx)]`: exactly one `(L+1)⁻¹` and two `B`
/// applications per evaluation. `m_op = 1 − precond_op` is the iteration
/// operator of the Neumann series.
#[derive(Clone)]
pub struct PreconditionedSystem {
    pub precond_op: LinearMap,
    pub m_op: LinearMap,
    /// `Γ⁻¹b = αB(L+1)⁻¹b`
    pub precond_source: ComplexVector,
    pub alpha: f64,
}

impl PreconditionedSystem {
    pub fn dim(&self) -> usize {
        self.precond_op.dim()
    }

    /// The residual of Algorithm form: `Δ(x) = B[(L+1)⁻¹(Bx + b) − x]`,
    /// recombined as `(Γ⁻¹b − Γ⁻¹A x)/α`.
    pub fn delta(&self, x: &ComplexVector) -> ComplexVector {
        let mut d = self.precond_source.sub(&self.precond_op.apply(x));
        d.scale_in_place(Complex64::new(1.0 / self.alpha, 0.0));
        d
    }
}

pub fn build_preconditioned(split: &SplitSystem) -> PreconditionedSystem {
    let alpha = Complex64::new(split.alpha, 0.0);
    let n = split.dim();
    let inner = LinearMap::linear_combination(vec![
        (Complex64::ONE, LinearMap::identity(n)),
        (
            -Complex64::ONE,
            LinearMap::compose(&split.inv_l_plus_one, &split.b_map),
        ),
    ]);
    let precond_op = LinearMap::compose(&split.b_map, &inner).scaled(alpha);
    let m_op = LinearMap::linear_combination(vec![
        (Complex64::ONE, LinearMap::identity(n)),
        (-Complex64::ONE, precond_op.clone()),
    ]);
    let precond_source = split
        .b_map
        .apply(&split.inv_l_plus_one.apply(&split.source))
        .scale(alpha);
    PreconditionedSystem {
        precond_op,
        m_op,
        precond_source,
        alpha: split.alpha,
    }
}

/// Embed a non-accretive problem into the skew-Hermitian block system
///
/// ```text
/// A = c⁻¹ [ 0   −Ǎ* ]      b = c⁻¹ [ 0 ]
///         [ Ǎ    0  ]              [ b̌ ]
/// ```
///
/// with real positive `c` chosen so `‖V_block‖ ≤ target_norm`. The auxiliary
/// adjoint-problem source is zero, so the physical solution is the first half
/// of the block unknown.
pub fn antisymmetrize(
    raw_l: &LinearMap,
    raw_v: &LinearMap,
    raw_source: &ComplexVector,
    target_norm: f64,
) -> Result<SplitSystem> {
    if !raw_l.has_adjoint() || !raw_v.has_adjoint() {
        return Err(Error::AdjointUnavailable);
    }
    let n = raw_l.dim();
    if raw_v.dim() != n || raw_source.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: raw_v.dim(),
        });
    }
    // ‖V_block‖ = ‖V̌‖/c; the norm comes from power iteration, inflated
    // slightly so the certificate stays below target.
    let est = operator_norm_estimate(raw_v, 800, 1e-11)?;
    let (c, degenerate) = if est.value > 0.0 {
        (est.value * 1.001 / target_norm, false)
    } else {
        (1.0, true)
    };
    let certified = (est.value / c).min(target_norm);

    let v_block = LinearMap::from_kernel(Arc::new(AntiBlockKernel {
        inner: raw_v.clone(),
        inv_c: 1.0 / c,
    }));
    let b_map = LinearMap::linear_combination(vec![
        (Complex64::ONE, LinearMap::identity(2 * n)),
        (-Complex64::ONE, v_block),
    ]);

    let p = raw_l.to_dense() / Complex64::new(c, 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let s1_inv = (&id + p.adjoint() * &p)
        .try_inverse()
        .ok_or(Error::Singular { cond: f64::INFINITY })?;
    let s2_inv = (&id + &p * p.adjoint())
        .try_inverse()
        .ok_or(Error::Singular { cond: f64::INFINITY })?;
    let p = Arc::new(p);
    let inv_l_plus_one = LinearMap::from_kernel(Arc::new(BlockLPlusOneInvKernel {
        p: p.clone(),
        s1_inv,
        s2_inv,
    }));
    let l_plus_one = LinearMap::from_kernel(Arc::new(BlockLPlusOneKernel { p }));

    let mut source = ComplexVector::zeros(2 * n);
    for (i, z) in raw_source.data.iter().enumerate() {
        source.data[n + i] = z / c;
    }

    Ok(SplitSystem {
        inv_l_plus_one,
        l_plus_one,
        b_map,
        scale: ScaleRecord {
            factor: ScaleFactor::Scalar(Complex64::new(c, 0.0)),
            target_norm,
            degenerate,
        },
        alpha: DEFAULT_ALPHA,
        source,
        certified_v_norm: certified,
        v_norm_is_estimate: true,
        shifted_inv: None,
    })
}

fn dense_map(m: DMatrix<Complex64>) -> LinearMap {
    crate::dense::raw_dense_map(m)
}

/// `c⁻¹ [[0, −T*], [T, 0]]` over the stacked vector `[x₁; x₂]`.
struct AntiBlockKernel {
    inner: LinearMap,
    inv_c: f64,
}

impl AntiBlockKernel {
    fn halves(x: &ComplexVector) -> (ComplexVector, ComplexVector) {
        let n = x.len() / 2;
        (
            ComplexVector::flat(x.data[..n].to_vec()),
            ComplexVector::flat(x.data[n..].to_vec()),
        )
    }

    fn stack(top: &ComplexVector, bottom: &ComplexVector) -> ComplexVector {
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        ComplexVector::flat(data)
    }
}

impl Kernel for AntiBlockKernel {
    fn dim(&self) -> usize {
        2 * self.inner.dim()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let (x1, x2) = Self::halves(x);
        let top = self
            .inner
            .apply_adjoint(&x2)
            .expect("adjoint checked at construction")
            .scale(Complex64::new(-self.inv_c, 0.0));
        let bottom = self.inner.apply(&x1).scale(Complex64::new(self.inv_c, 0.0));
        Self::stack(&top, &bottom)
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        // The block is skew-Hermitian-like: adjoint = [[0, T*],[−T, 0]]/c.
        let (x1, x2) = Self::halves(x);
        let top = self.inner.apply_adjoint(&x2)?.scale(Complex64::new(self.inv_c, 0.0));
        let bottom = self.inner.apply(&x1).scale(Complex64::new(-self.inv_c, 0.0));
        Some(Self::stack(&top, &bottom))
    }
}

/// Forward block `[[I, −P*],[P, I]]` with `P = Ľ/c`.
struct BlockLPlusOneKernel {
    p: Arc<DMatrix<Complex64>>,
}

impl Kernel for BlockLPlusOneKernel {
    fn dim(&self) -> usize {
        2 * self.p.nrows()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let (x1, x2) = AntiBlockKernel::halves(x);
        let v1 = nalgebra::DVector::from_vec(x1.data);
        let v2 = nalgebra::DVector::from_vec(x2.data);
        let top = &v1 - self.p.adjoint() * &v2;
        let bottom = self.p.as_ref() * v1 + v2;
        stack_dv(top, bottom)
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        let (x1, x2) = AntiBlockKernel::halves(x);
        let v1 = nalgebra::DVector::from_vec(x1.data);
        let v2 = nalgebra::DVector::from_vec(x2.data);
        let top = &v1 + self.p.adjoint() * &v2;
        let bottom = -(self.p.as_ref() * v1) + v2;
        Some(stack_dv(top, bottom))
    }
}

/// Inverse of the forward block via the Schur complements
/// `S₁ = I + P*P`, `S₂ = I + PP*`.
struct BlockLPlusOneInvKernel {
    p: Arc<DMatrix<Complex64>>,
    s1_inv: DMatrix<Complex64>,
    s2_inv: DMatrix<Complex64>,
}

impl Kernel for BlockLPlusOneInvKernel {
    fn dim(&self) -> usize {
        2 * self.p.nrows()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        let (x1, x2) = AntiBlockKernel::halves(x);
        let v1 = nalgebra::DVector::from_vec(x1.data);
        let v2 = nalgebra::DVector::from_vec(x2.data);
        let s1x1 = &self.s1_inv * v1;
        let s2x2 = &self.s2_inv * v2;
        let top = &s1x1 + self.p.adjoint() * &s2x2;
        let bottom = -(self.p.as_ref() * s1x1) + s2x2;
        stack_dv(top, bottom)
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        let (x1, x2) = AntiBlockKernel::halves(x);
        let v1 = nalgebra::DVector::from_vec(x1.data);
        let v2 = nalgebra::DVector::from_vec(x2.data);
        let s1x1 = self.s1_inv.adjoint() * v1;
        let s2x2 = self.s2_inv.adjoint() * v2;
        let top = &s1x1 - self.p.adjoint() * &s2x2;
        let bottom = self.p.as_ref() * s1x1 + s2x2;
        Some(stack_dv(top, bottom))
    }
}

fn stack_dv(top: nalgebra::DVector<Complex64>, bottom: nalgebra::DVector<Complex64>) -> ComplexVector {
    let mut data: Vec<Complex64> = top.iter().copied().collect();
    data.extend(bottom.iter().copied());
    ComplexVector::flat(data)
}
