//! Inhomogeneous Helmholtz equation `(∇² + k²(r)) E = −S` in canonical
//! split form, with the Laplacian-plus-bias inverted spectrally.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::LinearMap;
use crate::problems::spectral::{multiplier_map, Spectral};
use crate::splitting::{compute_scalar_scale, smallest_enclosing_circle, SplitSystem, DEFAULT_ALPHA};
use crate::vector::ComplexVector;

/// Choice of the background bias `k̄²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasMode {
    /// Center of the smallest enclosing circle of the k² samples (the
    /// absorber gives it a positive imaginary part).
    Complex,
    /// Real part of that center only; kept for comparison studies.
    Real,
}

#[derive(Clone)]
pub struct HelmholtzSpec {
    pub shape: Vec<usize>,
    /// Grid step per axis, in length units.
    pub spacing: Vec<f64>,
    /// k²(r) per grid point, row-major; units length⁻².
    pub k2_field: Vec<Complex64>,
    /// S(r) per grid point.
    pub source: Vec<Complex64>,
    /// Absorbing-layer width in cells, appended on every side of every axis.
    pub absorber_width: usize,
    /// Peak added `Im[k²]` at the outer edge of the absorber.
    pub absorber_strength: f64,
    pub bias_mode: BiasMode,
}

impl HelmholtzSpec {
    fn validate(&self) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if self.shape.is_empty() || n == 0 {
            return Err(Error::EmptyInput("helmholtz grid"));
        }
        if self.spacing.len() != self.shape.len()
            || self.k2_field.len() != n
            || self.source.len() != n
        {
            return Err(Error::InvalidArgument(
                "helmholtz: field lengths inconsistent with shape".into(),
            ));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument("helmholtz: spacing must be positive".into()));
        }
        if self
            .k2_field
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("helmholtz k2_field"));
        }
        if self.k2_field.iter().any(|z| z.im < -1e-12) {
            return Err(Error::InvalidArgument(
                "helmholtz: Im[k²] < 0 (medium with gain) is not supported".into(),
            ));
        }
        Ok(())
    }
}

/// The spec fields after absorber extension.
struct ExtendedFields {
    shape: Vec<usize>,
    k2: Vec<Complex64>,
    source: Vec<Complex64>,
}

fn extend_with_absorber(spec: &HelmholtzSpec) -> ExtendedFields {
    let w = spec.absorber_width;
    let d = spec.shape.len();
    let ext_shape: Vec<usize> = spec.shape.iter().map(|&n| n + 2 * w).collect();
    let total: usize = ext_shape.iter().product();
    let mut k2 = vec![Complex64::ZERO; total];
    let mut source = vec![Complex64::ZERO; total];
    for i in 0..total {
        // Decompose, clamp into the physical grid, record absorber depth.
        let mut rem = i;
        let mut orig = 0usize;
        let mut orig_stride = 1usize;
        let mut inside = true;
        let mut depth = 0usize;
        for axis in (0..d).rev() {
            let ne = ext_shape[axis];
            let n = spec.shape[axis];
            let c = rem % ne;
            rem /= ne;
            let clamped = c.saturating_sub(w).min(n - 1);
            if c < w {
                depth = depth.max(w - c);
                inside = false;
            } else if c >= w + n {
                depth = depth.max(c - (w + n - 1));
                inside = false;
            }
            orig += clamped * orig_stride;
            orig_stride *= n;
        }
        // Row-major decomposition above walks axes outward-in, so `orig`
        // accumulated with the matching strides.
        let ramp = if w == 0 {
            0.0
        } else {
            spec.absorber_strength * depth as f64 / w as f64
        };
        k2[i] = spec.k2_field[orig] + Complex64::new(0.0, ramp);
        if inside {
            source[i] = spec.source[orig];
        }
    }
    ExtendedFields {
        shape: ext_shape,
        k2,
        source,
    }
}

/// Build the canonical split of the Helmholtz problem.
///
/// The returned system lives on the absorber-extended grid; the physical
/// region starts `absorber_width` cells in along every axis.
pub fn build_helmholtz_split(spec: &HelmholtzSpec, target_norm: f64) -> Result<SplitSystem> {
    spec.validate()?;
    let ext = extend_with_absorber(spec);
    let circle = smallest_enclosing_circle(&ext.k2)?;
    let (center, radius) = match spec.bias_mode {
        BiasMode::Complex => (circle.center, circle.radius),
        BiasMode::Real => {
            let c = Complex64::new(circle.center.re, 0.0);
            let r = ext.k2.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
            (c, r)
        }
    };
    let scale = compute_scalar_scale(
        &crate::splitting::Circle { center, radius },
        target_norm,
        Complex64::I,
    )?;
    let c = scale.scalar().expect("scalar scale");

    let grid = Arc::new(Spectral::new(&ext.shape, &spec.spacing));
    let p2 = grid.p_squared();
    let lp1_mult: Vec<Complex64> = p2
        .iter()
        .map(|&p| (Complex64::new(-p, 0.0) + center) / c + Complex64::ONE)
        .collect();
    let inv_mult: Vec<Complex64> = lp1_mult.iter().map(|m| Complex64::ONE / m).collect();
    let l_plus_one = multiplier_map(grid.clone(), lp1_mult);
    let inv_l_plus_one = multiplier_map(grid.clone(), inv_mult);

    let v_diag: Vec<Complex64> = ext.k2.iter().map(|k2| (k2 - center) / c).collect();
    let certified = v_diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let b_diag: Vec<Complex64> = v_diag.iter().map(|v| Complex64::ONE - v).collect();
    let b_map = LinearMap::diagonal(b_diag);

    let source = ComplexVector::new(
        ext.source.iter().map(|s| -s / c).collect(),
        ext.shape.clone(),
    )?
    .with_spacing(spec.spacing.clone());

    let shift_grid = grid.clone();
    let factory: Arc<dyn Fn(Complex64) -> LinearMap + Send + Sync> =
        Arc::new(move |sigma: Complex64| {
            let mult: Vec<Complex64> = shift_grid
                .p_squared()
                .iter()
                .map(|&p| {
                    Complex64::ONE / ((Complex64::new(-p, 0.0) + center) / c + Complex64::ONE + sigma)
                })
                .collect();
            multiplier_map(shift_grid.clone(), mult)
        });

    Ok(SplitSystem {
        inv_l_plus_one,
        l_plus_one,
        b_map,
        scale,
        alpha: DEFAULT_ALPHA,
        source,
        certified_v_norm: certified,
        v_norm_is_estimate: false,
        shifted_inv: Some(factory),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::operator_norm_estimate;
    use crate::solvers::{run_algorithm, Algorithm, SolverConfig, Status};

    fn homogeneous_1d(n: usize, k: f64, dx: f64, absorber: usize) -> HelmholtzSpec {
        HelmholtzSpec {
            shape: vec![n],
            spacing: vec![dx],
            k2_field: vec![Complex64::new(k * k, 0.0); n],
            source: vec![Complex64::ZERO; n],
            absorber_width: absorber,
            absorber_strength: k * k,
            bias_mode: BiasMode::Complex,
        }
    }

    #[test]
    fn homogeneous_no_absorber_has_zero_v() {
        let mut spec = homogeneous_1d(32, 1.0, 0.5, 0);
        spec.absorber_strength = 0.0;
        let split = build_helmholtz_split(&spec, 0.95).unwrap();
        assert!(split.scale.degenerate);
        assert_eq!(split.certified_v_norm, 0.0);
        let pre = split.build_preconditioned();
        let est = operator_norm_estimate(&pre.m_op, 2000, 1e-10).unwrap();
        assert!(est.value < 1.0, "‖M‖ = {}", est.value);
    }

    #[test]
    fn plane_wave_is_inverse_eigenfunction() {
        let n = 32;
        let dx = 0.3;
        let mut spec = homogeneous_1d(n, 2.0, dx, 0);
        spec.absorber_strength = 0.0;
        // Inhomogeneity so the scale is non-degenerate.
        spec.k2_field[0] = Complex64::new(4.2, 0.0);
        let split = build_helmholtz_split(&spec, 0.95).unwrap();
        let grid = Spectral::new(&[n], &[dx]);
        let p = grid.frequency(0, 5);
        let wave = ComplexVector::new(
            (0..n)
                .map(|i| Complex64::from_polar(1.0, p * i as f64 * dx))
                .collect(),
            vec![n],
        )
        .unwrap();
        let out = split.inv_l_plus_one.apply(&wave);
        // Expected eigenvalue c/(−p² + k̄² + c) with the builder's own bias.
        let circle = smallest_enclosing_circle(&spec.k2_field).unwrap();
        let c = split.scale.scalar().unwrap();
        let expect = c / (Complex64::new(-p * p, 0.0) + circle.center + c);
        for (o, w) in out.data.iter().zip(&wave.data) {
            assert!((o - w * expect).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_is_exact() {
        use rand::SeedableRng;
        let mut spec = homogeneous_1d(24, 1.5, 0.4, 4);
        spec.k2_field[3] = Complex64::new(3.0, 0.5);
        let split = build_helmholtz_split(&spec, 0.95).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let x = crate::vector::random_unit(split.dim(), &mut rng);
        let back = split.inv_l_plus_one.apply(&split.l_plus_one.apply(&x));
        assert!(back.sub(&x).norm() < 1e-9);
    }

    #[test]
    fn gain_rejected() {
        let mut spec = homogeneous_1d(16, 1.0, 0.5, 0);
        spec.k2_field[5] = Complex64::new(1.0, -0.2);
        assert!(build_helmholtz_split(&spec, 0.95).is_err());
    }

    #[test]
    fn point_source_matches_green_function() {
        // 1-D outgoing Green's function e^{ik|x−x′|}/(2ik), compared away
        // from the absorber.
        let n = 512;
        let k = 1.0;
        let dx = 2.0 * std::f64::consts::PI / (k * 16.0); // 16 points per wavelength
        let w = 128;
        let mut spec = homogeneous_1d(n, k, dx, w);
        spec.absorber_strength = 0.5;
        let src_idx = n / 2;
        // S = −δ so the solution is +G.
        spec.source[src_idx] = Complex64::new(-1.0 / dx, 0.0);
        let split = build_helmholtz_split(&spec, 0.95).unwrap();
        let pre = split.build_preconditioned();
        let config = SolverConfig {
            tol: 1e-10,
            max_iter: 20_000,
            ..SolverConfig::default()
        };
        let (x, report) = run_algorithm(
            &pre.precond_op,
            &pre.precond_source,
            Algorithm::Gmres,
            &config,
        )
        .unwrap();
        assert_eq!(report.status, Status::Converged);
        let offset = w + src_idx;
        let mut worst = 0.0f64;
        for i in 0..n {
            let idx = w + i;
            let dist = (idx as f64 - offset as f64).abs() * dx;
            // Skip the neighborhood of the source and the absorber edges.
            if dist < 2.0 || i < n / 8 || i >= n - n / 8 {
                continue;
            }
            let analytic = Complex64::from_polar(1.0, k * dist) / Complex64::new(0.0, 2.0 * k);
            let rel = (x.data[idx] - analytic).norm() / analytic.norm();
            worst = worst.max(rel);
        }
        assert!(worst < 0.01, "worst relative error {worst}");
    }
}
