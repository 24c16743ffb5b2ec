//! Shifted time-independent Schrödinger operator `−½∇² + V_s + Ā` (unit mass,
//! natural units) in canonical split form, for condition-number studies.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::LinearMap;
use crate::problems::spectral::{multiplier_map, Spectral};
use crate::splitting::{compute_scalar_scale, smallest_enclosing_circle, SplitSystem, DEFAULT_ALPHA};
use crate::vector::ComplexVector;

#[derive(Clone)]
pub struct SchrodingerSpec {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    /// V_s(r) per grid point, row-major.
    pub potential: Vec<f64>,
    /// Constant shift Ā making the operator positive.
    pub shift: f64,
}

impl SchrodingerSpec {
    fn validate(&self) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if self.shape.is_empty() || n == 0 {
            return Err(Error::EmptyInput("schrodinger grid"));
        }
        if self.spacing.len() != self.shape.len() || self.potential.len() != n {
            return Err(Error::InvalidArgument(
                "schrodinger: field lengths inconsistent with shape".into(),
            ));
        }
        if self.potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("schrodinger potential"));
        }
        let min = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        if min + self.shift < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "schrodinger: shift {} leaves the operator indefinite (min potential {min})",
                self.shift
            )));
        }
        Ok(())
    }
}

/// Build the canonical split of the shifted Schrödinger operator. The bias is
/// the midpoint of the sampled `V_s + Ā` range and the scale is real, so the
/// split preserves Hermiticity.
pub fn build_schrodinger_split(spec: &SchrodingerSpec, target_norm: f64) -> Result<SplitSystem> {
    spec.validate()?;
    let shifted: Vec<Complex64> = spec
        .potential
        .iter()
        .map(|&v| Complex64::new(v + spec.shift, 0.0))
        .collect();
    let circle = smallest_enclosing_circle(&shifted)?;
    let scale = compute_scalar_scale(&circle, target_norm, Complex64::ONE)?;
    let c = scale.scalar().expect("scalar scale");
    let center = circle.center;

    let grid = Arc::new(Spectral::new(&spec.shape, &spec.spacing));
    let p2 = grid.p_squared();
    let lp1_mult: Vec<Complex64> = p2
        .iter()
        .map(|&p| (Complex64::new(0.5 * p, 0.0) + center) / c + Complex64::ONE)
        .collect();
    let inv_mult: Vec<Complex64> = lp1_mult.iter().map(|m| Complex64::ONE / m).collect();
    let l_plus_one = multiplier_map(grid.clone(), lp1_mult);
    let inv_l_plus_one = multiplier_map(grid.clone(), inv_mult);

    let v_diag: Vec<Complex64> = shifted.iter().map(|w| (w - center) / c).collect();
    let certified = v_diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let b_map = LinearMap::diagonal(v_diag.iter().map(|v| Complex64::ONE - v).collect());

    let shift_grid = grid.clone();
    let factory: Arc<dyn Fn(Complex64) -> LinearMap + Send + Sync> =
        Arc::new(move |sigma: Complex64| {
            let mult: Vec<Complex64> = shift_grid
                .p_squared()
                .iter()
                .map(|&p| {
                    Complex64::ONE
                        / ((Complex64::new(0.5 * p, 0.0) + center) / c + Complex64::ONE + sigma)
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
        source: ComplexVector::new(vec![Complex64::ZERO; grid.len()], spec.shape.clone())?
            .with_spacing(spec.spacing.clone()),
        certified_v_norm: certified,
        v_norm_is_estimate: false,
        shifted_inv: Some(factory),
    })
}

/// The forward operator `A = (−½∇² + V_s + Ā)/c` of a built split, assembled
/// without the `(L+1) − B` indirection. Identical action, kept for probes.
pub fn schrodinger_forward(split: &SplitSystem) -> LinearMap {
    split.forward_map()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::accretivity_lower_bound;

    #[test]
    fn free_particle_plane_wave_eigenvalue() {
        let n = 32;
        let dx = 0.5;
        let spec = SchrodingerSpec {
            shape: vec![n],
            spacing: vec![dx],
            potential: vec![0.0; n],
            shift: 0.0,
        };
        let split = build_schrodinger_split(&spec, 0.95).unwrap();
        assert!(split.scale.degenerate);
        assert_eq!(split.certified_v_norm, 0.0);
        let a = split.forward_map();
        let grid = Spectral::new(&[n], &[dx]);
        let p = grid.frequency(0, 3);
        let wave = ComplexVector::flat(
            (0..n)
                .map(|i| Complex64::from_polar(1.0, p * i as f64 * dx))
                .collect(),
        );
        let out = a.apply(&wave);
        // c = 1 (degenerate), Ā = 0: eigenvalue ‖p‖²/2.
        for (o, w) in out.data.iter().zip(&wave.data) {
            assert!((o - w * (0.5 * p * p)).norm() < 1e-10);
        }
    }

    #[test]
    fn indefinite_shift_rejected() {
        let spec = SchrodingerSpec {
            shape: vec![8],
            spacing: vec![1.0],
            potential: vec![-3.0; 8],
            shift: 2.0,
        };
        assert!(build_schrodinger_split(&spec, 0.95).is_err());
    }

    #[test]
    fn bounded_well_split_is_accretive_and_certified() {
        let n = 48;
        let dx = 0.25;
        let potential: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 - n as f64 / 2.0) * dx;
                -5.0 * (-x * x).exp()
            })
            .collect();
        let spec = SchrodingerSpec {
            shape: vec![n],
            spacing: vec![dx],
            potential,
            shift: 5.0,
        };
        let split = build_schrodinger_split(&spec, 0.95).unwrap();
        assert!(split.certified_v_norm <= 0.95 + 1e-12);
        let a = split.forward_map();
        assert!(accretivity_lower_bound(&a, 50, 3) >= -1e-10);
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = crate::vector::random_unit(n, &mut rng);
        let back = split.inv_l_plus_one.apply(&split.l_plus_one.apply(&x));
        assert!(back.sub(&x).norm() < 1e-9);
    }
}
