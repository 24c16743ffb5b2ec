//! Rescaling of the raw system so the discrepancy satisfies `‖V‖ ≤ target`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::splitting::circle::Circle;

/// Either a single complex factor `c` or a positive diagonal `Σ`.
#[derive(Clone, Debug)]
pub enum ScaleFactor {
    Scalar(Complex64),
    Diagonal(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ScaleRecord {
    pub factor: ScaleFactor,
    pub target_norm: f64,
    /// Set when the medium was homogeneous (radius 0) and the magnitude of
    /// the factor was chosen from a unit floor instead of the circle radius.
    pub degenerate: bool,
}

impl ScaleRecord {
    pub fn scalar(&self) -> Option<Complex64> {
        match &self.factor {
            ScaleFactor::Scalar(c) => Some(*c),
            ScaleFactor::Diagonal(_) => None,
        }
    }
}

/// Complex rescaling factor `c = (radius / target_norm) · rotation`.
///
/// `rotation` is the unit phase that maps the raw numerical range into the
/// right half plane; for the Helmholtz problem it is `i` (the paper's
/// `c = −(1/0.95i)‖k²−k̄²‖`). Dividing the raw discrepancy by `c` bounds it
/// pointwise by `target_norm`.
pub fn compute_scalar_scale(
    circle: &Circle,
    target_norm: f64,
    accretive_rotation: Complex64,
) -> Result<ScaleRecord> {
    if !(target_norm > 0.0 && target_norm < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target_norm must be in (0,1), got {target_norm}"
        )));
    }
    let rot_mag = accretive_rotation.norm();
    if !(rot_mag > 0.0) {
        return Err(Error::InvalidArgument("rotation must be nonzero".into()));
    }
    let rotation = accretive_rotation / rot_mag;
    if circle.radius > 0.0 {
        Ok(ScaleRecord {
            factor: ScaleFactor::Scalar(rotation.scale(circle.radius / target_norm)),
            target_norm,
            degenerate: false,
        })
    } else {
        // Homogeneous medium: V vanishes identically, any nonzero magnitude
        // works. Use a unit floor and flag the record.
        Ok(ScaleRecord {
            factor: ScaleFactor::Scalar(rotation),
            target_norm,
            degenerate: true,
        })
    }
}

/// Ruiz-style iterative max-norm equilibration.
///
/// Returns the positive diagonal `Σ` such that `Σ^{-1/2} Δ Σ^{-1/2}` has row
/// and column maxima within a factor 2 of each other (or `max_sweeps` was
/// exhausted).
pub fn equilibrate(delta: &DMatrix<f64>, max_sweeps: usize) -> Result<Vec<f64>> {
    if !delta.is_square() {
        return Err(Error::InvalidArgument("equilibrate: matrix must be square".into()));
    }
    if delta.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "equilibrate: entries must be finite and non-negative".into(),
        ));
    }
    let n = delta.nrows();
    let mut sigma = vec![1.0f64; n];
    for _ in 0..max_sweeps {
        if equilibrated(delta, &sigma) {
            break;
        }
        // t_i = sqrt of the largest scaled entry in row/column i; dividing
        // Σᵢ-entries by t_i² drives all line maxima toward a common value.
        let mut t = vec![0.0f64; n];
        for i in 0..n {
            let mut m: f64 = 0.0;
            for j in 0..n {
                m = m
                    .max(delta[(i, j)] / (sigma[i] * sigma[j]).sqrt())
                    .max(delta[(j, i)] / (sigma[i] * sigma[j]).sqrt());
            }
            t[i] = if m > 0.0 { m.sqrt() } else { 1.0 };
        }
        for i in 0..n {
            sigma[i] *= t[i] * t[i];
        }
    }
    Ok(sigma)
}

/// Largest and smallest nonzero line maxima of the scaled matrix.
pub fn scaled_line_maxima(delta: &DMatrix<f64>, sigma: &[f64]) -> (f64, f64) {
    let n = delta.nrows();
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let mut m: f64 = 0.0;
        for j in 0..n {
            m = m
                .max(delta[(i, j)] / (sigma[i] * sigma[j]).sqrt())
                .max(delta[(j, i)] / (sigma[i] * sigma[j]).sqrt());
        }
        if m > 0.0 {
            hi = hi.max(m);
            lo = lo.min(m);
        }
    }
    if lo.is_infinite() {
        (0.0, 0.0)
    } else {
        (hi, lo)
    }
}

fn equilibrated(delta: &DMatrix<f64>, sigma: &[f64]) -> bool {
    let (hi, lo) = scaled_line_maxima(delta, sigma);
    hi == 0.0 || hi <= 2.0 * lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::circle::smallest_enclosing_circle;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn helmholtz_rotation_scale() {
        // radius 1, target 0.95, rotation i: c = -1/(0.95 i) = (1/0.95) i.
        let circle = Circle {
            center: Complex64::ZERO,
            radius: 1.0,
        };
        let rec = compute_scalar_scale(&circle, 0.95, Complex64::I).unwrap();
        let c = rec.scalar().unwrap();
        assert!((c - Complex64::new(0.0, 1.0 / 0.95)).norm() < 1e-12);
        assert!((c - (-Complex64::ONE / (Complex64::I * 0.95))).norm() < 1e-12);
    }

    #[test]
    fn already_normalized_scale_is_one() {
        let circle = Circle {
            center: Complex64::ZERO,
            radius: 0.95,
        };
        let rec = compute_scalar_scale(&circle, 0.95, Complex64::ONE).unwrap();
        assert!((rec.scalar().unwrap() - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn degenerate_radius_flagged() {
        let circle = Circle {
            center: Complex64::new(2.0, 0.0),
            radius: 0.0,
        };
        let rec = compute_scalar_scale(&circle, 0.95, Complex64::I).unwrap();
        assert!(rec.degenerate);
        assert!((rec.scalar().unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_field_scales_to_target_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field: Vec<Complex64> = (0..200)
            .map(|_| Complex64::new(rng.random::<f64>() * 3.0, rng.random::<f64>()))
            .collect();
        let circle = smallest_enclosing_circle(&field).unwrap();
        let rec = compute_scalar_scale(&circle, 0.95, Complex64::I).unwrap();
        let c = rec.scalar().unwrap();
        let max_v = field
            .iter()
            .map(|&k| ((k - circle.center) / c).norm())
            .fold(0.0, f64::max);
        // The extreme points of the circle sit exactly at |V| = 0.95.
        assert!(max_v <= 0.95 + 1e-12);
        assert!(max_v >= 0.95 - 1e-9);
    }

    #[test]
    fn equilibrate_identity_pattern() {
        let delta = DMatrix::<f64>::identity(4, 4);
        let sigma = equilibrate(&delta, 20).unwrap();
        for s in sigma {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equilibrate_diagonal_forces_entries() {
        let delta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![100.0, 1.0]));
        let sigma = equilibrate(&delta, 50).unwrap();
        // Σ proportional to (100, 1): scaled maxima both 1.
        assert!((sigma[0] / sigma[1] - 100.0).abs() < 1e-9);
        let (hi, lo) = scaled_line_maxima(&delta, &sigma);
        assert!((hi - lo).abs() < 1e-9);
    }

    #[test]
    fn equilibrate_random_max_ratio_within_factor_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let delta = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() * 10.0);
        let sigma = equilibrate(&delta, 100).unwrap();
        let (hi, lo) = scaled_line_maxima(&delta, &sigma);
        assert!(hi <= 2.0 * lo, "ratio {}", hi / lo);
    }

    #[test]
    fn equilibrate_rejects_negative() {
        let mut delta = DMatrix::<f64>::zeros(2, 2);
        delta[(0, 0)] = -1.0;
        assert!(equilibrate(&delta, 10).is_err());
    }
}
