//! Multi-dimensional FFT plumbing for the spectral `(L+1)⁻¹` realizations.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::operator::{Kernel, LinearMap};
use crate::vector::ComplexVector;

/// Row-major n-dimensional FFT over a fixed grid shape.
pub(crate) struct Spectral {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    scratch: Mutex<Vec<Complex64>>,
}

impl Spectral {
    pub fn new(shape: &[usize], spacing: &[f64]) -> Self {
        assert_eq!(shape.len(), spacing.len());
        let mut planner = FftPlanner::new();
        let fwd = shape
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect::<Vec<_>>();
        let inv = shape
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect::<Vec<_>>();
        Self {
            shape: shape.to_vec(),
            spacing: spacing.to_vec(),
            fwd,
            inv,
            scratch: Mutex::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.len());
        let total = self.len();
        let mut line = self.scratch.lock().unwrap();
        for axis in 0..self.shape.len() {
            let n = self.shape[axis];
            if n == 1 {
                continue;
            }
            let stride: usize = self.shape[axis + 1..].iter().product();
            let plan = if forward {
                &self.fwd[axis]
            } else {
                &self.inv[axis]
            };
            line.resize(n, Complex64::ZERO);
            for start in 0..total {
                if (start / stride) % n != 0 {
                    continue;
                }
                for k in 0..n {
                    line[k] = data[start + k * stride];
                }
                plan.process(&mut line);
                for k in 0..n {
                    data[start + k * stride] = line[k];
                }
            }
        }
        if !forward {
            let norm = 1.0 / total as f64;
            for z in data.iter_mut() {
                *z *= norm;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Angular frequency of mode index `k` on `axis` (signed convention).
    pub fn frequency(&self, axis: usize, k: usize) -> f64 {
        let n = self.shape[axis];
        let signed = if k <= n / 2 {
            k as isize
        } else {
            k as isize - n as isize
        };
        2.0 * std::f64::consts::PI * signed as f64 / (n as f64 * self.spacing[axis])
    }

    /// `‖p‖²` for every mode, in row-major order.
    pub fn p_squared(&self) -> Vec<f64> {
        let total = self.len();
        let mut out = vec![0.0; total];
        for (i, v) in out.iter_mut().enumerate() {
            let mut rem = i;
            let mut acc = 0.0;
            for axis in (0..self.shape.len()).rev() {
                let n = self.shape[axis];
                let k = rem % n;
                rem /= n;
                let p = self.frequency(axis, k);
                acc += p * p;
            }
            *v = acc;
        }
        out
    }

    /// Per-axis frequency of every mode, row-major: `out[axis][i]`.
    pub fn p_components(&self) -> Vec<Vec<f64>> {
        let total = self.len();
        let d = self.shape.len();
        let mut out = vec![vec![0.0; total]; d];
        for i in 0..total {
            let mut rem = i;
            for axis in (0..d).rev() {
                let n = self.shape[axis];
                let k = rem % n;
                rem /= n;
                out[axis][i] = self.frequency(axis, k);
            }
        }
        out
    }
}

/// Operator `F⁻¹ diag(m) F` with an exact adjoint `F⁻¹ diag(m̄) F`.
struct MultiplierKernel {
    grid: Arc<Spectral>,
    mult: Arc<Vec<Complex64>>,
}

impl MultiplierKernel {
    fn run(&self, x: &ComplexVector, conjugate: bool) -> ComplexVector {
        let mut data = x.data.clone();
        self.grid.forward(&mut data);
        for (z, m) in data.iter_mut().zip(self.mult.iter()) {
            *z *= if conjugate { m.conj() } else { *m };
        }
        self.grid.inverse(&mut data);
        ComplexVector::new(data, self.grid.shape().to_vec())
            .expect("shape preserved")
            .with_spacing(self.grid.spacing().to_vec())
    }
}

impl Kernel for MultiplierKernel {
    fn dim(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &ComplexVector) -> ComplexVector {
        self.run(x, false)
    }
    fn apply_adjoint(&self, x: &ComplexVector) -> Option<ComplexVector> {
        Some(self.run(x, true))
    }
}

pub(crate) fn multiplier_map(grid: Arc<Spectral>, mult: Vec<Complex64>) -> LinearMap {
    assert_eq!(mult.len(), grid.len());
    LinearMap::from_kernel(Arc::new(MultiplierKernel {
        grid,
        mult: Arc::new(mult),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let grid = Spectral::new(&[4, 6], &[1.0, 0.5]);
        let mut data: Vec<Complex64> = (0..24)
            .map(|i| Complex64::new(i as f64, (i % 5) as f64))
            .collect();
        let orig = data.clone();
        grid.forward(&mut data);
        grid.inverse(&mut data);
        let err: f64 = data
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn plane_wave_is_multiplier_eigenfunction() {
        let n = 16;
        let dx = 0.25;
        let grid = Arc::new(Spectral::new(&[n], &[dx]));
        // Multiplier = ‖p‖² turns the map into −∇².
        let mult: Vec<Complex64> = grid
            .p_squared()
            .into_iter()
            .map(|p2| Complex64::new(p2, 0.0))
            .collect();
        let map = multiplier_map(grid.clone(), mult);
        let k = 3;
        let p = grid.frequency(0, k);
        let wave = ComplexVector::flat(
            (0..n)
                .map(|i| Complex64::from_polar(1.0, p * i as f64 * dx))
                .collect(),
        );
        let out = map.apply(&wave);
        for (o, w) in out.data.iter().zip(&wave.data) {
            assert!((o - w * (p * p)).norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_is_consistent() {
        use rand::SeedableRng;
        let grid = Arc::new(Spectral::new(&[8, 4], &[1.0, 1.0]));
        let mult: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(0.1 * i as f64, 1.0 - 0.05 * i as f64))
            .collect();
        let map = multiplier_map(grid, mult);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = crate::vector::random_unit(32, &mut rng);
        let y = crate::vector::random_unit(32, &mut rng);
        let lhs = y.inner(&map.apply(&x));
        let rhs = map.apply_adjoint(&y).unwrap().inner(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn frequencies_are_signed() {
        let grid = Spectral::new(&[8], &[1.0]);
        assert_eq!(grid.frequency(0, 0), 0.0);
        assert!(grid.frequency(0, 1) > 0.0);
        assert!(grid.frequency(0, 7) < 0.0);
        assert!((grid.frequency(0, 1) + grid.frequency(0, 7)).abs() < 1e-15);
    }
}
