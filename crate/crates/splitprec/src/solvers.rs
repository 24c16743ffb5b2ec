//! Iterative solvers with uniform termination classification and
//! operator-evaluation accounting.

use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{accretivity_lower_bound, LinearMap};
use crate::splitting::{PreconditionedSystem, SplitSystem, DEFAULT_ALPHA};
use crate::vector::ComplexVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Diverged,
    Stagnated,
    MaxIter,
}

impl Status {
    /// The single-letter failure code used in rendered tables.
    pub fn letter(&self) -> Option<char> {
        match self {
            Status::Converged => None,
            Status::Stagnated => Some('s'),
            Status::MaxIter => Some('m'),
            Status::Diverged => Some('d'),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FixedPoint,
    Gmres,
    Bicgstab,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Relative-residual target.
    pub tol: f64,
    /// Budget on operator evaluations.
    pub max_iter: u64,
    /// Fixed-point step size.
    pub alpha: f64,
    /// GMRES restart length.
    pub restart: Option<usize>,
    pub divergence_factor: f64,
    pub stagnation_window: usize,
    pub stagnation_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 30_000,
            alpha: DEFAULT_ALPHA,
            restart: Some(20),
            divergence_factor: 1e6,
            stagnation_window: 50,
            stagnation_eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SolverReport {
    pub status: Status,
    pub iterations: u64,
    /// Applications of the operator handed to the solver; for shift-splitting
    /// runs, the total inner forward-operator evaluations.
    pub operator_evals: u64,
    pub residual_history: Vec<f64>,
    pub wall_time: f64,
    /// Outer iteration count for inner-outer (shift-splitting) runs.
    pub outer_iterations: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct ShiftConfig {
    /// The positive shift γ of `Γ_shift = ½(A + γ·1)`.
    pub gamma: f64,
    pub inner: SolverConfig,
    pub inner_algorithm: Algorithm,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            inner: SolverConfig {
                tol: 1e-4,
                ..SolverConfig::default()
            },
            inner_algorithm: Algorithm::Bicgstab,
        }
    }
}

/// Classify a residual history.
///
/// Diverged: non-finite residual or growth beyond `divergence_factor` over
/// the initial residual. Stagnated: the residual envelope (minimum over the
/// last `stagnation_window` entries versus the window before) is numerically
/// flat (relative improvement below `stagnation_eps`), or its geometric rate
/// projects that reaching `tol` needs more than `max_iter` further
/// iterations. Converged: last residual at or below `tol`. Otherwise the
/// budget was exhausted.
pub fn classify_termination(history: &[f64], config: &SolverConfig) -> Status {
    assert!(!history.is_empty());
    let first = history[0];
    let last = *history.last().unwrap();
    if !last.is_finite() {
        return Status::Diverged;
    }
    if last <= config.tol {
        return Status::Converged;
    }
    if last > config.divergence_factor * first.max(f64::MIN_POSITIVE) {
        return Status::Diverged;
    }
    if stagnating(history, config) {
        return Status::Stagnated;
    }
    Status::MaxIter
}

fn stagnating(history: &[f64], config: &SolverConfig) -> bool {
    let n = history.len();
    // Long transients are common before the asymptotic rate sets in, so the
    // window grows with the run: a quarter of the history once that exceeds
    // the configured minimum.
    let w = config.stagnation_window.max(n / 4);
    // Ask for two windows of evidence before declaring stagnation.
    if n < 2 * w + 1 {
        return false;
    }
    // Krylov residual histories can be erratic; compare the envelope
    // (window minima) rather than endpoint samples.
    let min_of = |s: &[f64]| s.iter().cloned().fold(f64::INFINITY, f64::min);
    let recent = min_of(&history[n - w..]);
    let past = min_of(&history[n - 2 * w..n - w]);
    if !(past > 0.0) {
        return false;
    }
    let window_ratio = recent / past;
    if window_ratio >= 1.0 - config.stagnation_eps {
        return true; // no measurable improvement at all
    }
    // Per-iteration rate over the window; project iterations still needed.
    let rate = window_ratio.powf(1.0 / w as f64);
    if rate >= 1.0 {
        return true;
    }
    let needed = (recent / config.tol).ln() / -rate.ln();
    needed > (config.max_iter as f64 - n as f64).max(1.0)
}

struct RunState {
    history: Vec<f64>,
    start: Instant,
}

impl RunState {
    fn new() -> Self {
        Self {
            history: Vec::new(),
            start: Instant::now(),
        }
    }

    /// Push the residual at the current iterate; returns a status when the
    /// run should terminate.
    fn push_and_check(&mut self, res: f64, evals: u64, config: &SolverConfig) -> Option<Status> {
        self.history.push(res);
        let status = classify_termination(&self.history, config);
        match status {
            Status::Converged | Status::Diverged | Status::Stagnated => Some(status),
            Status::MaxIter => (evals >= config.max_iter).then_some(Status::MaxIter),
        }
    }

    fn report(self, status: Status, evals: u64) -> SolverReport {
        SolverReport {
            status,
            iterations: (self.history.len() - 1) as u64,
            operator_evals: evals,
            residual_history: self.history,
            wall_time: self.start.elapsed().as_secs_f64(),
            outer_iterations: None,
        }
    }
}

/// Preconditioned fixed-point iteration `x ← x + αΔ` with
/// `Δ = B[(L+1)⁻¹(Bx + b) − x]`, monitored on `‖Δ‖/‖Γ⁻¹b‖`.
///
/// The step size is the one baked into `pre` at build time; exactly one
/// `(L+1)⁻¹` and two `B` applications happen per iteration.
pub fn fixed_point_solve(
    pre: &PreconditionedSystem,
    config: &SolverConfig,
    x0: Option<ComplexVector>,
) -> (ComplexVector, SolverReport) {
    let n = pre.dim();
    let mut x = x0.unwrap_or_else(|| ComplexVector::zeros(n));
    let src_norm = pre.precond_source.norm().max(f64::MIN_POSITIVE);
    let mut state = RunState::new();
    let ev0 = pre.precond_op.eval_count();
    loop {
        // αΔ = Γ⁻¹b − Γ⁻¹A x, so ‖Δ‖/‖Γ⁻¹b‖ = ‖αΔ‖/(α‖Γ⁻¹b‖).
        let alpha_delta = pre.precond_source.sub(&pre.precond_op.apply(&x));
        let res = alpha_delta.norm() / (pre.alpha * src_norm);
        let evals = pre.precond_op.eval_count() - ev0;
        if let Some(status) = state.push_and_check(res, evals, config) {
            return (x, state.report(status, evals));
        }
        x.axpy(Complex64::ONE, &alpha_delta);
    }
}

/// Plain Richardson iteration `x ← x + α(b − A x)` on an arbitrary operator,
/// monitored on `‖b − Ax‖/‖b‖`. Used for unpreconditioned fixed-point runs
/// and as the outer loop of inner-outer schemes.
pub fn richardson_solve(
    op: &LinearMap,
    rhs: &ComplexVector,
    config: &SolverConfig,
) -> (ComplexVector, SolverReport) {
    let mut x = ComplexVector::zeros(op.dim());
    let rhs_norm = rhs.norm().max(f64::MIN_POSITIVE);
    let mut state = RunState::new();
    let ev0 = op.eval_count();
    let step = Complex64::new(config.alpha, 0.0);
    loop {
        let r = rhs.sub(&op.apply(&x));
        let res = r.norm() / rhs_norm;
        let evals = op.eval_count() - ev0;
        if let Some(status) = state.push_and_check(res, evals, config) {
            return (x, state.report(status, evals));
        }
        x.axpy(step, &r);
    }
}

/// Restarted GMRES(m) with modified Gram-Schmidt and one reorthogonalization
/// pass on detected loss of orthogonality.
pub fn gmres_solve(
    op: &LinearMap,
    rhs: &ComplexVector,
    config: &SolverConfig,
) -> Result<(ComplexVector, SolverReport)> {
    let m = config
        .restart
        .ok_or_else(|| Error::InvalidArgument("gmres requires a restart length".into()))?;
    if m == 0 {
        return Err(Error::InvalidArgument("gmres restart must be ≥ 1".into()));
    }
    let n = op.dim();
    let mut x = ComplexVector::zeros(n);
    let rhs_norm = rhs.norm().max(f64::MIN_POSITIVE);
    let mut state = RunState::new();
    let ev0 = op.eval_count();

    loop {
        let r = rhs.sub(&op.apply(&x));
        let beta = r.norm();
        let evals = op.eval_count() - ev0;
        if state.history.is_empty() {
            if let Some(status) = state.push_and_check(beta / rhs_norm, evals, config) {
                return Ok((x, state.report(status, evals)));
            }
        } else if beta / rhs_norm <= config.tol {
            // True residual at the restart confirms the running estimate.
            *state.history.last_mut().unwrap() = beta / rhs_norm;
            return Ok((x, state.report(Status::Converged, evals)));
        }
        if beta == 0.0 {
            return Ok((x, state.report(Status::Converged, evals)));
        }

        // Arnoldi with the Hessenberg column triangularized by complex
        // Givens rotations (c real, eliminates h[j+1][j]).
        let mut basis: Vec<ComplexVector> = vec![r.scale(Complex64::new(1.0 / beta, 0.0))];
        let mut h = vec![vec![Complex64::ZERO; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![Complex64::ZERO; m];
        let mut g = vec![Complex64::ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);

        for j in 0..m {
            let mut w = op.apply(&basis[j]);
            let w_norm_before = w.norm();
            for i in 0..=j {
                let hij = basis[i].inner(&w);
                h[i][j] = hij;
                w.axpy(-hij, &basis[i]);
            }
            // Reorthogonalize when cancellation ate most of the vector.
            if w.norm() < 0.5 * w_norm_before {
                for i in 0..=j {
                    let corr = basis[i].inner(&w);
                    h[i][j] += corr;
                    w.axpy(-corr, &basis[i]);
                }
            }
            let hnext = w.norm();
            h[j + 1][j] = Complex64::new(hnext, 0.0);

            for i in 0..j {
                let t = h[i][j] * cs[i] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + h[i + 1][j] * cs[i];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = h[j][j] * c + s * h[j + 1][j];
            h[j + 1][j] = Complex64::ZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] = g[j] * c;

            let k = j + 1;
            let res_est = g[k].norm() / rhs_norm;
            let evals = op.eval_count() - ev0;
            if let Some(status) = state.push_and_check(res_est, evals, config) {
                update_gmres_solution(&mut x, &h, &g, &basis, k);
                return Ok((x, state.report(status, evals)));
            }
            if hnext <= 1e-14 * w_norm_before.max(1e-300) {
                // Arnoldi breakdown: the Krylov space is invariant, so the
                // subspace solution is exact up to roundoff.
                update_gmres_solution(&mut x, &h, &g, &basis, k);
                let res = rhs.sub(&op.apply(&x)).norm() / rhs_norm;
                *state.history.last_mut().unwrap() = res;
                let status = if res <= config.tol {
                    Status::Converged
                } else {
                    Status::Stagnated
                };
                return Ok((x, state.report(status, op.eval_count() - ev0)));
            }
            basis.push(w.scale(Complex64::new(1.0 / hnext, 0.0)));
        }
        update_gmres_solution(&mut x, &h, &g, &basis, m);
    }
}

fn update_gmres_solution(
    x: &mut ComplexVector,
    h: &[Vec<Complex64>],
    g: &[Complex64],
    basis: &[ComplexVector],
    k: usize,
) {
    // Back-substitute the k×k triangular system.
    let mut y = vec![Complex64::ZERO; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in (i + 1)..k {
            acc -= h[i][j] * y[j];
        }
        y[i] = acc / h[i][i];
    }
    for (i, yi) in y.iter().enumerate() {
        x.axpy(*yi, &basis[i]);
    }
}

/// Rotation with real `c` and complex `s` such that `c·a + s·b` carries the
/// full magnitude and `−s̄·a + c·b = 0`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let denom = na.hypot(nb);
    (na / denom, (a / na) * b.conj() / denom)
}

/// BiCGSTAB with a fixed small set of temporaries. ρ- or ω-breakdown
/// classifies as stagnation.
pub fn bicgstab_solve(
    op: &LinearMap,
    rhs: &ComplexVector,
    config: &SolverConfig,
) -> (ComplexVector, SolverReport) {
    let n = op.dim();
    let mut x = ComplexVector::zeros(n);
    let rhs_norm = rhs.norm().max(f64::MIN_POSITIVE);
    let mut state = RunState::new();
    let ev0 = op.eval_count();

    let mut r = rhs.clone();
    let r_hat = r.clone();
    let mut rho = Complex64::ONE;
    let mut alpha = Complex64::ONE;
    let mut omega = Complex64::ONE;
    let mut v = ComplexVector::zeros(n);
    let mut p = ComplexVector::zeros(n);

    loop {
        let res = r.norm() / rhs_norm;
        let evals = op.eval_count() - ev0;
        if let Some(status) = state.push_and_check(res, evals, config) {
            return (x, state.report(status, evals));
        }

        let rho_next = r_hat.inner(&r);
        if rho_next.norm() < 1e-300 {
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Stagnated, evals));
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        // p = r + β(p − ωv)
        p.axpy(-omega, &v);
        p.scale_in_place(beta);
        p.axpy(Complex64::ONE, &r);

        v = op.apply(&p);
        let denom = r_hat.inner(&v);
        if denom.norm() < 1e-300 {
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Stagnated, evals));
        }
        alpha = rho / denom;
        let mut s = r.clone();
        s.axpy(-alpha, &v);
        if s.norm() / rhs_norm <= config.tol {
            x.axpy(alpha, &p);
            state.history.push(s.norm() / rhs_norm);
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Converged, evals));
        }
        let t = op.apply(&s);
        let tt = t.inner(&t);
        if tt.norm() < 1e-300 {
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Stagnated, evals));
        }
        omega = t.inner(&s) / tt;
        if omega.norm() < 1e-300 {
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Stagnated, evals));
        }
        x.axpy(alpha, &p);
        x.axpy(omega, &s);
        r = s;
        r.axpy(-omega, &t);
        if !r.is_finite() {
            state.history.push(f64::INFINITY);
            let evals = op.eval_count() - ev0;
            return (x, state.report(Status::Diverged, evals));
        }
    }
}

/// Dispatch an algorithm tag on a plain (operator, rhs) problem.
pub fn run_algorithm(
    op: &LinearMap,
    rhs: &ComplexVector,
    algorithm: Algorithm,
    config: &SolverConfig,
) -> Result<(ComplexVector, SolverReport)> {
    match algorithm {
        Algorithm::FixedPoint => Ok(richardson_solve(op, rhs, config)),
        Algorithm::Gmres => gmres_solve(op, rhs, config),
        Algorithm::Bicgstab => Ok(bicgstab_solve(op, rhs, config)),
    }
}

/// Shift-splitting baseline: the outer iteration is preconditioned with
/// `Γ_shift⁻¹ = [½(A + γ·1)]⁻¹`, applied by an inner iterative solve that is
/// itself preconditioned with the universal split of `A_in = ½(A + γ)`:
///
/// ```text
/// L_in + 1 = ½[(L+1) + (γ+1)·1],  B_in = ½(1 + B),  V_in = ½V.
/// ```
///
/// The report carries the outer iteration count in `outer_iterations` and the
/// total inner forward-operator evaluations in `operator_evals`.
pub fn shift_split_solve(
    split: &SplitSystem,
    shift: &ShiftConfig,
    outer_algorithm: Algorithm,
    outer: &SolverConfig,
) -> Result<(ComplexVector, SolverReport)> {
    let a_fwd = split.forward_map();
    // Γ_shift applies to strictly accretive systems only.
    let acc = accretivity_lower_bound(&a_fwd, 8, 0x5417);
    if acc <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shift-splitting requires a strictly accretive operator (Re[A] probe: {acc:.3e})"
        )));
    }
    let gamma = shift.gamma;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument("shift gamma must be positive".into()));
    }

    let sigma = Complex64::new(gamma + 1.0, 0.0);
    let shifted = split
        .shifted_inverse(sigma)
        .ok_or_else(|| Error::InvalidArgument("split does not expose a shifted inverse".into()))?;
    let n = split.dim();
    let inner_split = SplitSystem {
        inv_l_plus_one: shifted.scaled(Complex64::new(2.0, 0.0)),
        l_plus_one: LinearMap::linear_combination(vec![
            (Complex64::new(0.5, 0.0), split.l_plus_one.clone()),
            (sigma * 0.5, LinearMap::identity(n)),
        ]),
        b_map: LinearMap::linear_combination(vec![
            (Complex64::new(0.5, 0.0), LinearMap::identity(n)),
            (Complex64::new(0.5, 0.0), split.b_map.clone()),
        ]),
        scale: split.scale.clone(),
        alpha: shift.inner.alpha,
        source: ComplexVector::zeros(n),
        certified_v_norm: split.certified_v_norm / 2.0,
        v_norm_is_estimate: split.v_norm_is_estimate,
        shifted_inv: None,
    };
    let inner_pre = Arc::new(inner_split.build_preconditioned());
    let inner_failure = Arc::new(Mutex::new(None::<String>));

    // Γ_shift⁻¹y = A_in⁻¹y, realized by the inner preconditioned solve with
    // source y.
    let apply_shift_inv: Arc<dyn Fn(&ComplexVector) -> ComplexVector + Send + Sync> = {
        let inner_split = inner_split.clone();
        let inner_pre = inner_pre.clone();
        let shift = shift.clone();
        let failure = inner_failure.clone();
        Arc::new(move |y: &ComplexVector| {
            let rhs = inner_split
                .b_map
                .apply(&inner_split.inv_l_plus_one.apply(y))
                .scale(Complex64::new(inner_split.alpha, 0.0));
            match run_algorithm(&inner_pre.precond_op, &rhs, shift.inner_algorithm, &shift.inner) {
                Ok((z, rep)) if rep.status == Status::Converged => z,
                Ok((z, rep)) => {
                    *failure.lock().unwrap() =
                        Some(format!("inner solve terminated with status {:?}", rep.status));
                    z
                }
                Err(e) => {
                    *failure.lock().unwrap() = Some(e.to_string());
                    ComplexVector::zeros(y.len())
                }
            }
        })
    };

    let outer_rhs = apply_shift_inv(&split.source);
    let ev_inner0 = inner_pre.precond_op.eval_count();
    let ev_fwd0 = a_fwd.eval_count();
    let outer_op = {
        let f = apply_shift_inv.clone();
        let a_fwd = a_fwd.clone();
        LinearMap::from_fn(n, move |x| f(&a_fwd.apply(x)))
    };
    let (x, mut report) = run_algorithm(&outer_op, &outer_rhs, outer_algorithm, outer)?;
    if let Some(msg) = inner_failure.lock().unwrap().take() {
        return Err(Error::InnerSolve(msg));
    }
    report.outer_iterations = Some(report.iterations);
    report.operator_evals =
        (inner_pre.precond_op.eval_count() - ev_inner0) + (a_fwd.eval_count() - ev_fwd0);
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_accretive(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let g = random_dense(n, rng);
        &g * g.adjoint() + DMatrix::identity(n, n) * Complex64::new(0.1, 0.0)
    }

    fn random_contraction(n: usize, norm: f64, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let u = random_dense(n, rng);
        let sigma = u.clone().svd(false, false).singular_values.max();
        &u * Complex64::new(norm / sigma, 0.0)
    }

    fn dense_solve(a: &DMatrix<Complex64>, b: &ComplexVector) -> ComplexVector {
        let rhs = nalgebra::DVector::from_vec(b.data.clone());
        let sol = a.clone().lu().solve(&rhs).unwrap();
        ComplexVector::flat(sol.iter().copied().collect())
    }

    #[test]
    fn scalar_fixed_point_halves_each_iteration() {
        // A = 1, V = 0, b = 1, α = 1: M = 1/2.
        let a = DMatrix::from_element(1, 1, Complex64::ONE);
        let v = DMatrix::from_element(1, 1, Complex64::ZERO);
        let b = ComplexVector::flat(vec![Complex64::ONE]);
        let split = SplitSystem::from_dense_parts(&a, &v, b, 1.0).unwrap();
        let pre = split.build_preconditioned();
        let config = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let (x, rep) = fixed_point_solve(&pre, &config, None);
        assert_eq!(rep.status, Status::Converged);
        assert!((x.data[0] - Complex64::ONE).norm() < 1e-9);
        for w in rep.residual_history.windows(2) {
            if w[1] > 0.0 {
                assert!((w[1] / w[0] - 0.5).abs() < 1e-9, "ratio {}", w[1] / w[0]);
            }
        }
        assert_eq!(rep.residual_history.len() as u64, rep.iterations + 1);
    }

    #[test]
    fn fixed_point_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 8;
        let a = random_accretive(n, &mut rng);
        let v = random_contraction(n, 0.95, &mut rng);
        let b = crate::vector::random_unit(n, &mut rng);
        let split = SplitSystem::from_dense_parts(&a, &v, b.clone(), 0.75).unwrap();
        let pre = split.build_preconditioned();
        let config = SolverConfig {
            tol: 1e-9,
            max_iter: 200_000,
            ..SolverConfig::default()
        };
        let (x, rep) = fixed_point_solve(&pre, &config, None);
        assert_eq!(
            rep.status,
            Status::Converged,
            "last residual {:?}",
            rep.residual_history.last()
        );
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-6);
        // ‖M‖ < 1 makes the monitored residual monotone.
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gmres_identity_converges_in_one_iteration() {
        let op = LinearMap::identity(5);
        let rhs = ComplexVector::basis(5, 2);
        let (x, rep) = gmres_solve(&op, &rhs, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert!(rep.iterations <= 1);
        assert!(x.sub(&rhs).norm() < 1e-10);
    }

    #[test]
    fn gmres_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 16;
        let a = random_accretive(n, &mut rng);
        let map = crate::dense::DenseOperator::new(a.clone())
            .unwrap()
            .to_linear_map();
        let b = crate::vector::random_unit(n, &mut rng);
        let config = SolverConfig {
            tol: 1e-8,
            restart: Some(20),
            ..SolverConfig::default()
        };
        let (x, rep) = gmres_solve(&map, &b, &config).unwrap();
        assert_eq!(rep.status, Status::Converged, "history {:?}", rep.residual_history);
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn gmres_with_small_restart_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 16;
        let a = random_accretive(n, &mut rng);
        let map = crate::dense::DenseOperator::new(a.clone())
            .unwrap()
            .to_linear_map();
        let b = crate::vector::random_unit(n, &mut rng);
        let config = SolverConfig {
            tol: 1e-6,
            restart: Some(5),
            ..SolverConfig::default()
        };
        let (x, rep) = gmres_solve(&map, &b, &config).unwrap();
        assert_eq!(rep.status, Status::Converged);
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-4);
    }

    #[test]
    fn bicgstab_identity_converges_immediately() {
        let op = LinearMap::identity(4);
        let rhs = ComplexVector::basis(4, 0);
        let (x, rep) = bicgstab_solve(&op, &rhs, &SolverConfig::default());
        assert_eq!(rep.status, Status::Converged);
        assert!(x.sub(&rhs).norm() < 1e-10);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn bicgstab_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let n = 16;
        let a = random_accretive(n, &mut rng);
        let map = crate::dense::DenseOperator::new(a.clone())
            .unwrap()
            .to_linear_map();
        let b = crate::vector::random_unit(n, &mut rng);
        let config = SolverConfig {
            tol: 1e-9,
            ..SolverConfig::default()
        };
        let (x, rep) = bicgstab_solve(&map, &b, &config);
        assert_eq!(rep.status, Status::Converged);
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn classify_examples() {
        let config = SolverConfig::default();
        assert_eq!(
            classify_termination(&[1.0, 0.5, 1e-4], &config),
            Status::Converged
        );
        assert_eq!(
            classify_termination(&[1.0, 10.0, 1e7], &config),
            Status::Diverged
        );
        // Geometric decay with ratio 0.99999 over 200 entries: projected
        // iterations to tol vastly exceed the 30k budget.
        let slow: Vec<f64> = (0..200).map(|i| 0.99999f64.powi(i)).collect();
        assert_eq!(classify_termination(&slow, &config), Status::Stagnated);
        // A healthy geometric decay is not stagnation.
        let ok: Vec<f64> = (0..200).map(|i| 0.99f64.powi(i)).collect();
        assert_eq!(classify_termination(&ok, &config), Status::MaxIter);
        // A flat history stagnates outright.
        let flat = vec![0.5f64; 150];
        assert_eq!(classify_termination(&flat, &config), Status::Stagnated);
    }

    #[test]
    fn shift_with_operator_equal_to_shift_converges_in_one_outer_step() {
        // A = γ·1: Γ_shift⁻¹A = identity.
        let gamma = 2.0;
        let n = 4;
        let a = DMatrix::identity(n, n) * Complex64::new(gamma, 0.0);
        let v = DMatrix::<Complex64>::zeros(n, n);
        let b = ComplexVector::basis(n, 1);
        let split = SplitSystem::from_dense_parts(&a, &v, b.clone(), 0.75).unwrap();
        let shift = ShiftConfig {
            gamma,
            ..ShiftConfig::default()
        };
        let outer = SolverConfig {
            tol: 1e-6,
            restart: Some(20),
            ..SolverConfig::default()
        };
        let (x, rep) = shift_split_solve(&split, &shift, Algorithm::Gmres, &outer).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert!(rep.outer_iterations.unwrap() <= 1);
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-4);
    }

    #[test]
    fn shift_dense_matches_oracle_and_counts_inner_evals() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 8;
        let a = random_accretive(n, &mut rng);
        let v = random_contraction(n, 0.5, &mut rng);
        let b = crate::vector::random_unit(n, &mut rng);
        let split = SplitSystem::from_dense_parts(&a, &v, b.clone(), 0.75).unwrap();
        let shift = ShiftConfig {
            inner: SolverConfig {
                tol: 1e-8,
                ..SolverConfig::default()
            },
            ..ShiftConfig::default()
        };
        let outer = SolverConfig {
            tol: 1e-7,
            restart: Some(20),
            ..SolverConfig::default()
        };
        let (x, rep) = shift_split_solve(&split, &shift, Algorithm::Gmres, &outer).unwrap();
        assert_eq!(rep.status, Status::Converged);
        let exact = dense_solve(&a, &b);
        assert!(x.sub(&exact).norm() / exact.norm() < 1e-5);
        // Each outer iteration needs at least one full inner solve.
        assert!(rep.operator_evals > rep.outer_iterations.unwrap());
    }

    #[test]
    fn shift_rejects_non_accretive() {
        // Skew-Hermitian A: accretivity infimum is 0.
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::ZERO,
                Complex64::ONE,
                -Complex64::ONE,
                Complex64::ZERO,
            ],
        );
        let v = DMatrix::<Complex64>::zeros(2, 2);
        let split =
            SplitSystem::from_dense_parts(&a, &v, ComplexVector::basis(2, 0), 0.75).unwrap();
        let res = shift_split_solve(
            &split,
            &ShiftConfig::default(),
            Algorithm::Gmres,
            &SolverConfig::default(),
        );
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn algorithms_agree_on_preconditioned_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 12;
        let a = random_accretive(n, &mut rng);
        let v = random_contraction(n, 0.95, &mut rng);
        let b = crate::vector::random_unit(n, &mut rng);
        let split = SplitSystem::from_dense_parts(&a, &v, b.clone(), 0.9).unwrap();
        let pre = split.build_preconditioned();
        let tol = 1e-6;
        let config = SolverConfig {
            tol,
            max_iter: 200_000,
            restart: Some(20),
            ..SolverConfig::default()
        };
        let (x_fp, r_fp) = fixed_point_solve(&pre, &config, None);
        let (x_gm, r_gm) = gmres_solve(&pre.precond_op, &pre.precond_source, &config).unwrap();
        let (x_bi, r_bi) = bicgstab_solve(&pre.precond_op, &pre.precond_source, &config);
        assert_eq!(r_fp.status, Status::Converged);
        assert_eq!(r_gm.status, Status::Converged);
        assert_eq!(r_bi.status, Status::Converged);
        let exact = dense_solve(&a, &b);
        for x in [&x_fp, &x_gm, &x_bi] {
            assert!(x.sub(&exact).norm() / exact.norm() < 100.0 * tol);
        }
    }

    #[test]
    fn eval_accounting_is_exact_for_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 6;
        let a = random_accretive(n, &mut rng);
        let v = DMatrix::<Complex64>::zeros(n, n);
        let b = crate::vector::random_unit(n, &mut rng);
        let split = SplitSystem::from_dense_parts(&a, &v, b, 0.75).unwrap();
        let pre = split.build_preconditioned();
        let config = SolverConfig {
            tol: 1e-8,
            ..SolverConfig::default()
        };
        let (_, rep) = fixed_point_solve(&pre, &config, None);
        // One preconditioned-operator evaluation per recorded residual.
        assert_eq!(rep.operator_evals, rep.iterations + 1);
    }
}
