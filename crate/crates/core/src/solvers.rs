//! Ground states via Lanczos, real-time propagation via Krylov subspace
//! exponentiation, observable trajectories, and the time-averaged error
//! metrics used to compare models.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Default seed for the deterministic Lanczos start vector.
pub const LANCZOS_SEED: u64 = 0x1a7b_ed01;

/// Hard cap on the Krylov dimension per exponential step.
pub const KRYLOV_DIM_CAP: usize = 30;

/// Sampled observable trajectories with metadata.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `values[obs][k]` is observable `obs` at `times[k]`.
    pub values: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, labels: Vec<String>) -> Self {
        assert!(
            times.windows(2).all(|w| w[1] > w[0]),
            "times must be strictly increasing"
        );
        let n = labels.len();
        let len = times.len();
        Self {
            times,
            labels,
            values: vec![Vec::with_capacity(len); n],
            metadata: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(&self.values[i])
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }
}

/// Uniform grid of `n` points over `[0, t_max]` (t = 0 included).
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && t_max > 0.0);
    (0..n)
        .map(|k| t_max * k as f64 / (n - 1) as f64)
        .collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

fn scale(v: &mut [C64], s: f64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

fn random_unit_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Lowest eigenpair of a Hermitian operator by Lanczos with full
/// reorthogonalization and deterministic seeded start vector.
///
/// The returned pair satisfies ‖Hψ − Eψ‖ ≤ tol·‖H‖_est.
pub fn ground_state(h: &SparseOperator, tol: f64) -> Result<(f64, Vec<C64>)> {
    ground_state_seeded(h, tol, LANCZOS_SEED)
}

pub fn ground_state_seeded(h: &SparseOperator, tol: f64, seed: u64) -> Result<(f64, Vec<C64>)> {
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::Invalid("empty operator".into()));
    }
    if dim == 1 {
        return Ok((h.get(0, 0).re, vec![C64::new(1.0, 0.0)]));
    }
    let scale_h = h.norm_estimate().max(f64::MIN_POSITIVE);
    // bounded restart cycles: full reorthogonalization is quadratic in the
    // cycle length, and the Ritz restart converges for gapped spectra
    let cycle_len = (400_000_000 / (16 * dim)).clamp(8, 96).min(dim);
    let mut psi = random_unit_vector(dim, seed);
    let max_restarts = 60;
    for _restart in 0..max_restarts {
        let mut vs: Vec<Vec<C64>> = vec![psi.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut breakdown = false;
        for j in 0..cycle_len {
            let mut w = h.apply_alloc(&vs[j]);
            let alpha = dot(&vs[j], &w).re;
            alphas.push(alpha);
            axpy(&mut w, C64::new(-alpha, 0.0), &vs[j]);
            if j > 0 {
                axpy(&mut w, C64::new(-betas[j - 1], 0.0), &vs[j - 1]);
            }
            // full reorthogonalization
            for v in &vs {
                let p = dot(v, &w);
                axpy(&mut w, -p, v);
            }
            let beta = norm(&w);
            if beta < 1e-13 * scale_h {
                breakdown = true;
                break;
            }
            betas.push(beta);
            scale(&mut w, 1.0 / beta);
            vs.push(w);
        }
        let m = alphas.len();
        let (theta, y) = lowest_ritz(&alphas, &betas[..m - 1], m);
        // assemble the Ritz vector
        let mut ritz = vec![C64::new(0.0, 0.0); dim];
        for (j, v) in vs.iter().take(m).enumerate() {
            axpy(&mut ritz, C64::new(y[j], 0.0), v);
        }
        let n = norm(&ritz);
        scale(&mut ritz, 1.0 / n);
        let mut hr = h.apply_alloc(&ritz);
        axpy(&mut hr, C64::new(-theta, 0.0), &ritz);
        let residual = norm(&hr);
        psi = ritz;
        if residual <= tol * scale_h || breakdown {
            return Ok((theta, psi));
        }
    }
    Err(Error::NonConvergence(format!(
        "Lanczos did not reach residual {tol:.1e}·‖H‖ within {max_restarts} restart cycles"
    )))
}

fn lowest_ritz(alphas: &[f64], betas: &[f64], m: usize) -> (f64, Vec<f64>) {
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m && i < betas.len() {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut k0 = 0;
    for k in 1..m {
        if eig.eigenvalues[k] < eig.eigenvalues[k0] {
            k0 = k;
        }
    }
    (
        eig.eigenvalues[k0],
        eig.eigenvectors.column(k0).iter().copied().collect(),
    )
}

/// One Krylov (Lanczos) approximation of exp(−i dt H)·v together with the
/// standard last-subdiagonal a-posteriori error estimate.
fn krylov_exp_once(h: &SparseOperator, v: &[C64], dt: f64, max_m: usize) -> (Vec<C64>, f64) {
    let dim = h.dim();
    let m_cap = max_m.min(dim);
    let mut vs: Vec<Vec<C64>> = vec![v.to_vec()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut happy = false;
    for j in 0..m_cap {
        let mut w = h.apply_alloc(&vs[j]);
        let alpha = dot(&vs[j], &w).re;
        alphas.push(alpha);
        axpy(&mut w, C64::new(-alpha, 0.0), &vs[j]);
        if j > 0 {
            axpy(&mut w, C64::new(-betas[j - 1], 0.0), &vs[j - 1]);
        }
        for vprev in &vs {
            let p = dot(vprev, &w);
            axpy(&mut w, -p, vprev);
        }
        let beta = norm(&w);
        if beta < 1e-14 {
            happy = true;
            break;
        }
        if j + 1 < m_cap {
            betas.push(beta);
            scale(&mut w, 1.0 / beta);
            vs.push(w);
        } else {
            betas.push(beta);
        }
    }
    let m = alphas.len();
    // u = exp(−i dt T_m) e_1 via the dense eigendecomposition of T_m
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut u = DVector::<C64>::zeros(m);
    for k in 0..m {
        let phase = C64::from_polar(1.0, -dt * eig.eigenvalues[k]);
        let w_k = eig.eigenvectors[(0, k)];
        for i in 0..m {
            u[i] += phase * C64::new(w_k * eig.eigenvectors[(i, k)], 0.0);
        }
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (j, vj) in vs.iter().take(m).enumerate() {
        axpy(&mut out, u[j], vj);
    }
    let err = if happy || m == dim {
        0.0
    } else {
        (betas[m - 1] * u[m - 1].norm() * dt.abs()).min(betas[m - 1] * u[m - 1].norm())
    };
    (out, err)
}

/// exp(−i dt H)·v with local error ≤ budget, by recursive step halving.
pub fn krylov_exp_step(h: &SparseOperator, v: &[C64], dt: f64, budget: f64) -> Result<Vec<C64>> {
    const MAX_DEPTH: u32 = 40;
    fn go(
        h: &SparseOperator,
        v: &[C64],
        dt: f64,
        budget: f64,
        depth: u32,
    ) -> Result<Vec<C64>> {
        if depth > MAX_DEPTH {
            return Err(Error::NonConvergence(
                "Krylov step size underflow".into(),
            ));
        }
        let (out, err) = krylov_exp_once(h, v, dt, KRYLOV_DIM_CAP);
        if err <= budget {
            Ok(out)
        } else {
            let half = go(h, v, dt / 2.0, budget / 2.0, depth + 1)?;
            go(h, &half, dt / 2.0, budget / 2.0, depth + 1)
        }
    }
    go(h, v, dt, budget, 0)
}

/// Propagate `psi0` under a static Hermitian `h` across `times`, invoking
/// `visit(k, ψ(t_k))` at every grid point. Local error per grid step is
/// bounded by `tol`.
pub fn evolve_visit(
    h: &SparseOperator,
    psi0: &[C64],
    times: &[f64],
    tol: f64,
    mut visit: impl FnMut(usize, &[C64]),
) -> Result<()> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi0.len(),
        });
    }
    let mut psi = psi0.to_vec();
    visit(0, &psi);
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        if dt <= 0.0 {
            return Err(Error::Invalid("times must be strictly increasing".into()));
        }
        psi = krylov_exp_step(h, &psi, dt, tol)?;
        visit(k, &psi);
    }
    Ok(())
}

/// Observable trajectories ⟨O_j(t)⟩ under a static Hamiltonian.
pub fn evolve(
    h: &SparseOperator,
    psi0: &[C64],
    times: &[f64],
    tol: f64,
    observables: &[(&str, &SparseOperator)],
) -> Result<TimeSeries> {
    let labels = observables.iter().map(|(n, _)| n.to_string()).collect();
    let mut series = TimeSeries::new(times.to_vec(), labels);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); observables.len()];
    evolve_visit(h, psi0, times, tol, |_, psi| {
        for (c, (_, op)) in cols.iter_mut().zip(observables.iter()) {
            c.push(op.expectation(psi));
        }
    })?;
    series.values = cols;
    Ok(series)
}

/// Running time average (1/t)∫₀ᵗ f dt′ by the trapezoid rule on the
/// sample grid; the first sample is returned unchanged.
pub fn time_average(times: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), values.len());
    let mut out = Vec::with_capacity(values.len());
    let mut integral = 0.0;
    for k in 0..values.len() {
        if k == 0 {
            out.push(values[0]);
        } else {
            integral += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
            let span = times[k] - times[0];
            out.push(integral / span);
        }
    }
    out
}

/// Time-averaged absolute difference ε(t) = (1/t)∫₀ᵗ |a − b| dt′.
pub fn trajectory_error(times: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != times.len() || b.len() != times.len() {
        return Err(Error::GridMismatch);
    }
    let diff: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).collect();
    Ok(time_average(times, &diff))
}

/// ε(t) between matching columns of two series on a common grid.
pub fn trajectory_error_series(
    a: &TimeSeries,
    b: &TimeSeries,
    column: &str,
) -> Result<Vec<f64>> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(b.times.iter())
            .any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
    {
        return Err(Error::GridMismatch);
    }
    let ca = a.column(column).ok_or(Error::GridMismatch)?;
    let cb = b.column(column).ok_or(Error::GridMismatch)?;
    trajectory_error(&a.times, ca, cb)
}

/// All eigenvalues of a Hermitian operator, ascending (dense route; meant
/// for small oracle problems).
pub fn dense_eigenvalues(h: &SparseOperator) -> Vec<f64> {
    let eig = h.to_dense().symmetric_eigen();
    let mut evals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    evals
}

/// exp(−i t H)·v by dense eigendecomposition (oracle for the Krylov path).
pub fn dense_expm_apply(h: &SparseOperator, v: &[C64], t: f64) -> Vec<C64> {
    let eig = h.to_dense().symmetric_eigen();
    let dim = h.dim();
    let mut coeffs = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let mut c = C64::new(0.0, 0.0);
        for i in 0..dim {
            c += eig.eigenvectors[(i, k)].conj() * v[i];
        }
        coeffs[k] = c * C64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        for i in 0..dim {
            out[i] += eig.eigenvectors[(i, k)] * coeffs[k];
        }
    }
    out
}

/// State norm helper exposed for drift checks.
pub fn state_norm(v: &[C64]) -> f64 {
    norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseBuilder;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = SparseBuilder::new(dim);
        for i in 0..dim {
            b.add(i, i, c(rng.gen::<f64>() - 0.5, 0.0));
            for j in (i + 1)..dim {
                if rng.gen::<f64>() < 0.15 {
                    b.add_hermitian_pair(i, j, c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
                }
            }
        }
        b.build()
    }

    #[test]
    fn ground_state_of_diagonal_matrix() {
        let mut b = SparseBuilder::new(2);
        b.add(0, 0, c(0.0, 0.0));
        b.add(1, 1, c(1.0, 0.0));
        let h = b.build();
        let (e, psi) = ground_state(&h, 1e-12).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-10);
        assert!(psi[0].norm() > 0.999);
    }

    #[test]
    fn ground_state_matches_dense_oracle() {
        let h = random_hermitian(80, 7);
        let (e, psi) = ground_state(&h, 1e-11).unwrap();
        let dense = dense_eigenvalues(&h);
        assert_abs_diff_eq!(e, dense[0], epsilon = 1e-8);
        let hp = h.apply_alloc(&psi);
        let res: f64 = hp
            .iter()
            .zip(psi.iter())
            .map(|(a, b)| (a - b * c(e, 0.0)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-8 * h.norm_estimate());
    }

    #[test]
    fn evolve_constant_under_zero_hamiltonian() {
        let h = SparseBuilder::new(4).build();
        let psi0 = random_unit_vector(4, 3);
        let times = time_grid(5.0, 11);
        let mut all = Vec::new();
        evolve_visit(&h, &psi0, &times, 1e-10, |_, psi| all.push(psi.to_vec())).unwrap();
        for psi in &all {
            for (a, b) in psi.iter().zip(psi0.iter()) {
                assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rabi_oscillation_closed_form() {
        // H = (Ω/2)σ^x from |↑⟩: ⟨σ^z(t)⟩ = cos(Ω t)
        let omega = 1.7;
        let mut b = SparseBuilder::new(2);
        b.add_hermitian_pair(0, 1, c(omega / 2.0, 0.0));
        let h = b.build();
        let mut bz = SparseBuilder::new(2);
        bz.add(0, 0, c(1.0, 0.0));
        bz.add(1, 1, c(-1.0, 0.0));
        let sz = bz.build();
        let psi0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let times = time_grid(10.0, 101);
        let series = evolve(&h, &psi0, &times, 1e-11, &[("sz", &sz)]).unwrap();
        for (t, v) in times.iter().zip(series.column("sz").unwrap()) {
            assert_abs_diff_eq!(*v, (omega * t).cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let h = random_hermitian(120, 11);
        let psi0 = random_unit_vector(120, 5);
        let t = 3.7;
        let krylov = krylov_exp_step(&h, &psi0, t, 1e-10).unwrap();
        let dense = dense_expm_apply(&h, &psi0, t);
        let max_diff = krylov
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-8, "max diff {max_diff:.2e}");
    }

    #[test]
    fn unitarity_and_energy_conservation() {
        let h = random_hermitian(64, 23);
        let psi0 = random_unit_vector(64, 9);
        let times = time_grid(20.0, 41);
        let tol = 1e-9;
        let e0 = h.expectation(&psi0);
        evolve_visit(&h, &psi0, &times, tol, |k, psi| {
            let t = times[k];
            assert!((state_norm(psi) - 1.0).abs() <= 10.0 * tol * t.max(1.0));
            assert!((h.expectation(psi) - e0).abs() <= 100.0 * tol * h.norm_estimate());
        })
        .unwrap();
    }

    #[test]
    fn time_average_of_constant_and_ramp() {
        let times = time_grid(4.0, 9);
        let constant = vec![2.5; 9];
        for v in time_average(&times, &constant) {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-14);
        }
        let ramp: Vec<f64> = times.iter().map(|t| 3.0 * t).collect();
        let avg = time_average(&times, &ramp);
        for (t, v) in times.iter().zip(avg.iter()).skip(1) {
            assert_abs_diff_eq!(*v, 1.5 * t, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_error_basics() {
        let times = time_grid(2.0, 5);
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let eps = trajectory_error(&times, &a, &a).unwrap();
        assert!(eps.iter().all(|&x| x == 0.0));
        let b = vec![0.0; 5];
        let eps = trajectory_error(&times, &a, &b).unwrap();
        // |a − b| is the ramp 1 + 2t: average over [0, t] is 1 + t
        for (t, v) in times.iter().zip(eps.iter()).skip(1) {
            assert_abs_diff_eq!(*v, 1.0 + t, epsilon = 1e-12);
        }
        let short = vec![0.0; 4];
        assert!(trajectory_error(&times, &a, &short).is_err());
    }
}
