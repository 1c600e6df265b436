//! Micro-trap array engineering: equilibrium positions, Coulomb coupling
//! matrices, localized normal modes, block-segmented frequency design, and
//! the perturbative leak-out bounds.
//!
//! Everything is SI internally (positions in m, frequencies in rad/s);
//! constructors accept frequencies as ω/2π in Hz where noted.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// e²/(4πε₀) in J·m.
pub const COULOMB_K: f64 = 2.307_077_55e-28;
/// One atomic mass unit in kg.
pub const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;
/// ⁹Be⁺ mass in atomic mass units.
pub const BE9_MASS_U: f64 = 9.012_183_065;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Anisotropy factor γ of the Coulomb curvature: +1 radial, −2 axial.
    pub fn gamma(&self) -> f64 {
        match self {
            Axis::X | Axis::Y => 1.0,
            Axis::Z => -2.0,
        }
    }
}

/// Geometry and per-trap frequencies of a segmented micro-trap string.
#[derive(Clone, Debug)]
pub struct TrapArray {
    /// Ion mass (kg).
    pub mass: f64,
    /// Per-trap secular frequencies (rad/s) along x, y, z.
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
    pub omega_z: Vec<f64>,
    /// Nominal spacing between trap centers (m).
    pub spacing: f64,
    /// Ions per block of the segmented design (even), when designed.
    pub ions_per_block: Option<usize>,
}

impl TrapArray {
    pub fn len(&self) -> usize {
        self.omega_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_x.is_empty()
    }

    pub fn omega(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.omega_x,
            Axis::Y => &self.omega_y,
            Axis::Z => &self.omega_z,
        }
    }

    /// Nominal trap centers along z.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|l| l as f64 * self.spacing).collect()
    }
}

/// Pairing of the localized radial modes: x hybridizes (1,2), (3,4), …;
/// y hybridizes (2,3), (4,5), … leaving the first and last ion unpaired.
pub fn mode_pairs(n_ions: usize, axis: Axis) -> Vec<(usize, usize)> {
    let start = match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => return Vec::new(),
    };
    (start..n_ions.saturating_sub(1))
        .step_by(2)
        .map(|l| (l, l + 1))
        .collect()
}

/// Design parameters of the segmented frequency staircase.
#[derive(Clone, Copy, Debug)]
pub struct DesignSpec {
    pub blocks: usize,
    /// Ions per block N_I (must be even).
    pub ions_per_block: usize,
    /// Global radial frequencies ω_x, ω_y (rad/s).
    pub omega_x: f64,
    pub omega_y: f64,
    /// Axial frequency ω_z (rad/s), equal for every trap.
    pub omega_z: f64,
    /// Staircase offset Δ_T (rad/s).
    pub delta_t: f64,
    /// Block offset Δ_B (rad/s).
    pub delta_b: f64,
    /// Pair splitting δ_T (rad/s).
    pub delta_small: f64,
    /// Trap spacing d (m).
    pub spacing: f64,
    /// Ion mass (kg).
    pub mass: f64,
}

impl DesignSpec {
    /// Paper-grade surface-trap parameters: ⁹Be⁺, d = 30 µm,
    /// ω_x = ω_y = 2π×5 MHz, ω_z = 2π×0.5 MHz, Δ_T = 2π×500 kHz,
    /// Δ_B = 2π×50 kHz, δ_T = 2π×5 kHz, 6 ions per block.
    pub fn paper_surface_trap(blocks: usize) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            blocks,
            ions_per_block: 6,
            omega_x: tau * 5.0e6,
            omega_y: tau * 5.0e6,
            omega_z: tau * 0.5e6,
            delta_t: tau * 500.0e3,
            delta_b: tau * 50.0e3,
            delta_small: tau * 5.0e3,
            spacing: 30.0e-6,
            mass: BE9_MASS_U * ATOMIC_MASS_KG,
        }
    }
}

/// Per-trap radial frequencies per the generalized block staircase.
///
/// x direction, trap l = m·N_I + j (1 ≤ j ≤ N_I):
///   ω_x + m Δ_B + ⌊(j−1)/2⌋ Δ_T + [1+(−1)^j]/2 δ_T
/// y direction, trap l = m·N_I + j + 1:
///   ω_y + m Δ_B + ⌊(j+1)/2⌋ Δ_T + [1+(−1)^j]/2 δ_T
///
/// Jitter, when given, adds per-trap uniform offsets in ±width to both
/// radial directions (seeded, reproducible).
pub fn design_frequencies(spec: &DesignSpec, jitter: Option<(f64, u64)>) -> Result<TrapArray> {
    if spec.ions_per_block == 0 || spec.ions_per_block % 2 != 0 {
        return Err(Error::DesignError(
            "ions per block N_I must be even and positive".into(),
        ));
    }
    if spec.blocks == 0 {
        return Err(Error::DesignError("need at least one block".into()));
    }
    // frequency hierarchy Δ_T ≫ Δ_B ≫ δ_T > 0 (factor 4 per step)
    const HIERARCHY_FACTOR: f64 = 4.0;
    if spec.delta_small <= 0.0 {
        return Err(Error::DesignError("δ_T must be positive".into()));
    }
    if spec.delta_b < HIERARCHY_FACTOR * spec.delta_small {
        return Err(Error::DesignError(format!(
            "Δ_B = {:.3e} must exceed {HIERARCHY_FACTOR}·δ_T = {:.3e}",
            spec.delta_b,
            HIERARCHY_FACTOR * spec.delta_small
        )));
    }
    if spec.delta_t < HIERARCHY_FACTOR * spec.delta_b {
        return Err(Error::DesignError(format!(
            "Δ_T = {:.3e} must exceed {HIERARCHY_FACTOR}·Δ_B = {:.3e}",
            spec.delta_t,
            HIERARCHY_FACTOR * spec.delta_b
        )));
    }
    let n = spec.blocks * spec.ions_per_block;
    let n_i = spec.ions_per_block;
    let mut omega_x = Vec::with_capacity(n);
    let mut omega_y = Vec::with_capacity(n);
    for l in 1..=n {
        let m_x = (l - 1) / n_i;
        let j_x = l - m_x * n_i; // 1..=N_I
        let stair_x = ((j_x - 1) / 2) as f64 * spec.delta_t
            + if j_x % 2 == 0 { spec.delta_small } else { 0.0 };
        omega_x.push(spec.omega_x + m_x as f64 * spec.delta_b + stair_x);
        // y blocks are shifted by one site; ion 1 sits below the staircase
        let (m_y, j_y) = if l == 1 {
            (0, 0)
        } else {
            let m = (l - 2) / n_i;
            (m, l - 1 - m * n_i)
        };
        let stair_y = ((j_y + 1) / 2) as f64 * spec.delta_t
            + if j_y % 2 == 0 { spec.delta_small } else { 0.0 };
        omega_y.push(spec.omega_y + m_y as f64 * spec.delta_b + stair_y);
    }
    if let Some((width, seed)) = jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in omega_x.iter_mut() {
            *w += width * (2.0 * rng.gen::<f64>() - 1.0);
        }
        for w in omega_y.iter_mut() {
            *w += width * (2.0 * rng.gen::<f64>() - 1.0);
        }
    }
    Ok(TrapArray {
        mass: spec.mass,
        omega_x,
        omega_y,
        omega_z: vec![spec.omega_z; n],
        spacing: spec.spacing,
        ions_per_block: Some(n_i),
    })
}

/// Equilibrium positions along z from damped Newton iteration on the total
/// potential (local traps + Coulomb repulsion), started at the trap
/// centers. Gradient is driven below 1e−12 of its natural scale.
pub fn equilibrium_positions(traps: &TrapArray) -> Result<Vec<f64>> {
    let centers = traps.centers();
    equilibrium_from_guess(traps.mass, &traps.omega_z, &centers, &centers)
}

/// Newton solve with explicit trap centers and starting guess; used both
/// for micro-trap arrays and single-well chains.
pub fn equilibrium_from_guess(
    mass: f64,
    omega_z: &[f64],
    centers: &[f64],
    guess: &[f64],
) -> Result<Vec<f64>> {
    let n = centers.len();
    if n == 1 {
        return Ok(vec![centers[0]]);
    }
    let k = COULOMB_K;
    let scale_x = {
        let mut span = centers[n - 1] - centers[0];
        if span <= 0.0 {
            // single-well chain: use the Coulomb length scale
            let w2 = omega_z[0] * omega_z[0];
            span = (k / (mass * w2)).powf(1.0 / 3.0) * n as f64;
        }
        span
    };
    let grad_scale: f64 = mass * omega_z.iter().map(|w| w * w).fold(0.0, f64::max) * scale_x;
    let mut z = DVector::from_column_slice(guess);
    let grad = |z: &DVector<f64>| -> DVector<f64> {
        let mut g = DVector::zeros(n);
        for i in 0..n {
            g[i] = mass * omega_z[i] * omega_z[i] * (z[i] - centers[i]);
            for j in 0..n {
                if j != i {
                    let d: f64 = z[i] - z[j];
                    g[i] -= k * d.signum() / (d * d);
                }
            }
        }
        g
    };
    let hess = |z: &DVector<f64>| -> DMatrix<f64> {
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = mass * omega_z[i] * omega_z[i];
            for j in 0..n {
                if j != i {
                    let d: f64 = (z[i] - z[j]).abs();
                    let c = 2.0 * k / (d * d * d);
                    h[(i, i)] += c;
                    h[(i, j)] -= c;
                }
            }
        }
        h
    };
    let mut g = grad(&z);
    for _iter in 0..200 {
        if g.amax() <= 1e-12 * grad_scale {
            let mut out: Vec<f64> = z.iter().copied().collect();
            if out.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::NonConvergence(
                    "equilibrium solution is not an ordered chain".into(),
                ));
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(out);
        }
        let h = hess(&z);
        let chol = h
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NonConvergence("non-positive-definite Hessian".into()))?;
        let step = chol.solve(&g);
        // backtracking damping on the gradient norm
        let mut lambda = 1.0;
        let g0 = g.norm();
        loop {
            let trial = &z - &step * lambda;
            let ordered = (0..n - 1).all(|i| trial[i] < trial[i + 1]);
            if ordered {
                let gt = grad(&trial);
                if gt.norm() < g0 || lambda < 1e-6 {
                    z = trial;
                    g = gt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::NonConvergence(
                    "Newton damping underflow in the equilibrium solve".into(),
                ));
            }
        }
    }
    Err(Error::NonConvergence(
        "equilibrium Newton iteration did not converge".into(),
    ))
}

/// Coulomb coupling matrix V^α (rad²/s²):
/// diagonal (ω_l^α)² − γ_α Σ_{n≠l} K/(M |z_l−z_n|³),
/// off-diagonal γ_α K/(M |z_l−z_m|³).
pub fn coupling_matrix(traps: &TrapArray, positions: &[f64], axis: Axis) -> Result<DMatrix<f64>> {
    let n = traps.len();
    if positions.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: positions.len(),
        });
    }
    let omega = traps.omega(axis);
    let gamma = axis.gamma();
    let km = COULOMB_K / traps.mass;
    let mut v = DMatrix::zeros(n, n);
    for l in 0..n {
        let mut diag = omega[l] * omega[l];
        for m in 0..n {
            if m == l {
                continue;
            }
            let d = (positions[l] - positions[m]).abs();
            if d == 0.0 {
                return Err(Error::Invalid("coincident ion positions".into()));
            }
            let c = km / (d * d * d);
            diag -= gamma * c;
            v[(l, m)] = gamma * c;
        }
        v[(l, l)] = diag;
    }
    Ok(v)
}

/// Mode frequencies and distribution matrix of one axis.
#[derive(Clone, Debug)]
pub struct NormalModes {
    /// ε_q (rad/s), in adiabatic (ion-matched) order.
    pub freqs: Vec<f64>,
    /// M_{lq}: row l = ion, column q = mode; orthogonal.
    pub m: DMatrix<f64>,
}

/// Exact dense eigendecomposition of V with columns permuted and signed to
/// the adiabatic labeling convention (mode q ↔ local vibration of ion q,
/// maximum-overlap assignment, dominant component positive).
pub fn normal_modes(v: &DMatrix<f64>) -> Result<NormalModes> {
    let n = v.nrows();
    let eig = v.clone().symmetric_eigen();
    for k in 0..n {
        if eig.eigenvalues[k] <= 0.0 {
            return Err(Error::Invalid(
                "coupling matrix is not positive definite (structural instability)".into(),
            ));
        }
    }
    // maximum-|overlap| assignment of modes to ions (Hungarian on log costs)
    let weight = |l: usize, q: usize| eig.eigenvectors[(l, q)].abs();
    let assign = hungarian_max(n, &weight);
    let mut m = DMatrix::zeros(n, n);
    let mut freqs = vec![0.0; n];
    for (ion, &mode) in assign.iter().enumerate() {
        let col = eig.eigenvectors.column(mode);
        let sign = if col[ion] < 0.0 { -1.0 } else { 1.0 };
        for l in 0..n {
            m[(l, ion)] = sign * col[l];
        }
        freqs[ion] = eig.eigenvalues[mode].sqrt();
    }
    Ok(NormalModes { freqs, m })
}

/// Normal modes ordered by increasing frequency (energy-lattice labeling),
/// sign fixed by a positive dominant component.
pub fn normal_modes_by_energy(v: &DMatrix<f64>) -> Result<NormalModes> {
    let n = v.nrows();
    let eig = v.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
    });
    let mut m = DMatrix::zeros(n, n);
    let mut freqs = vec![0.0; n];
    for (q, &k) in order.iter().enumerate() {
        if eig.eigenvalues[k] <= 0.0 {
            return Err(Error::Invalid(
                "coupling matrix is not positive definite (structural instability)".into(),
            ));
        }
        let col = eig.eigenvectors.column(k);
        let mut dominant = 0;
        for l in 1..n {
            if col[l].abs() > col[dominant].abs() {
                dominant = l;
            }
        }
        let sign = if col[dominant] < 0.0 { -1.0 } else { 1.0 };
        for l in 0..n {
            m[(l, q)] = sign * col[l];
        }
        freqs[q] = eig.eigenvalues[k].sqrt();
    }
    Ok(NormalModes { freqs, m })
}

/// Maximum-|overlap| perfect assignment of modes to ions: Hungarian
/// algorithm with potentials on costs −ln|w|, O(n³).
fn hungarian_max(n: usize, weight: &dyn Fn(usize, usize) -> f64) -> Vec<usize> {
    let cost = |i: usize, j: usize| -> f64 { -(weight(i, j).max(1e-300)).ln() };
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: 1-based row matched to column j, 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Hybridization angle of the near-resonant pair (l, l+1):
/// θ = ½ atan2(2 V_{l,l+1}, V_{l+1,l+1} − V_{l,l}), so equal diagonals give
/// ±π/4 with the sign of the off-diagonal coupling.
pub fn pair_angle(v: &DMatrix<f64>, l: usize) -> f64 {
    0.5 * (2.0 * v[(l, l + 1)]).atan2(v[(l + 1, l + 1)] - v[(l, l)])
}

/// First-order perturbative distribution matrix for a designed array,
/// together with the analytic leak-out bound
/// max(max[V]/(Δ_T ω), max[V]/((N_I−1)³ Δ_B ω)).
pub fn perturbative_modes(
    traps: &TrapArray,
    positions: &[f64],
    axis: Axis,
    spec: &DesignSpec,
) -> Result<(DMatrix<f64>, f64)> {
    let n = traps.len();
    let v = coupling_matrix(traps, positions, axis)?;
    let omega = traps.omega(axis);
    let pairs = mode_pairs(n, axis);
    let mut partner = vec![usize::MAX; n];
    for &(a, b) in &pairs {
        partner[a] = b;
        partner[b] = a;
    }
    let mut m = DMatrix::zeros(n, n);
    for l in 0..n {
        let pt = partner[l];
        // θ is always evaluated at the lower index of the pair; a partner
        // below l enters with −sinθ (the lower-left block entry)
        let (cos_self, sin_sign) = match pt {
            usize::MAX => (1.0, 0.0), // unpaired edge ion (y direction)
            pt if pt > l => {
                let th = pair_angle(&v, l);
                (th.cos(), th.sin())
            }
            pt => {
                let th = pair_angle(&v, pt);
                (th.cos(), -th.sin())
            }
        };
        for lp in 0..n {
            let mut val = 0.0;
            // cosθ [δ_{l,l'} + V_{l,l'}/((ω_{l'})² − (ω_l)²)] and
            // ±sinθ [δ_{l±1,l'} + V_{l±1,l'}/((ω_{l'})² − (ω_l)²)], with the
            // perturbative corrections running over modes outside the
            // near-resonant pair {l, l±1} (the pair itself is exact in θ)
            if lp == l {
                val += cos_self;
            } else if lp != pt {
                let denom = omega[lp] * omega[lp] - omega[l] * omega[l];
                val += cos_self * v[(l, lp)] / denom;
                if pt != usize::MAX {
                    val += sin_sign * v[(pt, lp)] / denom;
                }
            } else {
                val += sin_sign;
            }
            m[(l, lp)] = val;
        }
    }
    let max_v = pairs
        .iter()
        .map(|&(a, b)| v[(a, b)].abs())
        .fold(0.0, f64::max);
    let omega_ref = omega.iter().copied().fold(f64::MAX, f64::min);
    let n_i = spec.ions_per_block as f64;
    let bound_in_block = max_v / (spec.delta_t * omega_ref);
    let bound_cross_block = max_v / ((n_i - 1.0).powi(3) * spec.delta_b * omega_ref);
    Ok((m, bound_in_block.max(bound_cross_block)))
}

/// Zeroth-order block-diagonal distribution matrix from the pair angles.
pub fn zeroth_order_modes(v: &DMatrix<f64>, axis: Axis) -> DMatrix<f64> {
    let n = v.nrows();
    let mut m0 = DMatrix::identity(n, n);
    for (a, b) in mode_pairs(n, axis) {
        let th = pair_angle(v, a);
        m0[(a, a)] = th.cos();
        m0[(a, b)] = th.sin();
        m0[(b, a)] = -th.sin();
        m0[(b, b)] = th.cos();
    }
    m0
}

/// Maximum |M − M₀| outside the 2×2 pair blocks: the phonon leak-out.
pub fn leakout(modes: &NormalModes, v: &DMatrix<f64>, axis: Axis) -> f64 {
    let n = modes.m.nrows();
    let m0 = zeroth_order_modes(v, axis);
    let mut in_block = vec![vec![false; n]; n];
    for l in 0..n {
        in_block[l][l] = true;
    }
    for (a, b) in mode_pairs(n, axis) {
        in_block[a][b] = true;
        in_block[b][a] = true;
    }
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for q in 0..n {
            if !in_block[l][q] {
                worst = worst.max((modes.m[(l, q)] - m0[(l, q)]).abs());
            }
        }
    }
    worst
}

/// Maximum |M| element connecting ions in different blocks. The y blocks
/// are shifted by one ion relative to the x blocks, matching the shifted
/// staircase.
pub fn cross_block_leakage(modes: &NormalModes, ions_per_block: usize, axis: Axis) -> f64 {
    let n = modes.m.nrows();
    let block = |l: usize| match axis {
        Axis::Y => {
            if l == 0 {
                0
            } else {
                (l - 1) / ions_per_block
            }
        }
        _ => l / ions_per_block,
    };
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for q in 0..n {
            if block(l) != block(q) {
                worst = worst.max(modes.m[(l, q)].abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn single_ion_sits_at_the_trap_center() {
        let traps = TrapArray {
            mass: BE9_MASS_U * ATOMIC_MASS_KG,
            omega_x: vec![TAU * 5e6],
            omega_y: vec![TAU * 5e6],
            omega_z: vec![TAU * 0.5e6],
            spacing: 30e-6,
            ions_per_block: None,
        };
        let z = equilibrium_positions(&traps).unwrap();
        assert_abs_diff_eq!(z[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_equal_traps_displace_symmetrically() {
        let spec = DesignSpec::paper_surface_trap(1);
        let traps = TrapArray {
            mass: spec.mass,
            omega_x: vec![spec.omega_x; 2],
            omega_y: vec![spec.omega_y; 2],
            omega_z: vec![spec.omega_z; 2],
            spacing: spec.spacing,
            ions_per_block: None,
        };
        let z = equilibrium_positions(&traps).unwrap();
        let center = 0.5 * spec.spacing;
        assert_abs_diff_eq!(center - z[0], z[1] - center, epsilon = 1e-12 * spec.spacing);
        assert!(z[1] - z[0] > spec.spacing);
        // gradient residual below 1e−12 of its scale
        let k = COULOMB_K;
        let g0 = traps.mass * spec.omega_z.powi(2) * (z[0] - 0.0)
            + k / (z[1] - z[0]).powi(2);
        assert!(g0.abs() <= 1e-10 * traps.mass * spec.omega_z.powi(2) * spec.spacing);
    }

    #[test]
    fn coupling_matrix_limits() {
        let spec = DesignSpec::paper_surface_trap(1);
        let traps = design_frequencies(&spec, None).unwrap();
        // huge spacing: V diagonal with entries ω²
        let far: Vec<f64> = (0..traps.len()).map(|l| l as f64 * 1.0).collect();
        let v = coupling_matrix(&traps, &far, Axis::X).unwrap();
        for l in 0..traps.len() {
            assert_abs_diff_eq!(
                v[(l, l)],
                traps.omega_x[l] * traps.omega_x[l],
                epsilon = 1e-6 * v[(l, l)]
            );
        }
        // axial off-diagonals are −2× the radial ones at equal geometry
        let z = equilibrium_positions(&traps).unwrap();
        let vx = coupling_matrix(&traps, &z, Axis::X).unwrap();
        let vz = coupling_matrix(&traps, &z, Axis::Z).unwrap();
        for l in 0..traps.len() {
            for m in 0..traps.len() {
                if l != m {
                    assert_abs_diff_eq!(vz[(l, m)], -2.0 * vx[(l, m)], epsilon = 1e-3);
                }
            }
        }
        // radial diagonal deficit: ω² minus the Coulomb sum
        let km = COULOMB_K / traps.mass;
        let l = 3;
        let mut expect = traps.omega_x[l] * traps.omega_x[l];
        for m in 0..traps.len() {
            if m != l {
                expect -= km / (z[l] - z[m]).abs().powi(3);
            }
        }
        assert_abs_diff_eq!(vx[(l, l)], expect, epsilon = 1e-3 * expect.abs());
    }

    #[test]
    fn nearest_neighbor_coupling_matches_the_paper_scale() {
        // 12-trap ⁹Be⁺ array at d = 30 µm: V_{l,l+1} ≈ (2π×0.12 MHz)²
        let spec = DesignSpec::paper_surface_trap(2);
        let traps = design_frequencies(&spec, None).unwrap();
        assert_eq!(traps.len(), 12);
        let z = equilibrium_positions(&traps).unwrap();
        let v = coupling_matrix(&traps, &z, Axis::X).unwrap();
        let target = (TAU * 0.12e6) * (TAU * 0.12e6);
        for l in 0..11 {
            let ratio = v[(l, l + 1)] / target;
            assert!(
                (0.5..=1.5).contains(&ratio),
                "V_{{{l},{}}} = {:.3e}, {ratio:.2}× the paper scale",
                l + 1,
                v[(l, l + 1)]
            );
        }
    }

    #[test]
    fn diagonal_coupling_gives_identity_modes() {
        let mut v = DMatrix::zeros(4, 4);
        for l in 0..4 {
            v[(l, l)] = (TAU * (5e6 + 1e5 * l as f64)).powi(2);
        }
        let modes = normal_modes(&v).unwrap();
        for l in 0..4 {
            for q in 0..4 {
                let want = if l == q { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(modes.m[(l, q)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn resonant_pair_hybridizes_at_pi_over_4() {
        let w2 = (TAU * 5e6f64).powi(2);
        let c = (TAU * 0.1e6f64).powi(2);
        let mut v = DMatrix::zeros(2, 2);
        v[(0, 0)] = w2;
        v[(1, 1)] = w2;
        v[(0, 1)] = c;
        v[(1, 0)] = c;
        assert_abs_diff_eq!(pair_angle(&v, 0), std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        let modes = normal_modes(&v).unwrap();
        for l in 0..2 {
            for q in 0..2 {
                assert_abs_diff_eq!(modes.m[(l, q)].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);
            }
        }
        // vanishing off-diagonal: θ → 0
        v[(0, 1)] = 0.0;
        v[(1, 0)] = 0.0;
        v[(1, 1)] = w2 * 1.01;
        assert_abs_diff_eq!(pair_angle(&v, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonality_and_spectrum_invariance() {
        let spec = DesignSpec::paper_surface_trap(1);
        let traps = design_frequencies(&spec, None).unwrap();
        let z = equilibrium_positions(&traps).unwrap();
        let v = coupling_matrix(&traps, &z, Axis::Y).unwrap();
        let modes = normal_modes(&v).unwrap();
        let mt_m = modes.m.transpose() * &modes.m;
        for l in 0..traps.len() {
            for q in 0..traps.len() {
                let want = if l == q { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(mt_m[(l, q)], want, epsilon = 1e-10);
            }
        }
        // M^T V M reproduces the squared frequencies
        let d = modes.m.transpose() * &v * &modes.m;
        for q in 0..traps.len() {
            assert_abs_diff_eq!(
                d[(q, q)],
                modes.freqs[q] * modes.freqs[q],
                epsilon = 1e-6 * d[(q, q)]
            );
        }
    }

    #[test]
    fn paper_array_leakage_below_percent() {
        let spec = DesignSpec::paper_surface_trap(2);
        let traps = design_frequencies(&spec, None).unwrap();
        let z = equilibrium_positions(&traps).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let v = coupling_matrix(&traps, &z, axis).unwrap();
            let modes = normal_modes(&v).unwrap();
            let leak = leakout(&modes, &v, axis);
            assert!(leak < 0.01, "{axis:?} leak-out {leak:.4}");
            let cross = cross_block_leakage(&modes, 6, axis);
            assert!(cross < 0.005, "{axis:?} cross-block {cross:.4}");
        }
    }

    #[test]
    fn perturbative_modes_track_the_exact_ones() {
        let spec = DesignSpec::paper_surface_trap(2);
        let traps = design_frequencies(&spec, None).unwrap();
        let z = equilibrium_positions(&traps).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let v = coupling_matrix(&traps, &z, axis).unwrap();
            let exact = normal_modes(&v).unwrap();
            let (m1, bound) = perturbative_modes(&traps, &z, axis, &spec).unwrap();
            // residual within the stated second-order magnitude
            let max_v = (0..traps.len() - 1)
                .map(|l| v[(l, l + 1)].abs())
                .fold(0.0, f64::max);
            let omega_ref = traps.omega(axis).iter().copied().fold(f64::MAX, f64::min);
            let second_order = (max_v / (spec.delta_t * omega_ref)).powi(2);
            let mut resid: f64 = 0.0;
            for l in 0..traps.len() {
                for q in 0..traps.len() {
                    resid = resid.max((exact.m[(l, q)] - m1[(l, q)]).abs());
                }
            }
            assert!(
                resid < 40.0 * second_order,
                "{axis:?}: residual {resid:.2e} vs (max V/(Δ_T ω))² = {second_order:.2e}"
            );
            // measured leak-out never exceeds the analytic bound
            let leak = leakout(&exact, &v, axis);
            assert!(leak <= bound, "{axis:?}: leak {leak:.3e} > bound {bound:.3e}");
        }
    }

    #[test]
    fn jitter_is_reproducible_and_zero_jitter_is_exact() {
        let spec = DesignSpec::paper_surface_trap(1);
        let a = design_frequencies(&spec, Some((TAU * 30e3, 7))).unwrap();
        let b = design_frequencies(&spec, Some((TAU * 30e3, 7))).unwrap();
        assert_eq!(a.omega_x, b.omega_x);
        assert_eq!(a.omega_y, b.omega_y);
        let c = design_frequencies(&spec, Some((0.0, 9))).unwrap();
        let d = design_frequencies(&spec, None).unwrap();
        assert_eq!(c.omega_x, d.omega_x);
    }

    #[test]
    fn hierarchy_violation_is_a_design_error() {
        let mut spec = DesignSpec::paper_surface_trap(1);
        spec.delta_b = spec.delta_t; // Δ_T ≫ Δ_B violated
        match design_frequencies(&spec, None) {
            Err(Error::DesignError(msg)) => assert!(msg.contains("Δ_T")),
            other => panic!("expected a design error, got {other:?}"),
        }
    }

    #[test]
    fn adiabatic_labeling_localizes_with_distance() {
        let spec = DesignSpec::paper_surface_trap(1);
        let mut worst_prev = f64::MAX;
        for scale in [1.0, 10.0] {
            let mut s = spec;
            s.spacing = spec.spacing * scale;
            let traps = design_frequencies(&s, None).unwrap();
            let z = equilibrium_positions(&traps).unwrap();
            let v = coupling_matrix(&traps, &z, Axis::X).unwrap();
            let modes = normal_modes(&v).unwrap();
            let mut off: f64 = 0.0;
            for l in 0..traps.len() {
                for q in 0..traps.len() {
                    if l != q {
                        off = off.max(modes.m[(l, q)].abs());
                    }
                }
            }
            assert!(off < worst_prev);
            worst_prev = off;
        }
    }
}
