//! Lattice Hilbert spaces, the Gauss-law (Coulomb) sector, and gauge-field
//! elimination to long-range spin models.
//!
//! Sites are indexed `0..L` internally and map to the physics convention
//! `i = 1..L` with site 1 odd. On odd sites the *absence* of a staggered
//! fermion is an anti-charge, on even sites its *presence* is a charge, so
//! the staggered charge of site `s` (0-based) is `occ(s) - [s even]`.
//!
//! For open chains the electric field entering from the left of site 1 is
//! fixed to zero, and the Gauss constraint is imposed on every site that
//! owns a link to its right (`i = 1..L-1`). Each matter configuration then
//! fixes all link fields by telescoping. Periodic chains are supported for
//! spin-1/2 links only (the staggered-rotated quantum link model), where
//! the constraint acts on all `L` sites.

use crate::error::{Error, Result};
use crate::models::ModelParams;
use num_complex::Complex64 as C64;

/// Refuse to enumerate bases larger than this.
pub const DIMENSION_CAP: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Gauge-field degrees of freedom carried by each link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkKind {
    /// Quantum rotor with electric field `n ∈ [-Λ, Λ]`.
    Rotor { cutoff: u32 },
    /// Boson mode with occupation `n ∈ [max(0, 2N - n_max), n_max]`;
    /// the electric field is `n - N`.
    Boson { offset: u32, n_max: u32 },
    /// Spin-1/2 link, `s^z ∈ {-1/2, +1/2}` stored as levels `{0, 1}`.
    SpinHalf,
}

impl LinkKind {
    pub fn levels(&self) -> u32 {
        match *self {
            LinkKind::Rotor { cutoff } => 2 * cutoff + 1,
            LinkKind::Boson { offset, n_max } => n_max - Self::boson_lo(offset, n_max) + 1,
            LinkKind::SpinHalf => 2,
        }
    }

    pub(crate) fn boson_lo(offset: u32, n_max: u32) -> u32 {
        (2 * offset).saturating_sub(n_max)
    }

    /// Physical quantum number of a stored level.
    pub fn value(&self, level: u32) -> i64 {
        match *self {
            LinkKind::Rotor { cutoff } => level as i64 - cutoff as i64,
            LinkKind::Boson { offset, n_max } => (level + Self::boson_lo(offset, n_max)) as i64,
            LinkKind::SpinHalf => level as i64,
        }
    }

    pub fn level_of(&self, value: i64) -> Option<u32> {
        let lv = match *self {
            LinkKind::Rotor { cutoff } => value + cutoff as i64,
            LinkKind::Boson { offset, n_max } => value - Self::boson_lo(offset, n_max) as i64,
            LinkKind::SpinHalf => value,
        };
        (lv >= 0 && (lv as u32) < self.levels()).then_some(lv as u32)
    }

    /// Electric field carried by a link with quantum number `value`.
    /// For spin-1/2 links this is `s^z` without the staggered sign.
    pub fn electric(&self, value: i64) -> f64 {
        match *self {
            LinkKind::Rotor { .. } => value as f64,
            LinkKind::Boson { offset, .. } => value as f64 - offset as f64,
            LinkKind::SpinHalf => value as f64 - 0.5,
        }
    }
}

/// Geometry and truncation of one lattice problem.
#[derive(Clone, Copy, Debug)]
pub struct LatticeSpec {
    pub sites: usize,
    pub boundary: Boundary,
    pub links: LinkKind,
    /// Background electric field α in units of elementary flux (E0 = θ/2π).
    pub background: f64,
}

impl LatticeSpec {
    pub fn open(sites: usize, links: LinkKind) -> Self {
        Self {
            sites,
            boundary: Boundary::Open,
            links,
            background: 0.0,
        }
    }

    pub fn periodic_spin_half(sites: usize) -> Self {
        Self {
            sites,
            boundary: Boundary::Periodic,
            links: LinkKind::SpinHalf,
            background: 0.0,
        }
    }

    pub fn with_background(mut self, alpha: f64) -> Self {
        self.background = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidLattice("need at least 2 sites".into()));
        }
        match self.links {
            LinkKind::Rotor { cutoff } => {
                if cutoff < 1 {
                    return Err(Error::InvalidLattice("rotor cutoff must be ≥ 1".into()));
                }
            }
            LinkKind::Boson { offset, n_max } => {
                if n_max < offset {
                    return Err(Error::InvalidLattice(
                        "boson truncation n_max must be ≥ offset N".into(),
                    ));
                }
            }
            LinkKind::SpinHalf => {}
        }
        if self.boundary == Boundary::Periodic && self.links != LinkKind::SpinHalf {
            return Err(Error::InvalidLattice(
                "periodic boundary is only supported for spin-1/2 links".into(),
            ));
        }
        if !matches!(self.links, LinkKind::SpinHalf) && self.sites % 2 != 0 {
            return Err(Error::InvalidLattice(
                "staggered fermions require an even number of sites".into(),
            ));
        }
        Ok(())
    }

    pub fn n_links(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.sites - 1,
            Boundary::Periodic => self.sites,
        }
    }

    /// Default rotor cutoff Λ = 1 + ⌈L/4⌉ + ⌈|α|·L⌉, a conservative cover of
    /// the largest flux deviation reachable from physical initial states.
    pub fn default_rotor_cutoff(sites: usize, alpha: f64) -> u32 {
        1 + (sites as u32).div_ceil(4) + (alpha.abs() * sites as f64).ceil() as u32
    }

    /// Default boson window half-width w = 1 + ⌈L/4⌉.
    pub fn default_boson_window(sites: usize) -> u32 {
        1 + (sites as u32).div_ceil(4)
    }
}

/// Staggered sign (−1)^i for 0-based site `s` (site 1 is odd).
#[inline]
pub fn staggered_sign(s: usize) -> f64 {
    if s % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Staggered charge of site `s` given its occupation.
#[inline]
pub fn staggered_charge(s: usize, occ: u32) -> i64 {
    occ as i64 - if s % 2 == 0 { 1 } else { 0 }
}

/// One configuration of matter and link quantum numbers.
///
/// `matter` holds occupations (0/1 for spin matter, `0..=n_max` for bosonic
/// QLM matter); `links` holds physical link quantum numbers (rotor `n`,
/// boson `n`, spin level `{0,1}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisState {
    pub matter: Vec<u32>,
    pub links: Vec<i64>,
}

impl BasisState {
    /// Gauss-generator eigenvalue at constrained site index `site`
    /// (0-based; see [`Basis::constrained_sites`]).
    pub fn gauss_eigenvalue(&self, lattice: &LatticeSpec, site: usize) -> f64 {
        let kind = lattice.links;
        match kind {
            LinkKind::SpinHalf => {
                // staggered-rotated form: G_i = n_i + s^z_{i-1,i} + s^z_{i,i+1}
                let l = lattice.sites;
                let right = match lattice.boundary {
                    Boundary::Periodic => kind.electric(self.links[site]),
                    Boundary::Open => {
                        if site == l - 1 {
                            -0.5
                        } else {
                            kind.electric(self.links[site])
                        }
                    }
                };
                let left = match lattice.boundary {
                    Boundary::Periodic => kind.electric(self.links[(site + l - 1) % l]),
                    Boundary::Open => {
                        if site == 0 {
                            -0.5
                        } else {
                            kind.electric(self.links[site - 1])
                        }
                    }
                };
                self.matter[site] as f64 + left + right
            }
            _ => {
                // G_i = Q_i − (E_{i,i+1} − E_{i-1,i}) with E fixed to 0 left of site 1
                let e_right = kind.electric(self.links[site]);
                let e_left = if site == 0 {
                    0.0
                } else {
                    kind.electric(self.links[site - 1])
                };
                staggered_charge(site, self.matter[site]) as f64 - (e_right - e_left)
            }
        }
    }
}

/// Cumulative staggered charge up to each link: the link fields fixed by
/// the open-boundary Gauss law.
pub fn telescoped_fields(matter: &[u32]) -> Vec<i64> {
    let mut acc = 0i64;
    let mut out = Vec::with_capacity(matter.len().saturating_sub(1));
    for (s, &occ) in matter.iter().enumerate().take(matter.len() - 1) {
        acc += staggered_charge(s, occ);
        out.push(acc);
    }
    out
}

#[derive(Clone, Debug)]
enum BasisKind {
    /// Physical (Gauss) sector; states stored as sorted packed keys.
    Gauge { keys: Vec<u128> },
    /// Full tensor product of matter and link ranges; indices are
    /// mixed-radix numbers, no table needed.
    Full,
}

/// An ordered basis over a lattice, either the gauge-invariant sector or
/// the full tensor space.
#[derive(Clone, Debug)]
pub struct Basis {
    pub lattice: LatticeSpec,
    pub matter_levels: u32,
    kind: BasisKind,
    dim: usize,
}

/// Alias kept for readability where only the physical sector makes sense.
pub type GaugeBasis = Basis;

impl Basis {
    /// Enumerate the gauge-invariant (Coulomb) sector of `lattice`.
    ///
    /// Open rotor/boson chains: every matter configuration uniquely fixes
    /// all link fields; a state is kept iff the fields fit the link range.
    /// Periodic spin-1/2 chains: every link configuration fixes the matter
    /// occupations through `n_i = -(s^z_{i-1,i} + s^z_{i,i+1})`; kept iff
    /// all occupations land in `{0, 1}`.
    pub fn gauge_sector(lattice: LatticeSpec) -> Result<Basis> {
        Self::gauge_sector_with_matter(lattice, 2)
    }

    /// Same as [`Self::gauge_sector`] with explicit matter truncation
    /// (bosonic QLM matter). The physical sector never exceeds single
    /// occupation, so this only changes the embedding space.
    pub fn gauge_sector_with_matter(lattice: LatticeSpec, matter_levels: u32) -> Result<Basis> {
        lattice.validate()?;
        if matter_levels < 2 {
            return Err(Error::InvalidLattice(
                "need at least two matter levels".into(),
            ));
        }
        let l = lattice.sites;
        let mut keys = Vec::new();
        match lattice.links {
            LinkKind::SpinHalf => {
                let n_links = lattice.n_links();
                check_cap(1usize << n_links)?;
                'outer: for bits in 0u64..(1u64 << n_links) {
                    let link_level = |k: usize| ((bits >> k) & 1) as i64;
                    let mut matter = vec![0u32; l];
                    for (s, m) in matter.iter_mut().enumerate() {
                        let right = match lattice.boundary {
                            Boundary::Periodic => link_level(s),
                            Boundary::Open => {
                                if s == l - 1 {
                                    0
                                } else {
                                    link_level(s)
                                }
                            }
                        };
                        let left = match lattice.boundary {
                            Boundary::Periodic => link_level((s + l - 1) % l),
                            Boundary::Open => {
                                if s == 0 {
                                    0
                                } else {
                                    link_level(s - 1)
                                }
                            }
                        };
                        // n_i = -(s^z_left + s^z_right) = 1 - level_left - level_right
                        let occ = 1 - left - right;
                        if !(0..=1).contains(&occ) {
                            continue 'outer;
                        }
                        *m = occ as u32;
                    }
                    let links: Vec<i64> = (0..n_links).map(link_level).collect();
                    keys.push(pack_key(&matter, &links, &lattice, matter_levels).unwrap());
                }
            }
            kind => {
                if l >= usize::BITS as usize - 1 {
                    return Err(cap_err(usize::MAX));
                }
                check_cap(1usize << l)?;
                for bits in 0u64..(1u64 << l) {
                    let matter: Vec<u32> = (0..l).map(|s| ((bits >> s) & 1) as u32).collect();
                    let fields = telescoped_fields(&matter);
                    let links: Option<Vec<i64>> = fields
                        .iter()
                        .map(|&e| {
                            let value = match kind {
                                LinkKind::Rotor { .. } => e,
                                LinkKind::Boson { offset, .. } => e + offset as i64,
                                LinkKind::SpinHalf => unreachable!(),
                            };
                            kind.level_of(value).map(|_| value)
                        })
                        .collect();
                    if let Some(links) = links {
                        keys.push(pack_key(&matter, &links, &lattice, matter_levels).unwrap());
                    }
                }
            }
        }
        keys.sort_unstable();
        let dim = keys.len();
        Ok(Basis {
            lattice,
            matter_levels,
            kind: BasisKind::Gauge { keys },
            dim,
        })
    }

    /// Full tensor-product basis (matter ⊗ links), used for dense gauge
    /// checks on small lattices.
    pub fn full(lattice: LatticeSpec) -> Result<Basis> {
        Self::full_with_matter(lattice, 2)
    }

    pub fn full_with_matter(lattice: LatticeSpec, matter_levels: u32) -> Result<Basis> {
        lattice.validate()?;
        let l = lattice.sites;
        let link_levels = lattice.links.levels() as usize;
        let mut dim = 1usize;
        for _ in 0..l {
            dim = dim
                .checked_mul(matter_levels as usize)
                .ok_or(cap_err(usize::MAX))?;
        }
        for _ in 0..lattice.n_links() {
            dim = dim.checked_mul(link_levels).ok_or(cap_err(usize::MAX))?;
        }
        check_cap(dim)?;
        Ok(Basis {
            lattice,
            matter_levels,
            kind: BasisKind::Full,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_gauge_sector(&self) -> bool {
        matches!(self.kind, BasisKind::Gauge { .. })
    }

    /// Number of sites carrying a Gauss constraint: `L-1` for open
    /// rotor/boson chains, all `L` sites otherwise.
    pub fn constrained_sites(&self) -> usize {
        match (self.lattice.boundary, self.lattice.links) {
            (Boundary::Open, LinkKind::SpinHalf) => self.lattice.sites,
            (Boundary::Open, _) => self.lattice.sites - 1,
            (Boundary::Periodic, _) => self.lattice.sites,
        }
    }

    pub fn state(&self, index: usize) -> BasisState {
        assert!(index < self.dim);
        match &self.kind {
            BasisKind::Gauge { keys } => unpack_key(keys[index], &self.lattice, self.matter_levels),
            BasisKind::Full => {
                let l = self.lattice.sites;
                let ml = self.matter_levels as usize;
                let link_levels = self.lattice.links.levels() as usize;
                let mut rest = index;
                let mut matter = Vec::with_capacity(l);
                for _ in 0..l {
                    matter.push((rest % ml) as u32);
                    rest /= ml;
                }
                let mut links = Vec::with_capacity(self.lattice.n_links());
                for _ in 0..self.lattice.n_links() {
                    links.push(self.lattice.links.value((rest % link_levels) as u32));
                    rest /= link_levels;
                }
                BasisState { matter, links }
            }
        }
    }

    /// Ordinal of a configuration, if it belongs to the basis.
    pub fn index_of(&self, matter: &[u32], links: &[i64]) -> Option<usize> {
        if matter.len() != self.lattice.sites
            || links.len() != self.lattice.n_links()
            || matter.iter().any(|&m| m >= self.matter_levels)
        {
            return None;
        }
        match &self.kind {
            BasisKind::Gauge { keys } => {
                let key = pack_key(matter, links, &self.lattice, self.matter_levels)?;
                keys.binary_search(&key).ok()
            }
            BasisKind::Full => {
                let ml = self.matter_levels as usize;
                let link_levels = self.lattice.links.levels() as usize;
                let mut idx = 0usize;
                for k in (0..links.len()).rev() {
                    let lv = self.lattice.links.level_of(links[k])? as usize;
                    idx = idx * link_levels + lv;
                }
                for s in (0..matter.len()).rev() {
                    idx = idx * ml + matter[s] as usize;
                }
                Some(idx)
            }
        }
    }

    pub fn index_of_state(&self, state: &BasisState) -> Option<usize> {
        self.index_of(&state.matter, &state.links)
    }

    /// Per-site Gauss eigenvalues for every basis state; the constraint
    /// operators are diagonal in any product basis.
    pub fn gauss_diagonals(&self) -> Vec<Vec<f64>> {
        let ns = self.constrained_sites();
        let mut diags = vec![vec![0.0; self.dim]; ns];
        for b in 0..self.dim {
            let st = self.state(b);
            for (site, d) in diags.iter_mut().enumerate() {
                d[b] = st.gauss_eigenvalue(&self.lattice, site);
            }
        }
        diags
    }
}

fn cap_err(requested: usize) -> Error {
    Error::CapacityExceeded {
        requested,
        cap: DIMENSION_CAP,
    }
}

fn check_cap(requested: usize) -> Result<()> {
    if requested > DIMENSION_CAP {
        Err(cap_err(requested))
    } else {
        Ok(())
    }
}

fn pack_key(
    matter: &[u32],
    links: &[i64],
    lattice: &LatticeSpec,
    matter_levels: u32,
) -> Option<u128> {
    let mut key = 0u128;
    for k in (0..links.len()).rev() {
        let lv = lattice.links.level_of(links[k])?;
        key = key * lattice.links.levels() as u128 + lv as u128;
    }
    for s in (0..matter.len()).rev() {
        key = key * matter_levels as u128 + matter[s] as u128;
    }
    Some(key)
}

fn unpack_key(key: u128, lattice: &LatticeSpec, matter_levels: u32) -> BasisState {
    let mut rest = key;
    let l = lattice.sites;
    let mut matter = Vec::with_capacity(l);
    for _ in 0..l {
        matter.push((rest % matter_levels as u128) as u32);
        rest /= matter_levels as u128;
    }
    let levels = lattice.links.levels() as u128;
    let mut links = Vec::with_capacity(lattice.n_links());
    for _ in 0..lattice.n_links() {
        links.push(lattice.links.value((rest % levels) as u32));
        rest /= levels;
    }
    BasisState { matter, links }
}

/// ‖G_i ψ‖² for each constrained site; all zeros iff ψ lies in the
/// Coulomb sector. The generators are diagonal in the product basis, so
/// this works on full and gauge bases alike.
pub fn gauss_violation(psi: &[C64], basis: &Basis) -> Result<Vec<f64>> {
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: psi.len(),
        });
    }
    let ns = basis.constrained_sites();
    let mut out = vec![0.0; ns];
    for (b, amp) in psi.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let st = basis.state(b);
        for (site, o) in out.iter_mut().enumerate() {
            let g = st.gauss_eigenvalue(&basis.lattice, site);
            *o += w * g * g;
        }
    }
    Ok(out)
}

/// Which gauge theory a long-range spin model was eliminated from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElimKind {
    Qed,
    Hobm,
}

/// Hopping amplitude rule of the eliminated model.
#[derive(Clone, Copy, Debug)]
pub enum HopModifier {
    /// Unit amplitude, optionally clipped at |E| > Λ.
    Qed { cutoff: Option<u32> },
    /// a†/√N matrix elements around occupation offset N, clipped where the
    /// implied boson number leaves [0, n_max].
    Hobm { offset: u32, n_max: Option<u32> },
}

impl HopModifier {
    /// Amplitude multiplying −J for the hop that raises the link field
    /// `e_before → e_before + 1`. Zero when the move is clipped.
    pub fn raise_amplitude(&self, e_before: i64) -> f64 {
        match *self {
            HopModifier::Qed { cutoff } => match cutoff {
                Some(lam) if (e_before + 1).unsigned_abs() > lam as u64 => 0.0,
                _ => 1.0,
            },
            HopModifier::Hobm { offset, n_max } => {
                let n_before = offset as i64 + e_before;
                let n_after = n_before + 1;
                if n_before < 0 {
                    return 0.0;
                }
                if let Some(nm) = n_max {
                    if n_after > nm as i64 {
                        return 0.0;
                    }
                }
                (n_after as f64 / offset as f64).sqrt()
            }
        }
    }
}

/// Pure-matter long-range model obtained by integrating out the gauge
/// field on an open chain. Diagonal part:
///
/// `V [ Σ_{j≤k} T2[j][k] n_j n_k + Σ_j T1[j] n_j + C ] + Σ_j M[j] n_j`
///
/// over occupations `n_j ∈ {0,1}`, plus hopping `−J · modifier` between
/// neighboring sites.
#[derive(Clone, Debug)]
pub struct SpinModelSpec {
    pub sites: usize,
    pub coupling_j: f64,
    pub electric_v: f64,
    pub background: f64,
    /// Upper-triangular table (j ≤ k): coefficient of n_j n_k inside the
    /// electric sum Σ_i (E_i + α)².
    pub two_body: Vec<Vec<f64>>,
    /// Coefficient of n_j inside the electric sum.
    pub one_body: Vec<f64>,
    /// Configuration-independent part of the electric sum.
    pub constant: f64,
    /// Mass-term coefficient of n_j, i.e. µ(−1)^i per occupation (the
    /// spin-language constant −(µ/2)Σ(−1)^i vanishes for even L).
    pub mass_one_body: Vec<f64>,
    pub modifier: HopModifier,
}

/// Eliminate the gauge field of an open-boundary QED/HOBM chain,
/// producing an equivalent long-range spin model of dimension 2^L.
pub fn eliminate_gauge_field(
    lattice: &LatticeSpec,
    kind: ElimKind,
    params: &ModelParams,
) -> Result<SpinModelSpec> {
    lattice.validate()?;
    if lattice.boundary == Boundary::Periodic {
        return Err(Error::BasisMismatch(
            "gauge elimination needs open boundary".into(),
        ));
    }
    let modifier = match (kind, lattice.links) {
        (ElimKind::Qed, LinkKind::Rotor { cutoff }) => HopModifier::Qed {
            cutoff: Some(cutoff),
        },
        (ElimKind::Hobm, LinkKind::Boson { offset, n_max }) => HopModifier::Hobm {
            offset,
            n_max: Some(n_max),
        },
        (_, LinkKind::SpinHalf) => {
            return Err(Error::BasisMismatch(
                "spin-1/2 links are not subject to rotor/boson elimination".into(),
            ))
        }
        _ => {
            return Err(Error::BasisMismatch(
                "model kind does not match the lattice link kind".into(),
            ))
        }
    };
    Ok(spin_model_with_modifier(lattice.sites, params, modifier))
}

/// Eliminated model with an explicit modifier; `HopModifier::Qed { cutoff:
/// None }` gives the exact (uncut) QED model used by the scaling scans.
pub fn spin_model_with_modifier(
    sites: usize,
    params: &ModelParams,
    modifier: HopModifier,
) -> SpinModelSpec {
    let l = sites;
    let alpha = params.background;
    let mut two_body = vec![vec![0.0; l]; l];
    let mut one_body = vec![0.0; l];
    let mut constant = 0.0;
    // Σ_{k=0}^{L-2} (E_k + α)², E_k = Σ_{j≤k} Q_j, Q_j = n_j − [j even]
    for j in 0..l - 1 {
        for k in j..l - 1 {
            // n_j n_k appears in every (E_i)² with link i ≥ max(j,k)
            let count = (l - 1 - k) as f64;
            two_body[j][k] += if j == k { count } else { 2.0 * count };
        }
    }
    for k in 0..l - 1 {
        let odd_count = (k / 2 + 1) as f64; // # odd sites (even 0-based) ≤ k
        let shift = alpha - odd_count;
        for j in 0..=k {
            one_body[j] += 2.0 * shift;
        }
        constant += shift * shift;
    }
    let mass_one_body: Vec<f64> = (0..l)
        .map(|s| params.mass_mu * staggered_sign(s))
        .collect();
    SpinModelSpec {
        sites,
        coupling_j: params.coupling_j,
        electric_v: params.electric_v,
        background: alpha,
        two_body,
        one_body,
        constant,
        mass_one_body,
        modifier,
    }
}

impl SpinModelSpec {
    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    #[inline]
    fn occ(config: usize, s: usize) -> i64 {
        ((config >> s) & 1) as i64
    }

    /// Diagonal energy of a matter configuration, from the tables.
    pub fn diagonal_energy(&self, config: usize) -> f64 {
        let l = self.sites;
        let mut electric = self.constant;
        for j in 0..l {
            if Self::occ(config, j) == 0 {
                continue;
            }
            electric += self.one_body[j];
            for k in j..l {
                if Self::occ(config, k) == 1 {
                    electric += self.two_body[j][k];
                }
            }
        }
        let mut mass = 0.0;
        for (s, m) in self.mass_one_body.iter().enumerate() {
            mass += m * Self::occ(config, s) as f64;
        }
        self.electric_v * electric + mass
    }

    /// Link field on link `k` implied by a matter configuration.
    pub fn link_field(&self, config: usize, link: usize) -> i64 {
        let mut acc = 0i64;
        for s in 0..=link {
            acc += staggered_charge(s, Self::occ(config, s) as u32);
        }
        acc
    }

    /// Space-averaged electric field (without background) per config.
    pub fn electric_diagonal(&self) -> Vec<f64> {
        let l = self.sites;
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for (config, o) in out.iter_mut().enumerate() {
            let mut acc = 0i64;
            let mut sum = 0i64;
            for s in 0..l - 1 {
                acc += staggered_charge(s, Self::occ(config, s) as u32);
                sum += acc;
            }
            *o = sum as f64 / (l - 1) as f64;
        }
        out
    }

    /// Materialize as a sparse operator on the 2^L matter space.
    pub fn to_sparse(&self) -> crate::sparse::SparseOperator {
        let dim = self.dim();
        let l = self.sites;
        let mut b = crate::sparse::SparseBuilder::new(dim);
        for config in 0..dim {
            b.add(config, config, C64::new(self.diagonal_energy(config), 0.0));
            // hop: occupation (0 at s, 1 at s+1) → (1, 0), link s raised
            for s in 0..l - 1 {
                if Self::occ(config, s) == 0 && Self::occ(config, s + 1) == 1 {
                    let e_before = self.link_field(config, s);
                    let amp = self.modifier.raise_amplitude(e_before);
                    if amp != 0.0 {
                        let target = config ^ (1 << s) ^ (1 << (s + 1));
                        b.add_hermitian_pair(target, config, C64::new(-self.coupling_j * amp, 0.0));
                    }
                }
            }
        }
        b.build()
    }
}
