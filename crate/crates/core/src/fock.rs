//! Fixed-particle-number fermionic states.
//!
//! A sector `Λ^N(H_d)` is spanned by occupation bitstrings of length `d` with
//! exactly `N` set bits. Mode `0` is the leftmost character of the bitstring
//! (`|100000⟩` occupies mode 0). Basis states are ordered lexicographically
//! with "occupied" sorting before "empty", so for `d = 2, N = 1` the order is
//! `|10⟩, |01⟩`.
//!
//! Basis vectors are `|n_0 … n_{d-1}⟩ = (a_0†)^{n_0} ⋯ (a_{d-1}†)^{n_{d-1}} |0⟩`,
//! hence `a_m†` and `a_m` carry the sign `(-1)^k` where `k` counts the occupied
//! modes with index strictly below `m`.
//!
//! Internally a basis state is a `u32` with mode `m` stored at bit `d - 1 - m`,
//! which makes the canonical order the descending integer order.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, hermiticity_defect, C64};

/// Largest supported mode count.
pub const MAX_MODES: usize = 24;

/// Construction tolerance for state and 1-RDM invariants.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Hermiticity tolerance accepted by [`natural_occupations`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// One occupation pattern of `d` modes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    bits: u32,
    d: usize,
}

impl BasisState {
    pub fn from_bits(bits: u32, d: usize) -> Result<Self> {
        if d == 0 || d > MAX_MODES {
            return Err(Error::InvalidDimension(format!("d = {d} outside 1..={MAX_MODES}")));
        }
        if bits >> d != 0 {
            return Err(Error::InvalidDimension(format!("bits {bits:#b} exceed {d} modes")));
        }
        Ok(Self { bits, d })
    }

    /// Parses a string such as `"101010"`; mode 0 is the leftmost character.
    pub fn parse(s: &str) -> Result<Self> {
        let d = s.chars().count();
        let mut bits = 0u32;
        for (m, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << (d - 1 - m),
                '0' => {}
                _ => return Err(Error::InvalidInput(format!("bad occupation string `{s}`"))),
            }
        }
        Self::from_bits(bits, d)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modes(&self) -> usize {
        self.d
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        occupied(self.bits, self.d, mode)
    }

    /// Occupations as a vector of 0/1, mode 0 first.
    pub fn occupations(&self) -> Vec<u8> {
        (0..self.d).map(|m| self.is_occupied(m) as u8).collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for m in 0..self.d {
            write!(f, "{}", if self.is_occupied(m) { '1' } else { '0' })?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Debug for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[inline]
pub(crate) fn mode_bit(d: usize, mode: usize) -> u32 {
    1 << (d - 1 - mode)
}

#[inline]
pub(crate) fn occupied(bits: u32, d: usize, mode: usize) -> bool {
    bits & mode_bit(d, mode) != 0
}

/// `(-1)^(number of occupied modes with index < mode)`.
#[inline]
pub(crate) fn string_sign(bits: u32, d: usize, mode: usize) -> f64 {
    // modes 0..mode live in bit positions d-1 down to d-mode
    let above = (bits as u64) >> (d - mode);
    if above.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a_mode† |bits⟩ = sign |result⟩`, or `None` when the mode is occupied.
#[inline]
pub(crate) fn create(bits: u32, d: usize, mode: usize) -> Option<(u32, f64)> {
    if occupied(bits, d, mode) {
        None
    } else {
        Some((bits | mode_bit(d, mode), string_sign(bits, d, mode)))
    }
}

/// `a_mode |bits⟩ = sign |result⟩`, or `None` when the mode is empty.
#[inline]
pub(crate) fn annihilate(bits: u32, d: usize, mode: usize) -> Option<(u32, f64)> {
    if occupied(bits, d, mode) {
        Some((bits & !mode_bit(d, mode), string_sign(bits, d, mode)))
    } else {
        None
    }
}

/// `a_to† a_from |bits⟩ = sign |result⟩`.
#[inline]
pub(crate) fn hop(bits: u32, d: usize, from: usize, to: usize) -> Option<(u32, f64)> {
    let (mid, s1) = annihilate(bits, d, from)?;
    let (out, s2) = create(mid, d, to)?;
    Some((out, s1 * s2))
}

/// Canonically ordered basis of `Λ^N(H_d)`.
#[derive(Debug, PartialEq, Eq)]
pub struct Sector {
    d: usize,
    n: usize,
    states: Vec<u32>,
}

impl Sector {
    pub fn new(d: usize, n: usize) -> Result<Arc<Self>> {
        if d == 0 || d > MAX_MODES {
            return Err(Error::InvalidDimension(format!("d = {d} outside 1..={MAX_MODES}")));
        }
        if n > d {
            return Err(Error::InvalidDimension(format!("N = {n} exceeds d = {d}")));
        }
        let mut states = Vec::with_capacity(binomial(d, n));
        if n == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks same-weight words in ascending order
            let mut v: u64 = (1u64 << n) - 1;
            let limit = 1u64 << d;
            while v < limit {
                states.push(v as u32);
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        states.reverse();
        Ok(Arc::new(Self { d, n, states }))
    }

    pub fn modes(&self) -> usize {
        self.d
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn basis_state(&self, index: usize) -> BasisState {
        BasisState { bits: self.states[index], d: self.d }
    }

    pub fn index_of(&self, bits: u32) -> Option<usize> {
        self.states.binary_search_by(|s| bits.cmp(s)).ok()
    }

    pub fn same_as(&self, other: &Sector) -> bool {
        self.d == other.d && self.n == other.n
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Ordered basis of `Λ^N(H_d)`.
pub fn sector_basis(d: usize, n: usize) -> Result<Vec<BasisState>> {
    let sector = Sector::new(d, n)?;
    Ok((0..sector.dim()).map(|k| sector.basis_state(k)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Creation,
    Annihilation,
}

/// Amplitude vector over a sector basis. Not necessarily normalized.
#[derive(Clone, Debug)]
pub struct PureState {
    sector: Arc<Sector>,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(sector: Arc<Sector>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                sector.dim()
            )));
        }
        Ok(Self { sector, amplitudes })
    }

    pub fn zero(sector: Arc<Sector>) -> Self {
        let dim = sector.dim();
        Self { sector, amplitudes: DVector::zeros(dim) }
    }

    /// A single occupation-basis vector.
    pub fn basis(occupation: &str) -> Result<Self> {
        Self::from_terms(&[(occupation, C64::new(1.0, 0.0))])
    }

    /// Normalized superposition of occupation strings, e.g.
    /// `[("101010", 1.0), ("010101", 1.0)]`.
    pub fn from_terms(terms: &[(&str, C64)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty term list".into()))?;
        let b0 = BasisState::parse(first.0)?;
        let sector = Sector::new(b0.modes(), b0.weight())?;
        let mut state = Self::zero(sector);
        for (occ, amp) in terms {
            let b = BasisState::parse(occ)?;
            let idx = state.index_checked(b)?;
            state.amplitudes[idx] += *amp;
        }
        state.normalized()
    }

    /// Same as [`PureState::from_terms`] with real coefficients.
    pub fn from_real_terms(terms: &[(&str, f64)]) -> Result<Self> {
        let complex: Vec<(&str, C64)> = terms.iter().map(|&(s, a)| (s, C64::new(a, 0.0))).collect();
        Self::from_terms(&complex)
    }

    fn index_checked(&self, b: BasisState) -> Result<usize> {
        if b.modes() != self.sector.modes() {
            return Err(Error::SectorMismatch(format!("{b} has {} modes", b.modes())));
        }
        self.sector
            .index_of(b.bits())
            .ok_or_else(|| Error::SectorMismatch(format!("{b} not in N = {}", self.sector.particles())))
    }

    pub fn sector(&self) -> &Arc<Sector> {
        &self.sector
    }

    pub fn modes(&self) -> usize {
        self.sector.modes()
    }

    pub fn particles(&self) -> usize {
        self.sector.particles()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    /// Amplitude of an occupation string, zero if it is not in the sector.
    pub fn amplitude(&self, occupation: &str) -> Result<C64> {
        let b = BasisState::parse(occupation)?;
        Ok(self.index_checked(b).map(|i| self.amplitudes[i]).unwrap_or_default())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > CONSTRUCTION_TOL) {
            return Err(Error::DegenerateInput("state has zero norm".into()));
        }
        self.amplitudes.unscale_mut(norm);
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.check_same_sector(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|²` for normalized states; insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr() / (self.norm().powi(2) * other.norm().powi(2)))
    }

    pub(crate) fn check_same_sector(&self, other: &PureState) -> Result<()> {
        if self.sector.same_as(&other.sector) {
            Ok(())
        } else {
            Err(Error::SectorMismatch(format!(
                "(d={}, N={}) vs (d={}, N={})",
                self.modes(),
                self.particles(),
                other.modes(),
                other.particles()
            )))
        }
    }

    /// Applies `a_mode†` or `a_mode`; the result lives in the sector `N ± 1`
    /// and is the zero vector when the mode is already full (empty).
    pub fn apply_ladder(&self, mode: usize, kind: Ladder) -> Result<PureState> {
        let d = self.modes();
        if mode >= d {
            return Err(Error::InvalidDimension(format!("mode {mode} out of range for d = {d}")));
        }
        let n = self.particles();
        let target_n = match kind {
            Ladder::Creation if n < d => n + 1,
            Ladder::Annihilation if n > 0 => n - 1,
            _ => {
                return Err(Error::InvalidDimension(format!(
                    "no target sector for {kind:?} on N = {n}, d = {d}"
                )))
            }
        };
        let target = Sector::new(d, target_n)?;
        let mut out = PureState::zero(target.clone());
        for (k, &bits) in self.sector.states().iter().enumerate() {
            let amp = self.amplitudes[k];
            if amp == C64::default() {
                continue;
            }
            let moved = match kind {
                Ladder::Creation => create(bits, d, mode),
                Ladder::Annihilation => annihilate(bits, d, mode),
            };
            if let Some((new_bits, sign)) = moved {
                let idx = target.index_of(new_bits).expect("ladder result stays in target sector");
                out.amplitudes[idx] += amp * sign;
            }
        }
        Ok(out)
    }

    /// Applies `Σ_m v_m a_m†`.
    pub fn apply_creation_combination(&self, coefficients: &[C64]) -> Result<PureState> {
        if coefficients.len() != self.modes() {
            return Err(Error::InvalidDimension(format!(
                "{} coefficients for d = {}",
                coefficients.len(),
                self.modes()
            )));
        }
        let mut acc: Option<PureState> = None;
        for (m, &v) in coefficients.iter().enumerate() {
            if v == C64::default() {
                continue;
            }
            let mut term = self.apply_ladder(m, Ladder::Creation)?;
            term.amplitudes *= v;
            match acc.as_mut() {
                Some(a) => a.amplitudes += &term.amplitudes,
                None => acc = Some(term),
            }
        }
        match acc {
            Some(a) => Ok(a),
            None => Ok(PureState::zero(Sector::new(self.modes(), self.particles() + 1)?)),
        }
    }

    /// Density matrix `|ψ⟩⟨ψ|` of the normalized state.
    pub fn density_matrix(&self) -> DMatrix<C64> {
        let v = &self.amplitudes / C64::new(self.norm(), 0.0);
        &v * v.adjoint()
    }
}

/// Hermitian `d × d` one-body reduced density matrix `γ_ij = ⟨a_j† a_i⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneRdm {
    matrix: DMatrix<C64>,
}

impl OneRdm {
    /// Wraps a square matrix. Invariants are checked by [`OneRdm::validate`],
    /// since perturbed and estimated matrices legitimately violate them.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidRdm(format!(
                "expected a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    /// Checks Hermiticity, trace `n` and spectrum inside `[0, 1]`.
    pub fn validate(&self, n: usize, tol: f64) -> Result<()> {
        let defect = hermiticity_defect(&self.matrix);
        if defect > tol {
            return Err(Error::InvalidRdm(format!("hermiticity defect {defect:e}")));
        }
        let trace = self.matrix.trace();
        if (trace.re - n as f64).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidRdm(format!("trace {trace} != {n}")));
        }
        let (occ, _) = natural_occupations(self)?;
        if occ.first() > 1.0 + tol || occ.last() < -tol {
            return Err(Error::InvalidRdm(format!("spectrum {occ:?} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Natural occupation numbers: a descending-sorted spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationVector(Vec<f64>);

impl OccupationVector {
    /// Sorts the values in descending order.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self(values)
    }

    /// Accepts already sorted values; fails otherwise.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("{values:?} is not sorted descending")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Largest entrywise distance to another vector of equal length.
    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for OccupationVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// 1-RDM of a density matrix over a sector, `γ_ij = Tr(ρ a_j† a_i)`.
pub(crate) fn one_rdm_of_density(sector: &Sector, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = sector.modes();
    let mut gamma = DMatrix::zeros(d, d);
    for (s, &bits) in sector.states().iter().enumerate() {
        for i in 0..d {
            if !occupied(bits, d, i) {
                continue;
            }
            for j in 0..d {
                if let Some((t_bits, sign)) = hop(bits, d, i, j) {
                    let t = sector.index_of(t_bits).expect("hop stays in sector");
                    gamma[(i, j)] += rho[(s, t)] * sign;
                }
            }
        }
    }
    gamma
}

/// `γ_ij = ⟨ψ|a_j† a_i|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn one_rdm(state: &PureState) -> Result<OneRdm> {
    let norm2 = state.norm().powi(2);
    if !(norm2 > CONSTRUCTION_TOL * CONSTRUCTION_TOL) {
        return Err(Error::DegenerateInput("1-RDM of a zero-norm state".into()));
    }
    let sector = state.sector();
    let d = sector.modes();
    let amps = state.amplitudes();
    let mut gamma = DMatrix::<C64>::zeros(d, d);
    for (s, &bits) in sector.states().iter().enumerate() {
        let cs = amps[s];
        if cs == C64::default() {
            continue;
        }
        for i in 0..d {
            if !occupied(bits, d, i) {
                continue;
            }
            for j in 0..d {
                if let Some((t_bits, sign)) = hop(bits, d, i, j) {
                    let t = sector.index_of(t_bits).expect("hop stays in sector");
                    gamma[(i, j)] += amps[t].conj() * cs * sign;
                }
            }
        }
    }
    gamma.unscale_mut(norm2);
    OneRdm::from_matrix(gamma)
}

/// Spectrum of the 1-RDM, descending, and a unitary `U` with
/// `U γ U† = diag(λ)`.
pub fn natural_occupations(rdm: &OneRdm) -> Result<(OccupationVector, DMatrix<C64>)> {
    let defect = hermiticity_defect(rdm.matrix());
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidRdm(format!("not Hermitian (defect {defect:e})")));
    }
    let (values, vectors) = eigh_desc(rdm.matrix());
    Ok((OccupationVector(values), vectors.adjoint()))
}

/// Shorthand for the spectrum of a state's 1-RDM.
pub fn occupations_of(state: &PureState) -> Result<OccupationVector> {
    Ok(natural_occupations(&one_rdm(state)?)?.0)
}

/// Normalized state with independent standard complex Gaussian amplitudes.
pub fn random_pure_state(d: usize, n: usize, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_state_with(d, n, &mut rng)
}

pub fn random_pure_state_with<R: rand::Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<PureState> {
    let sector = Sector::new(d, n)?;
    let dim = sector.dim();
    let amplitudes = DVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        }),
    );
    PureState::new(sector, amplitudes)?.normalized()
}

/// Wedges `psi_m` with single-particle states: returns the normalized
/// `b_1† ⋯ b_k† |psi_m⟩` with `b_l† = Σ_i vectors[l][i] a_i†`.
pub fn wedge_embed(psi_m: &PureState, vectors: &[Vec<C64>]) -> Result<PureState> {
    let mut state = psi_m.clone();
    for v in vectors.iter().rev() {
        state = state.apply_creation_combination(v)?;
    }
    state.normalized().map_err(|_| Error::ZeroState)
}

#[derive(Serialize, Deserialize)]
struct PureStateJson {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    basis_order: String,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PureStateJson {
            d: self.modes(),
            n: self.particles(),
            basis_order: "lex".into(),
            amplitudes: self.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PureStateJson::deserialize(deserializer)?;
        if raw.basis_order != "lex" {
            return Err(D::Error::custom(format!("unsupported basis order `{}`", raw.basis_order)));
        }
        let sector = Sector::new(raw.d, raw.n).map_err(D::Error::custom)?;
        let amps = DVector::from_iterator(raw.amplitudes.len(), raw.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)));
        PureState::new(sector, amps).map_err(D::Error::custom)
    }
}
