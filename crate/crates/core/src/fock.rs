//! Truncated multi-mode Fock bases tensored with dopant level spaces, and
//! the elementary operators that act on them.
//!
//! A [`HybridBasis`] holds every photon occupation vector whose total is at
//! most `n_max_total`, combined with every tuple of dopant levels. States are
//! ordered by total photon number, then occupation vector, then dopant tuple,
//! so each excitation layer forms a contiguous block.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{OperatorMatrix, Symmetry};

/// Default hard cap on the number of basis states.
pub const DEFAULT_MAX_DIMENSION: usize = 1_000_000;

/// Photon modes and the global photon-number cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeSet {
    mode_count: usize,
    n_max_total: usize,
}

impl ModeSet {
    pub fn new(mode_count: usize, n_max_total: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::InvalidParameter("mode_count must be at least 1".into()));
        }
        Ok(Self { mode_count, n_max_total })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn n_max_total(&self) -> usize {
        self.n_max_total
    }
}

/// Electronic level of a dopant. Declaration order is the cascade order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G,
    H,
    E,
}

impl Level {
    pub fn label(self) -> char {
        match self {
            Level::G => 'g',
            Level::H => 'h',
            Level::E => 'e',
        }
    }

    pub fn from_label(c: char) -> Option<Self> {
        match c {
            'g' => Some(Level::G),
            'h' => Some(Level::H),
            'e' => Some(Level::E),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Ordered set of levels carried by one dopant (two or three of g, h, e).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DopantLevelSet {
    levels: Vec<Level>,
}

impl DopantLevelSet {
    pub fn new(labels: &[Level]) -> Result<Self> {
        let mut levels = labels.to_vec();
        levels.sort();
        levels.dedup();
        if levels.len() != labels.len() {
            return Err(Error::InvalidParameter("dopant level labels must be unique".into()));
        }
        if !(2..=3).contains(&levels.len()) {
            return Err(Error::InvalidParameter(format!(
                "a dopant carries 2 or 3 levels, got {}",
                levels.len()
            )));
        }
        Ok(Self { levels })
    }

    /// Cascade g–h–e.
    pub fn cascade() -> Self {
        Self { levels: vec![Level::G, Level::H, Level::E] }
    }

    /// Two-level g–e.
    pub fn two_level() -> Self {
        Self { levels: vec![Level::G, Level::E] }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, level: Level) -> bool {
        self.levels.contains(&level)
    }

    pub fn is_cascade(&self) -> bool {
        self.levels.len() == 3
    }

    /// Number of excitation quanta stored in `level`: its position in the set.
    pub fn quanta(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }
}

/// One basis state: photon occupations plus one level per dopant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub occupation: Vec<usize>,
    pub levels: Vec<Level>,
}

impl BasisState {
    pub fn new(occupation: Vec<usize>, levels: Vec<Level>) -> Self {
        Self { occupation, levels }
    }

    pub fn photons(&self) -> usize {
        self.occupation.iter().sum()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for l in &self.levels {
            write!(f, "{l}")?;
        }
        if !self.levels.is_empty() {
            write!(f, ";")?;
        }
        for n in &self.occupation {
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

/// Enumeration options for [`enumerate_basis_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisOptions {
    pub max_dimension: usize,
    /// Also cap photons plus dopant quanta (h = 1, e = 2 on a cascade) at
    /// `n_max_total`.
    pub excitation_cap: bool,
}

impl Default for BasisOptions {
    fn default() -> Self {
        Self { max_dimension: DEFAULT_MAX_DIMENSION, excitation_cap: false }
    }
}

/// Enumerated tensor basis of photon occupations and dopant levels.
#[derive(Debug)]
pub struct HybridBasis {
    modes: ModeSet,
    dopants: Vec<DopantLevelSet>,
    options: BasisOptions,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl PartialEq for HybridBasis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.dopants == other.dopants && self.options == other.options
    }
}

/// Builds the complete basis with default options.
pub fn enumerate_basis(modes: ModeSet, dopants: &[DopantLevelSet]) -> Result<Arc<HybridBasis>> {
    enumerate_basis_with(modes, dopants, BasisOptions::default())
}

pub fn enumerate_basis_with(
    modes: ModeSet,
    dopants: &[DopantLevelSet],
    options: BasisOptions,
) -> Result<Arc<HybridBasis>> {
    let occupation_count = binomial(modes.n_max_total + modes.mode_count, modes.mode_count);
    let requested = dopants
        .iter()
        .fold(occupation_count, |acc, d| acc.and_then(|a| a.checked_mul(d.len() as u128)));
    match requested {
        Some(r) if r <= options.max_dimension as u128 => {}
        Some(r) => return Err(Error::Capacity { requested: r, cap: options.max_dimension }),
        None => return Err(Error::Capacity { requested: u128::MAX, cap: options.max_dimension }),
    }

    let tuples = level_tuples(dopants);
    let mut states = Vec::new();
    for total in 0..=modes.n_max_total {
        for occupation in compositions(total, modes.mode_count) {
            for levels in &tuples {
                if options.excitation_cap {
                    let quanta: usize = dopants
                        .iter()
                        .zip(levels)
                        .map(|(d, &l)| d.quanta(l).unwrap_or(0))
                        .sum();
                    if total + quanta > modes.n_max_total {
                        continue;
                    }
                }
                states.push(BasisState::new(occupation.clone(), levels.clone()));
            }
        }
    }
    let index = states.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
    Ok(Arc::new(HybridBasis { modes, dopants: dopants.to_vec(), options, states, index }))
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// All occupation vectors of `parts` modes summing to `total`, ascending
/// lexicographically.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn level_tuples(dopants: &[DopantLevelSet]) -> Vec<Vec<Level>> {
    let mut tuples = vec![Vec::new()];
    for d in dopants {
        tuples = tuples
            .into_iter()
            .flat_map(|prefix| {
                d.levels().iter().map(move |&l| {
                    let mut t = prefix.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    tuples
}

impl HybridBasis {
    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.mode_count
    }

    pub fn n_max_total(&self) -> usize {
        self.modes.n_max_total
    }

    pub fn dopants(&self) -> &[DopantLevelSet] {
        &self.dopants
    }

    pub fn options(&self) -> BasisOptions {
        self.options
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &BasisState {
        &self.states[k]
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Index of the state with the given occupations and dopant levels.
    pub fn find(&self, occupation: &[usize], levels: &[Level]) -> Option<usize> {
        self.index_of(&BasisState::new(occupation.to_vec(), levels.to_vec()))
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes.mode_count {
            return Err(Error::InvalidMode { index: mode, count: self.modes.mode_count });
        }
        Ok(())
    }

    pub(crate) fn check_dopant(&self, dopant: usize) -> Result<&DopantLevelSet> {
        self.dopants
            .get(dopant)
            .ok_or(Error::InvalidDopant { index: dopant, count: self.dopants.len() })
    }

    /// Photons plus dopant quanta of state `k`.
    pub fn excitations(&self, k: usize) -> usize {
        let s = &self.states[k];
        s.photons()
            + self
                .dopants
                .iter()
                .zip(&s.levels)
                .map(|(d, &l)| d.quanta(l).unwrap_or(0))
                .sum::<usize>()
    }
}

/// Complex amplitudes over a [`HybridBasis`].
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<HybridBasis>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(basis: &Arc<HybridBasis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        Ok(Self { basis: Arc::clone(basis), amplitudes })
    }

    pub fn zeros(basis: &Arc<HybridBasis>) -> Self {
        Self { basis: Arc::clone(basis), amplitudes: vec![C64::new(0.0, 0.0); basis.dimension()] }
    }

    pub fn basis_state(basis: &Arc<HybridBasis>, index: usize) -> Self {
        let mut psi = Self::zeros(basis);
        psi.amplitudes[index] = C64::new(1.0, 0.0);
        psi
    }

    /// Basis vector for the given occupations and levels.
    pub fn from_labels(basis: &Arc<HybridBasis>, occupation: &[usize], levels: &[Level]) -> Result<Self> {
        let k = basis.find(occupation, levels).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} is not in the basis",
                BasisState::new(occupation.to_vec(), levels.to_vec())
            ))
        })?;
        Ok(Self::basis_state(basis, k))
    }

    pub fn basis(&self) -> &Arc<HybridBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[usize], levels: &[Level]) -> C64 {
        self.basis
            .find(occupation, levels)
            .map_or(C64::new(0.0, 0.0), |k| self.amplitudes[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_basis(&self.basis, &other.basis)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        same_basis(&self.basis, &other.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Population in states with exactly `n_max_total` photons.
    pub fn top_layer_population(&self) -> f64 {
        let top = self.basis.n_max_total();
        self.basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .filter(|(s, _)| s.photons() == top)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

pub(crate) fn same_basis(a: &Arc<HybridBasis>, b: &Arc<HybridBasis>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

/// Photon annihilation operator on `mode`; identity on dopants.
///
/// The creation operator is its adjoint within the truncated space.
pub fn annihilation_op(basis: &Arc<HybridBasis>, mode: usize) -> Result<OperatorMatrix> {
    basis.check_mode(mode)?;
    let mut triplets = Vec::new();
    for (k, s) in basis.states().iter().enumerate() {
        let n = s.occupation[mode];
        if n == 0 {
            continue;
        }
        let mut target = s.clone();
        target.occupation[mode] -= 1;
        if let Some(j) = basis.index_of(&target) {
            triplets.push((j, k, C64::new((n as f64).sqrt(), 0.0)));
        }
    }
    Ok(OperatorMatrix::from_triplets(basis, triplets, Symmetry::General))
}

pub fn creation_op(basis: &Arc<HybridBasis>, mode: usize) -> Result<OperatorMatrix> {
    Ok(annihilation_op(basis, mode)?.adjoint())
}

/// Diagonal occupation-number operator a†a on `mode`.
pub fn number_op(basis: &Arc<HybridBasis>, mode: usize) -> Result<OperatorMatrix> {
    basis.check_mode(mode)?;
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.occupation[mode] > 0)
        .map(|(k, s)| (k, k, C64::new(s.occupation[mode] as f64, 0.0)))
        .collect();
    Ok(OperatorMatrix::from_triplets(basis, triplets, Symmetry::Hermitian))
}

/// Σ over modes of a†a.
pub fn total_photon_op(basis: &Arc<HybridBasis>) -> OperatorMatrix {
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| (k, k, C64::new(s.photons() as f64, 0.0)))
        .collect();
    OperatorMatrix::from_triplets(basis, triplets, Symmetry::Hermitian)
}

/// Photons plus dopant quanta (h = 1, e = 2 on a cascade dopant).
pub fn total_excitation_op(basis: &Arc<HybridBasis>) -> OperatorMatrix {
    let triplets = (0..basis.dimension())
        .map(|k| (k, k, C64::new(basis.excitations(k) as f64, 0.0)))
        .collect();
    OperatorMatrix::from_triplets(basis, triplets, Symmetry::Hermitian)
}

/// σᵢⱼ = |i⟩⟨j| on one dopant, identity elsewhere.
pub fn dopant_transition_op(
    basis: &Arc<HybridBasis>,
    dopant: usize,
    i: Level,
    j: Level,
) -> Result<OperatorMatrix> {
    let set = basis.check_dopant(dopant)?;
    for level in [i, j] {
        if !set.contains(level) {
            return Err(Error::UnknownLevel { dopant, level: level.label() });
        }
    }
    let mut triplets = Vec::new();
    for (k, s) in basis.states().iter().enumerate() {
        if s.levels[dopant] != j {
            continue;
        }
        let mut target = s.clone();
        target.levels[dopant] = i;
        if let Some(r) = basis.index_of(&target) {
            triplets.push((r, k, C64::new(1.0, 0.0)));
        }
    }
    let symmetry = if i == j { Symmetry::Hermitian } else { Symmetry::General };
    Ok(OperatorMatrix::from_triplets(basis, triplets, symmetry))
}
