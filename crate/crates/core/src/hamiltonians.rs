//! Hamiltonian builders: waveguide hopping, cascade and two-level dopants,
//! the adiabatically eliminated two-photon model, photon loss, and
//! piecewise-constant switching schedules.
//!
//! Units: ħ = 1, frequencies and couplings in rad/s (or any consistent
//! natural unit), times in the reciprocal unit.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation_op, creation_op, dopant_transition_op, number_op, HybridBasis, Level,
};
use crate::operator::{OperatorMatrix, Symmetry};

/// Undirected coupling between two cavity modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Mode frequencies and nearest-neighbour tunnelling couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeGraph {
    frequencies: Vec<f64>,
    hops: Vec<Hop>,
}

impl ModeGraph {
    pub fn new(frequencies: Vec<f64>, hops: Vec<Hop>) -> Result<Self> {
        let n = frequencies.len();
        let mut seen = std::collections::BTreeSet::new();
        for h in &hops {
            if h.i == h.j {
                return Err(Error::InvalidParameter(format!("self hop on mode {}", h.i)));
            }
            if h.i >= n || h.j >= n {
                return Err(Error::InvalidMode { index: h.i.max(h.j), count: n });
            }
            if !h.coupling.is_finite() {
                return Err(Error::InvalidParameter("hop coupling must be finite".into()));
            }
            if !seen.insert((h.i.min(h.j), h.i.max(h.j))) {
                return Err(Error::InvalidParameter(format!("duplicate hop ({}, {})", h.i, h.j)));
            }
        }
        if frequencies.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("mode frequencies must be finite".into()));
        }
        Ok(Self { frequencies, hops })
    }

    /// Open chain of `n` identical cavities.
    pub fn chain(n: usize, frequency: f64, coupling: f64) -> Self {
        let hops = (0..n.saturating_sub(1)).map(|i| Hop { i, j: i + 1, coupling }).collect();
        Self { frequencies: vec![frequency; n], hops }
    }

    /// Adds independent uniform on-site shifts drawn from [−amplitude, amplitude].
    pub fn with_onsite_disorder(mut self, amplitude: f64, seed: u64) -> Self {
        if amplitude > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for w in &mut self.frequencies {
                *w += rng.random_range(-amplitude..=amplitude);
            }
        }
        self
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }
}

/// Σᵢ (ωᵢ − ω_frame) a†ᵢaᵢ + Σ Jᵢⱼ (a†ᵢaⱼ + a†ⱼaᵢ)
pub fn crow_hopping_h(
    basis: &Arc<HybridBasis>,
    graph: &ModeGraph,
    frame_frequency: f64,
) -> Result<OperatorMatrix> {
    if graph.mode_count() != basis.mode_count() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} modes, basis has {}",
            graph.mode_count(),
            basis.mode_count()
        )));
    }
    let mut h = OperatorMatrix::zeros(basis);
    for (mode, &w) in graph.frequencies.iter().enumerate() {
        let detuning = w - frame_frequency;
        if detuning != 0.0 {
            h = h + detuning * number_op(basis, mode)?;
        }
    }
    for hop in &graph.hops {
        let term = creation_op(basis, hop.i)?.matmul(&annihilation_op(basis, hop.j)?);
        let term = (term.clone() + term.adjoint()).with_symmetry(Symmetry::Hermitian);
        h = h + hop.coupling * term;
    }
    Ok(h.with_symmetry(Symmetry::Hermitian))
}

/// Which side of the photon the intermediate level sits on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningSign {
    /// ω_gh − ω = +δ and ω_he − ω = −δ.
    #[default]
    IntermediateAbove,
    /// ω_gh − ω = −δ and ω_he − ω = +δ.
    IntermediateBelow,
}

/// Dipole transitions of one (possibly collective) dopant site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Transition {
    Cascade { omega_gh: f64, omega_he: f64, g1: f64, g2: f64 },
    TwoLevel { omega_ge: f64, coupling: f64 },
}

/// A dopant slot of the basis attached to one cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopantSpec {
    pub dopant: usize,
    pub attached_mode: usize,
    /// Number of emitters sharing the site; couplings scale as √N.
    pub count: u32,
    pub transition: Transition,
}

impl DopantSpec {
    /// Cascade symmetrically detuned by ±δ from a photon at `omega`, so that
    /// two photons are resonant with g ↔ e.
    pub fn symmetric_cascade(
        dopant: usize,
        attached_mode: usize,
        omega: f64,
        delta: f64,
        g1: f64,
        g2: f64,
        sign: DetuningSign,
    ) -> Self {
        let s = match sign {
            DetuningSign::IntermediateAbove => 1.0,
            DetuningSign::IntermediateBelow => -1.0,
        };
        Self {
            dopant,
            attached_mode,
            count: 1,
            transition: Transition::Cascade {
                omega_gh: omega + s * delta,
                omega_he: omega - s * delta,
                g1,
                g2,
            },
        }
    }

    pub fn with_count(mut self, count: u32) -> Self {
        self.count = count;
        self
    }

    fn validate(&self, basis: &HybridBasis) -> Result<()> {
        basis.check_mode(self.attached_mode)?;
        basis.check_dopant(self.dopant)?;
        if self.count == 0 {
            return Err(Error::InvalidParameter("dopant count must be positive".into()));
        }
        let (a, b) = match self.transition {
            Transition::Cascade { g1, g2, .. } => (g1, g2),
            Transition::TwoLevel { coupling, .. } => (coupling, 0.0),
        };
        if a < 0.0 || b < 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter("dopant couplings must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

/// Cascade dopant in the frame rotating at the photon frequency:
/// (ω_gh−ω)σ_hh + (ω_gh+ω_he−2ω)σ_ee + √N g₁(σ_hg a + h.c.) + √N g₂(σ_eh a + h.c.).
pub fn cascade_dopant_h(
    basis: &Arc<HybridBasis>,
    spec: &DopantSpec,
    photon_frequency: f64,
) -> Result<OperatorMatrix> {
    spec.validate(basis)?;
    let Transition::Cascade { omega_gh, omega_he, g1, g2 } = spec.transition else {
        return Err(Error::InvalidParameter("cascade Hamiltonian needs a cascade dopant".into()));
    };
    if !basis.dopants()[spec.dopant].is_cascade() {
        return Err(Error::InvalidBasisShape(format!("dopant {} is not a cascade", spec.dopant)));
    }
    let d = spec.dopant;
    let a = annihilation_op(basis, spec.attached_mode)?;
    let sqrt_n = (spec.count as f64).sqrt();

    let mut h = (omega_gh - photon_frequency) * dopant_transition_op(basis, d, Level::H, Level::H)?
        + (omega_gh + omega_he - 2.0 * photon_frequency)
            * dopant_transition_op(basis, d, Level::E, Level::E)?;
    for (coupling, upper, lower) in [(g1, Level::H, Level::G), (g2, Level::E, Level::H)] {
        let absorb = dopant_transition_op(basis, d, upper, lower)?.matmul(&a);
        let term = (absorb.clone() + absorb.adjoint()).with_symmetry(Symmetry::Hermitian);
        h = h + (sqrt_n * coupling) * term;
    }
    Ok(h.with_symmetry(Symmetry::Hermitian))
}

/// Two-level dopant: (ω_ge−ω)σ_ee + √N Ω(σ_eg a + σ_ge a†).
pub fn two_level_dopant_h(
    basis: &Arc<HybridBasis>,
    spec: &DopantSpec,
    photon_frequency: f64,
) -> Result<OperatorMatrix> {
    spec.validate(basis)?;
    let Transition::TwoLevel { omega_ge, coupling } = spec.transition else {
        return Err(Error::InvalidParameter("two-level Hamiltonian needs a two-level dopant".into()));
    };
    let d = spec.dopant;
    let a = annihilation_op(basis, spec.attached_mode)?;
    let absorb = dopant_transition_op(basis, d, Level::E, Level::G)?.matmul(&a);
    let exchange = (absorb.clone() + absorb.adjoint()).with_symmetry(Symmetry::Hermitian);
    let h = (omega_ge - photon_frequency) * dopant_transition_op(basis, d, Level::E, Level::E)?
        + ((spec.count as f64).sqrt() * coupling) * exchange;
    Ok(h.with_symmetry(Symmetry::Hermitian))
}

/// Couplings and detuning of the two-photon effective model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    g1: f64,
    g2: f64,
    delta: f64,
}

impl EffectiveParams {
    pub fn new(g1: f64, g2: f64, delta: f64) -> Result<Self> {
        if !(g1.is_finite() && g2.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParameter("g1, g2, δ must be finite".into()));
        }
        if g1 < 0.0 || g2 < 0.0 {
            return Err(Error::InvalidParameter("g1, g2 must be ≥ 0".into()));
        }
        if delta == 0.0 {
            return Err(Error::InvalidParameter("δ must be non-zero".into()));
        }
        Ok(Self { g1, g2, delta })
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Two-photon Rabi frequency κ = √2 g₁g₂/δ.
    pub fn kappa(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.g1 * self.g2 / self.delta
    }

    /// Single-photon dispersive phase rate g₁²/δ.
    pub fn phase_rate(&self) -> f64 {
        self.g1 * self.g1 / self.delta
    }

    /// δ ≥ 10·max(g₁, g₂).
    pub fn valid_regime(&self) -> bool {
        self.delta.abs() >= 10.0 * self.g1.max(self.g2)
    }
}

/// A (mode, dopant) pair the effective interaction acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub mode: usize,
    pub dopant: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EffectiveOptions {
    /// Use σ_ee a†a in place of σ_ee a a†, removing the g₂²/δ shift of |e,0⟩.
    pub exclude_vacuum_shift: bool,
}

/// Effective two-photon Hamiltonian on a single-mode, single-cascade basis.
pub fn effective_h(basis: &Arc<HybridBasis>, params: &EffectiveParams) -> Result<OperatorMatrix> {
    if basis.mode_count() != 1 || basis.dopants().len() != 1 {
        return Err(Error::InvalidBasisShape(format!(
            "effective model needs one mode and one dopant, got {} and {}",
            basis.mode_count(),
            basis.dopants().len()
        )));
    }
    effective_h_on(basis, Site { mode: 0, dopant: 0 }, params, EffectiveOptions::default())
}

/// (g₁²/δ) σ_gg a†a + (g₂²/δ) σ_ee a a† + (g₁g₂/δ)(σ_ge a†² + σ_eg a²) on one site.
pub fn effective_h_on(
    basis: &Arc<HybridBasis>,
    site: Site,
    params: &EffectiveParams,
    options: EffectiveOptions,
) -> Result<OperatorMatrix> {
    basis.check_mode(site.mode)?;
    if !basis.check_dopant(site.dopant)?.is_cascade() {
        return Err(Error::InvalidBasisShape(format!("dopant {} is not a cascade", site.dopant)));
    }
    let (g1, g2, delta) = (params.g1, params.g2, params.delta);
    let a = annihilation_op(basis, site.mode)?;
    let ad = a.adjoint();
    let n = number_op(basis, site.mode)?;
    let s_gg = dopant_transition_op(basis, site.dopant, Level::G, Level::G)?;
    let s_ee = dopant_transition_op(basis, site.dopant, Level::E, Level::E)?;
    let s_eg = dopant_transition_op(basis, site.dopant, Level::E, Level::G)?;

    let upper_photons = if options.exclude_vacuum_shift { n.clone() } else { a.matmul(&ad) };
    let absorb_pair = s_eg.matmul(&a).matmul(&a);
    let exchange = (absorb_pair.clone() + absorb_pair.adjoint()).with_symmetry(Symmetry::Hermitian);

    let h = (g1 * g1 / delta) * s_gg.matmul(&n).with_symmetry(Symmetry::Hermitian)
        + (g2 * g2 / delta) * s_ee.matmul(&upper_photons).with_symmetry(Symmetry::Hermitian)
        + (g1 * g2 / delta) * exchange;
    Ok(h.with_symmetry(Symmetry::Hermitian))
}

/// How a collective ensemble of N emitters enters the dispersive phase rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollectiveScaling {
    /// Coupling √N·Ω, so the rate is N·Ω²/δ.
    #[default]
    Coupling,
    /// Rate √N·Ω²/δ.
    Phase,
}

impl CollectiveScaling {
    pub fn factor(self, count: u32) -> f64 {
        match self {
            CollectiveScaling::Coupling => count as f64,
            CollectiveScaling::Phase => (count as f64).sqrt(),
        }
    }
}

/// Dispersive limit of a two-level dopant: rate · σ_gg a†a.
pub fn two_level_dispersive_h(
    basis: &Arc<HybridBasis>,
    site: Site,
    coupling: f64,
    delta: f64,
    count: u32,
    scaling: CollectiveScaling,
) -> Result<OperatorMatrix> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter("δ must be non-zero".into()));
    }
    let rate = scaling.factor(count) * coupling * coupling / delta;
    let s_gg = dopant_transition_op(basis, site.dopant, Level::G, Level::G)?;
    let n = number_op(basis, site.mode)?;
    Ok((rate * s_gg.matmul(&n)).with_symmetry(Symmetry::Hermitian))
}

/// Photon decay rate γ = ω/Q.
pub fn decay_rate(omega: f64, quality_factor: f64) -> f64 {
    omega / quality_factor
}

/// −(i/2) Σᵢ γᵢ a†ᵢaᵢ for no-jump evolution.
pub fn loss_term(basis: &Arc<HybridBasis>, rates: &[f64]) -> Result<OperatorMatrix> {
    if rates.len() != basis.mode_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} loss rates for {} modes",
            rates.len(),
            basis.mode_count()
        )));
    }
    let mut h = OperatorMatrix::zeros(basis).with_symmetry(Symmetry::AntiHermitian);
    for (mode, &gamma) in rates.iter().enumerate() {
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("loss rate {gamma} on mode {mode}")));
        }
        if gamma > 0.0 {
            h = h + number_op(basis, mode)?.scale(C64::new(0.0, -0.5 * gamma));
        }
    }
    Ok(h.with_symmetry(Symmetry::AntiHermitian))
}

/// One piece of a switching schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Segment {
    pub fn new(duration: f64) -> Self {
        Self { duration, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.overrides.insert(name.to_string(), value);
        self
    }
}

/// Piecewise-constant parameter timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (k, s) in segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "segment {k} has duration {}",
                    s.duration
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Field off, on, off: `name` takes `far`, `near`, `far`.
    pub fn stark_switching(
        name: &str,
        far: f64,
        near: f64,
        before: f64,
        during: f64,
        after: f64,
    ) -> Result<Self> {
        Self::new(vec![
            Segment::new(before).with(name, far),
            Segment::new(during).with(name, near),
            Segment::new(after).with(name, far),
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

/// Named parameters with defaults and a builder that turns a full parameter
/// set into a Hamiltonian.
pub struct ParametricHamiltonian<F>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<OperatorMatrix>,
{
    pub defaults: BTreeMap<String, f64>,
    pub build: F,
}

/// (duration, Hamiltonian) pairs applied in order.
pub type Timeline = Vec<(f64, OperatorMatrix)>;

/// Resolves each segment's overrides against the defaults and builds its
/// Hamiltonian; adjacent identical Hamiltonians are merged.
pub fn schedule_h<F>(
    basis: &Arc<HybridBasis>,
    schedule: &Schedule,
    builder: &ParametricHamiltonian<F>,
) -> Result<Timeline>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<OperatorMatrix>,
{
    let mut timeline: Timeline = Vec::new();
    for segment in &schedule.segments {
        let mut params = builder.defaults.clone();
        for (name, &value) in &segment.overrides {
            match params.get_mut(name) {
                Some(slot) => *slot = value,
                None => return Err(Error::UnknownParameter(name.clone())),
            }
        }
        let h = (builder.build)(&params)?;
        crate::fock::same_basis(basis, h.basis())?;
        match timeline.last_mut() {
            Some((duration, last)) if *last == h => *duration += segment.duration,
            _ => timeline.push((segment.duration, h)),
        }
    }
    Ok(timeline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        enumerate_basis, total_excitation_op, total_photon_op, DopantLevelSet, ModeSet,
        StateVector,
    };
    use nalgebra::DMatrix;
    use std::f64::consts::{PI, SQRT_2};

    fn sorted_real_eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Restricts a dense matrix to rows/cols with the given photon number.
    fn sector(basis: &HybridBasis, m: &DMatrix<C64>, photons: usize) -> DMatrix<C64> {
        let idx: Vec<usize> =
            (0..basis.dimension()).filter(|&k| basis.state(k).photons() == photons).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
    }

    #[test]
    fn uniform_chain_in_carrier_frame_is_off_diagonal() {
        let b = enumerate_basis(ModeSet::new(3, 2).unwrap(), &[]).unwrap();
        let h = crow_hopping_h(&b, &ModeGraph::chain(3, 7.0, 0.3), 7.0).unwrap();
        assert!(h.entries().all(|(r, c, _)| r != c));
        assert!(h.hermiticity_error() <= 1e-12);
    }

    #[test]
    fn two_mode_hopping_eigenvalues() {
        let b = enumerate_basis(ModeSet::new(2, 1).unwrap(), &[]).unwrap();
        let j = 0.7;
        let h = crow_hopping_h(&b, &ModeGraph::chain(2, 0.0, j), 0.0).unwrap();
        let ev = sorted_real_eigenvalues(sector(&b, &h.to_dense(), 1));
        assert!((ev[0] + j).abs() < 1e-14 && (ev[1] - j).abs() < 1e-14);
    }

    #[test]
    fn open_chain_spectrum_matches_tight_binding() {
        let b = enumerate_basis(ModeSet::new(5, 1).unwrap(), &[]).unwrap();
        let j = 1.3;
        let h = crow_hopping_h(&b, &ModeGraph::chain(5, 2.0, j), 2.0).unwrap();
        let ev = sorted_real_eigenvalues(sector(&b, &h.to_dense(), 1));
        let mut expected: Vec<f64> = (1..=5).map(|k| 2.0 * j * (k as f64 * PI / 6.0).cos()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, e) in ev.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn hopping_conserves_photon_number() {
        let b = enumerate_basis(ModeSet::new(2, 2).unwrap(), &[]).unwrap();
        let h = crow_hopping_h(&b, &ModeGraph::chain(2, 1.0, 0.4), 0.5).unwrap();
        assert!(h.commutator(&total_photon_op(&b)).max_abs() <= 1e-12);
    }

    #[test]
    fn graph_validation() {
        assert!(ModeGraph::new(vec![0.0; 2], vec![Hop { i: 0, j: 0, coupling: 1.0 }]).is_err());
        assert!(ModeGraph::new(
            vec![0.0; 2],
            vec![Hop { i: 0, j: 1, coupling: 1.0 }, Hop { i: 1, j: 0, coupling: 1.0 }]
        )
        .is_err());
        let b = enumerate_basis(ModeSet::new(3, 1).unwrap(), &[]).unwrap();
        assert!(crow_hopping_h(&b, &ModeGraph::chain(2, 0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn disorder_is_seeded_and_bounded() {
        let a = ModeGraph::chain(10, 1.0, 0.1).with_onsite_disorder(0.2, 42);
        let b = ModeGraph::chain(10, 1.0, 0.1).with_onsite_disorder(0.2, 42);
        assert_eq!(a, b);
        assert!(a.frequencies().iter().all(|w| (w - 1.0).abs() <= 0.2));
        assert!(a.frequencies().iter().any(|w| *w != 1.0));
    }

    fn cascade_basis(n_max: usize) -> Arc<HybridBasis> {
        enumerate_basis(ModeSet::new(1, n_max).unwrap(), &[DopantLevelSet::cascade()]).unwrap()
    }

    #[test]
    fn symmetric_cascade_diagonal() {
        let b = cascade_basis(2);
        let delta = 3.0;
        let spec = DopantSpec::symmetric_cascade(0, 0, 10.0, delta, 0.0, 0.0, DetuningSign::default());
        let h = cascade_dopant_h(&b, &spec, 10.0).unwrap();
        for (level, expect) in [(Level::G, 0.0), (Level::H, delta), (Level::E, 0.0)] {
            let k = b.find(&[0], &[level]).unwrap();
            assert_eq!(h.get(k, k).re, expect);
        }
    }

    #[test]
    fn cascade_reduces_to_detuned_jaynes_cummings() {
        let b = cascade_basis(2);
        let (delta, g1) = (2.0, 0.3);
        let spec = DopantSpec::symmetric_cascade(0, 0, 0.0, delta, g1, 0.0, DetuningSign::default());
        let h = cascade_dopant_h(&b, &spec, 0.0).unwrap().to_dense();
        let g1_idx = b.find(&[1], &[Level::G]).unwrap();
        let h0_idx = b.find(&[0], &[Level::H]).unwrap();
        let block = DMatrix::from_fn(2, 2, |r, c| {
            let idx = [g1_idx, h0_idx];
            h[(idx[r], idx[c])]
        });
        let ev = sorted_real_eigenvalues(block);
        let expected = 2.0 * (delta * delta / 4.0 + g1 * g1).sqrt();
        assert!((ev[1] - ev[0] - expected).abs() < 1e-13);
    }

    #[test]
    fn collective_count_scales_couplings() {
        let b = cascade_basis(2);
        let spec = DopantSpec::symmetric_cascade(0, 0, 0.0, 5.0, 0.2, 0.3, DetuningSign::default());
        let h1 = cascade_dopant_h(&b, &spec, 0.0).unwrap();
        let h4 = cascade_dopant_h(&b, &spec.with_count(4), 0.0).unwrap();
        let g1_idx = b.find(&[1], &[Level::G]).unwrap();
        let h0_idx = b.find(&[0], &[Level::H]).unwrap();
        let h1_idx = b.find(&[1], &[Level::H]).unwrap();
        let e0_idx = b.find(&[0], &[Level::E]).unwrap();
        assert!((h4.get(h0_idx, g1_idx) - 2.0 * h1.get(h0_idx, g1_idx)).norm() < 1e-15);
        assert!((h4.get(e0_idx, h1_idx) - 2.0 * h1.get(e0_idx, h1_idx)).norm() < 1e-15);
        assert!(h4.get(h0_idx, g1_idx).re > 0.0);
    }

    #[test]
    fn cascade_conserves_excitations() {
        let b = enumerate_basis(ModeSet::new(2, 3).unwrap(), &[DopantLevelSet::cascade()]).unwrap();
        let spec = DopantSpec::symmetric_cascade(0, 1, 4.0, 1.5, 0.2, 0.25, DetuningSign::default());
        let h = cascade_dopant_h(&b, &spec, 4.0).unwrap();
        assert!(h.hermiticity_error() <= 1e-12);
        assert!(h.commutator(&total_excitation_op(&b)).max_abs() <= 1e-12);
    }

    #[test]
    fn cascade_rejects_two_level_spec() {
        let b = cascade_basis(1);
        let spec = DopantSpec {
            dopant: 0,
            attached_mode: 0,
            count: 1,
            transition: Transition::TwoLevel { omega_ge: 1.0, coupling: 0.1 },
        };
        assert!(cascade_dopant_h(&b, &spec, 1.0).is_err());
    }

    #[test]
    fn effective_matrix_elements() {
        let b = cascade_basis(2);
        let (g1, g2, delta) = (0.3, 0.2, 7.0);
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let h = effective_h(&b, &p).unwrap();
        let g1i = b.find(&[1], &[Level::G]).unwrap();
        let g2i = b.find(&[2], &[Level::G]).unwrap();
        let e0i = b.find(&[0], &[Level::E]).unwrap();
        assert!((h.get(g1i, g1i).re - g1 * g1 / delta).abs() < 1e-15);
        assert!((h.get(e0i, g2i).re - SQRT_2 * g1 * g2 / delta).abs() < 1e-15);
        assert!((h.get(e0i, e0i).re - g2 * g2 / delta).abs() < 1e-15);
        assert!(h.hermiticity_error() <= 1e-12);

        let no_vac = effective_h_on(
            &b,
            Site { mode: 0, dopant: 0 },
            &p,
            EffectiveOptions { exclude_vacuum_shift: true },
        )
        .unwrap();
        assert_eq!(no_vac.get(e0i, e0i).re, 0.0);
    }

    #[test]
    fn effective_blocks_pair_g_n_with_e_n_minus_2() {
        let b = cascade_basis(4);
        let h = effective_h(&b, &EffectiveParams::new(0.2, 0.5, 9.0).unwrap()).unwrap();
        for (r, c, _) in h.entries() {
            let (sr, sc) = (b.state(r), b.state(c));
            let block = |s: &crate::fock::BasisState| match s.levels[0] {
                Level::G => Some(s.occupation[0] as i64),
                Level::E => Some(s.occupation[0] as i64 + 2),
                Level::H => None,
            };
            assert!(block(sr).is_some());
            assert_eq!(block(sr), block(sc), "coupling between {sr} and {sc}");
        }
    }

    #[test]
    fn effective_rejects_wrong_shape() {
        let b = enumerate_basis(ModeSet::new(2, 2).unwrap(), &[DopantLevelSet::cascade()]).unwrap();
        let p = EffectiveParams::new(0.1, 0.1, 1.0).unwrap();
        assert!(matches!(effective_h(&b, &p), Err(Error::InvalidBasisShape(_))));
        assert!(EffectiveParams::new(0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn effective_params_derived_quantities() {
        let p = EffectiveParams::new(2.0 * SQRT_2, 1.0, 1.0).unwrap();
        assert!((p.kappa() - 4.0).abs() < 1e-15);
        assert!((p.phase_rate() - 8.0).abs() < 1e-14);
        assert!(!p.valid_regime());
        assert!(EffectiveParams::new(2.0 * SQRT_2, 1.0, 50.0).unwrap().valid_regime());
    }

    #[test]
    fn dispersive_rates() {
        let b = enumerate_basis(ModeSet::new(1, 2).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        let site = Site { mode: 0, dopant: 0 };
        let h = two_level_dispersive_h(&b, site, 0.3, 5.0, 4, CollectiveScaling::Coupling).unwrap();
        let g1i = b.find(&[1], &[Level::G]).unwrap();
        let g0i = b.find(&[0], &[Level::G]).unwrap();
        assert!((h.get(g1i, g1i).re - 4.0 * 0.09 / 5.0).abs() < 1e-15);
        assert_eq!(h.get(g0i, g0i).re, 0.0);
        assert!(two_level_dispersive_h(&b, site, 0.3, 0.0, 1, CollectiveScaling::Coupling).is_err());

        // N = 100, Ω = 3e9, δ = 3e10 → rate 3e10 rad/s, π phase in ≈ 1.05e-10 s
        let rate = CollectiveScaling::Coupling.factor(100) * 9e18 / 3e10;
        assert!((rate - 3e10).abs() / 3e10 < 1e-12);
        assert!((PI / rate - 1.047e-10).abs() < 1e-13);
        assert!((CollectiveScaling::Phase.factor(100) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn loss_term_shape() {
        let b = enumerate_basis(ModeSet::new(2, 1).unwrap(), &[]).unwrap();
        let l = loss_term(&b, &[0.3, 0.0]).unwrap();
        assert_eq!(l.symmetry(), Symmetry::AntiHermitian);
        assert!(l.anti_hermiticity_error() <= 1e-12);
        let k = b.find(&[1, 0], &[]).unwrap();
        assert_eq!(l.get(k, k), C64::new(0.0, -0.15));
        assert!(loss_term(&b, &[0.0, 0.0]).unwrap().is_zero());
        assert!(loss_term(&b, &[-1.0, 0.0]).is_err());

        // Q = 1e6 at 852 nm
        let omega = 2.0 * PI * 299_792_458.0 / 852e-9;
        let gamma = decay_rate(omega, 1e6);
        assert!((gamma - 2.21e9).abs() / 2.21e9 < 0.005);
        assert!((1.0 / gamma - 0.45e-9).abs() < 0.01e-9);
    }

    fn detuning_builder(
        b: &Arc<HybridBasis>,
    ) -> ParametricHamiltonian<impl Fn(&BTreeMap<String, f64>) -> Result<OperatorMatrix> + '_> {
        ParametricHamiltonian {
            defaults: BTreeMap::from([("delta".to_string(), 100.0)]),
            build: move |p: &BTreeMap<String, f64>| {
                let spec = DopantSpec {
                    dopant: 0,
                    attached_mode: 0,
                    count: 1,
                    transition: Transition::TwoLevel { omega_ge: p["delta"], coupling: 0.1 },
                };
                two_level_dopant_h(b, &spec, 0.0)
            },
        }
    }

    #[test]
    fn schedule_single_segment() {
        let b = enumerate_basis(ModeSet::new(1, 1).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        let builder = detuning_builder(&b);
        let tl = schedule_h(&b, &Schedule::new(vec![Segment::new(2.5)]).unwrap(), &builder).unwrap();
        assert_eq!(tl.len(), 1);
        assert_eq!(tl[0].0, 2.5);
    }

    #[test]
    fn schedule_stark_switching() {
        let b = enumerate_basis(ModeSet::new(1, 1).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        let builder = detuning_builder(&b);
        let sched = Schedule::stark_switching("delta", 100.0, 2.0, 1.0, 3.0, 1.0).unwrap();
        let tl = schedule_h(&b, &sched, &builder).unwrap();
        assert_eq!(tl.len(), 3);
        let e = b.find(&[0], &[Level::E]).unwrap();
        let diag: Vec<f64> = tl.iter().map(|(_, h)| h.get(e, e).re).collect();
        assert_eq!(diag, vec![100.0, 2.0, 100.0]);
    }

    #[test]
    fn schedule_merges_identical_neighbours() {
        let b = enumerate_basis(ModeSet::new(1, 1).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        let builder = detuning_builder(&b);
        let sched = Schedule::new(vec![
            Segment::new(1.0),
            Segment::new(0.5).with("delta", 100.0),
            Segment::new(2.0).with("delta", 3.0),
        ])
        .unwrap();
        let tl = schedule_h(&b, &sched, &builder).unwrap();
        assert_eq!(tl.len(), 2);
        let total: f64 = tl.iter().map(|(d, _)| d).sum();
        assert_eq!(total, sched.total_duration());

        let bad = Schedule::new(vec![Segment::new(1.0).with("omega", 1.0)]).unwrap();
        assert!(matches!(schedule_h(&b, &bad, &builder), Err(Error::UnknownParameter(_))));
        assert!(Schedule::new(vec![Segment::new(0.0)]).is_err());
    }

    #[test]
    fn builders_respect_flags() {
        let b = enumerate_basis(ModeSet::new(1, 3).unwrap(), &[DopantLevelSet::cascade()]).unwrap();
        let p = EffectiveParams::new(0.4, 0.7, 3.0).unwrap();
        let spec = DopantSpec::symmetric_cascade(0, 0, 1.0, 3.0, 0.4, 0.7, DetuningSign::IntermediateBelow);
        for h in [effective_h(&b, &p).unwrap(), cascade_dopant_h(&b, &spec, 1.0).unwrap()] {
            assert!(h.is_hermitian());
            assert!(h.symmetry_error() <= 1e-12);
        }
        let psi = StateVector::from_labels(&b, &[2], &[Level::G]).unwrap();
        assert!(effective_h(&b, &p).unwrap().apply(&psi).is_ok());
    }
}
