//! Dual-rail photonic circuits: couplers, phase shifters and the doped
//! two-rail interaction region, compiled to Hamiltonian segments and scored
//! as gates.
//!
//! A qubit is one photon shared between two rails. Rails that never enter
//! the simulated device may be declared [`Rail::Spectator`]; their photon is
//! tracked symbolically and only decides which branch an input belongs to.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{paper_evolution, wrap_phase, PaperState, PaperVariant};
use crate::error::{Error, Result};
use crate::fock::{
    annihilation_op, enumerate_basis, number_op, total_excitation_op, DopantLevelSet, HybridBasis,
    Level, ModeSet, StateVector,
};
use crate::hamiltonians::{
    cascade_dopant_h, effective_h_on, DetuningSign, DopantSpec, EffectiveOptions, EffectiveParams,
    Site,
};
use crate::operator::{OperatorMatrix, Symmetry};
use crate::optimize::{golden_section_max, Bounds, NelderMead};
use crate::propagator::{EvolutionReport, Propagator, SpectralPropagator};

/// One rail of a dual-rail qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rail {
    Mode(usize),
    /// Not simulated; the device acts trivially on it.
    Spectator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualRailQubit {
    pub rail0: Rail,
    pub rail1: Rail,
}

impl DualRailQubit {
    pub fn new(rail0: Rail, rail1: Rail) -> Result<Self> {
        if rail0 == rail1 {
            return Err(Error::InvalidParameter("qubit rails must be distinct".into()));
        }
        Ok(Self { rail0, rail1 })
    }

    pub fn modes(rail0: usize, rail1: usize) -> Result<Self> {
        Self::new(Rail::Mode(rail0), Rail::Mode(rail1))
    }

    fn rail(&self, bit: usize) -> Rail {
        if bit == 0 {
            self.rail0
        } else {
            self.rail1
        }
    }
}

/// How the doped interaction region is modelled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionModel {
    /// Closed-form map, no numerics.
    Paper(PaperVariant),
    /// Effective two-photon Hamiltonian.
    Effective,
    /// Full cascade dopant with symmetric detuning.
    Cascade(DetuningSign),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitElement {
    /// Evanescent coupling J(a†b + b†a) for time t; `inverse` reverses the sign.
    Coupler { modes: (usize, usize), coupling: f64, time: f64, inverse: bool },
    /// Multiplies the amplitude of each photon in `mode` by e^{iθ}.
    Phase { mode: usize, theta: f64 },
    /// Doped region: one cascade dopant per listed mode.
    DopantInteraction { model: InteractionModel, params: EffectiveParams, time: f64, modes: Vec<usize> },
    Idle { time: f64 },
}

/// Coupler on modes (0, 1); a photon entering mode 0 leaves as
/// (cos Jt, −i sin Jt).
pub fn hadamard_coupler(coupling: f64, time: f64) -> Result<CircuitElement> {
    if !(coupling >= 0.0 && time >= 0.0 && coupling.is_finite() && time.is_finite()) {
        return Err(Error::InvalidParameter("coupler J and t must be finite and ≥ 0".into()));
    }
    Ok(CircuitElement::Coupler { modes: (0, 1), coupling, time, inverse: false })
}

impl CircuitElement {
    /// Retargets a coupler.
    pub fn on_modes(self, a: usize, b: usize) -> Self {
        match self {
            CircuitElement::Coupler { coupling, time, inverse, .. } => {
                CircuitElement::Coupler { modes: (a, b), coupling, time, inverse }
            }
            other => other,
        }
    }

    /// The coupler that undoes this one.
    pub fn inverted(self) -> Self {
        match self {
            CircuitElement::Coupler { modes, coupling, time, inverse } => {
                CircuitElement::Coupler { modes, coupling, time, inverse: !inverse }
            }
            other => other,
        }
    }

    fn validate(&self, mode_count: usize) -> Result<()> {
        let check = |m: usize| {
            if m >= mode_count {
                Err(Error::InvalidMode { index: m, count: mode_count })
            } else {
                Ok(())
            }
        };
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be finite")))
            }
        };
        match self {
            CircuitElement::Coupler { modes, coupling, time, .. } => {
                check(modes.0)?;
                check(modes.1)?;
                if modes.0 == modes.1 {
                    return Err(Error::InvalidParameter("a coupler needs two distinct modes".into()));
                }
                finite(*coupling, "coupling")?;
                finite(*time, "coupler time")?;
                if *time < 0.0 {
                    return Err(Error::InvalidParameter("coupler time must be ≥ 0".into()));
                }
            }
            CircuitElement::Phase { mode, theta } => {
                check(*mode)?;
                finite(*theta, "phase")?;
            }
            CircuitElement::DopantInteraction { time, modes, .. } => {
                if modes.is_empty() {
                    return Err(Error::InvalidParameter("interaction needs at least one mode".into()));
                }
                for &m in modes {
                    check(m)?;
                }
                finite(*time, "interaction time")?;
                if *time < 0.0 {
                    return Err(Error::InvalidParameter("interaction time must be ≥ 0".into()));
                }
            }
            CircuitElement::Idle { time } => {
                finite(*time, "idle time")?;
                if *time < 0.0 {
                    return Err(Error::InvalidParameter("idle time must be ≥ 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Which coupler closes the two-qubit device.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondCoupler {
    /// Undoes the first coupler, so the bare device is the identity.
    #[default]
    Inverse,
    /// Repeats the first coupler, so the bare device swaps the rails.
    Same,
}

/// Ordered elements over a fixed set of simulated modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    mode_count: usize,
    elements: Vec<CircuitElement>,
}

impl Circuit {
    pub fn new(mode_count: usize) -> Self {
        Self { mode_count, elements: Vec::new() }
    }

    pub fn push(&mut self, element: CircuitElement) -> Result<&mut Self> {
        element.validate(self.mode_count)?;
        self.elements.push(element);
        Ok(self)
    }

    pub fn with(mut self, element: CircuitElement) -> Result<Self> {
        self.push(element)?;
        Ok(self)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    /// Coupler, phase φ on rail 0, coupler.
    pub fn mzi(phi: f64) -> Result<Self> {
        let coupler = hadamard_coupler(1.0, FRAC_PI_4)?;
        Circuit::new(2)
            .with(coupler.clone())?
            .with(CircuitElement::Phase { mode: 0, theta: phi })?
            .with(coupler)
    }

    /// The two-qubit device on the two central rails (modes 0 and 1):
    /// coupler, doped region, closing coupler, then an optional per-rail
    /// phase on each rail.
    pub fn cz_device(
        model: InteractionModel,
        params: EffectiveParams,
        time: f64,
        second: SecondCoupler,
        rail_phase: Option<f64>,
    ) -> Result<Self> {
        let first = hadamard_coupler(1.0, FRAC_PI_4)?;
        let closing = match second {
            SecondCoupler::Inverse => first.clone().inverted(),
            SecondCoupler::Same => first.clone(),
        };
        let mut c = Circuit::new(2)
            .with(first)?
            .with(CircuitElement::DopantInteraction { model, params, time, modes: vec![0, 1] })?
            .with(closing)?;
        if let Some(theta) = rail_phase {
            c.push(CircuitElement::Phase { mode: 0, theta })?;
            c.push(CircuitElement::Phase { mode: 1, theta })?;
        }
        Ok(c)
    }
}

/// Qubits for [`Circuit::cz_device`]: the outer rails are spectators.
pub fn cz_device_qubits() -> [DualRailQubit; 2] {
    [
        DualRailQubit { rail0: Rail::Spectator, rail1: Rail::Mode(0) },
        DualRailQubit { rail0: Rail::Spectator, rail1: Rail::Mode(1) },
    ]
}

/// Qubit for [`Circuit::mzi`].
pub fn mzi_qubit() -> DualRailQubit {
    DualRailQubit { rail0: Rail::Mode(0), rail1: Rail::Mode(1) }
}

/// Output-port probabilities (sin²(φ/2), cos²(φ/2)) of a balanced
/// interferometer fed in port 0.
pub fn mzi_probabilities(phi: f64) -> (f64, f64) {
    let (s, c) = (phi / 2.0).sin_cos();
    (s * s, c * c)
}

/// Circuit input over the computational basis. Labels are bit strings,
/// qubit 0 most significant.
#[derive(Clone, Debug, PartialEq)]
pub enum CircuitInput {
    Label(Vec<u8>),
    Amplitudes(Vec<C64>),
}

#[derive(Clone, Debug)]
pub struct CircuitRun {
    /// Output amplitudes over the computational basis.
    pub output: Vec<C64>,
    /// Population left outside the computational subspace with a dopant excited.
    pub dopant_leakage: f64,
    /// Largest drift of ⟨photons + dopant quanta⟩ at any step boundary.
    pub excitation_drift: f64,
    /// Per simulated branch (one per spectator pattern present in the input).
    pub reports: Vec<EvolutionReport>,
}

impl CircuitRun {
    pub fn success_probability(&self) -> f64 {
        self.output.iter().map(|a| a.norm_sqr()).sum()
    }
}

enum Step {
    Evolve { duration: f64, h: OperatorMatrix, spectral: Option<SpectralPropagator> },
    Map(OperatorMatrix),
}

/// A circuit compiled against its qubit layout, reusable across inputs.
pub struct CompiledCircuit {
    basis: Arc<HybridBasis>,
    qubits: Vec<DualRailQubit>,
    steps: Vec<Step>,
    dopant_of_mode: BTreeMap<usize, usize>,
    propagator: Propagator,
}

impl CompiledCircuit {
    pub fn new(circuit: &Circuit, qubits: &[DualRailQubit]) -> Result<Self> {
        let mut used = std::collections::BTreeSet::new();
        for q in qubits {
            for rail in [q.rail0, q.rail1] {
                if let Rail::Mode(m) = rail {
                    if m >= circuit.mode_count {
                        return Err(Error::InvalidMode { index: m, count: circuit.mode_count });
                    }
                    if !used.insert(m) {
                        return Err(Error::InvalidParameter(format!("mode {m} used by two rails")));
                    }
                }
            }
        }

        let mut dopant_of_mode = BTreeMap::new();
        for e in &circuit.elements {
            if let CircuitElement::DopantInteraction { modes, .. } = e {
                for &m in modes {
                    let next = dopant_of_mode.len();
                    dopant_of_mode.entry(m).or_insert(next);
                }
            }
        }
        let dopants = vec![DopantLevelSet::cascade(); dopant_of_mode.len()];
        let basis = enumerate_basis(ModeSet::new(circuit.mode_count, qubits.len())?, &dopants)?;

        let propagator = Propagator { truncation_exact: true, ..Propagator::default() };
        let mut steps = Vec::new();
        for e in &circuit.elements {
            let step = match e {
                CircuitElement::Coupler { modes, coupling, time, inverse } => {
                    let sign = if *inverse { -1.0 } else { 1.0 };
                    let hop = crate::fock::creation_op(&basis, modes.0)?
                        .matmul(&annihilation_op(&basis, modes.1)?);
                    let h = (sign * coupling) * (hop.clone() + hop.adjoint());
                    evolve_step(*time, h.with_symmetry(Symmetry::Hermitian), &propagator)?
                }
                CircuitElement::Phase { mode, theta } => {
                    evolve_step(1.0, -theta * number_op(&basis, *mode)?, &propagator)?
                }
                CircuitElement::Idle { time } => {
                    evolve_step(*time, OperatorMatrix::zeros(&basis), &propagator)?
                }
                CircuitElement::DopantInteraction { model, params, time, modes } => {
                    let sites: Vec<Site> =
                        modes.iter().map(|&m| Site { mode: m, dopant: dopant_of_mode[&m] }).collect();
                    match model {
                        InteractionModel::Paper(variant) => {
                            Step::Map(paper_map(&basis, &sites, params, *time, *variant)?)
                        }
                        InteractionModel::Effective => {
                            let mut h = OperatorMatrix::zeros(&basis);
                            for &s in &sites {
                                h = h + effective_h_on(&basis, s, params, EffectiveOptions::default())?;
                            }
                            evolve_step(*time, h.with_symmetry(Symmetry::Hermitian), &propagator)?
                        }
                        InteractionModel::Cascade(sign) => {
                            let mut h = OperatorMatrix::zeros(&basis);
                            for &s in &sites {
                                let spec = DopantSpec::symmetric_cascade(
                                    s.dopant,
                                    s.mode,
                                    0.0,
                                    params.delta(),
                                    params.g1(),
                                    params.g2(),
                                    *sign,
                                );
                                h = h + cascade_dopant_h(&basis, &spec, 0.0)?;
                            }
                            evolve_step(*time, h.with_symmetry(Symmetry::Hermitian), &propagator)?
                        }
                    }
                }
            };
            steps.push(step);
        }
        Ok(Self { basis, qubits: qubits.to_vec(), steps, dopant_of_mode, propagator })
    }

    pub fn basis(&self) -> &Arc<HybridBasis> {
        &self.basis
    }

    pub fn dopant_count(&self) -> usize {
        self.dopant_of_mode.len()
    }

    /// Simulated occupation and spectator bit pattern of a computational label.
    fn encode(&self, label: usize) -> (Vec<usize>, Vec<u8>) {
        let nq = self.qubits.len();
        let mut occupation = vec![0usize; self.basis.mode_count()];
        let mut spectators = Vec::new();
        for (q, qubit) in self.qubits.iter().enumerate() {
            let bit = (label >> (nq - 1 - q)) & 1;
            match qubit.rail(bit) {
                Rail::Mode(m) => occupation[m] += 1,
                Rail::Spectator => spectators.push((q as u8) * 2 + bit as u8),
            }
        }
        (occupation, spectators)
    }

    pub fn run(&self, input: &CircuitInput) -> Result<CircuitRun> {
        let nq = self.qubits.len();
        let d = 1usize << nq;
        let amplitudes: Vec<C64> = match input {
            CircuitInput::Label(bits) => {
                if bits.len() != nq || bits.iter().any(|&b| b > 1) {
                    return Err(Error::PhotonNumber(format!(
                        "label {bits:?} does not place one photon on each of {nq} qubits"
                    )));
                }
                let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[idx] = C64::new(1.0, 0.0);
                v
            }
            CircuitInput::Amplitudes(a) => {
                if a.len() != d {
                    return Err(Error::PhotonNumber(format!(
                        "{} amplitudes for {nq} dual-rail qubits",
                        a.len()
                    )));
                }
                a.clone()
            }
        };

        // Group inputs by spectator pattern; each group is one simulated branch.
        let encoded: Vec<(Vec<usize>, Vec<u8>)> = (0..d).map(|l| self.encode(l)).collect();
        let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
        for (label, (_, spect)) in encoded.iter().enumerate() {
            groups.entry(spect.clone()).or_default().push(label);
        }

        let ground = vec![Level::G; self.dopant_count()];
        let excitation = total_excitation_op(&self.basis);
        let mut output = vec![C64::new(0.0, 0.0); d];
        let mut dopant_leakage = 0.0;
        let mut excitation_drift: f64 = 0.0;
        let mut reports = Vec::new();

        for labels in groups.values() {
            let mut psi = StateVector::zeros(&self.basis);
            let mut photons_in = None;
            for &l in labels {
                if amplitudes[l] == C64::new(0.0, 0.0) {
                    continue;
                }
                let occ = &encoded[l].0;
                let n: usize = occ.iter().sum();
                if *photons_in.get_or_insert(n) != n {
                    // superposed photon numbers within one branch are allowed;
                    // the drift check then uses the mean
                    photons_in = Some(usize::MAX);
                }
                let k = self.basis.find(occ, &ground).expect("input state in basis");
                psi.amplitudes_mut()[k] += amplitudes[l];
            }
            if psi.norm_sqr() == 0.0 {
                continue;
            }
            let reference = crate::propagator::expectation(&excitation, &psi)?.re() / psi.norm_sqr();

            let mut leakage = psi.top_layer_population();
            let mut segment_norms = Vec::with_capacity(self.steps.len());
            for step in &self.steps {
                psi = match step {
                    Step::Evolve { duration, h, spectral } => match spectral {
                        Some(s) => {
                            let pieces = self.propagator.leakage_substeps + 1;
                            let start = psi.clone();
                            let mut out = start.clone();
                            for k in 1..=pieces {
                                out = s.evolve(&start, duration * k as f64 / pieces as f64)?;
                                leakage = leakage.max(out.top_layer_population());
                            }
                            out
                        }
                        None => {
                            let r = self.propagator.evolve_schedule(&vec![(*duration, h.clone())], &psi)?;
                            leakage = leakage.max(r.leakage);
                            r.state
                        }
                    },
                    Step::Map(m) => m.apply(&psi)?,
                };
                leakage = leakage.max(psi.top_layer_population());
                let norm = psi.norm_sqr();
                segment_norms.push(norm);
                if norm > 0.0 {
                    let n = crate::propagator::expectation(&excitation, &psi)?.re() / norm;
                    excitation_drift = excitation_drift.max((n - reference).abs());
                }
            }

            for &l in labels {
                output[l] = psi.amplitude(&encoded[l].0, &ground);
            }
            dopant_leakage += psi
                .basis()
                .states()
                .iter()
                .zip(psi.amplitudes())
                .filter(|(s, _)| s.levels.iter().any(|&lv| lv != Level::G))
                .map(|(_, a)| a.norm_sqr())
                .sum::<f64>();
            let survival = psi.norm_sqr();
            reports.push(EvolutionReport {
                state: psi,
                survival_probability: survival,
                segment_norms,
                leakage,
                leakage_warning: false,
            });
        }
        Ok(CircuitRun { output, dopant_leakage, excitation_drift, reports })
    }

    pub fn truth_table(&self) -> Result<TruthTable> {
        let nq = self.qubits.len();
        let d = 1usize << nq;
        let mut matrix = DMatrix::zeros(d, d);
        let mut dopant_leakage = Vec::with_capacity(d);
        for col in 0..d {
            let bits: Vec<u8> = (0..nq).map(|q| ((col >> (nq - 1 - q)) & 1) as u8).collect();
            let run = self.run(&CircuitInput::Label(bits))?;
            for (row, a) in run.output.iter().enumerate() {
                matrix[(row, col)] = *a;
            }
            dopant_leakage.push(run.dopant_leakage);
        }
        Ok(TruthTable::with_leakage(matrix, dopant_leakage))
    }
}

fn evolve_step(duration: f64, h: OperatorMatrix, propagator: &Propagator) -> Result<Step> {
    let spectral = if h.is_hermitian() && h.dimension() <= propagator.dense_cap && !h.is_zero() {
        Some(SpectralPropagator::new(&h)?)
    } else {
        None
    };
    Ok(Step::Evolve { duration, h, spectral })
}

/// Closed-form interaction as a linear map, arm by arm: every listed mode
/// carries its own dopant and follows the single-dopant closed forms.
fn paper_map(
    basis: &Arc<HybridBasis>,
    sites: &[Site],
    params: &EffectiveParams,
    time: f64,
    variant: PaperVariant,
) -> Result<OperatorMatrix> {
    let single = paper_evolution(PaperState::G10, params, time, variant)?.amplitude(PaperState::G10);
    let pair = paper_evolution(PaperState::G20, params, time, variant)?;
    let (stay, transfer) = (pair.amplitude(PaperState::G20), pair.amplitude(PaperState::E00));

    let mut map = OperatorMatrix::identity(basis);
    for site in sites {
        let mut triplets = Vec::new();
        for (k, s) in basis.states().iter().enumerate() {
            if s.levels[site.dopant] != Level::G {
                triplets.push((k, k, C64::new(1.0, 0.0)));
                continue;
            }
            match s.occupation[site.mode] {
                0 => triplets.push((k, k, C64::new(1.0, 0.0))),
                1 => triplets.push((k, k, single)),
                2 => {
                    triplets.push((k, k, stay));
                    let mut excited = s.clone();
                    excited.occupation[site.mode] = 0;
                    excited.levels[site.dopant] = Level::E;
                    let j = basis.index_of(&excited).expect("dopant levels enumerated in full");
                    triplets.push((j, k, transfer));
                }
                n => {
                    return Err(Error::UnsupportedInitialState(format!(
                        "{n} photons in one arm of the closed-form interaction"
                    )))
                }
            }
        }
        let arm = OperatorMatrix::from_triplets(basis, triplets, Symmetry::General);
        map = arm.matmul(&map);
    }
    Ok(map)
}

/// Runs `circuit` on one input.
pub fn run_circuit(circuit: &Circuit, qubits: &[DualRailQubit], input: &CircuitInput) -> Result<CircuitRun> {
    CompiledCircuit::new(circuit, qubits)?.run(input)
}

/// Output amplitudes for every computational input, as columns.
pub fn truth_table(circuit: &Circuit, qubits: &[DualRailQubit]) -> Result<TruthTable> {
    CompiledCircuit::new(circuit, qubits)?.truth_table()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable {
    pub matrix: DMatrix<C64>,
    /// Squared column norm within the computational subspace.
    pub success_probability: Vec<f64>,
    /// Excited-dopant population per input.
    pub dopant_leakage: Vec<f64>,
}

impl TruthTable {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        let n = matrix.ncols();
        Self::with_leakage(matrix, vec![0.0; n])
    }

    fn with_leakage(matrix: DMatrix<C64>, dopant_leakage: Vec<f64>) -> Self {
        let success_probability = matrix.column_iter().map(|c| c.norm_squared()).collect();
        Self { matrix, success_probability, dopant_leakage }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry of |M†M − I|.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dimension();
        (self.matrix.adjoint() * &self.matrix - DMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// diag(1, 1, 1, −1)
pub fn cz_target() -> DMatrix<C64> {
    let mut m = DMatrix::identity(4, 4);
    m[(3, 3)] = C64::new(-1.0, 0.0);
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub fidelity: f64,
    /// Phase α applied to |1⟩ of each qubit after the achieved map.
    pub local_phases: Vec<f64>,
    /// 1 − success probability, per input.
    pub leakage: Vec<f64>,
    pub parameters: BTreeMap<String, f64>,
}

/// Average gate fidelity (|Tr(T†M)|² + Tr(M†M)) / (d² + d) of a possibly
/// trace-decreasing map M, optionally maximised over single-qubit phase
/// rotations diag(1, e^{iα}) applied after M.
pub fn gate_fidelity(achieved: &TruthTable, target: &DMatrix<C64>, local_phase_freedom: bool) -> Result<GateReport> {
    let m = &achieved.matrix;
    let d = m.nrows();
    if m.shape() != target.shape() || !(d == 2 || d == 4) {
        return Err(Error::DimensionMismatch(format!(
            "achieved {:?} vs target {:?}; only one- and two-qubit gates are scored",
            m.shape(),
            target.shape()
        )));
    }
    // Tr(T† D M) = Σ_j D_j c_j
    let c: Vec<C64> = (0..d).map(|j| (0..d).map(|k| target[(j, k)].conj() * m[(j, k)]).sum()).collect();
    let purity: f64 = m.iter().map(|z| z.norm_sqr()).sum();

    let local_phases = if !local_phase_freedom {
        vec![0.0; if d == 2 { 1 } else { 2 }]
    } else if d == 2 {
        vec![wrap_phase(phase_aligning(c[0], c[1]))]
    } else {
        // for fixed α the best β aligns A = c₀ + e^{iα}c₂ with e^{iβ}B, B = c₁ + e^{iα}c₃
        let profile = |alpha: f64| {
            let e = C64::from_polar(1.0, alpha);
            (c[0] + e * c[2]).norm() + (c[1] + e * c[3]).norm()
        };
        const GRID: usize = 1024;
        let step = TAU / GRID as f64;
        let best_k = (0..GRID)
            .map(|k| (k, profile(k as f64 * step)))
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc })
            .0;
        let centre = best_k as f64 * step;
        let (alpha, _) = golden_section_max(profile, centre - step, centre + step, 1e-12);
        let e = C64::from_polar(1.0, alpha);
        let beta = phase_aligning(c[0] + e * c[2], c[1] + e * c[3]);
        vec![wrap_phase(alpha), wrap_phase(beta)]
    };

    let diag: Vec<C64> = if d == 2 {
        vec![C64::new(1.0, 0.0), C64::from_polar(1.0, local_phases[0])]
    } else {
        let (a, b) = (local_phases[0], local_phases[1]);
        vec![
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, b),
            C64::from_polar(1.0, a),
            C64::from_polar(1.0, a + b),
        ]
    };
    let overlap: C64 = diag.iter().zip(&c).map(|(p, cj)| p * cj).sum();
    let fidelity = (overlap.norm_sqr() + purity) / (d * d + d) as f64;
    Ok(GateReport {
        fidelity,
        local_phases,
        leakage: achieved.success_probability.iter().map(|p| (1.0 - p).max(0.0)).collect(),
        parameters: BTreeMap::new(),
    })
}

/// β maximising |a + e^{iβ}b|, in [0, 2π).
fn phase_aligning(a: C64, b: C64) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    (a.arg() - b.arg()).rem_euclid(TAU)
}

/// Search box for [`optimize_cz`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzSearchSpace {
    /// g₂/g₁ range.
    pub ratio: (f64, f64),
    /// κt range.
    pub rabi_angle: (f64, f64),
    pub local_phases: bool,
    /// Coarse grid points along (ratio, κt).
    pub grid: (usize, usize),
    pub model: InteractionModel,
    pub max_evaluations: usize,
}

impl Default for CzSearchSpace {
    fn default() -> Self {
        Self {
            ratio: (0.25, 2.5),
            rabi_angle: (0.5 * PI, 1.5 * PI),
            local_phases: true,
            grid: (19, 19),
            model: InteractionModel::Effective,
            max_evaluations: 600,
        }
    }
}

impl CzSearchSpace {
    /// A single point (g₂/g₁, κt).
    pub fn point(ratio: f64, rabi_angle: f64, local_phases: bool) -> Self {
        Self {
            ratio: (ratio, ratio),
            rabi_angle: (rabi_angle, rabi_angle),
            local_phases,
            grid: (1, 1),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzOptimization {
    pub report: GateReport,
    pub ratio_g2_over_g1: f64,
    pub rabi_angle: f64,
    pub g1: f64,
    pub g2: f64,
    pub delta: f64,
    pub time: f64,
    pub evaluations: usize,
}

/// Physical couplings for (g₂/g₁, κt) at detuning δ, scaled so that
/// max(g₁, g₂) = |δ|/50.
pub fn cz_parameters(delta: f64, ratio: f64, rabi_angle: f64) -> Result<(EffectiveParams, f64)> {
    if !(ratio > 0.0) {
        return Err(Error::InvalidParameter("g2/g1 must be positive".into()));
    }
    let g1 = delta.abs() / 50.0 / ratio.max(1.0);
    let params = EffectiveParams::new(g1, ratio * g1, delta)?;
    let time = rabi_angle / params.kappa();
    if !(time >= 0.0) {
        return Err(Error::InvalidParameter(format!("κt = {rabi_angle} gives a negative time")));
    }
    Ok((params, time))
}

/// Scores the two-qubit device at (g₂/g₁, κt) against CZ.
pub fn cz_fidelity_at(delta: f64, ratio: f64, rabi_angle: f64, model: InteractionModel, local_phases: bool) -> Result<GateReport> {
    let (params, time) = cz_parameters(delta, ratio, rabi_angle)?;
    let circuit = Circuit::cz_device(model, params, time, SecondCoupler::Inverse, None)?;
    let table = truth_table(&circuit, &cz_device_qubits())?;
    let mut report = gate_fidelity(&table, &cz_target(), local_phases)?;
    report.parameters = BTreeMap::from([
        ("g1".to_string(), params.g1()),
        ("g2".to_string(), params.g2()),
        ("delta".to_string(), delta),
        ("time".to_string(), time),
        ("ratio_g2_over_g1".to_string(), ratio),
        ("rabi_angle".to_string(), rabi_angle),
    ]);
    Ok(report)
}

/// Coarse grid over (g₂/g₁, κt) followed by a bounded simplex refinement,
/// maximising CZ fidelity of the numerically simulated device.
pub fn optimize_cz(delta: f64, space: &CzSearchSpace) -> Result<CzOptimization> {
    let (r_lo, r_hi) = space.ratio;
    let (a_lo, a_hi) = space.rabi_angle;
    if !(r_lo > 0.0 && r_hi >= r_lo && a_hi >= a_lo && a_lo >= 0.0) {
        return Err(Error::InvalidParameter("empty or invalid CZ search ranges".into()));
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n <= 1 || hi == lo {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        }
    };
    let ratios = axis(r_lo, r_hi, space.grid.0);
    let angles = axis(a_lo, a_hi, space.grid.1);
    let points: Vec<(f64, f64)> =
        ratios.iter().flat_map(|&r| angles.iter().map(move |&a| (r, a))).collect();

    let score = |r: f64, a: f64| -> f64 {
        cz_fidelity_at(delta, r, a, space.model, space.local_phases).map_or(f64::NEG_INFINITY, |g| g.fidelity)
    };
    let values: Vec<f64> = points.par_iter().map(|&(r, a)| score(r, a)).collect();
    // lowest index wins ties
    let (best_idx, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let start = [points[best_idx].0, points[best_idx].1];

    let bounds = Bounds { lower: vec![r_lo, a_lo], upper: vec![r_hi, a_hi] };
    let nm = NelderMead { max_evaluations: space.max_evaluations, ..NelderMead::default() };
    let minimum = nm.minimize(|x| -score(x[0], x[1]), &start, &bounds);

    let (ratio, angle) = (minimum.x[0], minimum.x[1]);
    let report = cz_fidelity_at(delta, ratio, angle, space.model, space.local_phases)?;
    let (params, time) = cz_parameters(delta, ratio, angle)?;
    Ok(CzOptimization {
        report,
        ratio_g2_over_g1: ratio,
        rabi_angle: angle,
        g1: params.g1(),
        g2: params.g2(),
        delta,
        time,
        evaluations: points.len() + minimum.evaluations + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::{exact_two_photon_oracle, gate_condition};
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coupler_amplitudes() {
        for jt in [FRAC_PI_4, PI / 2.0, 0.3] {
            let circuit = Circuit::new(2).with(hadamard_coupler(2.0, jt / 2.0).unwrap()).unwrap();
            let run = run_circuit(&circuit, &[mzi_qubit()], &CircuitInput::Label(vec![0])).unwrap();
            assert!((run.output[0] - c(jt.cos(), 0.0)).norm() < 1e-12);
            assert!((run.output[1] - c(0.0, -jt.sin())).norm() < 1e-12);
        }
        assert!(hadamard_coupler(-1.0, 1.0).is_err());
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let b = enumerate_basis(ModeSet::new(2, 2).unwrap(), &[]).unwrap();
        let circuit = Circuit::new(2).with(hadamard_coupler(1.0, FRAC_PI_4).unwrap()).unwrap();
        let compiled = CompiledCircuit::new(&circuit, &cz_device_qubits()).unwrap();
        let run = compiled.run(&CircuitInput::Label(vec![1, 1])).unwrap();
        let psi = &run.reports[0].state;
        // mode transformation a†₀ → (a†₀ − i a†₁)/√2, a†₁ → (a†₁ − i a†₀)/√2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(psi.amplitude(&[1, 1], &[]).norm() < 1e-12);
        assert!((psi.amplitude(&[2, 0], &[]) - c(0.0, -h)).norm() < 1e-12);
        assert!((psi.amplitude(&[0, 2], &[]) - c(0.0, -h)).norm() < 1e-12);
        assert_eq!(psi.basis().dimension(), b.dimension());
    }

    #[test]
    fn mzi_probability_formula() {
        assert_eq!(mzi_probabilities(0.0), (0.0, 1.0));
        let (p0, p1) = mzi_probabilities(PI);
        assert!((p0 - 1.0).abs() < 1e-15 && p1.abs() < 1e-15);
        let (p0, p1) = mzi_probabilities(PI / 2.0);
        assert!((p0 - 0.5).abs() < 1e-15 && (p1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compiled_mzi_matches_formula() {
        for k in 0..=8 {
            let phi = k as f64 * PI / 4.0;
            let run = run_circuit(&Circuit::mzi(phi).unwrap(), &[mzi_qubit()], &CircuitInput::Label(vec![0]))
                .unwrap();
            let (p0, p1) = mzi_probabilities(phi);
            assert!((run.output[0].norm_sqr() - p0).abs() <= 1e-8);
            assert!((run.output[1].norm_sqr() - p1).abs() <= 1e-8);
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let t = truth_table(&Circuit::new(2), &cz_device_qubits()).unwrap();
        assert!((t.matrix.clone() - DMatrix::identity(4, 4)).norm() < 1e-15);
        let t = truth_table(&Circuit::new(2), &[mzi_qubit()]).unwrap();
        assert!((t.matrix.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn paper_mode_device_is_cz() {
        let cond = gate_condition(1.0, 50.0).unwrap();
        let circuit = Circuit::cz_device(
            InteractionModel::Paper(PaperVariant::AsPrinted),
            cond.params(),
            cond.time,
            SecondCoupler::Inverse,
            None,
        )
        .unwrap();
        let t = truth_table(&circuit, &cz_device_qubits()).unwrap();
        assert!((t.matrix.clone() - cz_target()).norm() <= 1e-10);
        assert!(t.unitarity_error() <= 1e-8);
    }

    #[test]
    fn bare_device_with_same_coupler_swaps() {
        let p = EffectiveParams::new(0.0, 0.0, 1.0).unwrap();
        let circuit =
            Circuit::cz_device(InteractionModel::Effective, p, 0.0, SecondCoupler::Same, None).unwrap();
        let t = truth_table(&circuit, &cz_device_qubits()).unwrap();
        // a lone photon crosses to the other qubit's rail and leaves the code space
        assert!(t.success_probability[1] < 1e-24 && t.success_probability[2] < 1e-24);
        assert!((t.matrix[(0, 0)] - 1.0).norm() < 1e-12);
        assert!((t.matrix[(3, 3)] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn exact_device_at_paper_point_leaks() {
        let cond = gate_condition(1.0, 50.0).unwrap();
        let circuit = Circuit::cz_device(InteractionModel::Effective, cond.params(), cond.time, SecondCoupler::Inverse, None)
            .unwrap();
        let t = truth_table(&circuit, &cz_device_qubits()).unwrap();
        let u = exact_two_photon_oracle(cond.g1, cond.g2, cond.delta, cond.time).unwrap();
        assert!((t.matrix[(3, 3)] - u[(0, 0)]).norm() < 1e-10);
        assert!(t.matrix[(3, 3)].norm() < 1.0);
        assert!((t.dopant_leakage[3] - (1.0 - 0.967_568_916_947_993_4)).abs() < 1e-10);
        for k in 0..3 {
            assert!((t.matrix[(k, k)] - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn fidelity_identity_and_phases() {
        let cz = TruthTable::from_matrix(cz_target());
        assert!((gate_fidelity(&cz, &cz_target(), false).unwrap().fidelity - 1.0).abs() < 1e-15);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            C64::from_polar(1.0, PI / 2.0),
            C64::from_polar(1.0, PI / 2.0),
            C64::from_polar(1.0, PI),
        ]));
        let target = &d * cz_target();
        let r = gate_fidelity(&cz, &target, true).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert!(gate_fidelity(&cz, &target, false).unwrap().fidelity < 0.9);
    }

    #[test]
    fn identity_versus_cz_with_phase_freedom() {
        // brute force over a fine (α, β) grid
        let mut best: f64 = 0.0;
        let n = 720;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
                let tr = c(1.0, 0.0) + C64::from_polar(1.0, b) + C64::from_polar(1.0, a)
                    - C64::from_polar(1.0, a + b);
                best = best.max(tr.norm());
            }
        }
        assert!((best - 2.0 * SQRT_2).abs() < 1e-4);
        let oracle = (best * best + 4.0) / 20.0;
        let r = gate_fidelity(&TruthTable::from_matrix(DMatrix::identity(4, 4)), &cz_target(), true).unwrap();
        assert!((r.fidelity - 0.6).abs() < 1e-12);
        assert!((r.fidelity - oracle).abs() < 1e-4);
    }

    #[test]
    fn fidelity_shape_mismatch() {
        let t = TruthTable::from_matrix(DMatrix::identity(2, 2));
        assert!(gate_fidelity(&t, &cz_target(), true).is_err());
    }

    #[test]
    fn global_phase_invariance() {
        let mut rng_phase = 0.37;
        let m = TruthTable::from_matrix(DMatrix::from_fn(4, 4, |r, c| {
            C64::from_polar(0.4 + 0.1 * r as f64, 0.3 * c as f64 + r as f64)
        }));
        let base = gate_fidelity(&m, &cz_target(), true).unwrap().fidelity;
        for _ in 0..10 {
            rng_phase = (rng_phase * 7.13 + 1.1) % TAU;
            let p = C64::from_polar(1.0, rng_phase);
            let q = C64::from_polar(1.0, 2.0 * rng_phase + 0.5);
            let m2 = TruthTable::from_matrix(m.matrix.clone() * p);
            let f = gate_fidelity(&m2, &(cz_target() * q), true).unwrap().fidelity;
            assert!((f - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn circuit_validation() {
        let mut c = Circuit::new(2);
        assert!(c.push(CircuitElement::Phase { mode: 2, theta: 0.1 }).is_err());
        assert!(c
            .push(CircuitElement::Coupler { modes: (1, 1), coupling: 1.0, time: 1.0, inverse: false })
            .is_err());
        assert!(c.push(CircuitElement::Idle { time: f64::NAN }).is_err());
        assert!(DualRailQubit::modes(0, 0).is_err());
        let q = [DualRailQubit::modes(0, 1).unwrap(), DualRailQubit::modes(1, 2).unwrap()];
        assert!(CompiledCircuit::new(&Circuit::new(3), &q).is_err());
        let run = run_circuit(&Circuit::new(2), &[mzi_qubit()], &CircuitInput::Label(vec![0, 1]));
        assert!(matches!(run, Err(Error::PhotonNumber(_))));
    }

    #[test]
    fn restricted_search_matches_two_photon_oracle() {
        for (ratio, angle) in [(1.0 / (2.0 * SQRT_2), PI), (0.7, 1.1 * PI), (1.9, 0.6 * PI)] {
            let r = optimize_cz(50.0, &CzSearchSpace::point(ratio, angle, false)).unwrap();
            let (p, t) = cz_parameters(50.0, ratio, angle).unwrap();
            let u = exact_two_photon_oracle(p.g1(), p.g2(), p.delta(), t).unwrap()[(0, 0)];
            let single = C64::from_polar(1.0, -p.phase_rate() * t);
            // Tr(T†M) = 1 + 2·e^{-iφ} − u
            let tr = 1.0 + 2.0 * single - u;
            let oracle = (tr.norm_sqr() + 3.0 + u.norm_sqr()) / 20.0;
            assert!((r.report.fidelity - oracle).abs() < 1e-10, "{} vs {}", r.report.fidelity, oracle);
        }
    }

    #[test]
    fn optimizer_recovers_calibrated_condition() {
        let r = optimize_cz(50.0, &CzSearchSpace::default()).unwrap();
        assert!(r.report.fidelity >= 0.9999, "{r:?}");
        assert!((r.ratio_g2_over_g1 / SQRT_2 - 1.0).abs() < 0.01, "{r:?}");
        assert!((r.rabi_angle / PI - 1.0).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn degenerate_search_returns_identity_score() {
        let r = optimize_cz(50.0, &CzSearchSpace::point(1.0, 0.0, true)).unwrap();
        assert!((r.report.fidelity - 0.6).abs() < 1e-12);
        assert_eq!(r.time, 0.0);
    }
}
