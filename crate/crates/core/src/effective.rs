//! Closed-form two-photon gate dynamics and gate-condition algebra.
//!
//! [`paper_evolution`] applies the textbook closed forms for a cascade dopant
//! addressed by two rail modes; [`exact_two_photon_oracle`] is the exact
//! propagator of the effective Hamiltonian on the {|g,2⟩, |e,0⟩} block, used
//! to check (and quantify the limits of) those closed forms.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::EffectiveParams;

/// The six dopant–field states the closed forms act on: dopant level
/// followed by the photon numbers of the two rails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaperState {
    G00,
    G01,
    G10,
    G20,
    G02,
    E00,
}

impl PaperState {
    pub const ALL: [PaperState; 6] =
        [PaperState::G00, PaperState::G01, PaperState::G10, PaperState::G20, PaperState::G02, PaperState::E00];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Rail photon numbers (n₁, n₂).
    pub fn photons(self) -> (usize, usize) {
        match self {
            PaperState::G00 | PaperState::E00 => (0, 0),
            PaperState::G01 => (0, 1),
            PaperState::G10 => (1, 0),
            PaperState::G20 => (2, 0),
            PaperState::G02 => (0, 2),
        }
    }
}

impl fmt::Display for PaperState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PaperState::G00 => "g00",
            PaperState::G01 => "g01",
            PaperState::G10 => "g10",
            PaperState::G20 => "g20",
            PaperState::G02 => "g02",
            PaperState::E00 => "e00",
        };
        f.write_str(s)
    }
}

/// Whether the two-photon transfer coefficient is `sin κt` as printed or
/// `−i sin κt` as a unitary generator requires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaperVariant {
    #[default]
    AsPrinted,
    Unitary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PaperEvolutionResult {
    /// Amplitudes indexed by [`PaperState::index`].
    pub amplitudes: [C64; 6],
    pub phi: f64,
    pub kappa_t: f64,
}

impl PaperEvolutionResult {
    pub fn amplitude(&self, state: PaperState) -> C64 {
        self.amplitudes[state.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Closed-form evolution of `initial` for time `t`, with φ = g₁²t/δ and
/// κ = √2 g₁g₂/δ.
pub fn paper_evolution(
    initial: PaperState,
    params: &EffectiveParams,
    t: f64,
    variant: PaperVariant,
) -> Result<PaperEvolutionResult> {
    let phi = params.phase_rate() * t;
    let kappa_t = params.kappa() * t;
    let mut amplitudes = [C64::new(0.0, 0.0); 6];
    match initial {
        PaperState::G00 => amplitudes[PaperState::G00.index()] = C64::new(1.0, 0.0),
        PaperState::G01 | PaperState::G10 => {
            amplitudes[initial.index()] = C64::from_polar(1.0, -phi);
        }
        PaperState::G20 | PaperState::G02 => {
            let prefactor = C64::from_polar(1.0, 2.0 * phi);
            let transfer = match variant {
                PaperVariant::AsPrinted => C64::new(kappa_t.sin(), 0.0),
                PaperVariant::Unitary => C64::new(0.0, -kappa_t.sin()),
            };
            amplitudes[initial.index()] = prefactor * kappa_t.cos();
            amplitudes[PaperState::E00.index()] = prefactor * transfer;
        }
        PaperState::E00 => return Err(Error::UnsupportedInitialState(initial.to_string())),
    }
    Ok(PaperEvolutionResult { amplitudes, phi, kappa_t })
}

/// Exact e^{−iHt} of the effective Hamiltonian restricted to
/// {|g,2⟩, |e,0⟩}, where H = (1/δ)·[[2g₁², √2g₁g₂], [√2g₁g₂, g₂²]].
pub fn exact_two_photon_oracle(g1: f64, g2: f64, delta: f64, t: f64) -> Result<Matrix2<C64>> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter("δ must be non-zero".into()));
    }
    let a = 2.0 * g1 * g1 / delta;
    let b = g2 * g2 / delta;
    let c = SQRT_2 * g1 * g2 / delta;
    // H = m·I + d·σz + c·σx
    let m = 0.5 * (a + b);
    let d = 0.5 * (a - b);
    let omega = d.hypot(c);
    let (cos, sinc_t) = if omega == 0.0 {
        (1.0, t)
    } else {
        ((omega * t).cos(), (omega * t).sin() / omega)
    };
    let global = C64::from_polar(1.0, -m * t);
    let i = C64::new(0.0, 1.0);
    let u = Matrix2::new(
        cos - i * sinc_t * d,
        -i * sinc_t * c,
        -i * sinc_t * c,
        cos + i * sinc_t * d,
    );
    Ok(u * global)
}

/// Dispersive phase Ω²T/δ.
pub fn dispersive_phase(coupling: f64, delta: f64, time: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter("δ must be non-zero".into()));
    }
    Ok(coupling * coupling * time / delta)
}

/// Maps a phase to its representative in (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Which gate condition a parameter set was derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    /// g₁/g₂ = 2√2 with κt = π, exact only for the closed forms.
    Paper,
    /// g₂ = √2·g₁ with κt = π, exact for the effective Hamiltonian.
    Calibrated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateCondition {
    pub kind: ConditionKind,
    pub g1: f64,
    pub g2: f64,
    pub delta: f64,
    /// Interaction time with κt = π.
    pub time: f64,
    pub ratio_g1_over_g2: f64,
    /// Predicted phase of a returning photon pair, unwrapped.
    pub two_photon_phase: f64,
    /// Predicted phase of a single photon in one rail, unwrapped.
    pub single_photon_phase: f64,
}

impl GateCondition {
    pub fn params(&self) -> EffectiveParams {
        EffectiveParams::new(self.g1, self.g2, self.delta).expect("validated on construction")
    }

    pub fn kappa_t(&self) -> f64 {
        self.params().kappa() * self.time
    }

    /// Conditional phase θ₂ − 2θ₁, wrapped.
    pub fn conditional_phase(&self) -> f64 {
        wrap_phase(self.two_photon_phase - 2.0 * self.single_photon_phase)
    }

    /// Per-rail phase that cancels the single-photon phase.
    pub fn local_compensation(&self) -> f64 {
        wrap_phase(-self.single_photon_phase)
    }
}

/// Closed-form gate point: g₁ = 2√2·g₂ and κt = π, giving φ = 2π.
pub fn gate_condition(g2: f64, delta: f64) -> Result<GateCondition> {
    if !(g2 > 0.0) || delta == 0.0 {
        return Err(Error::InvalidParameter("need g2 > 0 and δ ≠ 0".into()));
    }
    let ratio = 2.0 * SQRT_2;
    let g1 = ratio * g2;
    let params = EffectiveParams::new(g1, g2, delta)?;
    let time = PI / params.kappa();
    let phi = params.phase_rate() * time;
    Ok(GateCondition {
        kind: ConditionKind::Paper,
        g1,
        g2,
        delta,
        time,
        ratio_g1_over_g2: ratio,
        two_photon_phase: PI + 2.0 * phi,
        single_photon_phase: -phi,
    })
}

/// Exact-model gate point with g₁ = δ/50.
pub fn calibrated_gate_condition(delta: f64) -> Result<GateCondition> {
    calibrated_gate_condition_with(delta / 50.0, delta)
}

/// Exact-model gate point: g₂ = √2·g₁ equalises the diagonal shifts of
/// |g,2⟩ and |e,0⟩, so the pair undergoes a pure Rabi cycle and returns
/// with phase −(2g₁²/δ)t + π = 0 at κt = π, while a single photon picks up
/// −g₁²t/δ = −π/2.
pub fn calibrated_gate_condition_with(g1: f64, delta: f64) -> Result<GateCondition> {
    if !(g1 > 0.0) || delta == 0.0 {
        return Err(Error::InvalidParameter("need g1 > 0 and δ ≠ 0".into()));
    }
    let g2 = SQRT_2 * g1;
    let params = EffectiveParams::new(g1, g2, delta)?;
    let time = PI / params.kappa();
    let shift = 2.0 * g1 * g1 / delta;
    Ok(GateCondition {
        kind: ConditionKind::Calibrated,
        g1,
        g2,
        delta,
        time,
        ratio_g1_over_g2: g1 / g2,
        two_photon_phase: -shift * time + PI,
        single_photon_phase: -params.phase_rate() * time,
    })
}
