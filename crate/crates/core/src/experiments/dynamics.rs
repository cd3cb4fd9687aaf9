//! Single-site two-photon dynamics: Rabi traces, frequency extraction and
//! the effective-versus-cascade comparison.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::effective::{paper_evolution, PaperState, PaperVariant};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, DopantLevelSet, HybridBasis, Level, ModeSet, StateVector};
use crate::hamiltonians::{cascade_dopant_h, effective_h, DetuningSign, DopantSpec, EffectiveParams};
use crate::optimize::golden_section_max;
use crate::propagator::SpectralPropagator;

use super::pulse::linear_fit;

/// Single-site model used for a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiteModel {
    Paper(PaperVariant),
    Effective,
    Cascade(DetuningSign),
}

/// One cavity with one cascade dopant, diagonalised once.
pub struct SiteDynamics {
    model: SiteModel,
    params: EffectiveParams,
    basis: Arc<HybridBasis>,
    spectral: Option<SpectralPropagator>,
}

impl SiteDynamics {
    pub fn new(model: SiteModel, params: EffectiveParams) -> Result<Self> {
        let basis = enumerate_basis(ModeSet::new(1, 2)?, &[DopantLevelSet::cascade()])?;
        let h = match model {
            SiteModel::Paper(_) => None,
            SiteModel::Effective => Some(effective_h(&basis, &params)?),
            SiteModel::Cascade(sign) => {
                let spec = DopantSpec::symmetric_cascade(0, 0, 0.0, params.delta(), params.g1(), params.g2(), sign);
                Some(cascade_dopant_h(&basis, &spec, 0.0)?)
            }
        };
        let spectral = h.as_ref().map(SpectralPropagator::new).transpose()?;
        Ok(Self { model, params, basis, spectral })
    }

    pub fn basis(&self) -> &Arc<HybridBasis> {
        &self.basis
    }

    fn state(&self, photons: usize, level: Level) -> Result<StateVector> {
        StateVector::from_labels(&self.basis, &[photons], &[level])
    }

    /// ⟨g,n|ψ(t)⟩ and ⟨e,0|ψ(t)⟩ from |g,n⟩ for n ∈ {1, 2}.
    pub fn amplitudes(&self, photons: usize, t: f64) -> Result<(C64, C64)> {
        if !(photons == 1 || photons == 2) {
            return Err(Error::UnsupportedInitialState(format!("|g,{photons}⟩")));
        }
        match (self.model, &self.spectral) {
            (SiteModel::Paper(variant), _) => {
                let initial = if photons == 1 { PaperState::G10 } else { PaperState::G20 };
                let r = paper_evolution(initial, &self.params, t, variant)?;
                Ok((r.amplitude(initial), r.amplitude(PaperState::E00)))
            }
            (_, Some(s)) => {
                let psi = s.evolve(&self.state(photons, Level::G)?, t)?;
                Ok((psi.amplitude(&[photons], &[Level::G]), psi.amplitude(&[0], &[Level::E])))
            }
            _ => unreachable!("numeric models are diagonalised on construction"),
        }
    }

    /// Population of |h,1⟩ from |g,2⟩; zero outside the cascade model.
    pub fn intermediate_population(&self, t: f64) -> Result<f64> {
        match (self.model, &self.spectral) {
            (SiteModel::Cascade(_), Some(s)) => {
                let psi = s.evolve(&self.state(2, Level::G)?, t)?;
                Ok(psi.amplitude(&[1], &[Level::H]).norm_sqr())
            }
            _ => Ok(0.0),
        }
    }

    /// Two-photon Rabi frequency Ω with P_e ∝ sin²(Ω t), from the time of
    /// the first maximum of P_e.
    pub fn rabi_frequency(&self, t_max: f64, samples: usize) -> Result<f64> {
        let pe = |t: f64| self.amplitudes(2, t).map(|a| a.1.norm_sqr());
        let grid: Vec<f64> = (0..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
        let values = grid.iter().map(|&t| pe(t)).collect::<Result<Vec<f64>>>()?;
        let top = values.iter().cloned().fold(0.0, f64::max);
        if top < 1e-6 {
            return Err(Error::InvalidParameter("no two-photon transfer within t_max".into()));
        }
        // argmax of the first lobe above half height; fast counter-rotating
        // wiggles make local maxima on the slopes
        let start = values.iter().position(|&v| v >= 0.5 * top).unwrap_or(0);
        let end = (start..=samples).find(|&k| values[k] < 0.5 * top).unwrap_or(samples + 1);
        if start == 0 || end > samples {
            return Err(Error::InvalidParameter("no complete Rabi peak within t_max".into()));
        }
        let k = (start..end).fold(start, |best, k| if values[k] > values[best] { k } else { best });
        // the cascade rides a ripple at ~δ; average it out over one period
        let ripple = match self.model {
            SiteModel::Cascade(_) => std::f64::consts::TAU / self.params.delta().abs(),
            _ => 0.0,
        };
        const TAPS: usize = 16;
        let smoothed = |t: f64| -> f64 {
            if ripple == 0.0 {
                return pe(t).unwrap_or(f64::NEG_INFINITY);
            }
            (0..TAPS)
                .map(|j| pe(t + ripple * ((j as f64 + 0.5) / TAPS as f64 - 0.5)).unwrap_or(f64::NEG_INFINITY))
                .sum::<f64>()
                / TAPS as f64
        };
        let lo = grid[k.saturating_sub(2)];
        let hi = grid[(k + 2).min(samples)];
        let (t_peak, _) = golden_section_max(smoothed, lo, hi, 1e-12 * t_max);
        Ok(std::f64::consts::PI / (2.0 * t_peak))
    }

    /// Rate r of the single-photon phase e^{−i r t}, from a linear fit of
    /// the unwrapped phase of ⟨g,1|ψ(t)⟩.
    pub fn dispersive_rate(&self, t_max: f64, samples: usize) -> Result<f64> {
        let mut times = Vec::with_capacity(samples + 1);
        let mut phases = Vec::with_capacity(samples + 1);
        let mut previous: Option<f64> = None;
        let mut offset = 0.0;
        for k in 0..=samples {
            let t = t_max * k as f64 / samples as f64;
            let raw = self.amplitudes(1, t)?.0.arg();
            if let Some(p) = previous {
                let jump = raw - p;
                if jump > std::f64::consts::PI {
                    offset -= std::f64::consts::TAU;
                } else if jump < -std::f64::consts::PI {
                    offset += std::f64::consts::TAU;
                }
            }
            previous = Some(raw);
            times.push(t);
            phases.push(raw + offset);
        }
        Ok(-linear_fit(&times, &phases).0)
    }
}

/// Generalised Rabi frequency of the effective model from |g,2⟩:
/// half the splitting of the {|g,2⟩, |e,0⟩} block.
pub fn effective_rabi_frequency(params: &EffectiveParams) -> f64 {
    let (g1, g2, d) = (params.g1(), params.g2(), params.delta());
    let detuning = (2.0 * g1 * g1 - g2 * g2) / d;
    let kappa = params.kappa();
    0.5 * (detuning * detuning + 4.0 * kappa * kappa).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelComparison {
    pub kappa: f64,
    pub effective_rabi_frequency: f64,
    pub cascade_rabi_frequency: f64,
    pub phase_rate: f64,
    pub cascade_phase_rate: f64,
    pub max_intermediate_population: f64,
}

impl ModelComparison {
    pub fn rabi_relative_error(&self) -> f64 {
        (self.cascade_rabi_frequency / self.effective_rabi_frequency - 1.0).abs()
    }

    pub fn phase_relative_error(&self) -> f64 {
        (self.cascade_phase_rate / self.phase_rate - 1.0).abs()
    }
}

/// Cross-validates the adiabatic elimination against the full cascade.
pub fn compare_effective_cascade(params: &EffectiveParams, sign: DetuningSign, samples: usize) -> Result<ModelComparison> {
    let cascade = SiteDynamics::new(SiteModel::Cascade(sign), *params)?;
    let omega = effective_rabi_frequency(params);
    let t_max = 2.0 * std::f64::consts::PI / omega;
    let cascade_rabi_frequency = cascade.rabi_frequency(t_max, samples)?;
    let phase_window = std::f64::consts::PI / params.phase_rate().max(f64::MIN_POSITIVE);
    let cascade_phase_rate = cascade.dispersive_rate(phase_window, samples)?;
    let max_intermediate_population = (0..=samples)
        .map(|k| cascade.intermediate_population(t_max * k as f64 / samples as f64))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ModelComparison {
        kappa: params.kappa(),
        effective_rabi_frequency: omega,
        cascade_rabi_frequency,
        phase_rate: params.phase_rate(),
        cascade_phase_rate,
        max_intermediate_population,
    })
}
