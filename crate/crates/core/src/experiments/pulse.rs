//! Single-photon wavepacket transport along a coupled-cavity chain.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, ModeSet, StateVector};
use crate::hamiltonians::{crow_hopping_h, ModeGraph};
use crate::propagator::SpectralPropagator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub chain_length: usize,
    pub coupling: f64,
    pub omega: f64,
    pub disorder: f64,
    pub seed: Option<u64>,
    /// Gaussian envelope centre, in sites.
    pub center: f64,
    /// Envelope standard deviation of |ψ|², in sites.
    pub width: f64,
    /// Carrier wavenumber, rad per site.
    pub carrier_k: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl PulseConfig {
    /// Pulse centred in the chain, run until a band-centre packet would be
    /// four widths from the edge.
    pub fn centred(chain_length: usize, coupling: f64, width: f64, carrier_k: f64) -> Self {
        let half = chain_length as f64 / 2.0;
        Self {
            chain_length,
            coupling,
            omega: 0.0,
            disorder: 0.0,
            seed: None,
            center: (chain_length as f64 - 1.0) / 2.0,
            width,
            carrier_k,
            t_max: (half - 4.0 * width).max(1.0) / (2.0 * coupling.abs()),
            steps: 200,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.chain_length < 8 {
            return Err(Error::InvalidParameter("chain length must be at least 8".into()));
        }
        if !(self.width >= 2.0) {
            return Err(Error::InvalidParameter("pulse width must be at least 2 sites".into()));
        }
        if self.disorder > 0.0 && self.seed.is_none() {
            return Err(Error::InvalidParameter("a seed is required when disorder > 0".into()));
        }
        if !(self.t_max > 0.0 && self.steps >= 3) {
            return Err(Error::InvalidParameter("t_max must be positive and steps ≥ 3".into()));
        }
        for v in [self.coupling, self.omega, self.disorder, self.center, self.carrier_k] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("pulse parameters must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseTrajectory {
    pub times: Vec<f64>,
    pub centroids: Vec<f64>,
    /// Site populations per time sample.
    pub populations: Vec<Vec<f64>>,
    /// Fitted centroid velocity, sites per unit time; absent when flagged.
    pub group_velocity: Option<f64>,
    /// −2J sin k.
    pub theory_velocity: f64,
    pub boundary_hit: bool,
    pub fit_window: (f64, f64),
}

impl PulseTrajectory {
    /// CSV header: t, centroid, p_0 … p_{L−1}.
    pub fn csv_header(chain_length: usize) -> Vec<String> {
        let mut h = vec!["t".to_string(), "centroid".to_string()];
        h.extend((0..chain_length).map(|j| format!("p_{j}")));
        h
    }
}

/// Population within this many sites of an edge counts as touching it.
const EDGE_SITES: usize = 2;
const EDGE_POPULATION: f64 = 1e-6;

/// Evolves a Gaussian single-photon packet on the chain and fits its
/// centroid velocity over the middle third of the run.
pub fn crow_pulse_sim(cfg: &PulseConfig) -> Result<PulseTrajectory> {
    cfg.validate()?;
    let l = cfg.chain_length;
    let mut graph = ModeGraph::chain(l, cfg.omega, cfg.coupling);
    if cfg.disorder > 0.0 {
        graph = graph.with_onsite_disorder(cfg.disorder, cfg.seed.unwrap_or_default());
    }
    let basis = enumerate_basis(ModeSet::new(l, 1)?, &[])?;
    let h = crow_hopping_h(&basis, &graph, cfg.omega)?;

    let mut occupation = vec![0usize; l];
    let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dimension()];
    for j in 0..l {
        let x = j as f64 - cfg.center;
        let envelope = (-x * x / (4.0 * cfg.width * cfg.width)).exp();
        occupation[j] = 1;
        let k = basis.find(&occupation, &[]).expect("single-photon state");
        occupation[j] = 0;
        amplitudes[k] = C64::from_polar(envelope, cfg.carrier_k * j as f64);
    }
    let psi0 = StateVector::from_amplitudes(&basis, amplitudes)?.normalized();
    let site_index: Vec<usize> = (0..l)
        .map(|j| {
            occupation[j] = 1;
            let k = basis.find(&occupation, &[]).expect("single-photon state");
            occupation[j] = 0;
            k
        })
        .collect();

    let spectral = SpectralPropagator::new(&h)?;
    let fit_window = (cfg.t_max / 3.0, 2.0 * cfg.t_max / 3.0);
    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut centroids = Vec::with_capacity(cfg.steps + 1);
    let mut populations = Vec::with_capacity(cfg.steps + 1);
    let mut boundary_hit = false;
    for s in 0..=cfg.steps {
        let t = cfg.t_max * s as f64 / cfg.steps as f64;
        let psi = spectral.evolve(&psi0, t)?;
        let p: Vec<f64> = site_index.iter().map(|&k| psi.amplitudes()[k].norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        let centroid = p.iter().enumerate().map(|(j, pj)| j as f64 * pj).sum::<f64>() / total;
        if t <= fit_window.1 {
            let edge: f64 = p[..EDGE_SITES].iter().chain(&p[l - EDGE_SITES..]).sum();
            boundary_hit |= edge > EDGE_POPULATION;
        }
        times.push(t);
        centroids.push(centroid);
        populations.push(p);
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&centroids)
        .filter(|(t, _)| **t >= fit_window.0 && **t <= fit_window.1)
        .map(|(t, c)| (*t, *c))
        .unzip();
    let group_velocity = if boundary_hit { None } else { Some(linear_fit(&xs, &ys).0) };
    Ok(PulseTrajectory {
        times,
        centroids,
        populations,
        group_velocity,
        theory_velocity: -2.0 * cfg.coupling * cfg.carrier_k.sin(),
        boundary_hit,
        fit_window,
    })
}

/// Least-squares line through (x, y); returns (slope, intercept).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn band_centre_velocity() {
        let cfg = PulseConfig::centred(120, 1.0, 4.0, FRAC_PI_2);
        let r = crow_pulse_sim(&cfg).unwrap();
        assert!(!r.boundary_hit);
        let v = r.group_velocity.unwrap();
        assert!((v / r.theory_velocity - 1.0).abs() < 0.05, "{v} vs {}", r.theory_velocity);
    }

    #[test]
    fn band_edge_is_stationary() {
        let cfg = PulseConfig::centred(120, 1.0, 4.0, 0.0);
        let r = crow_pulse_sim(&cfg).unwrap();
        assert!(r.group_velocity.unwrap().abs() < 1e-8);
    }

    #[test]
    fn boundary_flag() {
        let mut cfg = PulseConfig::centred(40, 1.0, 3.0, FRAC_PI_2);
        cfg.t_max *= 4.0;
        let r = crow_pulse_sim(&cfg).unwrap();
        assert!(r.boundary_hit && r.group_velocity.is_none());
    }

    #[test]
    fn validation() {
        assert!(crow_pulse_sim(&PulseConfig::centred(6, 1.0, 2.0, 0.0)).is_err());
        assert!(crow_pulse_sim(&PulseConfig::centred(40, 1.0, 1.0, 0.0)).is_err());
        let mut cfg = PulseConfig::centred(40, 1.0, 3.0, 0.0);
        cfg.disorder = 0.1;
        assert!(crow_pulse_sim(&cfg).is_err());
    }
}
