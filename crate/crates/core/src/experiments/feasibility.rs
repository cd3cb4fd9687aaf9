//! Order-of-magnitude feasibility estimates in SI units.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Coherence time quoted for Q = 10⁶.
pub const QUOTED_T1: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub q: f64,
    /// Photon angular frequency, rad/s.
    pub omega: f64,
    /// Dopant–photon coupling, rad/s.
    pub g: f64,
    /// Dopants per cavity.
    pub n: f64,
    /// Dispersive detuning, rad/s.
    pub delta: f64,
    /// Group velocity as a fraction of c.
    pub v_g: f64,
    /// Device length in lattice constants.
    pub length: f64,
    /// Lattice constant, m.
    pub lattice_constant: f64,
}

impl DeviceParams {
    /// Angular frequency of light at `wavelength` metres.
    pub fn omega_from_wavelength(wavelength: f64) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q", self.q),
            ("omega", self.omega),
            ("g", self.g),
            ("n", self.n),
            ("delta", self.delta),
            ("v_g", self.v_g),
            ("length", self.length),
            ("lattice_constant", self.lattice_constant),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// At most a tenth of T₁.
    Pass,
    Warn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeEstimate {
    pub name: String,
    pub seconds: f64,
    pub fraction_of_t1: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub inputs: DeviceParams,
    /// Q/ω.
    pub t1: f64,
    pub quoted_t1: f64,
    pub estimates: Vec<TimeEstimate>,
}

impl FeasibilityReport {
    pub fn get(&self, name: &str) -> Option<&TimeEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Coherence time, dispersive π-phase times and two-photon gate times under
/// both collective-coupling conventions, and the photon crossing time.
pub fn params_estimate(d: &DeviceParams) -> Result<FeasibilityReport> {
    d.validate()?;
    let t1 = d.q / d.omega;
    let g2 = d.g * d.g;
    let sqrt_n = d.n.sqrt();
    let times = [
        ("pi_phase_time_n", PI * d.delta / (d.n * g2)),
        ("pi_phase_time_sqrt_n", PI * d.delta / (sqrt_n * g2)),
        ("two_photon_gate_time_n", PI * d.delta / (SQRT_2 * d.n * g2)),
        ("two_photon_gate_time_sqrt_n", PI * d.delta / (SQRT_2 * sqrt_n * g2)),
        ("crossing_time", d.length * d.lattice_constant / (d.v_g * SPEED_OF_LIGHT)),
    ];
    let estimates = times
        .into_iter()
        .map(|(name, seconds)| TimeEstimate {
            name: name.to_string(),
            seconds,
            fraction_of_t1: seconds / t1,
            verdict: if seconds <= t1 / 10.0 { Verdict::Pass } else { Verdict::Warn },
        })
        .collect();
    Ok(FeasibilityReport { inputs: *d, t1, quoted_t1: QUOTED_T1, estimates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> DeviceParams {
        DeviceParams {
            q: 1e6,
            omega: DeviceParams::omega_from_wavelength(852e-9),
            g: 3e9,
            n: 100.0,
            delta: 3e10,
            v_g: 1e-4,
            length: 30.0,
            lattice_constant: 0.5e-6,
        }
    }

    #[test]
    fn quoted_numbers() {
        let r = params_estimate(&device()).unwrap();
        assert!((r.t1 - 0.452e-9).abs() < 0.005e-9, "{}", r.t1);
        assert!(r.t1 / QUOTED_T1 > 1.0 / 3.0);
        let pi_time = r.get("pi_phase_time_n").unwrap().seconds;
        assert!((pi_time - 1.047e-10).abs() < 0.001e-10);
        assert!((pi_time / 1e-10 - 1.0).abs() < 0.2);
        assert!((r.get("pi_phase_time_sqrt_n").unwrap().seconds / pi_time - 10.0).abs() < 1e-12);
        assert!((r.get("crossing_time").unwrap().seconds - 0.5e-9).abs() < 1e-3 * 0.5e-9);
        assert_eq!(r.get("pi_phase_time_n").unwrap().verdict, Verdict::Warn);
    }

    #[test]
    fn rejects_non_positive() {
        let mut d = device();
        d.n = 0.0;
        assert!(params_estimate(&d).is_err());
    }
}
