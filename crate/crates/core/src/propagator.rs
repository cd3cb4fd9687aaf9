//! Time evolution e^{−iHt}ψ for piecewise-constant Hamiltonians.
//!
//! Small problems go through a dense route (Hermitian eigendecomposition, or
//! a Padé matrix exponential for non-Hermitian generators). Larger ones use
//! an Arnoldi–Krylov expansion with adaptive sub-stepping and an a-posteriori
//! error estimate.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{same_basis, HybridBasis, StateVector};
use crate::hamiltonians::Timeline;
use crate::operator::{OperatorMatrix, Symmetry};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense below `dense_cap`, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// Propagation settings.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub method: Method,
    pub dense_cap: usize,
    pub krylov_dim: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Top-layer population above which a truncation warning is raised.
    pub leakage_threshold: f64,
    /// Extra leakage samples taken inside each segment.
    pub leakage_substeps: usize,
    /// The photon cap cannot be reached from the initial sector, so the
    /// top layer is physical rather than a truncation artefact.
    pub truncation_exact: bool,
}

impl Default for Propagator {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            dense_cap: 4096,
            krylov_dim: 30,
            tolerance: 1e-12,
            max_iterations: 100_000,
            leakage_threshold: 1e-8,
            leakage_substeps: 4,
            truncation_exact: false,
        }
    }
}

/// Outcome of [`Propagator::evolve_schedule`].
#[derive(Clone, Debug)]
pub struct EvolutionReport {
    pub state: StateVector,
    /// Final squared norm.
    pub survival_probability: f64,
    /// Squared norm after each segment.
    pub segment_norms: Vec<f64>,
    /// Largest top-photon-layer population seen along the trajectory.
    pub leakage: f64,
    pub leakage_warning: bool,
}

/// e^{−iHt}ψ with default settings.
pub fn evolve(h: &OperatorMatrix, psi: &StateVector, t: f64) -> Result<StateVector> {
    Propagator::default().evolve(h, psi, t)
}

/// Sequential evolution through a timeline with default settings.
pub fn evolve_schedule(timeline: &Timeline, psi: &StateVector) -> Result<EvolutionReport> {
    Propagator::default().evolve_schedule(timeline, psi)
}

impl Propagator {
    pub fn dense() -> Self {
        Self { method: Method::Dense, ..Self::default() }
    }

    pub fn krylov(krylov_dim: usize) -> Self {
        Self { method: Method::Krylov, krylov_dim, ..Self::default() }
    }

    pub fn evolve(&self, h: &OperatorMatrix, psi: &StateVector, t: f64) -> Result<StateVector> {
        same_basis(h.basis(), psi.basis())?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("evolution time {t}")));
        }
        if t == 0.0 || h.is_zero() {
            return Ok(psi.clone());
        }
        let use_dense = match self.method {
            Method::Dense => true,
            Method::Krylov => false,
            Method::Auto => h.dimension() <= self.dense_cap,
        };
        let out = if use_dense {
            dense_evolve(h, psi.amplitudes(), t)
        } else {
            krylov_evolve(h, psi.amplitudes(), t, self)?
        };
        StateVector::from_amplitudes(psi.basis(), out)
    }

    pub fn evolve_schedule(&self, timeline: &Timeline, psi: &StateVector) -> Result<EvolutionReport> {
        let mut state = psi.clone();
        let mut leakage = state.top_layer_population();
        let mut segment_norms = Vec::with_capacity(timeline.len());
        for (duration, h) in timeline {
            let pieces = self.leakage_substeps + 1;
            if self.leakage_substeps > 0 && h.is_hermitian() && h.dimension() <= self.dense_cap {
                let spectral = SpectralPropagator::new(h)?;
                let start = state.clone();
                for k in 1..=pieces {
                    state = spectral.evolve(&start, duration * k as f64 / pieces as f64)?;
                    leakage = leakage.max(state.top_layer_population());
                }
            } else {
                let dt = duration / pieces as f64;
                for _ in 0..pieces {
                    state = self.evolve(h, &state, dt)?;
                    leakage = leakage.max(state.top_layer_population());
                }
            }
            segment_norms.push(state.norm_sqr());
        }
        let leakage_warning = !self.truncation_exact && leakage > self.leakage_threshold;
        if leakage_warning {
            log::warn!(
                "top photon layer reached population {leakage:.3e}; the photon cap may be too low"
            );
        }
        Ok(EvolutionReport {
            survival_probability: state.norm_sqr(),
            state,
            segment_norms,
            leakage,
            leakage_warning,
        })
    }
}

/// Cached eigendecomposition of a Hermitian operator for repeated evolution
/// times.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    basis: Arc<HybridBasis>,
    vectors: DMatrix<C64>,
    values: DVector<f64>,
}

impl SpectralPropagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if h.symmetry() != Symmetry::Hermitian {
            return Err(Error::InvalidParameter(
                "spectral propagation needs a Hermitian operator".into(),
            ));
        }
        let eig = h.to_dense().symmetric_eigen();
        Ok(Self { basis: Arc::clone(h.basis()), vectors: eig.eigenvectors, values: eig.eigenvalues })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        same_basis(&self.basis, psi.basis())?;
        let x = DVector::from_column_slice(psi.amplitudes());
        let mut coeffs = self.vectors.ad_mul(&x);
        for (c, &e) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        let out = &self.vectors * coeffs;
        StateVector::from_amplitudes(&self.basis, out.as_slice().to_vec())
    }
}

fn dense_evolve(h: &OperatorMatrix, x: &[C64], t: f64) -> Vec<C64> {
    let v = DVector::from_column_slice(x);
    if h.is_hermitian() {
        let eig = h.to_dense().symmetric_eigen();
        let mut coeffs = eig.eigenvectors.ad_mul(&v);
        for (c, &e) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        (&eig.eigenvectors * coeffs).as_slice().to_vec()
    } else {
        let generator = h.to_dense() * C64::new(0.0, -t);
        (generator.exp() * v).as_slice().to_vec()
    }
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Arnoldi approximation of e^{−iHt}x with adaptive sub-steps.
fn krylov_evolve(h: &OperatorMatrix, x: &[C64], t: f64, cfg: &Propagator) -> Result<Vec<C64>> {
    let n = h.dimension();
    let m = cfg.krylov_dim.clamp(1, n);
    let tol = cfg.tolerance;
    let minus_i = C64::new(0.0, -1.0);

    // ∞-norm of −iH
    let anorm = {
        let mut rows = vec![0.0f64; n];
        for (r, _, v) in h.entries() {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max).max(f64::MIN_POSITIVE)
    };
    let breakdown = 1e-14 * anorm;

    let mut w = x.to_vec();
    let mut t_now = 0.0;
    let mut iterations = 0usize;
    let beta0 = norm(&w);
    if beta0 == 0.0 {
        return Ok(w);
    }
    let mp1 = (m + 1) as f64;
    let fact = (mp1 / std::f64::consts::E).powf(mp1) * (2.0 * std::f64::consts::PI * mp1).sqrt();
    let mut tau = ((fact * tol) / (4.0 * beta0 * anorm)).powf(1.0 / m as f64) / anorm;
    tau = tau.min(t);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut scratch = vec![ZERO; n];
    while t_now < t {
        let beta = norm(&w);
        if beta == 0.0 {
            break;
        }
        basis.clear();
        basis.push(w.iter().map(|a| a / beta).collect());
        let mut hess = DMatrix::<C64>::zeros(m + 2, m + 2);
        let mut krylov_size = m;
        let mut happy = false;
        let mut avnorm = 0.0;
        for j in 0..m {
            iterations += 1;
            h.apply_into(&basis[j], &mut scratch);
            let mut p: Vec<C64> = scratch.iter().map(|a| a * minus_i).collect();
            for i in 0..=j {
                let coef: C64 = basis[i].iter().zip(&p).map(|(a, b)| a.conj() * b).sum();
                hess[(i, j)] = coef;
                for (pk, bk) in p.iter_mut().zip(&basis[i]) {
                    *pk -= coef * bk;
                }
            }
            let s = norm(&p);
            if s < breakdown {
                happy = true;
                krylov_size = j + 1;
                tau = t - t_now;
                break;
            }
            hess[(j + 1, j)] = C64::new(s, 0.0);
            basis.push(p.into_iter().map(|a| a / s).collect());
        }
        if !happy {
            h.apply_into(&basis[m], &mut scratch);
            avnorm = norm(&scratch);
            // augmented block for the error estimate
            hess[(m + 1, m)] = C64::new(1.0, 0.0);
        }

        loop {
            iterations += 1;
            if iterations > cfg.max_iterations {
                return Err(Error::KrylovNonConvergence { iterations });
            }
            if happy {
                let sub = hess.view((0, 0), (krylov_size, krylov_size)) * C64::new(tau, 0.0);
                let f = sub.exp();
                let mut next = vec![ZERO; n];
                for (i, b) in basis.iter().take(krylov_size).enumerate() {
                    let c = f[(i, 0)] * beta;
                    for (o, v) in next.iter_mut().zip(b) {
                        *o += c * v;
                    }
                }
                w = next;
                t_now = t;
                break;
            }
            let f = (hess.clone() * C64::new(tau, 0.0)).exp();
            let phi1 = beta * f[(m, 0)].norm();
            let phi2 = beta * f[(m + 1, 0)].norm() * avnorm;
            let err = if phi1 > 10.0 * phi2 {
                phi2
            } else if phi1 > phi2 {
                phi1 * phi2 / (phi1 - phi2)
            } else {
                phi1
            };
            let allowed = tol * tau / t;
            if err <= 1.2 * allowed {
                let mut next = vec![ZERO; n];
                for (i, b) in basis.iter().take(m + 1).enumerate() {
                    let c = f[(i, 0)] * beta;
                    for (o, v) in next.iter_mut().zip(b) {
                        *o += c * v;
                    }
                }
                w = next;
                t_now += tau;
                let grow = 0.9 * (allowed / err.max(f64::MIN_POSITIVE)).powf(1.0 / m as f64);
                tau = (tau * grow.min(5.0)).min(t - t_now);
                break;
            }
            let shrink = 0.9 * (allowed / err).powf(1.0 / m as f64);
            tau *= shrink.clamp(0.2, 0.9);
            if tau <= f64::EPSILON * t {
                return Err(Error::KrylovNonConvergence { iterations });
            }
        }
    }
    Ok(w)
}

/// ⟨ψ|A|ψ⟩, real for Hermitian A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expectation {
    Real(f64),
    Complex(C64),
}

impl Expectation {
    pub fn re(self) -> f64 {
        match self {
            Expectation::Real(x) => x,
            Expectation::Complex(z) => z.re,
        }
    }

    pub fn value(self) -> C64 {
        match self {
            Expectation::Real(x) => C64::new(x, 0.0),
            Expectation::Complex(z) => z,
        }
    }
}

pub fn expectation(a: &OperatorMatrix, psi: &StateVector) -> Result<Expectation> {
    let value = psi.inner(&a.apply(psi)?)?;
    if a.is_hermitian() {
        if value.im.abs() > 1e-10 * value.re.abs().max(1.0) {
            return Err(Error::NonRealExpectation(value.im));
        }
        Ok(Expectation::Real(value.re))
    } else {
        Ok(Expectation::Complex(value))
    }
}
