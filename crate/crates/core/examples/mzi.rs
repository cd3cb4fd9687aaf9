//! Mach-Zehnder interferometer built from two 50:50 couplers, plus the
//! Hong-Ou-Mandel dip of a single coupler.

use std::f64::consts::{FRAC_PI_4, TAU};

use crowgate::gates::{mzi_probabilities, mzi_qubit, run_circuit, Circuit, CircuitInput};
use crowgate::fock::{enumerate_basis, ModeSet, StateVector};
use crowgate::hamiltonians::{crow_hopping_h, ModeGraph};
use crowgate::propagator::Propagator;

fn main() -> crowgate::Result<()> {
    println!("{:>8} {:>10} {:>10} {:>10}", "phi", "p0", "p1", "p0 theory");
    for k in 0..=8 {
        let phi = TAU * k as f64 / 8.0;
        let run = run_circuit(&Circuit::mzi(phi)?, &[mzi_qubit()], &CircuitInput::Label(vec![0]))?;
        let (p0, _) = mzi_probabilities(phi);
        println!(
            "{phi:>8.4} {:>10.6} {:>10.6} {p0:>10.6}",
            run.output[0].norm_sqr(),
            run.output[1].norm_sqr()
        );
    }

    // |1,1⟩ through a balanced coupler never leaves one photon per mode
    let basis = enumerate_basis(ModeSet::new(2, 2)?, &[])?;
    let h = crow_hopping_h(&basis, &ModeGraph::chain(2, 0.0, 1.0), 0.0)?;
    let out = Propagator::dense().evolve(&h, &StateVector::from_labels(&basis, &[1, 1], &[])?, FRAC_PI_4)?;
    println!(
        "HOM: P(1,1) = {:.2e}, P(2,0) = {:.4}, P(0,2) = {:.4}",
        out.amplitude(&[1, 1], &[]).norm_sqr(),
        out.amplitude(&[2, 0], &[]).norm_sqr(),
        out.amplitude(&[0, 2], &[]).norm_sqr()
    );
    Ok(())
}
