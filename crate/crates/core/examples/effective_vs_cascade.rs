//! Adiabatic elimination check: the full three-level cascade against the
//! effective two-photon Hamiltonian as δ grows.

use std::f64::consts::SQRT_2;

use crowgate::experiments::dynamics::compare_effective_cascade;
use crowgate::hamiltonians::{DetuningSign, EffectiveParams};

fn main() -> crowgate::Result<()> {
    let g1 = 1.0 / SQRT_2;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "δ/g2", "Ω cascade", "Ω effective", "rabi err", "phase err");
    for delta in [5.0, 10.0, 20.0, 50.0, 100.0] {
        let p = EffectiveParams::new(g1, SQRT_2 * g1, delta)?;
        let c = compare_effective_cascade(&p, DetuningSign::IntermediateBelow, 400)?;
        println!(
            "{delta:>8.1} {:>12.6e} {:>12.6e} {:>12.3e} {:>12.3e}",
            c.cascade_rabi_frequency,
            c.effective_rabi_frequency,
            c.rabi_relative_error(),
            c.phase_relative_error()
        );
    }
    Ok(())
}
