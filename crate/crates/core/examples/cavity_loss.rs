//! No-jump evolution with cavity decay: a photon hopping between two lossy
//! cavities survives with probability e^{−γt}.

use crowgate::fock::{enumerate_basis, ModeSet, StateVector};
use crowgate::hamiltonians::{crow_hopping_h, decay_rate, loss_term, ModeGraph};
use crowgate::propagator::Propagator;

fn main() -> crowgate::Result<()> {
    // dimensionless: ω = 1000, Q = 5000
    let gamma = decay_rate(1000.0, 5000.0);
    let basis = enumerate_basis(ModeSet::new(2, 1)?, &[])?;
    let h = crow_hopping_h(&basis, &ModeGraph::chain(2, 0.0, 1.0), 0.0)? + loss_term(&basis, &[gamma, gamma])?;
    let psi0 = StateVector::from_labels(&basis, &[1, 0], &[])?;

    println!("γ = {gamma}");
    println!("{:>6} {:>12} {:>12} {:>10} {:>10}", "t", "survival", "e^(-γt)", "P(left)", "P(right)");
    for k in 0..=10 {
        let t = k as f64;
        let psi = Propagator::default().evolve(&h, &psi0, t)?;
        println!(
            "{t:>6.1} {:>12.8} {:>12.8} {:>10.6} {:>10.6}",
            psi.norm_sqr(),
            (-gamma * t).exp(),
            psi.amplitude(&[1, 0], &[]).norm_sqr(),
            psi.amplitude(&[0, 1], &[]).norm_sqr()
        );
    }
    Ok(())
}
