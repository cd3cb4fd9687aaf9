//! Search coupling ratio and Rabi angle for the best CZ fidelity.

use crowgate::gates::{cz_fidelity_at, optimize_cz, CzSearchSpace, InteractionModel};

fn main() -> crowgate::Result<()> {
    let delta = 1.0;
    let best = optimize_cz(delta, &CzSearchSpace::default())?;
    println!(
        "F = {:.12} at g2/g1 = {:.8}, Ω_R t = {:.8} ({} evaluations)",
        best.report.fidelity, best.ratio_g2_over_g1, best.rabi_angle, best.evaluations
    );
    println!("g1 = {:.6e}, g2 = {:.6e}, t = {:.6e}", best.g1, best.g2, best.time);

    println!("\nfidelity along g2/g1 at Ω_R t = π");
    for r in [0.5, 1.0, 1.2, std::f64::consts::SQRT_2, 1.6, 2.0] {
        let report = cz_fidelity_at(delta, r, std::f64::consts::PI, InteractionModel::Effective, true)?;
        println!("  {r:.4}  {:.8}", report.fidelity);
    }
    Ok(())
}
