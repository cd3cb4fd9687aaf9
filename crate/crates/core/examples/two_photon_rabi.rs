//! A photon pair in one cavity Rabi-cycles into the doubly excited dopant
//! while a single photon only picks up a dispersive phase.

use std::f64::consts::PI;

use crowgate::effective::calibrated_gate_condition;
use crowgate::experiments::dynamics::{SiteDynamics, SiteModel};

fn main() -> crowgate::Result<()> {
    let cond = calibrated_gate_condition(1.0)?;
    let p = cond.params();
    let site = SiteDynamics::new(SiteModel::Effective, p)?;
    println!("g1 = {:.4}  g2 = {:.4}  δ = {}  κ = {:.6e}", p.g1(), p.g2(), p.delta(), p.kappa());

    println!("{:>8} {:>10} {:>10} {:>12}", "κt/π", "P(g,2)", "P(e,0)", "arg⟨g,1⟩");
    for k in 0..=8 {
        let t = cond.time * k as f64 / 4.0;
        let (pair, excited) = site.amplitudes(2, t)?;
        let (single, _) = site.amplitudes(1, t)?;
        println!(
            "{:>8.3} {:>10.6} {:>10.6} {:>12.6}",
            p.kappa() * t / PI,
            pair.norm_sqr(),
            excited.norm_sqr(),
            single.arg()
        );
    }
    let omega = site.rabi_frequency(2.0 * cond.time, 400)?;
    println!("fitted Rabi frequency {omega:.9e}, κ = {:.9e}", p.kappa());
    Ok(())
}
