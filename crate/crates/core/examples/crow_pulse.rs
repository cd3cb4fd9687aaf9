//! A Gaussian single-photon pulse on a coupled-resonator chain. Prints the
//! fitted group velocity against −2J sin k.

use std::f64::consts::FRAC_PI_2;

use crowgate::experiments::{crow_pulse_sim, PulseConfig};

fn main() -> crowgate::Result<()> {
    for k in [FRAC_PI_2, 1.0, 0.5] {
        let cfg = PulseConfig::centred(120, 1.0, 4.0, k);
        let run = crow_pulse_sim(&cfg)?;
        let v = run.group_velocity.unwrap_or(f64::NAN);
        println!(
            "k = {k:.4}  v_fit = {v:+.5}  v_theory = {:+.5}  boundary hit: {}",
            run.theory_velocity, run.boundary_hit
        );
    }

    let mut disordered = PulseConfig::centred(120, 1.0, 4.0, FRAC_PI_2);
    disordered.disorder = 0.5;
    disordered.seed = Some(3);
    let run = crow_pulse_sim(&disordered)?;
    let last = run.centroids.last().copied().unwrap_or(f64::NAN);
    println!("with disorder 0.5J, final centroid {last:.3} (start {:.1})", disordered.center);
    Ok(())
}
