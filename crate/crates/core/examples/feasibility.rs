use crowgate::experiments::{params_estimate, DeviceParams};

fn main() -> crowgate::Result<()> {
    let device = DeviceParams {
        q: 1e6,
        omega: DeviceParams::omega_from_wavelength(852e-9),
        g: 3e9,
        n: 100.0,
        delta: 3e10,
        v_g: 1e-4,
        length: 30.0,
        lattice_constant: 0.5e-6,
    };
    let report = params_estimate(&device)?;
    println!("T1 = Q/ω = {:.4e} s", report.t1);
    for e in &report.estimates {
        println!("{:<28} {:>11.4e} s  {:>8.4} T1  {:?}", e.name, e.seconds, e.fraction_of_t1, e.verdict);
    }
    Ok(())
}
