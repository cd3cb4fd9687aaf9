//! Dual-rail CZ device: coupler, dopant interaction, inverse coupler. The
//! closed-form gate point is exact for the closed forms but not for the
//! effective Hamiltonian; the calibrated point is exact for both.

use crowgate::effective::{calibrated_gate_condition, gate_condition, GateCondition, PaperVariant};
use crowgate::gates::{cz_device_qubits, cz_target, gate_fidelity, truth_table, Circuit, InteractionModel, SecondCoupler};

const LABELS: [&str; 4] = ["00", "01", "10", "11"];

fn show(title: &str, cond: &GateCondition, model: InteractionModel, rail_phase: Option<f64>) -> crowgate::Result<()> {
    let circuit = Circuit::cz_device(model, cond.params(), cond.time, SecondCoupler::Inverse, rail_phase)?;
    let table = truth_table(&circuit, &cz_device_qubits())?;
    let report = gate_fidelity(&table, &cz_target(), true)?;
    println!("{title}");
    for (col, input) in LABELS.iter().enumerate() {
        let a = table.matrix[(col, col)];
        println!(
            "  |{input}⟩ -> {:+.6}{:+.6}i  success {:.8}",
            a.re,
            a.im,
            table.success_probability[col]
        );
    }
    println!("  fidelity {:.10} with local phases {:?}", report.fidelity, report.local_phases);
    Ok(())
}

fn main() -> crowgate::Result<()> {
    let paper = gate_condition(1.0, 50.0)?;
    show("closed forms at g1 = 2√2 g2", &paper, InteractionModel::Paper(PaperVariant::AsPrinted), None)?;
    show("effective Hamiltonian at g1 = 2√2 g2", &paper, InteractionModel::Effective, None)?;

    let calibrated = calibrated_gate_condition(50.0)?;
    show(
        "effective Hamiltonian at g2 = √2 g1, compensated",
        &calibrated,
        InteractionModel::Effective,
        Some(calibrated.local_compensation()),
    )?;
    Ok(())
}
