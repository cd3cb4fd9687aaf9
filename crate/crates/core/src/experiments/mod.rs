//! Named, configuration-driven experiments and their report files.
//!
//! Every run writes `report.json` (sorted keys: echoed config, results,
//! checks, software version) plus fixed-schema CSV tables and SVG plots.
//! Gate experiments work in natural units with δ = 1 unless configured;
//! feasibility estimates are in SI units.

pub mod config;
pub mod dynamics;
pub mod feasibility;
pub mod output;
pub mod pulse;

use std::f64::consts::{PI, SQRT_2, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::effective::wrap_phase;
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis_with, BasisOptions, DopantLevelSet, ModeSet};
use crate::gates::{
    cz_device_qubits, cz_fidelity_at, cz_target, gate_fidelity, mzi_probabilities, mzi_qubit, optimize_cz,
    Circuit, CircuitInput, CompiledCircuit, CzSearchSpace, InteractionModel,
};
use crate::hamiltonians::{DetuningSign, EffectiveParams};

pub use config::{ConditionChoice, ExperimentConfig, ModelChoice, Params, Search, SignChoice, Sweep, EXPERIMENTS};
pub use feasibility::{params_estimate, DeviceParams, FeasibilityReport};
pub use output::{Cell, Plot, Table};
pub use pulse::{crow_pulse_sim, PulseConfig, PulseTrajectory};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses the global pool.
    pub threads: Option<usize>,
    pub allow_nonperturbative: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Runtime,
    ConfigError,
    ToleranceFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Runtime => 1,
            ExitStatus::ConfigError => 2,
            ExitStatus::ToleranceFailure => 3,
        }
    }

    /// Exit status for a failed run.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Io(_) | Error::Output(_) => ExitStatus::Runtime,
            Error::KrylovNonConvergence { .. } | Error::NonRealExpectation(_) => ExitStatus::ToleranceFailure,
            _ => ExitStatus::ConfigError,
        }
    }
}

/// A numerical acceptance check recorded in the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.to_string(), value, limit, pass: value <= limit }
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.to_string(), value, limit, pass: value >= limit }
    }
}

/// Results of one experiment before anything is written.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub results: Value,
    pub tables: Vec<Table>,
    /// Plots and the index of the table each is drawn from.
    pub plots: Vec<(Plot, usize)>,
    pub checks: Vec<Check>,
    pub nonperturbative: bool,
}

impl ExperimentOutput {
    fn new(results: Value) -> Self {
        Self { results, tables: Vec::new(), plots: Vec::new(), checks: Vec::new(), nonperturbative: false }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub report: Value,
    pub files: Vec<String>,
}

/// Runs an experiment and writes its files into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let output = execute(config, opts)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for t in &output.tables {
        files.push(t.write_csv(out_dir)?);
    }
    for (plot, k) in &output.plots {
        files.push(plot.write(&output.tables[*k], out_dir)?);
    }
    let status = if output.passed() { ExitStatus::Success } else { ExitStatus::ToleranceFailure };
    files.push("report.json".into());
    let report = json!({
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment,
        "config": config,
        "options": { "allow_nonperturbative": opts.allow_nonperturbative },
        "nonperturbative": output.nonperturbative,
        "results": output.results,
        "checks": output.checks,
        "status": if status == ExitStatus::Success { "ok" } else { "tolerance-failure" },
        "files": files,
    });
    output::write_json(&report, &out_dir.join("report.json"))?;
    Ok(RunOutcome { status, report, files })
}

/// Loads `config_path` and runs it; the output directory falls back to the
/// one named in the config, then to `./out`.
pub fn run_experiment_file(config_path: &Path, out_dir: Option<&Path>, opts: &RunOptions) -> Result<RunOutcome> {
    let config = ExperimentConfig::load(config_path)?;
    let dir = out_dir.map(Path::to_path_buf).or_else(|| config.output.clone()).unwrap_or_else(|| "out".into());
    run_experiment(&config, &dir, opts)
}

/// Runs an experiment in memory.
pub fn execute(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let run = || match config.experiment.as_str() {
        "basis-info" => basis_info(config),
        "mzi-sweep" => mzi_sweep(config),
        "two-photon-rabi" => two_photon_rabi(config, opts),
        "cz-truth-table" => cz_truth_table(config, opts),
        "cz-fidelity-sweep" => cz_fidelity_sweep(config, opts),
        "optimize-cz" => optimize(config, opts),
        "params-estimate" => estimate(config),
        "crow-pulse" => crow_pulse(config),
        "effective-vs-cascade" => effective_vs_cascade(config, opts),
        other => Err(Error::UnknownExperiment(other.to_string())),
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// One experiment's description and CSV schemas for `list-experiments`.
pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub csv: &'static [(&'static str, &'static str)],
}

pub fn catalogue() -> [ExperimentInfo; 9] {
    [
        ExperimentInfo {
            name: "basis-info",
            summary: "enumerate a hybrid Fock basis (params: modes, n_max, cascade_dopants, two_level_dopants, excitation_cap)",
            csv: &[("basis.csv", "index,label,photons,excitations")],
        },
        ExperimentInfo {
            name: "mzi-sweep",
            summary: "phase sweep of the compiled single-qubit interferometer (sweep.parameter = phi)",
            csv: &[("mzi.csv", "phi,p0,p1,p0_theory,p1_theory")],
        },
        ExperimentInfo {
            name: "two-photon-rabi",
            summary: "|g,2> -> |e,0> oscillation and fitted Rabi frequency (params: g1, g2, delta, t_max, steps)",
            csv: &[("rabi.csv", "t,p_g2,p_e0")],
        },
        ExperimentInfo {
            name: "cz-truth-table",
            summary: "truth table and CZ fidelity of the two-qubit device (params: condition, g1, g2, delta, time, compensate, second_coupler)",
            csv: &[("truth_table.csv", "input,output,re,im,abs2")],
        },
        ExperimentInfo {
            name: "cz-fidelity-sweep",
            summary: "CZ fidelity along ratio (g2/g1) or rabi_angle (kappa t) (params: delta, ratio, rabi_angle, local_phases)",
            csv: &[("cz_sweep.csv", "value,fidelity,min_success_probability,max_leakage")],
        },
        ExperimentInfo {
            name: "optimize-cz",
            summary: "grid plus simplex calibration of g2/g1 and kappa t (params: delta; [search] ratio, rabi_angle, grid, local_phases, max_evaluations)",
            csv: &[("optimize_cz.csv", "parameter,value")],
        },
        ExperimentInfo {
            name: "params-estimate",
            summary: "SI feasibility estimate (params: q, omega or wavelength, g, n, delta, v_g, length, lattice_constant)",
            csv: &[("feasibility.csv", "quantity,seconds,fraction_of_t1,verdict")],
        },
        ExperimentInfo {
            name: "crow-pulse",
            summary: "single-photon packet on a CROW chain (params: chain_length, j, omega, disorder, seed, center, width, carrier_k, t_max, steps)",
            csv: &[("crow_pulse.csv", "t,centroid,p_0,...,p_{L-1}")],
        },
        ExperimentInfo {
            name: "effective-vs-cascade",
            summary: "full cascade against the adiabatically eliminated model (params: g1, g2, delta, detuning_sign, steps)",
            csv: &[
                ("effective_vs_cascade.csv", "quantity,effective,cascade,relative_error"),
                ("trace.csv", "t,p_e0_effective,p_e0_cascade,p_h1_cascade"),
            ],
        },
    ]
}

fn missing(field: &str) -> Error {
    Error::Config { path: format!("params.{field}"), message: "required for this experiment".into() }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Config { path: field.to_string(), message: message.into() }
}

/// Couplings, detuning and interaction time for the gate experiments.
#[derive(Clone, Copy, Debug, Serialize)]
struct GatePoint {
    #[serde(skip)]
    params: EffectiveParams,
    g1: f64,
    g2: f64,
    delta: f64,
    time: f64,
    kappa_t: f64,
}

fn gate_point(p: &Params, opts: &RunOptions, out: &mut bool) -> Result<GatePoint> {
    let delta = p.delta.unwrap_or(1.0);
    if !(delta.is_finite() && delta != 0.0) {
        return Err(invalid("params.delta", "δ must be finite and non-zero"));
    }
    let condition = p.condition.unwrap_or_default();
    let scale = delta.abs() / 50.0;
    let (g1, g2) = match (p.g1, p.g2, condition) {
        (Some(a), Some(b), _) => (a, b),
        (Some(a), None, ConditionChoice::Paper) => (a, a / (2.0 * SQRT_2)),
        (Some(a), None, ConditionChoice::Calibrated) => (a, SQRT_2 * a),
        (None, Some(b), ConditionChoice::Paper) => (2.0 * SQRT_2 * b, b),
        (None, Some(b), ConditionChoice::Calibrated) => (b / SQRT_2, b),
        (None, None, ConditionChoice::Paper) => (2.0 * SQRT_2 * scale, scale),
        (None, None, ConditionChoice::Calibrated) => (scale, SQRT_2 * scale),
    };
    let params = EffectiveParams::new(g1, g2, delta).map_err(|e| invalid("params", e.to_string()))?;
    check_regime(&params, opts, out)?;
    let time = match p.time {
        Some(t) if t >= 0.0 && t.is_finite() => t,
        Some(_) => return Err(invalid("params.time", "must be finite and ≥ 0")),
        None if params.kappa() > 0.0 => PI / params.kappa(),
        None => return Err(missing("time")),
    };
    Ok(GatePoint { params, g1, g2, delta, time, kappa_t: params.kappa() * time })
}

fn check_regime(params: &EffectiveParams, opts: &RunOptions, out: &mut bool) -> Result<()> {
    if !params.valid_regime() {
        if !opts.allow_nonperturbative {
            return Err(invalid(
                "params.delta",
                format!(
                    "|δ| = {} is below 10·max(g1, g2) = {}; pass --allow-nonperturbative to run anyway",
                    params.delta().abs(),
                    10.0 * params.g1().max(params.g2())
                ),
            ));
        }
        *out = true;
    }
    Ok(())
}

fn sign(p: &Params) -> DetuningSign {
    p.detuning_sign.unwrap_or_default().into()
}

fn steps(p: &Params, default: usize) -> Result<usize> {
    match p.steps {
        Some(s) if s >= 3 => Ok(s),
        Some(_) => Err(invalid("params.steps", "must be at least 3")),
        None => Ok(default),
    }
}

fn basis_info(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = &config.params;
    let modes = p.modes.unwrap_or(1);
    let n_max = p.n_max.unwrap_or(2);
    let mut dopants = vec![DopantLevelSet::cascade(); p.cascade_dopants.unwrap_or(0)];
    dopants.extend(vec![DopantLevelSet::two_level(); p.two_level_dopants.unwrap_or(0)]);
    let opts = BasisOptions { excitation_cap: p.excitation_cap.unwrap_or(false), ..BasisOptions::default() };
    let basis = enumerate_basis_with(
        ModeSet::new(modes, n_max).map_err(|e| invalid("params.modes", e.to_string()))?,
        &dopants,
        opts,
    )
    .map_err(|e| invalid("params", e.to_string()))?;
    let mut table = Table::new("basis", &["index", "label", "photons", "excitations"]);
    for (k, s) in basis.states().iter().enumerate() {
        table.push(vec![k.into(), s.to_string().into(), s.photons().into(), basis.excitations(k).into()]);
    }
    let mut out = ExperimentOutput::new(json!({
        "dimension": basis.dimension(),
        "modes": modes,
        "n_max_total": n_max,
        "dopants": dopants.len(),
    }));
    out.tables.push(table);
    Ok(out)
}

fn mzi_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let sweep = config.sweep.clone().unwrap_or(Sweep { parameter: "phi".into(), start: 0.0, stop: TAU, points: 64 });
    if sweep.parameter != "phi" {
        return Err(invalid("sweep.parameter", "mzi-sweep sweeps `phi`"));
    }
    if sweep.points == 0 {
        return Err(invalid("sweep.points", "must be positive"));
    }
    let rows = sweep
        .values()
        .into_par_iter()
        .map(|phi| {
            let run = crate::gates::run_circuit(&Circuit::mzi(phi)?, &[mzi_qubit()], &CircuitInput::Label(vec![0]))?;
            let (t0, t1) = mzi_probabilities(phi);
            Ok([phi, run.output[0].norm_sqr(), run.output[1].norm_sqr(), t0, t1])
        })
        .collect::<Result<Vec<[f64; 5]>>>()?;
    let mut table = Table::new("mzi", &["phi", "p0", "p1", "p0_theory", "p1_theory"]);
    let mut max_error: f64 = 0.0;
    for r in &rows {
        max_error = max_error.max((r[1] - r[3]).abs()).max((r[2] - r[4]).abs());
        table.push(r.iter().map(|&x| x.into()).collect());
    }
    let mut out = ExperimentOutput::new(json!({ "points": rows.len(), "max_error": max_error }));
    out.checks.push(Check::at_most("max |p - theory|", max_error, 1e-8));
    out.tables.push(table);
    out.plots.push((Plot::new("mzi", "MZI output probabilities", "phi", &["p0", "p1", "p0_theory", "p1_theory"]), 0));
    Ok(out)
}

fn site_model(model: ModelChoice, sign: DetuningSign) -> dynamics::SiteModel {
    use crate::effective::PaperVariant;
    match model {
        ModelChoice::Paper => dynamics::SiteModel::Paper(PaperVariant::AsPrinted),
        ModelChoice::PaperUnitary => dynamics::SiteModel::Paper(PaperVariant::Unitary),
        ModelChoice::Effective => dynamics::SiteModel::Effective,
        ModelChoice::Cascade => dynamics::SiteModel::Cascade(sign),
    }
}

fn two_photon_rabi(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let p = &config.params;
    let mut nonperturbative = false;
    let point = gate_point(p, opts, &mut nonperturbative)?;
    let params = point.params;
    let theory = match config.model {
        ModelChoice::Paper | ModelChoice::PaperUnitary => params.kappa(),
        _ => dynamics::effective_rabi_frequency(&params),
    };
    if !(theory > 0.0) {
        return Err(invalid("params", "couplings must be positive for a Rabi oscillation"));
    }
    let t_max = p.t_max.unwrap_or(TAU / theory);
    let n = steps(p, 400)?;
    let site = dynamics::SiteDynamics::new(site_model(config.model, sign(p)), params)?;
    let fitted = site.rabi_frequency(t_max, n)?;
    let mut table = Table::new("rabi", &["t", "p_g2", "p_e0"]);
    for k in 0..=n {
        let t = t_max * k as f64 / n as f64;
        let (a, b) = site.amplitudes(2, t)?;
        table.push(vec![t.into(), a.norm_sqr().into(), b.norm_sqr().into()]);
    }
    let relative_error = (fitted / theory - 1.0).abs();
    let limit = if config.model == ModelChoice::Cascade { 0.1 } else { 1e-3 };
    let mut out = ExperimentOutput::new(json!({
        "g1": point.g1, "g2": point.g2, "delta": point.delta,
        "kappa": params.kappa(),
        "rabi_frequency_theory": theory,
        "rabi_frequency_fitted": fitted,
        "relative_error": relative_error,
        "t_max": t_max,
    }));
    out.nonperturbative = nonperturbative;
    out.checks.push(Check::at_most("fitted Rabi frequency relative error", relative_error, limit));
    out.tables.push(table);
    out.plots.push((Plot::new("rabi", "Two-photon Rabi oscillation", "t", &["p_g2", "p_e0"]), 0));
    Ok(out)
}

fn interaction(config: &ExperimentConfig) -> InteractionModel {
    config.model.interaction(sign(&config.params))
}

fn label(bits: usize) -> String {
    format!("{}{}", (bits >> 1) & 1, bits & 1)
}

fn cz_truth_table(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let p = &config.params;
    let mut nonperturbative = false;
    let point = gate_point(p, opts, &mut nonperturbative)?;
    let compensation = wrap_phase(point.params.phase_rate() * point.time);
    let rail_phase = p.compensate.unwrap_or(true).then_some(compensation);
    let circuit = Circuit::cz_device(
        interaction(config),
        point.params,
        point.time,
        p.second_coupler.unwrap_or_default(),
        rail_phase,
    )?;
    let compiled = CompiledCircuit::new(&circuit, &cz_device_qubits())?;
    let table = compiled.truth_table()?;
    let mut drift: f64 = 0.0;
    for bits in 0..4u8 {
        let run = compiled.run(&CircuitInput::Label(vec![bits >> 1, bits & 1]))?;
        drift = drift.max(run.excitation_drift);
    }
    let free = gate_fidelity(&table, &cz_target(), true)?;
    let strict = gate_fidelity(&table, &cz_target(), false)?;

    let mut csv = Table::new("truth_table", &["input", "output", "re", "im", "abs2"]);
    for col in 0..4 {
        for row in 0..4 {
            let z = table.matrix[(row, col)];
            csv.push(vec![label(col).into(), label(row).into(), z.re.into(), z.im.into(), z.norm_sqr().into()]);
        }
    }
    let max_norm = table.success_probability.iter().cloned().fold(0.0, f64::max);
    let mut out = ExperimentOutput::new(json!({
        "gate_point": point,
        "rail_phase": rail_phase,
        "fidelity": free.fidelity,
        "fidelity_without_local_phases": strict.fidelity,
        "local_phases": free.local_phases,
        "success_probability": table.success_probability,
        "dopant_leakage": table.dopant_leakage,
        "unitarity_error": table.unitarity_error(),
        "excitation_drift": drift,
    }));
    out.nonperturbative = nonperturbative;
    out.checks.push(Check::at_most("max column norm", max_norm, 1.0 + 1e-10));
    out.checks.push(Check::at_most("excitation-number drift", drift, 1e-10));
    out.tables.push(csv);
    Ok(out)
}

fn cz_fidelity_sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let p = &config.params;
    let delta = p.delta.unwrap_or(1.0);
    let sweep = config.sweep.clone().ok_or_else(|| invalid("sweep", "cz-fidelity-sweep needs a [sweep] table"))?;
    let ratio = p.ratio.unwrap_or(SQRT_2);
    let angle = p.rabi_angle.unwrap_or(PI);
    let local_phases = p.local_phases.unwrap_or(true);
    let model = interaction(config);
    let values = sweep.values();
    let point = |v: f64| match sweep.parameter.as_str() {
        "ratio" => Ok((v, angle)),
        "rabi_angle" => Ok((ratio, v)),
        _ => Err(invalid("sweep.parameter", "cz-fidelity-sweep sweeps `ratio` or `rabi_angle`")),
    };
    let mut nonperturbative = false;
    for &v in &values {
        let (r, a) = point(v)?;
        let (params, _) = crate::gates::cz_parameters(delta, r, a).map_err(|e| invalid("sweep", e.to_string()))?;
        check_regime(&params, opts, &mut nonperturbative)?;
    }
    let rows = values
        .par_iter()
        .map(|&v| {
            let (r, a) = point(v)?;
            let report = cz_fidelity_at(delta, r, a, model, local_phases)?;
            let worst = report.leakage.iter().cloned().fold(0.0, f64::max);
            Ok([v, report.fidelity, 1.0 - worst, worst])
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    let mut table = Table::new("cz_sweep", &["value", "fidelity", "min_success_probability", "max_leakage"]);
    for r in &rows {
        table.push(r.iter().map(|&x| x.into()).collect());
    }
    let best = rows.iter().fold(rows.first().copied().unwrap_or([f64::NAN; 4]), |b, r| if r[1] > b[1] { *r } else { b });
    let mut out = ExperimentOutput::new(json!({
        "parameter": sweep.parameter,
        "best_value": best[0],
        "best_fidelity": best[1],
        "points": rows.len(),
    }));
    out.nonperturbative = nonperturbative;
    out.tables.push(table);
    out.plots.push((Plot::new("cz_sweep", "CZ fidelity", "value", &["fidelity", "min_success_probability"]), 0));
    Ok(out)
}

fn optimize(config: &ExperimentConfig, _opts: &RunOptions) -> Result<ExperimentOutput> {
    let delta = config.params.delta.unwrap_or(1.0);
    let search = config.search.clone().unwrap_or_default();
    let defaults = CzSearchSpace::default();
    let space = CzSearchSpace {
        ratio: search.ratio.map_or(defaults.ratio, |r| (r[0], r[1])),
        rabi_angle: search.rabi_angle.map_or(defaults.rabi_angle, |r| (r[0], r[1])),
        grid: search.grid.map_or(defaults.grid, |g| (g[0], g[1])),
        local_phases: search.local_phases.unwrap_or(true),
        model: interaction(config),
        max_evaluations: search.max_evaluations.unwrap_or(defaults.max_evaluations),
    };
    let best = optimize_cz(delta, &space).map_err(|e| match e {
        Error::InvalidParameter(m) => invalid("search", m),
        other => other,
    })?;
    let mut table = Table::new("optimize_cz", &["parameter", "value"]);
    for (name, v) in [
        ("ratio_g2_over_g1", best.ratio_g2_over_g1),
        ("rabi_angle", best.rabi_angle),
        ("g1", best.g1),
        ("g2", best.g2),
        ("delta", best.delta),
        ("time", best.time),
        ("fidelity", best.report.fidelity),
    ] {
        table.push(vec![name.into(), v.into()]);
    }
    let mut out = ExperimentOutput::new(serde_json::to_value(&best).map_err(|e| Error::Output(e.to_string()))?);
    out.tables.push(table);
    Ok(out)
}

fn estimate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = &config.params;
    let omega = match (p.omega, p.wavelength) {
        (Some(w), _) => w,
        (None, Some(l)) => DeviceParams::omega_from_wavelength(l),
        (None, None) => return Err(missing("omega")),
    };
    let device = DeviceParams {
        q: p.q.ok_or_else(|| missing("q"))?,
        omega,
        g: p.g.ok_or_else(|| missing("g"))?,
        n: p.n.ok_or_else(|| missing("n"))?,
        delta: p.delta.ok_or_else(|| missing("delta"))?,
        v_g: p.v_g.unwrap_or(1e-4),
        length: p.length.unwrap_or(30.0),
        lattice_constant: p.lattice_constant.unwrap_or(0.5e-6),
    };
    let report = params_estimate(&device).map_err(|e| invalid("params", e.to_string()))?;
    let mut table = Table::new("feasibility", &["quantity", "seconds", "fraction_of_t1", "verdict"]);
    table.push(vec!["t1".into(), report.t1.into(), 1.0.into(), "".into()]);
    table.push(vec!["quoted_t1".into(), report.quoted_t1.into(), (report.quoted_t1 / report.t1).into(), "".into()]);
    for e in &report.estimates {
        let verdict = serde_json::to_value(e.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        table.push(vec![e.name.clone().into(), e.seconds.into(), e.fraction_of_t1.into(), verdict.into()]);
    }
    let mut out = ExperimentOutput::new(serde_json::to_value(&report).map_err(|e| Error::Output(e.to_string()))?);
    out.tables.push(table);
    Ok(out)
}

fn crow_pulse(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = &config.params;
    let l = p.chain_length.ok_or_else(|| missing("chain_length"))?;
    let j = p.j.unwrap_or(1.0);
    let mut cfg = PulseConfig::centred(l, j, p.width.unwrap_or(4.0), p.carrier_k.unwrap_or(PI / 2.0));
    cfg.omega = p.omega.unwrap_or(0.0);
    cfg.disorder = p.disorder.unwrap_or(0.0);
    cfg.seed = p.seed;
    if let Some(c) = p.center {
        cfg.center = c;
    }
    if let Some(t) = p.t_max {
        cfg.t_max = t;
    }
    cfg.steps = steps(p, 200)?;
    if cfg.disorder > 0.0 && cfg.seed.is_none() {
        return Err(missing("seed"));
    }
    let traj = crow_pulse_sim(&cfg).map_err(|e| invalid("params", e.to_string()))?;
    let mut table = Table::with_columns("crow_pulse", PulseTrajectory::csv_header(l));
    for ((t, c), pops) in traj.times.iter().zip(&traj.centroids).zip(&traj.populations) {
        let mut row: Vec<Cell> = vec![(*t).into(), (*c).into()];
        row.extend(pops.iter().map(|&x| Cell::from(x)));
        table.push(row);
    }
    let mut out = ExperimentOutput::new(json!({
        "pulse": cfg,
        "group_velocity": traj.group_velocity,
        "theory_velocity": traj.theory_velocity,
        "boundary_hit": traj.boundary_hit,
        "fit_window": [traj.fit_window.0, traj.fit_window.1],
    }));
    out.checks.push(Check::at_most("pulse reached the boundary", f64::from(u8::from(traj.boundary_hit)), 0.0));
    if let (Some(v), true) = (traj.group_velocity, cfg.disorder == 0.0) {
        let scale = 2.0 * j.abs();
        out.checks.push(Check::at_most("|v_fit - v_theory| / 2J", (v - traj.theory_velocity).abs() / scale, 0.05));
    }
    out.tables.push(table);
    out.plots.push((Plot::new("crow_pulse", "Pulse centroid", "t", &["centroid"]), 0));
    Ok(out)
}

fn effective_vs_cascade(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let p = &config.params;
    let mut nonperturbative = false;
    let point = gate_point(p, opts, &mut nonperturbative)?;
    let n = steps(p, 400)?;
    let cmp = dynamics::compare_effective_cascade(&point.params, sign(p), n)?;

    let effective = dynamics::SiteDynamics::new(dynamics::SiteModel::Effective, point.params)?;
    let cascade = dynamics::SiteDynamics::new(dynamics::SiteModel::Cascade(sign(p)), point.params)?;
    let t_max = TAU / cmp.effective_rabi_frequency;
    let mut trace = Table::new("trace", &["t", "p_e0_effective", "p_e0_cascade", "p_h1_cascade"]);
    for k in 0..=n {
        let t = t_max * k as f64 / n as f64;
        trace.push(vec![
            t.into(),
            effective.amplitudes(2, t)?.1.norm_sqr().into(),
            cascade.amplitudes(2, t)?.1.norm_sqr().into(),
            cascade.intermediate_population(t)?.into(),
        ]);
    }
    let mut table = Table::new("effective_vs_cascade", &["quantity", "effective", "cascade", "relative_error"]);
    table.push(vec![
        "rabi_frequency".into(),
        cmp.effective_rabi_frequency.into(),
        cmp.cascade_rabi_frequency.into(),
        cmp.rabi_relative_error().into(),
    ]);
    table.push(vec![
        "phase_rate".into(),
        cmp.phase_rate.into(),
        cmp.cascade_phase_rate.into(),
        cmp.phase_relative_error().into(),
    ]);
    let mut out = ExperimentOutput::new(json!({
        "gate_point": point,
        "comparison": cmp,
        "rabi_relative_error": cmp.rabi_relative_error(),
        "phase_relative_error": cmp.phase_relative_error(),
    }));
    out.nonperturbative = nonperturbative;
    out.checks.push(Check::at_most("two-photon Rabi frequency relative error", cmp.rabi_relative_error(), 0.1));
    out.checks.push(Check::at_most("dispersive phase rate relative error", cmp.phase_relative_error(), 0.1));
    out.tables.push(table);
    out.tables.push(trace);
    out.plots.push((Plot::new("trace", "Effective vs cascade", "t", &["p_e0_effective", "p_e0_cascade", "p_h1_cascade"]), 1));
    Ok(out)
}
