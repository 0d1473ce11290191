use std::fs;
use std::io::BufWriter;
use std::sync::Mutex;

use anyhow::{Context, Result};
use homgate::gate::{bell_input, AnalyticGate, GateRunner};
use homgate::measurement::{
    bell_fidelity_threshold, chsh_optimize, hom_scan, mle_reconstruct_traced, process_bounds,
    simulate_counts, tomography_schedule, truth_table, MleOptions, TruthTableBasis,
};
use homgate::oracle::{simulate_full, FockGate};
use homgate::states::{fidelity_pure_target, fidelity_vs_eta, werner_fidelity};
use homgate::waveform::{apply_window, overlap_eta};
use homgate::{BellState, DensityMatrix4, JonesVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{create, num, Table};
use crate::scenario::{EtaInput, Scenario};
use crate::CliError;

/// Largest analytic–oracle disagreement tolerated under `--oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Runs the gate analytically and, when asked, reruns it in the Fock space.
pub struct Runner<'a> {
    scenario: &'a Scenario,
    eta: f64,
    oracle: bool,
    // survives the trip through `GateRunner`, whose error type cannot carry it
    mismatch: Mutex<Option<f64>>,
}

impl<'a> Runner<'a> {
    pub fn new(scenario: &'a Scenario, eta: f64, oracle: bool) -> Self {
        Self { scenario, eta, oracle, mismatch: Mutex::new(None) }
    }

    pub fn run(&self, control: &JonesVector, target: &JonesVector) -> Result<(DensityMatrix4, f64)> {
        let analytic = AnalyticGate::new(self.eta, self.scenario.gate)?;
        let (rho, p) = analytic.run(control, target)?;
        if self.oracle {
            let (rho_f, p_f) = self.oracle_run(control, target)?;
            let diff = (rho.matrix() - rho_f.matrix()).iter().map(|z| z.norm()).fold((p - p_f).abs(), f64::max);
            if diff > ORACLE_TOLERANCE {
                *self.mismatch.lock().unwrap_or_else(|e| e.into_inner()) = Some(diff);
                return Err(CliError::OracleMismatch(diff).into());
            }
        }
        Ok((rho, p))
    }

    fn oracle_run(&self, control: &JonesVector, target: &JonesVector) -> Result<(DensityMatrix4, f64)> {
        // with waveforms the oracle starts from the sampled profiles
        if let EtaInput::Waveforms(_) = self.scenario.eta {
            let pair = self.scenario.waveforms()?;
            let (m, s) = match self.scenario.tau_int {
                Some(t) => {
                    let w = self.scenario.window(t)?;
                    (apply_window(&pair.memory, &w)?.0, apply_window(&pair.source, &w)?.0)
                }
                None => (pair.memory, pair.source),
            };
            if (overlap_eta(&m, &s)? - self.eta).abs() < 1e-14 {
                return Ok(simulate_full(control, target, &m, &s, &self.scenario.gate)?);
            }
        }
        Ok(FockGate::with_eta(self.eta, self.scenario.gate)?.run(control, target)?)
    }

    /// Restores an oracle mismatch that a `GateRunner` caller flattened.
    fn lift(&self, err: homgate::Error) -> anyhow::Error {
        match *self.mismatch.lock().unwrap_or_else(|e| e.into_inner()) {
            Some(diff) => CliError::OracleMismatch(diff).into(),
            None => err.into(),
        }
    }
}

impl GateRunner for Runner<'_> {
    fn run(&self, control: &JonesVector, target: &JonesVector) -> homgate::Result<(DensityMatrix4, f64)> {
        Runner::run(self, control, target).map_err(|e| match e.downcast::<homgate::Error>() {
            Ok(inner) => inner,
            Err(other) => homgate::Error::Validation(other.to_string()),
        })
    }
}

fn bell_states(which: Option<BellState>) -> Vec<BellState> {
    which.map_or_else(|| BellState::ALL.to_vec(), |b| vec![b])
}

pub fn fidelity_curve(scenario: &Scenario, grid: &[f64], oracle: bool) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(CliError::Validation("visibility grid must lie in [0, 1]".into()).into());
    }
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&v| -> Result<Vec<String>> {
            let model = fidelity_vs_eta(v)?;
            if oracle {
                let (c, t) = bell_input(BellState::PhiPlus);
                let (rho, _) = FockGate::with_eta(v, scenario.gate)?.run(&c.jones(), &t.jones())?;
                let diff = (fidelity_pure_target(&rho, BellState::PhiPlus) - model).abs();
                if diff > ORACLE_TOLERANCE {
                    return Err(CliError::OracleMismatch(diff).into());
                }
            }
            Ok(vec![num(v), num(model), num(werner_fidelity(v)?)])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["V", "F_model", "F_werner"]);
    rows.into_iter().for_each(|r| table.push(r));
    table.emit(scenario.out.as_deref(), "fidelity_curve.csv", scenario.seed)?;
    Ok(())
}

pub fn window_sweep(scenario: &Scenario, oracle: bool) -> Result<()> {
    let pair = scenario.waveforms()?;
    let rows: Vec<Vec<String>> = scenario
        .sweep
        .par_iter()
        .map(|&tau| -> Result<Vec<String>> {
            let w = scenario.window(tau)?;
            let (m, acc_m) = apply_window(&pair.memory, &w)?;
            let (s, acc_s) = apply_window(&pair.source, &w)?;
            let eta = overlap_eta(&m, &s)?;
            let runner = Runner::new(scenario, eta, false);
            let mut fids = Vec::with_capacity(4);
            let mut phi_plus = None;
            for bell in BellState::ALL {
                let (c, t) = bell_input(bell);
                let (rho, _) = runner.run(&c.jones(), &t.jones())?;
                if oracle {
                    let (rho_f, _) = simulate_full(&c.jones(), &t.jones(), &m, &s, &scenario.gate)?;
                    let diff = (rho.matrix() - rho_f.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if diff > ORACLE_TOLERANCE {
                        return Err(CliError::OracleMismatch(diff).into());
                    }
                }
                fids.push(fidelity_pure_target(&rho, bell));
                if bell == BellState::PhiPlus {
                    phi_plus = Some(rho);
                }
            }
            let s_max = chsh_optimize(&phi_plus.expect("Φ+ is in the list")).s_max;
            let (_, f_zz) = truth_table(&runner, TruthTableBasis::ZZ, None)?;
            let (_, f_xx) = truth_table(&runner, TruthTableBasis::XX, None)?;
            let (lo, hi) = process_bounds(f_zz.min(1.0), f_xx.min(1.0))?;
            let mut row = vec![num(tau), num(acc_m), num(acc_s), num(eta)];
            row.extend(fids.into_iter().map(num));
            row.extend([num(s_max), num(lo), num(hi), num(bell_fidelity_threshold()), num(2.0)]);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "tau_int_s",
        "acceptance_memory",
        "acceptance_source",
        "eta",
        "F_phi_plus",
        "F_phi_minus",
        "F_psi_plus",
        "F_psi_minus",
        "S_max",
        "process_lower",
        "process_upper",
        "bell_fidelity_threshold",
        "chsh_classical_bound",
    ]);
    table.comment(format!("window_offset_s={}", scenario.window_offset));
    table.comment(format!("alignment_delay_s={}", pair.alignment_delay));
    rows.into_iter().for_each(|r| table.push(r));
    table.emit(scenario.out.as_deref(), "window_sweep.csv", scenario.seed)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TomographyReport {
    pub bell: String,
    pub seed: u64,
    pub eta: f64,
    pub shots_per_setting: u64,
    pub settings: usize,
    pub noise: f64,
    pub fidelity: f64,
    pub predicted_fidelity: f64,
    pub bell_fidelity_threshold: f64,
    pub above_bell_threshold: bool,
    pub chsh_s_max: f64,
    pub mle_iterations: usize,
    pub mle_converged: bool,
}

pub fn tomography(scenario: &Scenario, bell: Option<BellState>, oracle: bool) -> Result<()> {
    let eta = scenario.eta()?;
    let runner = Runner::new(scenario, eta, oracle);
    let schedule = tomography_schedule();
    let states = bell_states(bell);
    let results: Vec<_> = states
        .par_iter()
        .map(|&b| -> Result<_> {
            let (c, t) = bell_input(b);
            let (rho, _) = runner.run(&c.jones(), &t.jones())?;
            let data = simulate_counts(&rho, &schedule, scenario.shots, scenario.seed, &scenario.noise)?;
            let mle = mle_reconstruct_traced(&data, &MleOptions::default())?;
            let fidelity = fidelity_pure_target(&mle.rho, b);
            let threshold = bell_fidelity_threshold();
            let report = TomographyReport {
                bell: b.to_string(),
                seed: scenario.seed,
                eta,
                shots_per_setting: scenario.shots,
                settings: schedule.len(),
                noise: scenario.noise.epsilon,
                fidelity,
                predicted_fidelity: fidelity_pure_target(&rho.depolarized(scenario.noise.epsilon)?, b),
                bell_fidelity_threshold: threshold,
                above_bell_threshold: fidelity > threshold,
                chsh_s_max: chsh_optimize(&mle.rho).s_max,
                mle_iterations: mle.iterations,
                mle_converged: mle.converged,
            };
            Ok((b, data, mle.rho, report))
        })
        .collect::<Result<_>>()?;

    for (b, data, rho, report) in &results {
        let verdict = if report.above_bell_threshold { "above" } else { "below" };
        println!(
            "{b}: F = {:.4} (model {:.4}), {verdict} the Bell threshold {:.4}; S_max = {:.4}",
            report.fidelity, report.predicted_fidelity, report.bell_fidelity_threshold, report.chsh_s_max
        );
        if let Some(dir) = scenario.out.as_deref() {
            let tag = b.name().replace('+', "plus").replace('-', "minus");
            let path = create(dir, &format!("counts_{tag}.csv"))?;
            data.write_csv(BufWriter::new(fs::File::create(&path).with_context(|| path.display().to_string())?))?;
            let path = create(dir, &format!("rho_{tag}.json"))?;
            rho.write_json(BufWriter::new(fs::File::create(&path).with_context(|| path.display().to_string())?))?;
            let path = create(dir, &format!("report_{tag}.json"))?;
            fs::write(&path, serde_json::to_string_pretty(report)? + "\n")
                .with_context(|| path.display().to_string())?;
        } else {
            println!("{rho}");
        }
    }
    Ok(())
}

pub fn hom(scenario: &Scenario, delays: &[f64], oracle: bool) -> Result<()> {
    let pair = scenario.waveforms()?;
    let window = scenario.tau_int.map(|t| scenario.window(t)).transpose()?;
    // delays are applied on top of the alignment, so the dip sits near zero
    let scan = hom_scan(&pair.memory, &pair.source, delays, window.as_ref())?;
    let mut table = Table::new(&["delay_s", "coincidence", "eta"]);
    table.comment(format!("alignment_delay_s={}", pair.alignment_delay));
    for p in &scan.points {
        if oracle {
            let diff = (p.coincidence - 0.5 * (1.0 - p.eta)).abs();
            if diff > ORACLE_TOLERANCE {
                return Err(CliError::OracleMismatch(diff).into());
            }
        }
        table.push(vec![num(p.delay), num(p.coincidence), num(p.eta)]);
    }
    if let Some(v) = scan.visibility() {
        table.comment(format!("visibility={v}"));
    }
    table.emit(scenario.out.as_deref(), "hom.csv", scenario.seed)?;
    Ok(())
}

pub fn truth_tables(scenario: &Scenario, bases: &[TruthTableBasis], oracle: bool) -> Result<()> {
    let eta = scenario.eta()?;
    let runner = Runner::new(scenario, eta, oracle);
    let noise = (scenario.noise.epsilon > 0.0).then_some(scenario.noise.epsilon);
    let mut table = Table::new(&["basis", "input", "output", "probability", "ideal"]);
    let mut summary = Table::new(&["basis", "fidelity"]);
    let mut fid = std::collections::BTreeMap::new();
    for &basis in bases {
        let (tt, f) = truth_table(&runner, basis, noise).map_err(|e| runner.lift(e))?;
        let outputs = basis.output_labels();
        for (i, input) in tt.input_labels().iter().enumerate() {
            for (j, output) in outputs.iter().enumerate() {
                table.push(vec![
                    basis.to_string(),
                    input.clone(),
                    output.clone(),
                    num(tt.probabilities[i][j]),
                    num(tt.ideal[i][j]),
                ]);
            }
        }
        summary.push(vec![basis.to_string(), num(f)]);
        fid.insert(basis.to_string(), f);
    }
    table.comment(format!("eta={eta}"));
    if let (Some(&zz), Some(&xx)) = (fid.get("ZZ"), fid.get("XX")) {
        let (lo, hi) = process_bounds(zz.min(1.0), xx.min(1.0))?;
        summary.comment(format!("process_lower={lo}"));
        summary.comment(format!("process_upper={hi}"));
    }
    table.emit(scenario.out.as_deref(), "truth_table.csv", scenario.seed)?;
    summary.emit(scenario.out.as_deref(), "truth_table_fidelity.csv", scenario.seed)?;
    Ok(())
}

pub fn chsh(scenario: &Scenario, bell: Option<BellState>, oracle: bool) -> Result<()> {
    let eta = scenario.eta()?;
    let runner = Runner::new(scenario, eta, oracle);
    let mut table = Table::new(&["bell", "eta", "fidelity", "S_max", "a_deg", "a_prime_deg", "b_deg", "b_prime_deg", "violates_chsh"]);
    for b in bell_states(bell) {
        let (c, t) = bell_input(b);
        let (rho, _) = runner.run(&c.jones(), &t.jones())?;
        let rho = rho.depolarized(scenario.noise.epsilon)?;
        let r = chsh_optimize(&rho);
        let mut row = vec![b.to_string(), num(eta), num(fidelity_pure_target(&rho, b)), num(r.s_max)];
        row.extend(r.angles.iter().map(|&a| num(a)));
        row.push((r.s_max > 2.0).to_string());
        table.push(row);
    }
    table.emit(scenario.out.as_deref(), "chsh.csv", scenario.seed)?;
    Ok(())
}
