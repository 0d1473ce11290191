use std::fmt;
use std::str::FromStr;

use super::basis::{born_probabilities, LocalBasis, MeasurementSetting};
use crate::error::{Error, Result};
use crate::gate::{GateRunner, PolState};
use crate::states::{DensityMatrix4, Vector4c};


/// Input/output basis conventions for truth tables.
///
/// - `ZZ`: inputs `{H,V}⊗{H,V}`, outputs analyzed in H/V ⊗ H/V.
/// - `XX`: inputs `{D,A}⊗{D,A}`, outputs analyzed in D/A ⊗ D/A.
/// - `YY`: inputs `{D,A}⊗{H,V}`, outputs analyzed in R/L ⊗ R/L. The ideal
///   outputs are Bell states, so each row has two correct outcomes (the
///   correlated or the anticorrelated pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruthTableBasis {
    ZZ,
    XX,
    YY,
}

impl TruthTableBasis {
    pub fn inputs(self) -> [(PolState, PolState); 4] {
        use PolState::*;
        match self {
            TruthTableBasis::ZZ => [(H, H), (H, V), (V, H), (V, V)],
            TruthTableBasis::XX => [(D, D), (D, A), (A, D), (A, A)],
            TruthTableBasis::YY => [(D, H), (D, V), (A, H), (A, V)],
        }
    }

    pub fn analyzer(self) -> MeasurementSetting {
        let b = match self {
            TruthTableBasis::ZZ => LocalBasis::HV,
            TruthTableBasis::XX => LocalBasis::DA,
            TruthTableBasis::YY => LocalBasis::RL,
        };
        MeasurementSetting::new(b, b)
    }

    /// Output labels in column order.
    pub fn output_labels(self) -> [String; 4] {
        let [c, t] = match self {
            TruthTableBasis::ZZ => [PolState::H, PolState::V],
            TruthTableBasis::XX => [PolState::D, PolState::A],
            TruthTableBasis::YY => [PolState::R, PolState::L],
        };
        [format!("{c}{c}"), format!("{c}{t}"), format!("{t}{c}"), format!("{t}{t}")]
    }
}

impl fmt::Display for TruthTableBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthTableBasis::ZZ => "ZZ",
            TruthTableBasis::XX => "XX",
            TruthTableBasis::YY => "YY",
        })
    }
}

impl FromStr for TruthTableBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ZZ" => Ok(TruthTableBasis::ZZ),
            "XX" => Ok(TruthTableBasis::XX),
            "YY" => Ok(TruthTableBasis::YY),
            _ => Err(Error::validation(format!("unknown truth-table basis '{s}'"))),
        }
    }
}

/// Post-selected outcome probabilities, one row per input.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    pub basis: TruthTableBasis,
    pub probabilities: [[f64; 4]; 4],
    /// Outcome probabilities of a perfect CNOT on the same inputs.
    pub ideal: [[f64; 4]; 4],
}

impl TruthTable {
    /// Mean over rows of the probability landing on the ideal outcomes.
    pub fn fidelity(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(self.ideal.iter())
            .map(|(row, ideal)| {
                row.iter().zip(ideal.iter()).filter(|(_, &q)| q > 1e-9).map(|(p, _)| p).sum::<f64>()
            })
            .sum::<f64>()
            / 4.0
    }

    pub fn input_labels(&self) -> [String; 4] {
        self.basis.inputs().map(|(c, t)| format!("{c}{t}"))
    }
}

/// `|c⟩|t⟩ → |c⟩ X^c |t⟩` on the (HH, HV, VH, VV) amplitudes.
fn ideal_cnot(control: PolState, target: PolState) -> Vector4c {
    let c = control.jones().as_array();
    let t = target.jones().as_array();
    Vector4c::new(c[0] * t[0], c[0] * t[1], c[1] * t[1], c[1] * t[0])
}

/// Runs the gate on the four inputs of `basis`. `noise` is an optional
/// white-noise admixture applied to every output state.
pub fn truth_table<G: GateRunner + ?Sized>(
    gate: &G,
    basis: TruthTableBasis,
    noise: Option<f64>,
) -> Result<(TruthTable, f64)> {
    let analyzer = basis.analyzer();
    let mut probabilities = [[0.0; 4]; 4];
    let mut ideal = [[0.0; 4]; 4];
    for (row, &(c, t)) in basis.inputs().iter().enumerate() {
        let (mut rho, _) = gate.run(&c.jones(), &t.jones())?;
        if let Some(eps) = noise {
            rho = rho.depolarized(eps)?;
        }
        probabilities[row] = born_probabilities(&rho, &analyzer);
        let perfect = DensityMatrix4::pure(&ideal_cnot(c, t))?;
        ideal[row] = born_probabilities(&perfect, &analyzer);
    }
    let table = TruthTable { basis, probabilities, ideal };
    let f = table.fidelity();
    Ok((table, f))
}

/// Bounds `F_ZZ + F_XX − 1 ≤ F_process ≤ min(F_ZZ, F_XX)`, lower bound clamped at 0.
pub fn process_bounds(f_zz: f64, f_xx: f64) -> Result<(f64, f64)> {
    for (name, f) in [("F_ZZ", f_zz), ("F_XX", f_xx)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::validation(format!("{name} = {f} outside [0,1]")));
        }
    }
    Ok(((f_zz + f_xx - 1.0).max(0.0), f_zz.min(f_xx)))
}
