use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::PolState;
use crate::states::{DensityMatrix4, Vector4c};
use crate::C64;

/// A polarization analyzer: two orthogonal states, routed to detector `0`
/// and detector `1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LocalBasis {
    /// Detector `0` sees the given state, detector `1` its orthogonal partner.
    State(PolState),
    /// Linear polarizer at `angle` degrees from H: `cos θ|H⟩ + sin θ|V⟩`.
    Linear(f64),
    /// Quarter-wave plate then half-wave plate (fast-axis angles in degrees)
    /// in front of a polarizing beam splitter whose transmitted H port is
    /// detector `0`.
    Waveplates { hwp: f64, qwp: f64 },
}

impl LocalBasis {
    pub const HV: LocalBasis = LocalBasis::State(PolState::H);
    pub const DA: LocalBasis = LocalBasis::State(PolState::D);
    pub const RL: LocalBasis = LocalBasis::State(PolState::R);

    /// The states detected at detector `0` and `1`.
    pub fn kets(&self) -> [Vector2<C64>; 2] {
        match *self {
            LocalBasis::State(s) => [jones(s), jones(s.orthogonal())],
            LocalBasis::Linear(deg) => {
                let (s, c) = deg.to_radians().sin_cos();
                [
                    Vector2::new(C64::new(c, 0.0), C64::new(s, 0.0)),
                    Vector2::new(C64::new(-s, 0.0), C64::new(c, 0.0)),
                ]
            }
            LocalBasis::Waveplates { hwp, qwp } => {
                let u = waveplate(hwp.to_radians(), C64::new(-1.0, 0.0))
                    * waveplate(qwp.to_radians(), C64::new(0.0, 1.0));
                let ud = u.adjoint();
                [ud.column(0).into_owned(), ud.column(1).into_owned()]
            }
        }
    }
}

fn jones(s: PolState) -> Vector2<C64> {
    let j = s.jones().as_array();
    Vector2::new(j[0], j[1])
}

/// Retarder with fast axis at `theta` and retardance phase `phase` on the slow axis.
fn waveplate(theta: f64, phase: C64) -> nalgebra::Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    let rot = nalgebra::Matrix2::new(
        C64::new(c, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
        C64::new(c, 0.0),
    );
    let diag = nalgebra::Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        phase,
    );
    rot.transpose() * diag * rot
}

impl fmt::Display for LocalBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalBasis::State(s) => write!(f, "{s}"),
            LocalBasis::Linear(a) => write!(f, "lin:{a}"),
            LocalBasis::Waveplates { hwp, qwp } => write!(f, "wp:{hwp}/{qwp}"),
        }
    }
}

impl FromStr for LocalBasis {
    type Err = Error;

    /// Accepts `H`…`L`, `HV`/`DA`/`RL`, `lin:<deg>` and `wp:<hwp>/<qwp>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::validation(format!("cannot parse analyzer setting '{s}'"));
        if let Some(rest) = s.strip_prefix("lin:") {
            return rest.parse().map(LocalBasis::Linear).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("wp:") {
            let (h, q) = rest.split_once('/').ok_or_else(bad)?;
            let hwp = h.parse().map_err(|_| bad())?;
            let qwp = q.parse().map_err(|_| bad())?;
            return Ok(LocalBasis::Waveplates { hwp, qwp });
        }
        match s.to_ascii_uppercase().as_str() {
            "HV" => Ok(LocalBasis::HV),
            "DA" => Ok(LocalBasis::DA),
            "RL" => Ok(LocalBasis::RL),
            other => other.parse().map(LocalBasis::State).map_err(|_| bad()),
        }
    }
}

/// Analyzer settings for the control and target photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub control: LocalBasis,
    pub target: LocalBasis,
}

impl MeasurementSetting {
    pub fn new(control: LocalBasis, target: LocalBasis) -> Self {
        Self { control, target }
    }

    /// Two-photon states for the outcomes `(00, 01, 10, 11)`, first digit the
    /// control detector.
    pub fn outcome_kets(&self) -> [Vector4c; 4] {
        let c = self.control.kets();
        let t = self.target.kets();
        let kron = |a: &Vector2<C64>, b: &Vector2<C64>| {
            Vector4c::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
        };
        [kron(&c[0], &t[0]), kron(&c[0], &t[1]), kron(&c[1], &t[0]), kron(&c[1], &t[1])]
    }
}

/// The 36 analyzer settings `{H,V,D,A,R,L}²`; with four detector pairs each
/// they give 144 coincidence counts.
pub fn tomography_schedule() -> Vec<MeasurementSetting> {
    PolState::ALL
        .iter()
        .flat_map(|&c| {
            PolState::ALL
                .iter()
                .map(move |&t| MeasurementSetting::new(LocalBasis::State(c), LocalBasis::State(t)))
        })
        .collect()
}

/// Outcome probabilities `(p00, p01, p10, p11)` of `setting` on `rho`.
pub fn born_probabilities(rho: &DensityMatrix4, setting: &MeasurementSetting) -> [f64; 4] {
    setting.outcome_kets().map(|k| rho.expectation(&k).max(0.0))
}
