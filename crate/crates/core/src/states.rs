//! Two-qubit polarization density matrices in the basis (HH, HV, VH, VV),
//! where the first letter is the control photon (port p) and the second the
//! target photon (port q).

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub type Matrix4c = Matrix4<C64>;
pub type Vector4c = Vector4<C64>;

/// Basis labels in storage order.
pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;
/// Eigenvalue magnitude, relative to the largest, treated as an exact zero.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Hermitian, positive semidefinite, unit-trace 4×4 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(Matrix4c);

impl DensityMatrix4 {
    /// Validates `m`. If an eigenvalue lies in `[-1e-10, 0)` beyond rounding
    /// noise, the eigenvalues are clamped to zero and the matrix is rebuilt from
    /// its clamped spectrum. Rounding-level negatives are left alone so exact
    /// inputs pass through unchanged.
    pub fn new(m: Matrix4c) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                if !m[(i, j)].re.is_finite() || !m[(i, j)].im.is_finite() {
                    return Err(Error::validation("density matrix has non-finite entries"));
                }
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::validation(format!(
                        "density matrix is not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::validation(format!("density matrix has trace {tr}")));
        }
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < EIGEN_FLOOR {
            return Err(Error::validation(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        if min < -ROUNDOFF {
            let clamped = eig.eigenvalues.map(|l| C64::new(l.max(0.0), 0.0));
            let v = &eig.eigenvectors;
            let rebuilt = v * Matrix4c::from_diagonal(&clamped) * v.adjoint();
            let tr = rebuilt.trace().re;
            return Ok(Self(rebuilt / C64::new(tr, 0.0)));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from real entries, e.g. the closed-form gate outputs.
    pub fn from_real(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Matrix4c::from_fn(|i, j| C64::new(rows[i][j], 0.0)))
    }

    /// Projector onto `psi` (normalized internally).
    pub fn pure(psi: &Vector4c) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::validation("zero state vector"));
        }
        let psi = psi / C64::new(n, 0.0);
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4c::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// `(1 - eps)·ρ + eps·I/4`.
    pub fn depolarized(&self, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::validation(format!("noise admixture {eps} outside [0,1]")));
        }
        let m = self.0 * C64::new(1.0 - eps, 0.0)
            + Matrix4c::identity() * C64::new(0.25 * eps, 0.0);
        Ok(Self(m))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = self.0.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix4) -> f64 {
        let d = self.0 - other.0;
        let d = (d + d.adjoint()) * C64::new(0.5, 0.0);
        0.5 * d.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix4) -> f64 {
        (self.0 - other.0).norm()
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized `psi`.
    pub fn expectation(&self, psi: &Vector4c) -> f64 {
        (psi.adjoint() * self.0 * psi)[(0, 0)].re
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &DensityMatrixJson::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let parsed: DensityMatrixJson = serde_json::from_reader(reader)?;
        parsed.try_into()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&DensityMatrixJson::from(self)).expect("serializable")
    }
}

impl fmt::Display for DensityMatrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..4 {
            write!(f, "{:>3} ", BASIS_LABELS[i])?;
            for j in 0..4 {
                let z = self.0[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// On-disk form: `data[i][j] = [re, im]`, rows and columns in `basis` order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    #[serde(default = "default_basis")]
    pub basis: Vec<String>,
    pub data: [[[f64; 2]; 4]; 4],
}

fn default_basis() -> Vec<String> {
    BASIS_LABELS.iter().map(|s| s.to_string()).collect()
}

impl From<&DensityMatrix4> for DensityMatrixJson {
    fn from(rho: &DensityMatrix4) -> Self {
        let mut data = [[[0.0; 2]; 4]; 4];
        for (i, row) in data.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let z = rho.0[(i, j)];
                *cell = [z.re, z.im];
            }
        }
        Self { basis: default_basis(), data }
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix4 {
    type Error = Error;

    fn try_from(value: DensityMatrixJson) -> Result<Self> {
        if value.basis != default_basis() {
            return Err(Error::validation(format!(
                "unsupported basis order {:?}, expected {:?}",
                value.basis, BASIS_LABELS
            )));
        }
        DensityMatrix4::new(Matrix4c::from_fn(|i, j| {
            C64::new(value.data[i][j][0], value.data[i][j][1])
        }))
    }
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// `|Φ±⟩ = (|HH⟩ ± |VV⟩)/√2`, `|Ψ±⟩ = (|HV⟩ ± |VH⟩)/√2`.
    pub fn ket(self) -> Vector4c {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (r, c) = (C64::new(s, 0.0), C64::new(0.0, 0.0));
        match self {
            BellState::PhiPlus => Vector4c::new(r, c, c, r),
            BellState::PhiMinus => Vector4c::new(r, c, c, -r),
            BellState::PsiPlus => Vector4c::new(c, r, r, c),
            BellState::PsiMinus => Vector4c::new(c, r, -r, c),
        }
    }

    pub fn projector(self) -> DensityMatrix4 {
        let k = self.ket();
        DensityMatrix4(k * k.adjoint())
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" | "phi_plus" => Ok(BellState::PhiPlus),
            "phi-" | "phiminus" | "phi_minus" => Ok(BellState::PhiMinus),
            "psi+" | "psiplus" | "psi_plus" => Ok(BellState::PsiPlus),
            "psi-" | "psiminus" | "psi_minus" => Ok(BellState::PsiMinus),
            _ => Err(Error::validation(format!("unknown Bell state '{s}'"))),
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(format!("{name} = {x} outside [0,1]")));
    }
    Ok(())
}

/// Polarization state produced by the ideal gate when generating `which`
/// from photons of indistinguishability `eta`, after tracing out the
/// two-photon temporal wavefunction.
///
/// With `d = 4 − 2η` and `r = 1 − η`, the state for `Φ+` is
///
/// ```text
///        [ 1  0   r   η ]
///  1/d · [ 0  0   0   0 ]
///        [ r  0  2r  −r ]
///        [ η  0  −r   1 ]
/// ```
///
/// and the other three follow from the corresponding input states.
pub fn rho_bell(which: BellState, eta: f64) -> Result<DensityMatrix4> {
    check_unit("eta", eta)?;
    let (e, r) = (eta, 1.0 - eta);
    let rows = match which {
        BellState::PhiPlus => [
            [1.0, 0.0, r, e],
            [0.0, 0.0, 0.0, 0.0],
            [r, 0.0, 2.0 * r, -r],
            [e, 0.0, -r, 1.0],
        ],
        BellState::PhiMinus => [
            [1.0, 0.0, -r, -e],
            [0.0, 0.0, 0.0, 0.0],
            [-r, 0.0, 2.0 * r, -r],
            [-e, 0.0, -r, 1.0],
        ],
        BellState::PsiPlus => [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, e, r],
            [0.0, e, 1.0, -r],
            [0.0, r, -r, 2.0 * r],
        ],
        BellState::PsiMinus => [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, -e, -r],
            [0.0, -e, 1.0, -r],
            [0.0, -r, -r, 2.0 * r],
        ],
    };
    let d = 4.0 - 2.0 * eta;
    DensityMatrix4::from_real(rows.map(|row| row.map(|x| x / d)))
}

/// `Tr(ρ |B⟩⟨B|)`.
pub fn fidelity_pure_target(rho: &DensityMatrix4, target: BellState) -> f64 {
    rho.expectation(&target.ket()).clamp(0.0, 1.0)
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, computed from eigendecompositions.
///
/// Eigenvalues within rounding of zero are dropped before taking square
/// roots; otherwise a rank-deficient state picks up spurious `√ε` terms.
pub fn fidelity_general(rho: &DensityMatrix4, sigma: &DensityMatrix4) -> f64 {
    let eig = rho.0.symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| C64::new(chop(l, 1.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    let sqrt_rho = v * Matrix4c::from_diagonal(&sqrt_vals) * v.adjoint();
    let m = sqrt_rho * sigma.0 * sqrt_rho;
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let vals = m.symmetric_eigen().eigenvalues;
    let scale = vals.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let tr: f64 = vals.iter().map(|&l| chop(l, scale).sqrt()).sum();
    (tr * tr).clamp(0.0, 1.0)
}

fn chop(l: f64, scale: f64) -> f64 {
    if l <= ROUNDOFF * scale {
        0.0
    } else {
        l
    }
}

/// `Tr(ρσ) + 2√(det ρ · det σ)`.
///
/// Exact when either state is pure (the determinant term then vanishes), which
/// is how it is used for gate-output fidelities; for two mixed 4×4 states it
/// is only an approximation to [`fidelity_general`].
pub fn fidelity_det_form(rho: &DensityMatrix4, sigma: &DensityMatrix4) -> f64 {
    let overlap = (rho.0 * sigma.0).trace().re;
    let det = (rho.0.determinant() * sigma.0.determinant()).re.max(0.0);
    overlap + 2.0 * det.sqrt()
}

/// Generation fidelity `F(η) = ½·(1 + η)/(2 − η)`.
pub fn fidelity_vs_eta(eta: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    Ok(0.5 * (1.0 + eta) / (2.0 - eta))
}

/// Fidelity predicted by the Werner model, `(1 + 3V)/4`.
pub fn werner_fidelity(visibility: f64) -> Result<f64> {
    check_unit("visibility", visibility)?;
    Ok((1.0 + 3.0 * visibility) / 4.0)
}

/// `F'|B⟩⟨B| + (1 − F')·I/4`.
pub fn werner_state(target: BellState, weight: f64) -> Result<DensityMatrix4> {
    check_unit("Werner weight", weight)?;
    let p = target.projector();
    Ok(DensityMatrix4(
        p.0 * C64::new(weight, 0.0) + Matrix4c::identity() * C64::new(0.25 * (1.0 - weight), 0.0),
    ))
}

/// Least-squares (Frobenius) fit of a Werner state around `target`.
/// Returns the best weight `F'` in `[0, 1]` and the residual distance.
pub fn best_werner_fit(rho: &DensityMatrix4, target: BellState) -> (f64, f64) {
    let quarter = Matrix4c::identity() * C64::new(0.25, 0.0);
    let dir = target.projector().0 - quarter;
    let diff = rho.0 - quarter;
    let num = dir.iter().zip(diff.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    let weight = (num / dir.norm_squared()).clamp(0.0, 1.0);
    let fit = werner_state(target, weight).expect("weight clamped to [0,1]");
    (weight, rho.frobenius_distance(&fit))
}
