//! Brute-force Fock-space simulation of the gate.
//!
//! Every optical element is written as a unitary on the full single-photon
//! mode space (spatial rail × polarization × temporal mode), including the
//! unmonitored output ports of the balancing PPBSs. A two-photon state
//! `Σ_ij A_ij a†_i a†_j |0⟩` is stored as its symmetric coefficient matrix `A`
//! and evolves as `A → U A Uᵀ`. Post-selection and the temporal trace are
//! done only at the end.
//!
//! Both photons live in the span of `u_m` and `u_s`, and none of the elements
//! acts on time, so a two-dimensional orthonormal temporal basis obtained by
//! Gram–Schmidt on the input profiles makes the simulation exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gate::{GateConfig, GateRunner, JonesVector, Pol};
use crate::states::{DensityMatrix4, Matrix4c};
use crate::waveform::TemporalWaveform;
use crate::C64;

/// Spatial rails. The control rail carries `m → f → p`, the target rail
/// carries `s → g → q`; the discard rails collect what the balancing PPBSs
/// send away from the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rail {
    Control = 0,
    Target = 1,
    DiscardControl = 2,
    DiscardTarget = 3,
}

impl Rail {
    pub const ALL: [Rail; 4] = [
        Rail::Control,
        Rail::Target,
        Rail::DiscardControl,
        Rail::DiscardTarget,
    ];
}

/// Number of temporal modes kept.
pub const TEMPORAL_MODES: usize = 2;
/// Dimension of the single-photon mode space.
pub const MODE_COUNT: usize = 4 * 2 * TEMPORAL_MODES;

/// A single-photon mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub rail: Rail,
    pub pol: Pol,
    /// Index into the orthonormal temporal basis, `0` or `1`.
    pub temporal: usize,
}

impl ModeIndex {
    pub fn new(rail: Rail, pol: Pol, temporal: usize) -> Self {
        debug_assert!(temporal < TEMPORAL_MODES);
        Self { rail, pol, temporal }
    }

    pub fn flat(&self) -> usize {
        (self.rail as usize * 2 + self.pol as usize) * TEMPORAL_MODES + self.temporal
    }

    pub fn all() -> impl Iterator<Item = ModeIndex> {
        Rail::ALL.into_iter().flat_map(|rail| {
            Pol::BOTH.into_iter().flat_map(move |pol| {
                (0..TEMPORAL_MODES).map(move |temporal| ModeIndex { rail, pol, temporal })
            })
        })
    }
}

/// Result of the temporal Gram–Schmidt step: `u_m = v1`,
/// `u_s = c1·v1 + c2·v2` with `c2` real and non-negative.
#[derive(Debug, Clone)]
pub struct TemporalSchmidt {
    pub v1: TemporalWaveform,
    /// `None` when the two profiles coincide (up to phase) and one temporal
    /// mode suffices.
    pub v2: Option<TemporalWaveform>,
    pub c1: C64,
    pub c2: f64,
}

impl TemporalSchmidt {
    pub fn eta(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn is_single_mode(&self) -> bool {
        self.v2.is_none()
    }
}

/// Orthonormalizes `u_s` against `u_m`.
pub fn gram_schmidt_temporal(
    u_m: &TemporalWaveform,
    u_s: &TemporalWaveform,
) -> Result<TemporalSchmidt> {
    for u in [u_m, u_s] {
        if !u.is_normalized(crate::waveform::NORM_TOLERANCE) {
            return Err(Error::validation("Gram-Schmidt needs normalized waveforms"));
        }
    }
    let v1 = u_m.clone().normalized()?;
    let u_s = u_s.clone().normalized()?;
    let c1 = v1.inner(&u_s)?;
    if (1.0 - c1.norm_sqr()).abs() <= 1e-12 {
        return Ok(TemporalSchmidt { v1, v2: None, c1, c2: 0.0 });
    }
    let residual: Vec<C64> = u_s
        .samples()
        .iter()
        .zip(v1.samples())
        .map(|(s, m)| s - c1 * m)
        .collect();
    let residual = TemporalWaveform::from_samples(*u_s.grid(), residual)?;
    let c2 = residual.norm_sqr().sqrt();
    let v2 = residual.normalized()?;
    Ok(TemporalSchmidt { v1, v2: Some(v2), c1, c2 })
}

/// Two-photon state in the full mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonFockState {
    /// Symmetric coefficient matrix `A`, `|ψ⟩ = Σ_ij A_ij a†_i a†_j |0⟩`.
    coeffs: DMatrix<C64>,
}

impl TwoPhotonFockState {
    /// `a†(x) a†(y) |0⟩` for single-photon amplitude vectors `x` and `y`.
    pub fn from_photons(x: &DVector<C64>, y: &DVector<C64>) -> Self {
        let xy = x * y.transpose();
        let coeffs = (&xy + xy.transpose()) * C64::new(0.5, 0.0);
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    /// Amplitude on the normalized Fock state with one photon in each of `i`
    /// and `j` (or two in `i` when `i == j`).
    pub fn amplitude(&self, i: ModeIndex, j: ModeIndex) -> C64 {
        let (i, j) = (i.flat(), j.flat());
        if i == j {
            self.coeffs[(i, i)] * std::f64::consts::SQRT_2
        } else {
            self.coeffs[(i, j)] + self.coeffs[(j, i)]
        }
    }

    /// `⟨ψ|ψ⟩ = 2 Σ_ij |A_ij|²` for symmetric `A`.
    pub fn norm_sqr(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Largest violation of `A = Aᵀ`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.coeffs - self.coeffs.transpose())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Applies the single-photon mode map `a†_i → Σ_k U_ki a†_k`.
    pub fn apply(&self, u: &DMatrix<C64>) -> Self {
        Self { coeffs: u * &self.coeffs * u.transpose() }
    }

    /// Projects onto one photon in the control rail and one in the target
    /// rail, traces out the temporal modes, and returns the unnormalized
    /// polarization matrix (trace = post-selection probability).
    pub fn postselected_polarization(&self) -> Matrix4c {
        let mut rho = Matrix4c::zeros();
        for tc in 0..TEMPORAL_MODES {
            for tt in 0..TEMPORAL_MODES {
                let amp = |pc: Pol, pt: Pol| {
                    self.amplitude(
                        ModeIndex::new(Rail::Control, pc, tc),
                        ModeIndex::new(Rail::Target, pt, tt),
                    )
                };
                let psi: Vec<C64> = [(Pol::H, Pol::H), (Pol::H, Pol::V), (Pol::V, Pol::H), (Pol::V, Pol::V)]
                    .iter()
                    .map(|&(c, t)| amp(c, t))
                    .collect();
                for i in 0..4 {
                    for j in 0..4 {
                        rho[(i, j)] += psi[i] * psi[j].conj();
                    }
                }
            }
        }
        rho
    }
}

fn identity() -> DMatrix<C64> {
    DMatrix::identity(MODE_COUNT, MODE_COUNT)
}

fn mode(rail: Rail, pol: Pol, temporal: usize) -> usize {
    ModeIndex::new(rail, pol, temporal).flat()
}

/// Two-port coupler between rails `a` and `b` for polarization `pol`:
/// `a → t·a + i·r·b`, `b → i·r·a + t·b` with `t² + r² = 1`.
fn couple(u: &mut DMatrix<C64>, a: Rail, b: Rail, pol: Pol, t: f64, r: f64) {
    for tm in 0..TEMPORAL_MODES {
        let (ia, ib) = (mode(a, pol, tm), mode(b, pol, tm));
        u[(ia, ia)] = C64::new(t, 0.0);
        u[(ib, ia)] = C64::new(0.0, r);
        u[(ia, ib)] = C64::new(0.0, r);
        u[(ib, ib)] = C64::new(t, 0.0);
    }
}

/// Half-wave plate at 22.5° on one rail.
pub fn hadamard_unitary(rail: Rail) -> DMatrix<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut u = identity();
    for tm in 0..TEMPORAL_MODES {
        let (h, v) = (mode(rail, Pol::H, tm), mode(rail, Pol::V, tm));
        u[(h, h)] = s;
        u[(v, h)] = s;
        u[(h, v)] = s;
        u[(v, v)] = -s;
    }
    u
}

/// First PPBS, coupling the control and target rails.
pub fn interfering_ppbs_unitary(config: &GateConfig) -> DMatrix<C64> {
    let mut u = identity();
    for pol in Pol::BOTH {
        let t = config.ppbs1.transmission(pol).sqrt();
        let r = config.ppbs1.reflection(pol).sqrt();
        couple(&mut u, Rail::Control, Rail::Target, pol, t, r);
    }
    u
}

/// Balancing PPBS on `rail`, sending the rejected part to `discard`.
pub fn balancing_ppbs_unitary(
    rail: Rail,
    discard: Rail,
    ppbs: &crate::gate::BalancingPpbs,
) -> DMatrix<C64> {
    let mut u = identity();
    for pol in Pol::BOTH {
        let t = ppbs.amplitude(pol);
        let r = (1.0 - t * t).max(0.0).sqrt();
        couple(&mut u, rail, discard, pol, t, r);
    }
    u
}

/// The gate as an ordered list of named mode unitaries.
pub fn gate_stages(config: &GateConfig) -> Vec<(&'static str, DMatrix<C64>)> {
    vec![
        ("hadamard_in", hadamard_unitary(Rail::Target)),
        ("ppbs1", interfering_ppbs_unitary(config)),
        ("ppbs2", balancing_ppbs_unitary(Rail::Control, Rail::DiscardControl, &config.ppbs2)),
        ("ppbs3", balancing_ppbs_unitary(Rail::Target, Rail::DiscardTarget, &config.ppbs3)),
        ("hadamard_out", hadamard_unitary(Rail::Target)),
    ]
}

fn photon(rail: Rail, pol: &JonesVector, temporal: [C64; TEMPORAL_MODES]) -> DVector<C64> {
    let mut x = DVector::zeros(MODE_COUNT);
    for p in Pol::BOTH {
        for (tm, c) in temporal.iter().enumerate() {
            x[mode(rail, p, tm)] = pol.component(p) * c;
        }
    }
    x
}

/// Input pair with the control photon in temporal mode 0 and the target
/// photon in `c1·mode0 + c2·mode1`.
pub fn input_state(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    c1: C64,
    c2: f64,
) -> TwoPhotonFockState {
    let one = C64::new(1.0, 0.0);
    let x = photon(Rail::Control, pol_m, [one, C64::new(0.0, 0.0)]);
    let y = photon(Rail::Target, pol_s, [c1, C64::new(c2, 0.0)]);
    TwoPhotonFockState::from_photons(&x, &y)
}

/// Propagates an input through the gate and post-selects.
///
/// # Panics
///
/// If a stage fails to conserve the two-photon norm, which would mean a
/// non-unitary stage was constructed.
pub fn simulate_schmidt(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    c1: C64,
    c2: f64,
    config: &GateConfig,
) -> Result<(DensityMatrix4, f64)> {
    config.validate()?;
    if ((c1.norm_sqr() + c2 * c2) - 1.0).abs() > 1e-10 {
        return Err(Error::validation("temporal coefficients are not normalized"));
    }
    let mut state = input_state(pol_m, pol_s, c1, c2);
    for (name, u) in gate_stages(config) {
        state = state.apply(&u);
        let n = state.norm_sqr();
        assert!(
            (n - 1.0).abs() < 1e-10,
            "photon number not conserved after {name}: norm² = {n}"
        );
    }
    let m = state.postselected_polarization();
    let success = m.trace().re;
    if !(success > 1e-300) {
        return Err(Error::DegenerateState);
    }
    let rho = m / C64::new(success, 0.0);
    Ok((DensityMatrix4::new((rho + rho.adjoint()) * C64::new(0.5, 0.0))?, success))
}

/// Full simulation from sampled temporal profiles.
pub fn simulate_full(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    u_m: &TemporalWaveform,
    u_s: &TemporalWaveform,
    config: &GateConfig,
) -> Result<(DensityMatrix4, f64)> {
    let schmidt = gram_schmidt_temporal(u_m, u_s)?;
    simulate_schmidt(pol_m, pol_s, schmidt.c1, schmidt.c2, config)
}

/// Coincidence probability behind a balanced beam splitter for two photons
/// with temporal overlap `c1`, computed in the Fock space.
pub fn hom_coincidence(c1: C64) -> Result<f64> {
    let eta = c1.norm_sqr();
    if eta > 1.0 + 1e-12 {
        return Err(Error::validation("temporal overlap exceeds one"));
    }
    let c2 = (1.0 - eta).max(0.0).sqrt();
    let h = JonesVector::h();
    let state = input_state(&h, &h, c1, c2);
    let mut u = identity();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for pol in Pol::BOTH {
        couple(&mut u, Rail::Control, Rail::Target, pol, s, s);
    }
    let out = state.apply(&u);
    Ok(out.postselected_polarization().trace().re)
}

/// Fock-space gate at a fixed temporal overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockGate {
    pub c1: C64,
    pub config: GateConfig,
}

impl FockGate {
    /// Real, non-negative overlap `√η`.
    pub fn with_eta(eta: f64, config: GateConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::validation(format!("eta = {eta} outside [0,1]")));
        }
        Ok(Self { c1: C64::new(eta.sqrt(), 0.0), config })
    }
}

impl GateRunner for FockGate {
    fn run(&self, control: &JonesVector, target: &JonesVector) -> Result<(DensityMatrix4, f64)> {
        let c2 = (1.0 - self.c1.norm_sqr()).max(0.0).sqrt();
        simulate_schmidt(control, target, self.c1, c2, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::BellState;
    use crate::waveform::TimeGrid;
    use approx::assert_abs_diff_eq;

    fn is_unitary(u: &DMatrix<C64>) -> f64 {
        (u.adjoint() * u - identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn mode_indices_are_distinct() {
        let flat: std::collections::HashSet<usize> = ModeIndex::all().map(|m| m.flat()).collect();
        assert_eq!(flat.len(), MODE_COUNT);
        assert!(flat.iter().all(|&i| i < MODE_COUNT));
    }

    #[test]
    fn stages_are_unitary() {
        let mut cfg = GateConfig::ideal();
        cfg.ppbs1 = crate::gate::InterferingPpbs::lossless(0.93, 0.31);
        cfg.ppbs2.t_v = 0.28;
        cfg.ppbs3.t_h = 0.95;
        for config in [GateConfig::ideal(), cfg] {
            for (name, u) in gate_stages(&config) {
                assert!(is_unitary(&u) < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn gram_schmidt_cases() {
        let g = TimeGrid::centered(20e-9, 5e-12).unwrap();
        let gauss = |t0: f64| {
            TemporalWaveform::from_fn(g, move |t| {
                C64::new((-(t - t0).powi(2) / (4.0 * 0.25e-18)).exp(), 0.0)
            })
            .unwrap()
        };
        let a = gauss(0.0);
        let same = gram_schmidt_temporal(&a, &a).unwrap();
        assert!(same.is_single_mode());
        assert_abs_diff_eq!(same.c1.norm(), 1.0, epsilon = 1e-12);

        let far = gauss(8e-9);
        let orth = gram_schmidt_temporal(&a, &far).unwrap();
        assert!(orth.c1.norm() < 1e-12);
        assert_abs_diff_eq!(orth.c2, 1.0, epsilon = 1e-12);

        // σ = 0.5 ns, offset 2σ
        let b = gauss(1e-9);
        let gs = gram_schmidt_temporal(&a, &b).unwrap();
        assert_abs_diff_eq!(gs.eta(), (-1f64).exp(), epsilon = 1e-9);
        let v2 = gs.v2.as_ref().unwrap();
        assert!(gs.v1.inner(v2).unwrap().norm() < 1e-10);
        assert_abs_diff_eq!(gs.c1.norm_sqr() + gs.c2 * gs.c2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bosonic_symmetry_is_preserved() {
        let pm = JonesVector::normalized(C64::new(0.3, 0.4), C64::new(0.1, -0.8)).unwrap();
        let ps = JonesVector::normalized(C64::new(-0.6, 0.2), C64::new(0.5, 0.5)).unwrap();
        let mut state = input_state(&pm, &ps, C64::new(0.4, 0.3), (1.0f64 - 0.25).sqrt());
        for (_, u) in gate_stages(&GateConfig::ideal()) {
            state = state.apply(&u);
            assert!(state.symmetry_defect() < 1e-15);
        }
    }

    #[test]
    fn phi_plus_at_unit_overlap() {
        let (rho, p) = FockGate::with_eta(1.0, GateConfig::ideal())
            .unwrap()
            .run(&JonesVector::d(), &JonesVector::h())
            .unwrap();
        assert!(rho.frobenius_distance(&BellState::PhiPlus.projector()) < 1e-12);
        assert_abs_diff_eq!(p, 1.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn phi_plus_at_half_overlap() {
        let (rho, p) = FockGate::with_eta(0.5, GateConfig::ideal())
            .unwrap()
            .run(&JonesVector::d(), &JonesVector::h())
            .unwrap();
        let t = 1.0 / 3.0;
        let expected = [
            [t, 0.0, 0.5 * t, 0.5 * t],
            [0.0; 4],
            [0.5 * t, 0.0, t, -0.5 * t],
            [0.5 * t, 0.0, -0.5 * t, t],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((rho.get(i, j) - C64::new(expected[i][j], 0.0)).norm() < 1e-12);
            }
        }
        assert_abs_diff_eq!(p, 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn transparent_network_passes_vv() {
        let (rho, p) = FockGate::with_eta(0.0, GateConfig::transparent())
            .unwrap()
            .run(&JonesVector::v(), &JonesVector::v())
            .unwrap();
        assert_abs_diff_eq!(rho.get(3, 3).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hom_dip() {
        assert_abs_diff_eq!(hom_coincidence(C64::new(1.0, 0.0)).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hom_coincidence(C64::new(0.0, 0.0)).unwrap(), 0.5, epsilon = 1e-15);
        let c = C64::from_polar(0.6, 1.1);
        assert_abs_diff_eq!(hom_coincidence(c).unwrap(), (1.0 - 0.36) / 2.0, epsilon = 1e-14);
    }
}
