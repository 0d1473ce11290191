//! Analytic propagation of a photon pair through the three-PPBS CNOT gate.
//!
//! The pair enters at ports `m` (control) and `s` (target) with temporal
//! profiles `u_m` and `u_s`. Write `f(t, t') = u_m(t)·u_s(t')` for the
//! two-photon wavefunction with the control-side photon at time `t`. For every
//! polarization pair `PQ` the state keeps an exchange pair `(a, b)` standing
//! for `a·f(t, t') + b·f(t', t)`. No element of the gate creates temporal
//! structure outside this two-dimensional span, so the description is exact
//! and only needs `η = |∫ u_m* u_s dt|²` for inner products:
//!
//! ```text
//! ⟨a f + b f̃ | a' f + b' f̃⟩ = a* a' + b* b' + η (a* b' + b* a')
//! ```

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{BellState, DensityMatrix4, Matrix4c};
use crate::C64;

const COEFF_TOL: f64 = 1e-12;

/// Linear polarization index, `H ≡ |0⟩`, `V ≡ |1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H = 0,
    V = 1,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];
}

/// Normalized polarization state `c_H|H⟩ + c_V|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    h: C64,
    v: C64,
}

impl JonesVector {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = h.norm_sqr() + v.norm_sqr();
        if (n - 1.0).abs() > COEFF_TOL {
            return Err(Error::validation(format!("Jones vector has norm² {n}")));
        }
        Ok(Self { h, v })
    }

    /// Normalizes `(h, v)`.
    pub fn normalized(h: C64, v: C64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(n > 0.0) {
            return Err(Error::validation("zero Jones vector"));
        }
        Ok(Self { h: h / n, v: v / n })
    }

    pub fn h() -> Self {
        PolState::H.jones()
    }

    pub fn v() -> Self {
        PolState::V.jones()
    }

    pub fn d() -> Self {
        PolState::D.jones()
    }

    pub fn a() -> Self {
        PolState::A.jones()
    }

    pub fn r() -> Self {
        PolState::R.jones()
    }

    pub fn l() -> Self {
        PolState::L.jones()
    }

    pub fn component(&self, p: Pol) -> C64 {
        match p {
            Pol::H => self.h,
            Pol::V => self.v,
        }
    }

    pub fn as_array(&self) -> [C64; 2] {
        [self.h, self.v]
    }
}

/// The six tomographic polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolState {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolState {
    pub const ALL: [PolState; 6] = [
        PolState::H,
        PolState::V,
        PolState::D,
        PolState::A,
        PolState::R,
        PolState::L,
    ];

    /// `|D/A⟩ = (|H⟩ ± |V⟩)/√2`, `|R/L⟩ = (|H⟩ ± i|V⟩)/√2`.
    pub fn jones(self) -> JonesVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let (h, v) = match self {
            PolState::H => (one, zero),
            PolState::V => (zero, one),
            PolState::D => (C64::new(s, 0.0), C64::new(s, 0.0)),
            PolState::A => (C64::new(s, 0.0), C64::new(-s, 0.0)),
            PolState::R => (C64::new(s, 0.0), C64::new(0.0, s)),
            PolState::L => (C64::new(s, 0.0), C64::new(0.0, -s)),
        };
        JonesVector { h, v }
    }

    /// The orthogonal partner within the same basis.
    pub fn orthogonal(self) -> PolState {
        match self {
            PolState::H => PolState::V,
            PolState::V => PolState::H,
            PolState::D => PolState::A,
            PolState::A => PolState::D,
            PolState::R => PolState::L,
            PolState::L => PolState::R,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolState::H => "H",
            PolState::V => "V",
            PolState::D => "D",
            PolState::A => "A",
            PolState::R => "R",
            PolState::L => "L",
        }
    }
}

impl fmt::Display for PolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H" => Ok(PolState::H),
            "V" => Ok(PolState::V),
            "D" => Ok(PolState::D),
            "A" => Ok(PolState::A),
            "R" => Ok(PolState::R),
            "L" => Ok(PolState::L),
            other => Err(Error::validation(format!("unknown polarization '{other}'"))),
        }
    }
}

/// Photon input states that the gate maps to each Bell state:
/// `D⊗H → Φ+`, `A⊗H → Φ−`, `D⊗V → Ψ+`, `A⊗V → Ψ−`.
pub fn bell_input(which: BellState) -> (PolState, PolState) {
    match which {
        BellState::PhiPlus => (PolState::D, PolState::H),
        BellState::PhiMinus => (PolState::A, PolState::H),
        BellState::PsiPlus => (PolState::D, PolState::V),
        BellState::PsiMinus => (PolState::A, PolState::V),
    }
}

/// The interfering PPBS, with independent coefficients per polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferingPpbs {
    pub t_h: f64,
    pub r_h: f64,
    pub t_v: f64,
    pub r_v: f64,
}

impl InterferingPpbs {
    pub fn lossless(t_h: f64, t_v: f64) -> Self {
        Self { t_h, r_h: 1.0 - t_h, t_v, r_v: 1.0 - t_v }
    }

    pub fn transmission(&self, p: Pol) -> f64 {
        match p {
            Pol::H => self.t_h,
            Pol::V => self.t_v,
        }
    }

    pub fn reflection(&self, p: Pol) -> f64 {
        match p {
            Pol::H => self.r_h,
            Pol::V => self.r_v,
        }
    }
}

/// One of the two balancing PPBSs in front of the detectors. They are mounted
/// rotated with respect to the first PPBS, so the H component is transmitted
/// with the V coefficient and vice versa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancingPpbs {
    pub t_h: f64,
    pub t_v: f64,
}

impl BalancingPpbs {
    /// Amplitude reaching the monitored port for polarization `p`.
    pub fn amplitude(&self, p: Pol) -> f64 {
        match p {
            Pol::H => self.t_v.sqrt(),
            Pol::V => self.t_h.sqrt(),
        }
    }
}

/// Transmission and reflection coefficients of the three PPBSs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    pub ppbs1: InterferingPpbs,
    pub ppbs2: BalancingPpbs,
    pub ppbs3: BalancingPpbs,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

impl GateConfig {
    /// `T_H = 1`, `T_V = 1/3` on all three PPBSs.
    pub fn ideal() -> Self {
        let third = 1.0 / 3.0;
        Self {
            ppbs1: InterferingPpbs { t_h: 1.0, r_h: 0.0, t_v: third, r_v: 1.0 - third },
            ppbs2: BalancingPpbs { t_h: 1.0, t_v: third },
            ppbs3: BalancingPpbs { t_h: 1.0, t_v: third },
        }
    }

    /// All beam splitters fully transmitting: no interference, no loss.
    pub fn transparent() -> Self {
        Self {
            ppbs1: InterferingPpbs::lossless(1.0, 1.0),
            ppbs2: BalancingPpbs { t_h: 1.0, t_v: 1.0 },
            ppbs3: BalancingPpbs { t_h: 1.0, t_v: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} = {x} outside [0,1]")))
            }
        };
        let p = &self.ppbs1;
        unit("ppbs1.tH", p.t_h)?;
        unit("ppbs1.rH", p.r_h)?;
        unit("ppbs1.tV", p.t_v)?;
        unit("ppbs1.rV", p.r_v)?;
        for (name, t, r) in [("H", p.t_h, p.r_h), ("V", p.t_v, p.r_v)] {
            if (t + r - 1.0).abs() > COEFF_TOL {
                return Err(Error::validation(format!(
                    "ppbs1 {name}: T + R = {} != 1",
                    t + r
                )));
            }
        }
        unit("ppbs2.tH", self.ppbs2.t_h)?;
        unit("ppbs2.tV", self.ppbs2.t_v)?;
        unit("ppbs3.tH", self.ppbs3.t_h)?;
        unit("ppbs3.tV", self.ppbs3.t_v)?;
        Ok(())
    }

    /// Parses the flat `ppbsN.tH` / `ppbsN.tV` key layout; omitted keys keep
    /// their ideal values and reflections are `1 − T`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GateConfigFile = toml::from_str(text)?;
        file.into_config()
    }

    pub fn read_toml<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let f = GateConfigFile::from(self);
        toml::to_string(&f).expect("gate config serializes")
    }
}

/// Serialized form of [`GateConfig`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfigFile {
    #[serde(default)]
    pub ppbs1: PpbsKeys,
    #[serde(default)]
    pub ppbs2: PpbsKeys,
    #[serde(default)]
    pub ppbs3: PpbsKeys,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpbsKeys {
    #[serde(rename = "tH", skip_serializing_if = "Option::is_none")]
    pub t_h: Option<f64>,
    #[serde(rename = "tV", skip_serializing_if = "Option::is_none")]
    pub t_v: Option<f64>,
}

impl GateConfigFile {
    pub fn into_config(self) -> Result<GateConfig> {
        let ideal = GateConfig::ideal();
        let cfg = GateConfig {
            ppbs1: InterferingPpbs::lossless(
                self.ppbs1.t_h.unwrap_or(ideal.ppbs1.t_h),
                self.ppbs1.t_v.unwrap_or(ideal.ppbs1.t_v),
            ),
            ppbs2: BalancingPpbs {
                t_h: self.ppbs2.t_h.unwrap_or(ideal.ppbs2.t_h),
                t_v: self.ppbs2.t_v.unwrap_or(ideal.ppbs2.t_v),
            },
            ppbs3: BalancingPpbs {
                t_h: self.ppbs3.t_h.unwrap_or(ideal.ppbs3.t_h),
                t_v: self.ppbs3.t_v.unwrap_or(ideal.ppbs3.t_v),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&GateConfig> for GateConfigFile {
    fn from(c: &GateConfig) -> Self {
        Self {
            ppbs1: PpbsKeys { t_h: Some(c.ppbs1.t_h), t_v: Some(c.ppbs1.t_v) },
            ppbs2: PpbsKeys { t_h: Some(c.ppbs2.t_h), t_v: Some(c.ppbs2.t_v) },
            ppbs3: PpbsKeys { t_h: Some(c.ppbs3.t_h), t_v: Some(c.ppbs3.t_v) },
        }
    }
}

/// Amplitude `a·f(t, t') + b·f(t', t)` of one polarization pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExchangePair {
    pub a: C64,
    pub b: C64,
}

impl ExchangePair {
    pub fn new(a: C64, b: C64) -> Self {
        Self { a, b }
    }

    fn scale(self, k: C64) -> Self {
        Self { a: self.a * k, b: self.b * k }
    }

    fn swapped(self) -> Self {
        Self { a: self.b, b: self.a }
    }

    fn add(self, o: Self) -> Self {
        Self { a: self.a + o.a, b: self.b + o.b }
    }

    /// Temporal inner product `⟨self|other⟩` given the overlap `eta`.
    pub fn inner(&self, other: &ExchangePair, eta: f64) -> C64 {
        self.a.conj() * other.a
            + self.b.conj() * other.b
            + (self.a.conj() * other.b + self.b.conj() * other.a) * eta
    }
}

/// Index of the polarization pair `(control, target)` in (HH, HV, VH, VV) order.
pub fn pair_index(control: Pol, target: Pol) -> usize {
    2 * control as usize + target as usize
}

/// Which photon an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    /// Photon entering at `m` and leaving at `p`.
    Control,
    /// Photon entering at `s` and leaving at `q`.
    Target,
}

/// Two-photon state over polarization pairs and the temporal exchange space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolTemporalTwoPhotonState {
    terms: [ExchangePair; 4],
    eta: f64,
}

impl PolTemporalTwoPhotonState {
    pub fn new(terms: [ExchangePair; 4], eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { terms, eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn terms(&self) -> &[ExchangePair; 4] {
        &self.terms
    }

    pub fn term(&self, control: Pol, target: Pol) -> ExchangePair {
        self.terms[pair_index(control, target)]
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.terms
            .iter()
            .zip(other.terms.iter())
            .map(|(x, y)| x.inner(y, self.eta))
            .sum()
    }

    /// Squared norm including the exchange overlap.
    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re
    }

    /// Unnormalized polarization matrix `Σ_τ ψ_i(τ) ψ_j*(τ)` after tracing
    /// over both detection times.
    pub fn polarization_matrix(&self) -> Matrix4c {
        Matrix4c::from_fn(|i, j| self.terms[j].inner(&self.terms[i], self.eta))
    }

    /// Polarization density matrix of the normalized state.
    pub fn reduced_density_matrix(&self) -> Result<DensityMatrix4> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::DegenerateState);
        }
        let m = self.polarization_matrix() / C64::new(n, 0.0);
        DensityMatrix4::new((m + m.adjoint()) * C64::new(0.5, 0.0))
    }

    fn map_port(&self, port: Port, u: [[C64; 2]; 2]) -> Self {
        let mut out = [ExchangePair::default(); 4];
        for c in Pol::BOTH {
            for t in Pol::BOTH {
                let term = self.term(c, t);
                for n in Pol::BOTH {
                    let (dst, k) = match port {
                        Port::Control => (pair_index(n, t), u[n as usize][c as usize]),
                        Port::Target => (pair_index(c, n), u[n as usize][t as usize]),
                    };
                    out[dst] = out[dst].add(term.scale(k));
                }
            }
        }
        Self { terms: out, eta: self.eta }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::validation(format!("eta = {eta} outside [0,1]")));
    }
    Ok(())
}

/// Product input `|pol_m⟩_m |pol_s⟩_s` with temporal profile `f(t_m, t_s)`.
pub fn build_input_state(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    eta: f64,
) -> Result<PolTemporalTwoPhotonState> {
    check_eta(eta)?;
    let mut terms = [ExchangePair::default(); 4];
    for c in Pol::BOTH {
        for t in Pol::BOTH {
            terms[pair_index(c, t)] =
                ExchangePair::new(pol_m.component(c) * pol_s.component(t), C64::new(0.0, 0.0));
        }
    }
    Ok(PolTemporalTwoPhotonState { terms, eta })
}

/// Half-wave plate at 22.5°: `H → (H+V)/√2`, `V → (H−V)/√2`.
pub fn hadamard(state: &PolTemporalTwoPhotonState, port: Port) -> PolTemporalTwoPhotonState {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    state.map_port(port, [[s, s], [s, -s]])
}

/// The three PPBSs, post-selected on one photon at each of `p` and `q`.
///
/// At the first PPBS
///
/// ```text
/// m_P → √T_P f_P + i√R_P g_P        s_P → √T_P g_P + i√R_P f_P
/// ```
///
/// Amplitudes with both photons in `f` or both in `g` are dropped. When both
/// photons are reflected they swap sides, which exchanges the roles of `t`
/// and `t'` and moves the amplitude between the `a` and `b` slots. The
/// balancing PPBSs then attenuate each port. The result is not normalized.
pub fn ppbs_network(
    state: &PolTemporalTwoPhotonState,
    config: &GateConfig,
) -> Result<PolTemporalTwoPhotonState> {
    config.validate()?;
    let b1 = &config.ppbs1;
    let mut out = [ExchangePair::default(); 4];
    for c in Pol::BOTH {
        for t in Pol::BOTH {
            let term = state.term(c, t);
            // both transmitted: control photon in f, target photon in g
            let direct = (b1.transmission(c) * b1.transmission(t)).sqrt()
                * config.ppbs2.amplitude(c)
                * config.ppbs3.amplitude(t);
            let dst = pair_index(c, t);
            out[dst] = out[dst].add(term.scale(C64::new(direct, 0.0)));
            // both reflected: i·i = −1, photons swap sides
            let crossed = -(b1.reflection(c) * b1.reflection(t)).sqrt()
                * config.ppbs2.amplitude(t)
                * config.ppbs3.amplitude(c);
            if crossed != 0.0 {
                let dst = pair_index(t, c);
                out[dst] = out[dst].add(term.swapped().scale(C64::new(crossed, 0.0)));
            }
        }
    }
    Ok(PolTemporalTwoPhotonState { terms: out, eta: state.eta })
}

/// Normalizes a post-selected state; the success probability is its squared
/// norm before normalization.
pub fn postselect_normalize(
    state: &PolTemporalTwoPhotonState,
) -> Result<(PolTemporalTwoPhotonState, f64)> {
    let p = state.norm_sqr();
    if !(p > 1e-300) {
        return Err(Error::DegenerateState);
    }
    let k = C64::new(1.0 / p.sqrt(), 0.0);
    let terms = state.terms.map(|t| t.scale(k));
    Ok((PolTemporalTwoPhotonState { terms, eta: state.eta }, p))
}

/// Unnormalized gate output: Hadamard on the target, PPBS network, Hadamard
/// on the target.
pub fn cnot_network(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    eta: f64,
    config: &GateConfig,
) -> Result<PolTemporalTwoPhotonState> {
    let input = build_input_state(pol_m, pol_s, eta)?;
    let s1 = hadamard(&input, Port::Target);
    let s2 = ppbs_network(&s1, config)?;
    Ok(hadamard(&s2, Port::Target))
}

/// Runs the gate and post-selects. Returns the normalized output state and
/// the success probability.
pub fn run_cnot(
    pol_m: &JonesVector,
    pol_s: &JonesVector,
    eta: f64,
    config: &GateConfig,
) -> Result<(PolTemporalTwoPhotonState, f64)> {
    postselect_normalize(&cnot_network(pol_m, pol_s, eta, config)?)
}

/// Weights of a normalized state on the Bell states, split by the exchange
/// symmetry of the temporal part: `[k][0]` on `Bell_k ⊗ f̂+` and `[k][1]` on
/// `Bell_k ⊗ f̂−`, with `f̂± = f±/‖f±‖`, `f± = (f ± f̃)/2` and `‖f±‖² = (1 ± η)/2`.
///
/// Every state of the representation lies in the span of these eight
/// orthonormal states, so the weights of a normalized state sum to one.
/// Bell states are taken in the order of [`BellState::ALL`].
pub fn bell_decomposition_by_symmetry(state: &PolTemporalTwoPhotonState) -> [[f64; 2]; 4] {
    let eta = state.eta;
    // ⟨f̂±|a f + b f̃⟩ = (a ± b)·√((1 ± η)/2)
    let (kp, km) = ((0.5 * (1.0 + eta)).sqrt(), (0.5 * (1.0 - eta)).max(0.0).sqrt());
    BellState::ALL.map(|bell| {
        let ket = bell.ket();
        let (mut plus, mut minus) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (k, t) in state.terms.iter().enumerate() {
            plus += ket[k].conj() * (t.a + t.b) * kp;
            minus += ket[k].conj() * (t.a - t.b) * km;
        }
        [plus.norm_sqr(), minus.norm_sqr()]
    })
}

/// Total weight on each Bell state, `[Φ+, Φ−, Ψ+, Ψ−]`. For a normalized
/// state these are the Bell-state fidelities of its polarization part.
pub fn bell_decomposition(state: &PolTemporalTwoPhotonState) -> [f64; 4] {
    bell_decomposition_by_symmetry(state).map(|[p, m]| p + m)
}

/// Anything that can run the gate for a product input and report the
/// post-selected polarization state with its success probability.
pub trait GateRunner {
    fn run(&self, control: &JonesVector, target: &JonesVector) -> Result<(DensityMatrix4, f64)>;
}

/// The analytic gate at fixed indistinguishability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticGate {
    pub eta: f64,
    pub config: GateConfig,
}

impl AnalyticGate {
    pub fn new(eta: f64, config: GateConfig) -> Result<Self> {
        check_eta(eta)?;
        config.validate()?;
        Ok(Self { eta, config })
    }

    pub fn ideal(eta: f64) -> Result<Self> {
        Self::new(eta, GateConfig::ideal())
    }
}

impl GateRunner for AnalyticGate {
    fn run(&self, control: &JonesVector, target: &JonesVector) -> Result<(DensityMatrix4, f64)> {
        let (state, p) = run_cnot(control, target, self.eta, &self.config)?;
        Ok((state.reduced_density_matrix()?, p))
    }
}
