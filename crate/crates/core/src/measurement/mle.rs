//! Maximum-likelihood state reconstruction.
//!
//! The estimate is updated as `ρ → A ρ A† / Tr(A ρ A†)` with
//! `A = (I + ε R)/(1 + ε)` and `R = Σ_j (n_j / p_j) Π_j / N`, the diluted
//! form of the `RρR` fixed-point iteration. Every iterate is of the form
//! `G†G / Tr(G†G)` and therefore positive semidefinite. The dilution `ε` is
//! halved until the log-likelihood does not decrease, so the recorded
//! likelihood sequence is monotone.

use nalgebra::DMatrix;

use super::counts::CoincidenceDataset;
use crate::error::{Error, Result};
use crate::states::{DensityMatrix4, Matrix4c, Vector4c};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Stop once `|ΔlogL| / max(|logL|, 1)` falls below this.
    pub relative_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { relative_tolerance: 1e-10, max_iterations: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix4,
    /// Log-likelihood after each accepted iteration, starting with `I/4`.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Outcome {
    ket: Vector4c,
    count: f64,
}

/// Real coordinates of `|k⟩⟨k|` in the 16-dimensional space of Hermitian
/// 4×4 matrices.
fn hermitian_coordinates(k: &Vector4c) -> [f64; 16] {
    let m = k * k.adjoint();
    let mut out = [0.0; 16];
    let mut idx = 0;
    for i in 0..4 {
        out[idx] = m[(i, i)].re;
        idx += 1;
        for j in i + 1..4 {
            out[idx] = m[(i, j)].re;
            out[idx + 1] = m[(i, j)].im;
            idx += 2;
        }
    }
    out
}

fn projector_rank(outcomes: &[Vector4c]) -> usize {
    let rows: Vec<f64> = outcomes.iter().flat_map(hermitian_coordinates).collect();
    let a = DMatrix::from_row_slice(outcomes.len(), 16, &rows);
    let sv = a.singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * max).count()
}

fn log_likelihood(outcomes: &[Outcome], rho: &Matrix4c) -> f64 {
    let mut ll = 0.0;
    for o in outcomes {
        if o.count > 0.0 {
            let p = (o.ket.adjoint() * rho * o.ket)[(0, 0)].re;
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += o.count * p.ln();
        }
    }
    ll
}

fn r_operator(outcomes: &[Outcome], rho: &Matrix4c, total: f64) -> Matrix4c {
    let mut r = Matrix4c::zeros();
    for o in outcomes {
        if o.count > 0.0 {
            let p = (o.ket.adjoint() * rho * o.ket)[(0, 0)].re;
            let w = o.count / (p * total);
            r += o.ket * o.ket.adjoint() * C64::new(w, 0.0);
        }
    }
    r
}

fn update(rho: &Matrix4c, r: &Matrix4c, eps: f64) -> Matrix4c {
    let a = (Matrix4c::identity() + r * C64::new(eps, 0.0)) / C64::new(1.0 + eps, 0.0);
    let next = a * rho * a.adjoint();
    let next = (next + next.adjoint()) * C64::new(0.5, 0.0);
    let tr = next.trace().re;
    next / C64::new(tr, 0.0)
}

/// Reconstructs `ρ` from a dataset, returning the full optimizer trace.
pub fn mle_reconstruct_traced(dataset: &CoincidenceDataset, options: &MleOptions) -> Result<MleResult> {
    let mut outcomes = Vec::with_capacity(dataset.records.len() * 4);
    for rec in &dataset.records {
        for (ket, &n) in rec.setting.outcome_kets().iter().zip(rec.counts.iter()) {
            outcomes.push(Outcome { ket: *ket, count: n as f64 });
        }
    }
    let total: f64 = outcomes.iter().map(|o| o.count).sum();
    if !(total > 0.0) {
        return Err(Error::validation("dataset contains no counts"));
    }
    let kets: Vec<Vector4c> = outcomes.iter().map(|o| o.ket).collect();
    let rank = projector_rank(&kets);
    if rank < 16 {
        return Err(Error::RankDeficient { rank });
    }

    let mut rho = Matrix4c::identity() * C64::new(0.25, 0.0);
    let mut ll = log_likelihood(&outcomes, &rho);
    let mut trace = vec![ll];
    let mut eps = 1e6;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let r = r_operator(&outcomes, &rho, total);
        let mut accepted = None;
        let mut step = eps;
        for _ in 0..60 {
            let cand = update(&rho, &r, step);
            let cand_ll = log_likelihood(&outcomes, &cand);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_ll)) = accepted else {
            converged = true;
            break;
        };
        eps = (step * 4.0).min(1e6);
        let change = (cand_ll - ll).abs() / ll.abs().max(1.0);
        rho = cand;
        ll = cand_ll;
        trace.push(ll);
        if change < options.relative_tolerance {
            converged = true;
            break;
        }
    }
    Ok(MleResult {
        rho: DensityMatrix4::new(rho)?,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

/// Maximum-likelihood estimate with default options.
pub fn mle_reconstruct(dataset: &CoincidenceDataset) -> Result<DensityMatrix4> {
    Ok(mle_reconstruct_traced(dataset, &MleOptions::default())?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::basis::{tomography_schedule, LocalBasis, MeasurementSetting};
    use crate::measurement::counts::{expected_counts, simulate_counts, NoiseConfig};
    use crate::states::{fidelity_general, rho_bell, BellState};

    #[test]
    fn exact_data_is_reconstructed() {
        let truth = rho_bell(BellState::PhiPlus, 0.7).unwrap();
        let data = expected_counts(&truth, &tomography_schedule(), 1_000_000_000_000).unwrap();
        let res = mle_reconstruct_traced(&data, &MleOptions::default()).unwrap();
        let d = res.rho.trace_distance(&truth);
        assert!(d < 1e-6, "trace distance {d}, iterations {}", res.iterations);
    }

    #[test]
    fn likelihood_is_monotone() {
        let truth = rho_bell(BellState::PsiMinus, 0.6).unwrap();
        let data = simulate_counts(&truth, &tomography_schedule(), 2000, 5, &NoiseConfig::none()).unwrap();
        let res = mle_reconstruct_traced(&data, &MleOptions::default()).unwrap();
        assert!(res.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
        assert!(res.converged);
    }

    #[test]
    fn computational_state_at_high_counts() {
        let hh = Vector4c::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let truth = DensityMatrix4::pure(&hh).unwrap();
        let data = simulate_counts(&truth, &tomography_schedule(), 1_000_000, 1, &NoiseConfig::none()).unwrap();
        let rho = mle_reconstruct(&data).unwrap();
        assert!(fidelity_general(&rho, &truth) >= 0.999);
    }

    #[test]
    fn maximally_mixed_data() {
        let truth = DensityMatrix4::maximally_mixed();
        let data = simulate_counts(&truth, &tomography_schedule(), 1_000_000, 2, &NoiseConfig::none()).unwrap();
        let rho = mle_reconstruct(&data).unwrap();
        assert!(rho.trace_distance(&truth) < 0.01);
    }

    #[test]
    fn incomplete_schedule_is_rejected() {
        let truth = DensityMatrix4::maximally_mixed();
        let schedule = [
            MeasurementSetting::new(LocalBasis::HV, LocalBasis::HV),
            MeasurementSetting::new(LocalBasis::DA, LocalBasis::DA),
        ];
        let data = expected_counts(&truth, &schedule, 1000).unwrap();
        assert!(matches!(mle_reconstruct(&data), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn empty_counts_are_rejected() {
        let truth = DensityMatrix4::maximally_mixed();
        let mut data = expected_counts(&truth, &tomography_schedule(), 1000).unwrap();
        for r in &mut data.records {
            r.counts = [0; 4];
        }
        assert!(matches!(mle_reconstruct(&data), Err(Error::Validation(_))));
    }
}
