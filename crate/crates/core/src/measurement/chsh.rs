use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::basis::{born_probabilities, LocalBasis, MeasurementSetting};
use crate::error::{Error, Result};
use crate::states::{fidelity_vs_eta, DensityMatrix4, Matrix4c};
use crate::C64;

/// Largest CHSH value allowed by quantum mechanics.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

const COARSE_STEP: f64 = 10.0;
const FINE_STEP: f64 = 0.01;

/// Optimized CHSH score and the analyzer angles `[a, a′, b, b′]` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s_max: f64,
    pub angles: [f64; 4],
}

/// `E(a, b) = p00 − p01 − p10 + p11` for linear analyzers at `a` and `b` degrees.
pub fn chsh_correlation(rho: &DensityMatrix4, a: f64, b: f64) -> f64 {
    let setting = MeasurementSetting::new(LocalBasis::Linear(a), LocalBasis::Linear(b));
    let p = born_probabilities(rho, &setting);
    p[0] - p[1] - p[2] + p[3]
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` with `angles = [a, a′, b, b′]`.
pub fn chsh_score(rho: &DensityMatrix4, angles: [f64; 4]) -> f64 {
    let [a, a2, b, b2] = angles;
    chsh_correlation(rho, a, b) - chsh_correlation(rho, a, b2)
        + chsh_correlation(rho, a2, b)
        + chsh_correlation(rho, a2, b2)
}

/// Correlation block `T_ij = Tr[ρ σ_i ⊗ σ_j]` for `i, j ∈ {z, x}`. A linear
/// analyzer at `θ` measures `cos 2θ σ_z + sin 2θ σ_x`.
fn zx_correlations(rho: &DensityMatrix4) -> Matrix2<f64> {
    let z = [1.0, -1.0];
    let pauli = |k: usize| -> nalgebra::Matrix2<C64> {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        if k == 0 {
            nalgebra::Matrix2::new(C64::new(z[0], 0.0), o, o, C64::new(z[1], 0.0))
        } else {
            nalgebra::Matrix2::new(o, l, l, o)
        }
    };
    let mut t = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let op = pauli(i).kronecker(&pauli(j));
            let op = Matrix4c::from_iterator(op.iter().copied());
            t[(i, j)] = (rho.matrix() * op).trace().re;
        }
    }
    t
}

fn direction(deg: f64) -> Vector2<f64> {
    let (s, c) = (2.0 * deg.to_radians()).sin_cos();
    Vector2::new(c, s)
}

fn angle_of(v: &Vector2<f64>) -> f64 {
    (0.5 * v.y.atan2(v.x).to_degrees()).rem_euclid(180.0)
}

fn score_fast(t: &Matrix2<f64>, angles: [f64; 4]) -> f64 {
    let [a, a2, b, b2] = angles.map(direction);
    let e = |x: &Vector2<f64>, y: &Vector2<f64>| x.dot(&(t * y));
    e(&a, &b) - e(&a, &b2) + e(&a2, &b) + e(&a2, &b2)
}

/// Maximizes `|S|` over linear analyzer angles.
///
/// A 10° grid over all four angles seeds a pattern search that refines the
/// step down to 0.01°. The result is polished by alternating exact updates
/// of the Bob and Alice angles, each of which cannot decrease `S`.
pub fn chsh_optimize(rho: &DensityMatrix4) -> ChshResult {
    let t = zx_correlations(rho);
    let abs_score = |x: [f64; 4]| score_fast(&t, x).abs();

    let steps = (180.0 / COARSE_STEP) as usize;
    let mut best = [0.0; 4];
    let mut best_s = abs_score(best);
    for i in 0..steps.pow(4) {
        let x = [i % steps, (i / steps) % steps, (i / steps.pow(2)) % steps, i / steps.pow(3)]
            .map(|k| k as f64 * COARSE_STEP);
        let s = abs_score(x);
        if s > best_s {
            best_s = s;
            best = x;
        }
    }

    let mut step = COARSE_STEP / 2.0;
    while step >= FINE_STEP {
        let mut improved = false;
        for k in 0..4 {
            for sign in [1.0, -1.0] {
                let mut x = best;
                x[k] += sign * step;
                let s = abs_score(x);
                if s > best_s {
                    best_s = s;
                    best = x;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }

    // Flip b′ when the maximum was found on the negative branch so that S > 0.
    if score_fast(&t, best) < 0.0 {
        best[2] += 90.0;
        best[3] += 90.0;
    }
    for _ in 0..200 {
        let [a, a2, _, _] = best.map(direction);
        let (u, w) = (t.transpose() * (a + a2), t.transpose() * (a2 - a));
        if u.norm() > 0.0 {
            best[2] = angle_of(&u);
        }
        if w.norm() > 0.0 {
            best[3] = angle_of(&(-w));
        }
        let [_, _, b, b2] = best.map(direction);
        let (u, w) = (t * (b - b2), t * (b + b2));
        if u.norm() > 0.0 {
            best[0] = angle_of(&u);
        }
        if w.norm() > 0.0 {
            best[1] = angle_of(&w);
        }
        let s = score_fast(&t, best);
        let done = (s - best_s).abs() < 1e-15;
        best_s = best_s.max(s);
        if done {
            break;
        }
    }
    let angles = best.map(|x| x.rem_euclid(180.0));
    ChshResult { s_max: chsh_score(rho, angles).abs(), angles }
}

/// Bell-state fidelity above which a Werner-like state violates CHSH, `(2 + 3√2)/8`.
pub fn bell_fidelity_threshold() -> f64 {
    (2.0 + 3.0 * std::f64::consts::SQRT_2) / 8.0
}

/// Indistinguishability at which the gate's output fidelity reaches the Bell threshold.
pub fn eta_at_bell_threshold() -> Result<f64> {
    let target = bell_fidelity_threshold();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if fidelity_vs_eta(hi)? < target {
        return Err(Error::OutOfRange("threshold unreachable".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fidelity_vs_eta(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
