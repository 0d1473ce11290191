//! Reference computations shared by the integration tests. Each one is
//! written out directly rather than calling into the library routine it
//! checks.
#![allow(dead_code)]

use homgate::states::{Matrix4c, Vector4c};
use homgate::{DensityMatrix4, C64};
use nalgebra::{DMatrix, Matrix4};
use rand::Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Output density matrices of the gate written out entry by entry, with
/// `d = 4 − 2η`, `r = 1 − η`.
pub fn closed_form(which: usize, eta: f64) -> [[f64; 4]; 4] {
    let (d, r, e) = (4.0 - 2.0 * eta, 1.0 - eta, eta);
    let m = match which {
        0 => [[1.0, 0.0, r, e], [0.0; 4], [r, 0.0, 2.0 * r, -r], [e, 0.0, -r, 1.0]],
        1 => [[1.0, 0.0, -r, -e], [0.0; 4], [-r, 0.0, 2.0 * r, -r], [-e, 0.0, -r, 1.0]],
        2 => [[0.0; 4], [0.0, 1.0, e, r], [0.0, e, 1.0, -r], [0.0, r, -r, 2.0 * r]],
        _ => [[0.0; 4], [0.0, 1.0, -e, -r], [0.0, -e, 1.0, -r], [0.0, -r, -r, 2.0 * r]],
    };
    m.map(|row| row.map(|x| x / d))
}

pub fn max_entry_diff(rho: &DensityMatrix4, rows: &[[f64; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((rho.get(i, j) - c(rows[i][j])).norm());
        }
    }
    worst
}

pub fn matrix_diff(a: &DensityMatrix4, b: &DensityMatrix4) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `|Φ+⟩⟨Φ+|` built from its ket.
pub fn phi_plus_ket() -> Vector4c {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4c::new(c(s), c(0.0), c(0.0), c(s))
}

/// Hermitian square root through an eigendecomposition.
fn sqrt_psd(m: &Matrix4c) -> Matrix4c {
    let eig = m.symmetric_eigen();
    // zero eigenvalues come out as ±1e-17; keep them at zero
    let vals = eig.eigenvalues.map(|x| C64::new(if x < 1e-14 { 0.0 } else { x.sqrt() }, 0.0));
    eig.eigenvectors * Matrix4::from_diagonal(&vals) * eig.eigenvectors.adjoint()
}

/// `F = (‖√ρ √σ‖₁)²` via the singular values of `√ρ √σ`.
pub fn fidelity_nuclear(rho: &DensityMatrix4, sigma: &DensityMatrix4) -> f64 {
    let prod = sqrt_psd(rho.matrix()) * sqrt_psd(sigma.matrix());
    let dyn_m = DMatrix::from_iterator(4, 4, prod.iter().copied());
    let s: f64 = dyn_m.singular_values().iter().sum();
    s * s
}

/// Ginibre-distributed random mixed state of random rank.
pub fn random_density<R: Rng>(rng: &mut R) -> DensityMatrix4 {
    let cols = rng.random_range(1..=4);
    let g = DMatrix::from_fn(4, cols, |_, _| {
        C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = Matrix4c::from_iterator((m / tr).iter().copied());
    DensityMatrix4::new((m + m.adjoint()) * c(0.5)).expect("Ginibre state is valid")
}

pub fn random_ket<R: Rng>(rng: &mut R) -> Vector4c {
    let v = Vector4c::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    v / c(v.norm())
}

/// Correlator table `E(a, b)` on a 1° grid over `[0°, 180°)`, built from
/// the projectors onto linear polarizations.
pub fn correlation_table(rho: &DensityMatrix4) -> Vec<Vec<f64>> {
    let ket = |deg: f64, flip: bool| {
        let (s, co) = (deg.to_radians()).sin_cos();
        if flip { [c(-s), c(co)] } else { [c(co), c(s)] }
    };
    let mut table = vec![vec![0.0; 180]; 180];
    for (i, row) in table.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let mut total = 0.0;
            for (fa, sa) in [(false, 1.0), (true, -1.0)] {
                for (fb, sb) in [(false, 1.0), (true, -1.0)] {
                    let x = ket(i as f64, fa);
                    let y = ket(j as f64, fb);
                    let k = Vector4c::new(x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]);
                    total += sa * sb * (k.adjoint() * rho.matrix() * k)[(0, 0)].re;
                }
            }
            *e = total;
        }
    }
    table
}

/// Exhaustive CHSH maximum on the 1° grid: for each `(a, a′)` the best `b`
/// and `b′` are chosen independently.
pub fn chsh_grid_max(rho: &DensityMatrix4) -> f64 {
    let e = correlation_table(rho);
    let mut best: f64 = 0.0;
    for a in 0..180 {
        for a2 in 0..180 {
            let (mut p, mut q, mut pn, mut qn) = (f64::MIN, f64::MIN, f64::MIN, f64::MIN);
            for b in 0..180 {
                let sum = e[a][b] + e[a2][b];
                let diff = e[a2][b] - e[a][b];
                p = p.max(sum);
                q = q.max(diff);
                pn = pn.max(-sum);
                qn = qn.max(-diff);
            }
            best = best.max(p + q).max(pn + qn);
        }
    }
    best
}
