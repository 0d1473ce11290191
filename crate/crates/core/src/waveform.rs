//! Temporal photon wavepackets on a uniform time grid.
//!
//! All time integrals use the trapezoid rule on the grid. Waveforms are
//! complex amplitudes `u(t)` normalized so that `∫ |u(t)|² dt = 1`.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Default sample spacing (10 ps).
pub const DEFAULT_DT: f64 = 10e-12;
/// Default total grid span (40 ns), centered on `t = 0`.
pub const DEFAULT_SPAN: f64 = 40e-9;
/// Coarsest spacing accepted by the presets.
pub const MAX_PRESET_DT: f64 = 50e-12;
/// Half-width of the region around the pulse reference time the presets need.
pub const PRESET_HALF_SPAN: f64 = 10e-9;

/// FWHM of the source-photon intensity profile.
pub const SOURCE_FWHM: f64 = 0.9e-9;
/// FWHM of the memory-photon intensity profile.
pub const MEMORY_FWHM: f64 = 1.5e-9;
/// Exponential tail time over Gaussian width for the source preset.
pub const SOURCE_SKEW: f64 = 1.0;
/// Exponential tail time over Gaussian width for the memory preset.
pub const MEMORY_SKEW: f64 = 0.1;

/// Default integration window start, relative to the intensity peak at `t = 0`.
pub const DEFAULT_WINDOW_OFFSET: f64 = -0.4e-9;

/// Normalization tolerance accepted by operations that require unit-norm input.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Largest fraction of probability mass a delay may push off the grid.
pub const OFF_GRID_TOLERANCE: f64 = 1e-9;

/// Uniform sampling grid `t_i = t_start + i·dt`, `i = 0..n_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::validation(format!("grid spacing must be positive, got {dt}")));
        }
        if n_samples < 2 {
            return Err(Error::validation("grid needs at least two samples"));
        }
        let t_end = t_start + (n_samples - 1) as f64 * dt;
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::validation("grid span is not finite"));
        }
        Ok(Self { t_start, dt, n_samples })
    }

    /// Grid of `span` seconds centered on zero with spacing `dt`.
    pub fn centered(span: f64, dt: f64) -> Result<Self> {
        let n = (span / dt).round() as usize + 1;
        Self::new(-0.5 * (n - 1) as f64 * dt, dt, n)
    }

    /// 40 ns span at 10 ps resolution.
    pub fn standard() -> Self {
        Self::centered(DEFAULT_SPAN, DEFAULT_DT).expect("default grid is valid")
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    pub fn span(&self) -> f64 {
        self.t_end() - self.t_start
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |i| self.time(i))
    }

    /// Same span with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            t_start: self.t_start,
            dt: 0.5 * self.dt,
            n_samples: 2 * self.n_samples - 1,
        }
    }

    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n_samples == other.n_samples
            && (self.dt - other.dt).abs() <= 1e-9 * self.dt
            && (self.t_start - other.t_start).abs() <= 1e-6 * self.dt
    }

    /// Trapezoid weight of sample `i`.
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_samples {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

/// Complex temporal amplitude sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalWaveform {
    grid: TimeGrid,
    samples: Arc<[C64]>,
}

impl TemporalWaveform {
    /// Wraps raw samples without normalizing them.
    pub fn from_samples(grid: TimeGrid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::validation(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("waveform contains non-finite samples"));
        }
        Ok(Self { grid, samples: samples.into() })
    }

    /// Samples `f` on the grid and normalizes the result.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> C64) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::from_samples(grid, samples)?.normalized()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// `∫ |u(t)|² dt`.
    pub fn norm_sqr(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, z)| self.grid.weight(i) * z.norm_sqr())
            .sum()
    }

    /// Rescales to unit L2 norm.
    pub fn normalized(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) {
            return Err(Error::validation("cannot normalize a zero waveform"));
        }
        let scale = 1.0 / n2.sqrt();
        let samples: Vec<C64> = self.samples.iter().map(|z| z * scale).collect();
        Ok(Self { grid: self.grid, samples: samples.into() })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    fn require_normalized(&self) -> Result<()> {
        let n2 = self.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::validation(format!(
                "waveform is not normalized (norm² = {n2})"
            )));
        }
        Ok(())
    }

    /// `∫ u*(t) v(t) dt`.
    pub fn inner(&self, other: &TemporalWaveform) -> Result<C64> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .samples
            .iter()
            .zip(other.samples.iter())
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * self.grid.weight(i))
            .sum())
    }

    /// Multiplies every sample by `e^{iφ}`.
    pub fn with_phase(&self, phase: f64) -> Self {
        let p = C64::from_polar(1.0, phase);
        let samples: Vec<C64> = self.samples.iter().map(|z| z * p).collect();
        Self { grid: self.grid, samples: samples.into() }
    }

    /// Time of the intensity maximum (grid resolution).
    pub fn peak_time(&self) -> f64 {
        let (i, _) = self
            .samples
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, z)| {
                if z.norm_sqr() > best.1 {
                    (i, z.norm_sqr())
                } else {
                    best
                }
            });
        self.grid.time(i)
    }

    /// Full width at half maximum of `|u(t)|²`, with linear interpolation
    /// between samples at the half-maximum crossings.
    pub fn fwhm(&self) -> f64 {
        let intensity: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        let (peak, max) = intensity
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let half = 0.5 * max;
        let dt = self.grid.dt();
        let mut left = self.grid.t_start();
        for i in (0..peak).rev() {
            if intensity[i] < half {
                let frac = (half - intensity[i]) / (intensity[i + 1] - intensity[i]);
                left = self.grid.time(i) + frac * dt;
                break;
            }
        }
        let mut right = self.grid.t_end();
        for i in peak + 1..intensity.len() {
            if intensity[i] < half {
                let frac = (intensity[i - 1] - half) / (intensity[i - 1] - intensity[i]);
                right = self.grid.time(i - 1) + frac * dt;
                break;
            }
        }
        right - left
    }

    /// Reads a waveform from CSV with header `time_s,re,im` and normalizes it.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            time_s: f64,
            re: f64,
            im: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.len() < 2 {
            return Err(Error::validation("waveform CSV needs at least two rows"));
        }
        let dt = rows[1].time_s - rows[0].time_s;
        let grid = TimeGrid::new(rows[0].time_s, dt, rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if (row.time_s - grid.time(i)).abs() > 1e-6 * dt {
                return Err(Error::validation(format!(
                    "waveform CSV row {i} is off the uniform grid"
                )));
            }
        }
        let samples = rows.iter().map(|r| C64::new(r.re, r.im)).collect();
        Self::from_samples(grid, samples)?.normalized()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["time_s", "re", "im"])?;
        for (t, z) in self.grid.times().zip(self.samples.iter()) {
            wtr.write_record(&[format!("{t:e}"), format!("{:e}", z.re), format!("{:e}", z.im)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Detection-time acceptance window `[offset, offset + tau_int]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub offset: f64,
    pub tau_int: f64,
}

impl WindowConfig {
    pub fn new(offset: f64, tau_int: f64) -> Result<Self> {
        if !(tau_int > 0.0) || !tau_int.is_finite() || !offset.is_finite() {
            return Err(Error::validation(format!(
                "window duration must be positive, got {tau_int}"
            )));
        }
        Ok(Self { offset, tau_int })
    }

    /// Window of duration `tau_int` starting at [`DEFAULT_WINDOW_OFFSET`].
    pub fn with_duration(tau_int: f64) -> Result<Self> {
        Self::new(DEFAULT_WINDOW_OFFSET, tau_int)
    }

    pub fn end(&self) -> f64 {
        self.offset + self.tau_int
    }

    pub fn contains(&self, t: f64, slack: f64) -> bool {
        t >= self.offset - slack && t <= self.end() + slack
    }
}

/// Indistinguishability `|∫ u_m*(t) u_s(t) dt|²` of two normalized waveforms.
pub fn overlap_eta(u_m: &TemporalWaveform, u_s: &TemporalWaveform) -> Result<f64> {
    if !u_m.grid.matches(&u_s.grid) {
        return Err(Error::GridMismatch);
    }
    u_m.require_normalized()?;
    u_s.require_normalized()?;
    let overlap = u_m.inner(u_s)?;
    let eta = overlap.norm_sqr() / (u_m.norm_sqr() * u_s.norm_sqr());
    Ok(eta.clamp(0.0, 1.0))
}

/// Zeroes all samples outside the window and renormalizes.
///
/// Returns the truncated waveform and the fraction of probability mass the
/// window accepted.
pub fn apply_window(u: &TemporalWaveform, w: &WindowConfig) -> Result<(TemporalWaveform, f64)> {
    let grid = *u.grid();
    let slack = 1e-9 * grid.dt();
    let samples: Vec<C64> = grid
        .times()
        .zip(u.samples().iter())
        .map(|(t, &z)| if w.contains(t, slack) { z } else { C64::new(0.0, 0.0) })
        .collect();
    let truncated = TemporalWaveform::from_samples(grid, samples)?;
    let total = u.norm_sqr();
    let acceptance = if total > 0.0 { truncated.norm_sqr() / total } else { 0.0 };
    if !(acceptance >= 1e-12) {
        return Err(Error::EmptyWindow { acceptance });
    }
    Ok((truncated.normalized()?, acceptance.min(1.0)))
}

/// Shifts the waveform in time, `u(t) → u(t − dt_shift)`.
///
/// Uses a band-limited (Fourier) shift on a zero-padded copy, so non-integer
/// sample shifts are exact for well-resolved pulses. A shift followed by its
/// inverse reproduces the input to rounding error when the pulse vanishes at
/// the grid edges; a residual tail at the edge limits it to roughly that
/// tail's amplitude.
pub fn delay(u: &TemporalWaveform, dt_shift: f64) -> Result<TemporalWaveform> {
    if !dt_shift.is_finite() {
        return Err(Error::OutOfRange("non-finite delay".into()));
    }
    if dt_shift == 0.0 {
        return Ok(u.clone());
    }
    let grid = *u.grid();
    if dt_shift.abs() >= grid.span() {
        return Err(Error::OutOfRange(format!(
            "delay {dt_shift:e} s exceeds grid span {:e} s",
            grid.span()
        )));
    }
    let n = grid.len();
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<C64> = u.samples().to_vec();
    buf.resize(m, C64::new(0.0, 0.0));

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let period = m as f64 * grid.dt();
    for (k, z) in buf.iter_mut().enumerate() {
        let freq = if k < m / 2 { k as f64 } else { k as f64 - m as f64 } / period;
        *z *= C64::from_polar(1.0 / m as f64, -2.0 * PI * freq * dt_shift);
    }
    planner.plan_fft_inverse(m).process(&mut buf);

    let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    let off_grid: f64 = buf[n..].iter().map(|z| z.norm_sqr()).sum();
    if total > 0.0 && off_grid / total > OFF_GRID_TOLERANCE {
        return Err(Error::OutOfRange(format!(
            "delay {dt_shift:e} s pushes {:.3e} of the mass off the grid",
            off_grid / total
        )));
    }
    buf.truncate(n);
    TemporalWaveform::from_samples(grid, buf)
}

/// Delay of `moving` that maximizes its overlap with `fixed`, searched over
/// `[-max_shift, max_shift]` on a coarse scan followed by golden-section
/// refinement. Returns `(delay, eta)`.
pub fn best_alignment(
    fixed: &TemporalWaveform,
    moving: &TemporalWaveform,
    max_shift: f64,
) -> Result<(f64, f64)> {
    let eta_at = |d: f64| -> Result<f64> { overlap_eta(fixed, &delay(moving, d)?) };
    let step = 20.0 * fixed.grid().dt();
    let n_steps = (max_shift / step).ceil() as i64;
    let mut best = (0.0, eta_at(0.0)?);
    for k in -n_steps..=n_steps {
        let d = k as f64 * step;
        let e = eta_at(d)?;
        if e > best.1 {
            best = (d, e);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eta_at(x1)?, eta_at(x2)?);
    while hi - lo > 1e-4 * fixed.grid().dt() {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eta_at(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eta_at(x1)?;
        }
    }
    let d = 0.5 * (lo + hi);
    let e = eta_at(d)?;
    Ok(if e >= best.1 { (d, e) } else { best })
}

/// Exponentially modified Gaussian intensity profile: a Gaussian of width
/// `sigma` convolved with a one-sided exponential of time constant
/// `skew * sigma`. The amplitude is the square root of the intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub fwhm: f64,
    pub skew: f64,
}

impl PulseShape {
    pub const SOURCE: PulseShape = PulseShape { fwhm: SOURCE_FWHM, skew: SOURCE_SKEW };
    pub const MEMORY: PulseShape = PulseShape { fwhm: MEMORY_FWHM, skew: MEMORY_SKEW };

    /// Unnormalized intensity for unit Gaussian width, location 0.
    fn unit_intensity(&self, x: f64) -> f64 {
        let tau = self.skew;
        if tau <= 0.0 {
            return (-0.5 * x * x).exp();
        }
        let lambda = 1.0 / tau;
        let z = (lambda - x) / SQRT_2;
        if z >= 0.0 {
            0.5 * lambda * (-0.5 * x * x).exp() * erfcx(z)
        } else {
            0.5 * lambda * (lambda * (-x) + 0.5 * lambda * lambda).exp() * libm::erfc(z)
        }
    }

    /// Peak location and FWHM for unit Gaussian width.
    fn unit_geometry(&self) -> (f64, f64) {
        let f = |x: f64| self.unit_intensity(x);
        // golden-section search for the peak in [-3, 3 + 3*skew]
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-3.0, 3.0 + 3.0 * self.skew);
        while hi - lo > 1e-13 {
            let x1 = hi - inv_phi * (hi - lo);
            let x2 = lo + inv_phi * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let peak = 0.5 * (lo + hi);
        let half = 0.5 * f(peak);
        let bisect = |mut inside: f64, mut outside: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if f(mid) >= half {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            0.5 * (inside + outside)
        };
        let left = bisect(peak, peak - 10.0);
        let right = bisect(peak, peak + 10.0 + 20.0 * self.skew);
        (peak, right - left)
    }

    /// Samples the pulse with its intensity maximum at `peak_time`.
    pub fn sample(&self, grid: &TimeGrid, peak_time: f64) -> Result<TemporalWaveform> {
        if !(self.fwhm > 0.0) || !(self.skew >= 0.0) {
            return Err(Error::validation("pulse FWHM must be positive and skew non-negative"));
        }
        let (peak, unit_fwhm) = self.unit_geometry();
        let sigma = self.fwhm / unit_fwhm;
        TemporalWaveform::from_fn(*grid, |t| {
            let x = (t - peak_time) / sigma + peak;
            C64::new(self.unit_intensity(x).max(0.0).sqrt(), 0.0)
        })
    }
}

/// `exp(z²)·erfc(z)` for `z ≥ 0`.
fn erfcx(z: f64) -> f64 {
    // switch to the asymptotic series where its truncation error is ~1e-13,
    // well before exp(z²) overflows
    if z < 25.0 {
        (z * z).exp() * libm::erfc(z)
    } else {
        let w = 1.0 / (z * z);
        (1.0 + w * (-0.5 + w * (0.75 + w * (-1.875 + w * 6.5625)))) / (z * PI.sqrt())
    }
}

fn check_preset_grid(grid: &TimeGrid) -> Result<()> {
    if grid.dt() > MAX_PRESET_DT {
        return Err(Error::Resolution { dt: grid.dt(), max: MAX_PRESET_DT });
    }
    if grid.t_start() > -PRESET_HALF_SPAN || grid.t_end() < PRESET_HALF_SPAN {
        return Err(Error::validation(
            "preset waveforms need a grid spanning at least ±10 ns",
        ));
    }
    Ok(())
}

/// Source photon: skewed pulse, sharp rise and exponential tail, FWHM 0.9 ns,
/// intensity peak at `t = 0`.
pub fn preset_source_waveform(grid: &TimeGrid) -> Result<TemporalWaveform> {
    check_preset_grid(grid)?;
    PulseShape::SOURCE.sample(grid, 0.0)
}

/// Memory photon: nearly symmetric pulse, FWHM 1.5 ns, intensity peak at `t = 0`.
pub fn preset_memory_waveform(grid: &TimeGrid) -> Result<TemporalWaveform> {
    check_preset_grid(grid)?;
    PulseShape::MEMORY.sample(grid, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian(grid: &TimeGrid, t0: f64, sigma: f64) -> TemporalWaveform {
        TemporalWaveform::from_fn(*grid, |t| {
            C64::new((-(t - t0).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn identical_waveforms_are_indistinguishable() {
        let g = TimeGrid::standard();
        let u = preset_source_waveform(&g).unwrap();
        assert_abs_diff_eq!(overlap_eta(&u, &u).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_supports_have_zero_overlap() {
        let g = TimeGrid::centered(10e-9, 10e-12).unwrap();
        let a = TemporalWaveform::from_fn(g, |t| {
            C64::new(if t < -1e-9 { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let b = TemporalWaveform::from_fn(g, |t| C64::new(if t > 1e-9 { 1.0 } else { 0.0 }, 0.0))
            .unwrap();
        assert_eq!(overlap_eta(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_pair_two_sigma_apart() {
        let g = TimeGrid::centered(20e-9, 5e-12).unwrap();
        let sigma = 0.5e-9;
        let a = gaussian(&g, -sigma, sigma);
        let b = gaussian(&g, sigma, sigma);
        assert_abs_diff_eq!(overlap_eta(&a, &b).unwrap(), (-1f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn grid_mismatch_and_unnormalized_input_are_rejected() {
        let g1 = TimeGrid::standard();
        let g2 = TimeGrid::centered(DEFAULT_SPAN, 20e-12).unwrap();
        let a = preset_source_waveform(&g1).unwrap();
        let b = preset_source_waveform(&g2).unwrap();
        assert!(matches!(overlap_eta(&a, &b), Err(Error::GridMismatch)));

        let scaled: Vec<C64> = a.samples().iter().map(|z| z * 1.01).collect();
        let c = TemporalWaveform::from_samples(g1, scaled).unwrap();
        assert!(matches!(overlap_eta(&a, &c), Err(Error::Validation(_))));
    }

    #[test]
    fn full_window_is_a_no_op() {
        let g = TimeGrid::standard();
        let u = preset_memory_waveform(&g).unwrap();
        let w = WindowConfig::new(g.t_start() - 1e-9, g.span() + 2e-9).unwrap();
        let (v, acc) = apply_window(&u, &w).unwrap();
        assert_eq!(acc, 1.0);
        for (a, b) in u.samples().iter().zip(v.samples()) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn half_window_on_symmetric_pulse() {
        // pulse centered between two samples, window starting at the center
        let g = TimeGrid::centered(20e-9, 10e-12).unwrap();
        let center = 5e-12;
        let u = gaussian(&g, center, 0.4e-9);
        let w = WindowConfig::new(center, 15e-9).unwrap();
        let (v, acc) = apply_window(&u, &w).unwrap();
        assert_abs_diff_eq!(acc, 0.5, epsilon = 1e-12);
        assert!(v.is_normalized(1e-12));
    }

    #[test]
    fn empty_window_is_an_error() {
        let g = TimeGrid::standard();
        let u = preset_source_waveform(&g).unwrap();
        let w = WindowConfig::new(15e-9, 1e-9).unwrap();
        assert!(matches!(apply_window(&u, &w), Err(Error::EmptyWindow { .. })));
        assert!(WindowConfig::new(0.0, 0.0).is_err());
    }

    #[test]
    fn zero_delay_and_inverse_delay() {
        let g = TimeGrid::standard();
        let u = preset_source_waveform(&g).unwrap();
        assert_eq!(delay(&u, 0.0).unwrap(), u);
        let back = delay(&delay(&u, 1.234e-9).unwrap(), -1.234e-9).unwrap();
        // L2 distance relative to the unit norm
        let diff: Vec<C64> = u.samples().iter().zip(back.samples()).map(|(a, b)| a - b).collect();
        let diff = TemporalWaveform::from_samples(g, diff).unwrap();
        assert!(diff.norm_sqr().sqrt() < 1e-12, "{}", diff.norm_sqr().sqrt());
    }

    #[test]
    fn delayed_gaussian_overlap_matches_closed_form() {
        let g = TimeGrid::centered(20e-9, 5e-12).unwrap();
        let sigma = 0.3e-9;
        let u = gaussian(&g, 0.0, sigma);
        for shift in [0.1e-9, 0.37e-9, 0.8e-9, -0.55e-9] {
            let v = delay(&u, shift).unwrap();
            let expected = (-shift * shift / (4.0 * sigma * sigma)).exp();
            assert_abs_diff_eq!(overlap_eta(&u, &v).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn delay_off_grid_is_rejected() {
        let g = TimeGrid::standard();
        let u = preset_source_waveform(&g).unwrap();
        assert!(matches!(delay(&u, 19.5e-9), Err(Error::OutOfRange(_))));
        assert!(matches!(delay(&u, 50e-9), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn preset_widths() {
        let g = TimeGrid::standard();
        let s = preset_source_waveform(&g).unwrap();
        let m = preset_memory_waveform(&g).unwrap();
        assert!((s.fwhm() / SOURCE_FWHM - 1.0).abs() < 0.02, "{}", s.fwhm());
        assert!((m.fwhm() / MEMORY_FWHM - 1.0).abs() < 0.02, "{}", m.fwhm());
        assert!(s.is_normalized(1e-9) && m.is_normalized(1e-9));
        assert!(s.peak_time().abs() <= g.dt());
    }

    #[test]
    fn source_preset_is_skewed() {
        // more mass after the peak than before it, unlike the near-Gaussian memory pulse
        let g = TimeGrid::standard();
        let w = WindowConfig::new(0.0, 15e-9).unwrap();
        let (_, late_source) = apply_window(&preset_source_waveform(&g).unwrap(), &w).unwrap();
        let (_, late_memory) = apply_window(&preset_memory_waveform(&g).unwrap(), &w).unwrap();
        assert!(late_source > 0.55, "{late_source}");
        assert!((late_memory - 0.5).abs() < 0.02, "{late_memory}");
    }

    #[test]
    fn preset_grid_checks() {
        let coarse = TimeGrid::centered(DEFAULT_SPAN, 60e-12).unwrap();
        assert!(matches!(
            preset_source_waveform(&coarse),
            Err(Error::Resolution { .. })
        ));
        let narrow = TimeGrid::centered(10e-9, 10e-12).unwrap();
        assert!(preset_memory_waveform(&narrow).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = TimeGrid::centered(DEFAULT_SPAN, 20e-12).unwrap();
        let u = preset_source_waveform(&g).unwrap().with_phase(0.3);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"time_s,re,im\n"));
        let v = TemporalWaveform::read_csv(buf.as_slice()).unwrap();
        assert!(v.grid().matches(u.grid()));
        assert_abs_diff_eq!(overlap_eta(&u, &v).unwrap(), 1.0, epsilon = 1e-12);
    }
}
