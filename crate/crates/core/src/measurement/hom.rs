use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::hom_coincidence;
use crate::waveform::{apply_window, delay, overlap_eta, TemporalWaveform, WindowConfig};

/// One delay point of a HOM scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomPoint {
    pub delay: f64,
    pub coincidence: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomScan {
    pub points: Vec<HomPoint>,
}

impl HomScan {
    /// Dip depth relative to the classical baseline of ½: `1 − 2·min P_c`.
    pub fn visibility(&self) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.coincidence)
            .min_by(f64::total_cmp)
            .map(|c| 1.0 - 2.0 * c)
    }

    /// The point with the deepest dip.
    pub fn minimum(&self) -> Option<&HomPoint> {
        self.points.iter().min_by(|a, b| a.coincidence.total_cmp(&b.coincidence))
    }
}

/// Coincidence probability behind a balanced beam splitter as `u2` is
/// delayed against `u1`. With a window, both photons are gated before
/// the overlap is taken.
pub fn hom_scan(
    u1: &TemporalWaveform,
    u2: &TemporalWaveform,
    delays: &[f64],
    window: Option<&WindowConfig>,
) -> Result<HomScan> {
    let first = match window {
        Some(w) => apply_window(u1, w)?.0,
        None => u1.clone().normalized()?,
    };
    let mut points = Vec::with_capacity(delays.len());
    for &d in delays {
        let shifted = delay(u2, d)?;
        let second = match window {
            Some(w) => apply_window(&shifted, w)?.0,
            None => shifted.normalized()?,
        };
        let c1 = first.inner(&second)?;
        let eta = overlap_eta(&first, &second)?;
        let coincidence = hom_coincidence(c1 * (eta / c1.norm_sqr().max(f64::MIN_POSITIVE)).sqrt())?;
        points.push(HomPoint { delay: d, coincidence, eta });
    }
    Ok(HomScan { points })
}
