use std::io::{BufRead, BufReader, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::basis::{born_probabilities, MeasurementSetting};
use crate::error::{Error, Result};
use crate::states::DensityMatrix4;

/// How detector counts are drawn for one setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountModel {
    /// Fixed number of post-selected coincidences per setting.
    #[default]
    Multinomial,
    /// Independent Poisson counts per detector pair with mean `shots·p`.
    Poisson,
}

/// Noise added between the simulated state and the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// White-noise admixture `ε`: `ρ → (1 − ε)ρ + ε·I/4`.
    pub epsilon: f64,
    pub model: CountModel,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn depolarizing(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }
}

/// Counts recorded for one analyzer setting, ordered `(00, 01, 10, 11)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingCounts {
    pub setting: MeasurementSetting,
    pub counts: [u64; 4],
    pub shots: u64,
}

/// Coincidence records for a measurement schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoincidenceDataset {
    pub records: Vec<SettingCounts>,
    pub seed: Option<u64>,
}

const CSV_HEADER: [&str; 7] = [
    "setting_control",
    "setting_target",
    "det_00",
    "det_01",
    "det_10",
    "det_11",
    "shots",
];

impl CoincidenceDataset {
    pub fn total_counts(&self) -> u64 {
        self.records.iter().flat_map(|r| r.counts.iter()).sum()
    }

    /// Writes the dataset as CSV, preceded by a `# seed=…` comment line when
    /// a seed is recorded.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        if let Some(seed) = self.seed {
            writeln!(writer, "# seed={seed}")?;
        }
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.records {
            let mut row = vec![r.setting.control.to_string(), r.setting.target.to_string()];
            row.extend(r.counts.iter().map(|c| c.to_string()));
            row.push(r.shots.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut seed = None;
        let mut body = String::new();
        let mut line = String::new();
        while reader.read_line(&mut line)? > 0 {
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                for part in comment.split([',', ' ']) {
                    if let Some(v) = part.trim().strip_prefix("seed=") {
                        seed = v.parse().ok();
                    }
                }
            } else {
                body.push_str(&line);
            }
            line.clear();
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::validation(format!(
                "unexpected dataset header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let num = |i: usize| -> Result<u64> {
                row[i].parse().map_err(|_| {
                    Error::validation(format!("column {} is not a count: '{}'", CSV_HEADER[i], &row[i]))
                })
            };
            records.push(SettingCounts {
                setting: MeasurementSetting::new(row[0].parse()?, row[1].parse()?),
                counts: [num(2)?, num(3)?, num(4)?, num(5)?],
                shots: num(6)?,
            });
        }
        Ok(Self { records, seed })
    }
}

fn noisy_state(rho: &DensityMatrix4, noise: &NoiseConfig) -> Result<DensityMatrix4> {
    if noise.epsilon == 0.0 {
        Ok(rho.clone())
    } else {
        rho.depolarized(noise.epsilon)
    }
}

fn check_schedule(schedule: &[MeasurementSetting], shots: u64) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::validation("measurement schedule is empty"));
    }
    if shots == 0 {
        return Err(Error::validation("shots per setting must be at least 1"));
    }
    Ok(())
}

/// Draws coincidence counts for every setting of `schedule`.
///
/// Setting `k` uses its own ChaCha stream `k` under the master `seed`, so the
/// result depends only on `(seed, schedule)` and settings could be sampled in
/// any order.
pub fn simulate_counts(
    rho: &DensityMatrix4,
    schedule: &[MeasurementSetting],
    shots: u64,
    seed: u64,
    noise: &NoiseConfig,
) -> Result<CoincidenceDataset> {
    check_schedule(schedule, shots)?;
    let rho = noisy_state(rho, noise)?;
    let mut records = Vec::with_capacity(schedule.len());
    for (k, setting) in schedule.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let p = born_probabilities(&rho, setting);
        let total: f64 = p.iter().sum();
        let p = p.map(|x| x / total);
        let counts = match noise.model {
            CountModel::Multinomial => {
                let mut counts = [0u64; 4];
                let mut remaining = shots;
                let mut mass = 1.0;
                for j in 0..3 {
                    if remaining == 0 {
                        break;
                    }
                    let q = if mass > 0.0 { (p[j] / mass).clamp(0.0, 1.0) } else { 0.0 };
                    let draw = Binomial::new(remaining, q)
                        .map_err(|e| Error::validation(e.to_string()))?
                        .sample(&mut rng);
                    counts[j] = draw;
                    remaining -= draw;
                    mass -= p[j];
                }
                counts[3] = remaining;
                counts
            }
            CountModel::Poisson => {
                let mut counts = [0u64; 4];
                for j in 0..4 {
                    let mean = shots as f64 * p[j];
                    if mean > 0.0 {
                        let d = Poisson::new(mean).map_err(|e| Error::validation(e.to_string()))?;
                        counts[j] = d.sample(&mut rng) as u64;
                    }
                }
                counts
            }
        };
        records.push(SettingCounts { setting: *setting, counts, shots });
    }
    Ok(CoincidenceDataset { records, seed: Some(seed) })
}

/// Noise-free dataset holding the rounded expected counts `shots·p`.
pub fn expected_counts(
    rho: &DensityMatrix4,
    schedule: &[MeasurementSetting],
    shots: u64,
) -> Result<CoincidenceDataset> {
    check_schedule(schedule, shots)?;
    let records = schedule
        .iter()
        .map(|setting| {
            let p = born_probabilities(rho, setting);
            SettingCounts {
                setting: *setting,
                counts: p.map(|x| (x * shots as f64).round() as u64),
                shots,
            }
        })
        .collect();
    Ok(CoincidenceDataset { records, seed: None })
}
