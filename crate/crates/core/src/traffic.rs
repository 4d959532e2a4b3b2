//! 15-minute traffic series, load-to-UE-count mapping and the forecasters
//! used by the policy loop.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::RuId;

/// Sample spacing of every traffic series, in seconds.
pub const SAMPLE_SPACING_S: i64 = 900;
/// One day of 15-minute samples.
pub const SEASON_LENGTH: usize = 96;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("series for RU {ru_id}: spacing {found} s at t={at}, expected {SAMPLE_SPACING_S} s")]
    NonUniformSpacing { ru_id: RuId, at: i64, found: i64 },
    #[error("duplicate sample for RU {ru_id} at t={timestamp}")]
    DuplicateSample { ru_id: RuId, timestamp: i64 },
    #[error("series too short: {kind} needs {needed} samples, got {got}")]
    SeriesTooShort {
        kind: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("forecaster used before fit")]
    NotFitted,
    #[error("length mismatch: {0} predictions vs {1} actuals")]
    LengthMismatch(usize, usize),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSeries {
    pub ru_id: RuId,
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl TrafficSeries {
    /// Validates spacing, lengths and sign of the samples.
    pub fn new(ru_id: RuId, timestamps: Vec<i64>, values: Vec<f64>) -> Result<Self, TrafficError> {
        if timestamps.len() != values.len() {
            return Err(TrafficError::InvalidSeries(format!(
                "{} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if values.len() < 2 {
            return Err(TrafficError::InvalidSeries("fewer than 2 samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(TrafficError::InvalidSeries(format!("negative or non-finite load {v}")));
        }
        for w in timestamps.windows(2) {
            let gap = w[1] - w[0];
            if gap == 0 {
                return Err(TrafficError::DuplicateSample {
                    ru_id,
                    timestamp: w[1],
                });
            }
            if gap != SAMPLE_SPACING_S {
                return Err(TrafficError::NonUniformSpacing {
                    ru_id,
                    at: w[1],
                    found: gap,
                });
            }
        }
        Ok(Self {
            ru_id,
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    timestamp: i64,
    ru_id: RuId,
    load: f64,
}

/// Reads a `timestamp,ru_id,load` CSV into one series per RU, each sorted by time.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<TrafficSeries>, TrafficError> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file)
}

pub fn ingest_reader<R: std::io::Read>(reader: R) -> Result<Vec<TrafficSeries>, TrafficError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_ru: BTreeMap<RuId, Vec<(i64, f64)>> = BTreeMap::new();
    for result in rdr.deserialize::<CsvRow>() {
        let row = result.map_err(|e| TrafficError::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        by_ru.entry(row.ru_id).or_default().push((row.timestamp, row.load));
    }
    by_ru
        .into_iter()
        .map(|(ru_id, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let (ts, vs): (Vec<i64>, Vec<f64>) = rows.into_iter().unzip();
            TrafficSeries::new(ru_id, ts, vs)
        })
        .collect()
}

/// Splits one aggregate series into per-RU series by fixed shares.
pub fn split_aggregate(series: &TrafficSeries, shares: &[(RuId, f64)]) -> Vec<TrafficSeries> {
    shares
        .iter()
        .map(|&(ru_id, share)| TrafficSeries {
            ru_id,
            timestamps: series.timestamps.clone(),
            values: series.values.iter().map(|v| v * share).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeCountMapping {
    pub n_min: u32,
    pub n_max: u32,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for UeCountMapping {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 13,
            x_min: 0.0,
            x_max: 100.0,
        }
    }
}

/// Linear load-to-count map, clamped to the anchors, rounded half away from zero.
pub fn map_load_to_ue_count(x: f64, m: &UeCountMapping) -> u32 {
    let xc = x.clamp(m.x_min, m.x_max);
    let frac = (xc - m.x_min) / (m.x_max - m.x_min);
    let n = m.n_min as f64 + frac * (m.n_max - m.n_min) as f64;
    (n.round() as u32).clamp(m.n_min, m.n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForecasterKind {
    Persistence,
    SeasonalNaive {
        #[serde(default = "default_season")]
        season: usize,
    },
    ExpSmoothing {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    LinearAr {
        #[serde(default = "default_order")]
        order: usize,
    },
}

fn default_season() -> usize {
    SEASON_LENGTH
}
fn default_alpha() -> f64 {
    0.3
}
fn default_order() -> usize {
    4
}

impl Default for ForecasterKind {
    fn default() -> Self {
        ForecasterKind::SeasonalNaive {
            season: SEASON_LENGTH,
        }
    }
}

impl ForecasterKind {
    pub fn name(&self) -> &'static str {
        match self {
            ForecasterKind::Persistence => "persistence",
            ForecasterKind::SeasonalNaive { .. } => "seasonal_naive",
            ForecasterKind::ExpSmoothing { .. } => "exp_smoothing",
            ForecasterKind::LinearAr { .. } => "linear_ar",
        }
    }

    pub fn min_samples(&self) -> usize {
        match *self {
            ForecasterKind::Persistence => 1,
            ForecasterKind::SeasonalNaive { season } => season,
            ForecasterKind::ExpSmoothing { .. } => 2,
            ForecasterKind::LinearAr { order } => order + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Fitted {
    Persistence(f64),
    Seasonal(Vec<f64>),
    Level(f64),
    Ar { coeffs: Vec<f64>, tail: Vec<f64> },
}

/// A forecaster of one kind, fitted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    pub kind: ForecasterKind,
    fitted: Option<Fitted>,
}

impl Forecaster {
    pub fn new(kind: ForecasterKind) -> Self {
        Self { kind, fitted: None }
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    /// Fits on `values` (oldest first). Refitting replaces the previous state.
    pub fn fit(&mut self, values: &[f64]) -> Result<(), TrafficError> {
        let needed = self.kind.min_samples();
        if values.len() < needed {
            return Err(TrafficError::SeriesTooShort {
                kind: self.kind.name(),
                needed,
                got: values.len(),
            });
        }
        let fitted = match self.kind {
            ForecasterKind::Persistence => Fitted::Persistence(values[values.len() - 1]),
            ForecasterKind::SeasonalNaive { season } => {
                Fitted::Seasonal(values[values.len() - season..].to_vec())
            }
            ForecasterKind::ExpSmoothing { alpha } => {
                let level = values[1..]
                    .iter()
                    .fold(values[0], |l, &v| alpha * v + (1.0 - alpha) * l);
                Fitted::Level(level)
            }
            ForecasterKind::LinearAr { order } => Fitted::Ar {
                coeffs: fit_ar(values, order),
                tail: values[values.len() - order..].to_vec(),
            },
        };
        self.fitted = Some(fitted);
        Ok(())
    }

    pub fn fit_series(&mut self, series: &TrafficSeries) -> Result<(), TrafficError> {
        self.fit(&series.values)
    }

    /// Rolls the fitted model forward `horizon_steps` one-step predictions,
    /// feeding predictions back as inputs. Values are clamped at zero.
    pub fn forecast(&self, horizon_steps: usize) -> Result<Vec<f64>, TrafficError> {
        let fitted = self.fitted.as_ref().ok_or(TrafficError::NotFitted)?;
        let out = match fitted {
            Fitted::Persistence(v) | Fitted::Level(v) => vec![*v; horizon_steps],
            Fitted::Seasonal(season) => (0..horizon_steps).map(|k| season[k % season.len()]).collect(),
            Fitted::Ar { coeffs, tail } => {
                let mut window = tail.clone();
                let mut out = Vec::with_capacity(horizon_steps);
                for _ in 0..horizon_steps {
                    // coeffs[i] multiplies value_{t-1-i}; window is oldest first.
                    let next: f64 = coeffs
                        .iter()
                        .zip(window.iter().rev())
                        .map(|(a, x)| a * x)
                        .sum();
                    out.push(next);
                    window.remove(0);
                    window.push(next);
                }
                out
            }
        };
        Ok(out.into_iter().map(|v| v.max(0.0)).collect())
    }

    pub fn predict_next(&self) -> Result<f64, TrafficError> {
        Ok(self.forecast(1)?[0])
    }

    /// Maximum of the rolled-forward forecast over the horizon.
    pub fn predict_peak(&self, horizon_steps: usize) -> Result<f64, TrafficError> {
        let h = horizon_steps.max(1);
        Ok(self.forecast(h)?.into_iter().fold(0.0, f64::max))
    }
}

/// Least-squares AR coefficients without intercept. Minimum-norm solution
/// through the eigen-decomposition of the normal matrix, so collinear
/// regressors (constant series) resolve to equal weights.
fn fit_ar(values: &[f64], order: usize) -> Vec<f64> {
    let rows = values.len() - order;
    let design = DMatrix::from_fn(rows, order, |r, c| values[r + order - 1 - c]);
    let target = DVector::from_fn(rows, |r, _| values[r + order]);
    let xty = design.tr_mul(&target);
    let eig = design.tr_mul(&design).symmetric_eigen();
    let tol = eig.eigenvalues.amax() * 1e-12;
    let mut beta = DVector::zeros(order);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > tol {
            let v = eig.eigenvectors.column(k);
            beta += v * (v.dot(&xty) / l);
        }
    }
    beta.iter().copied().collect()
}

/// Mean absolute and root-mean-square error.
pub fn forecast_error(predictions: &[f64], actuals: &[f64]) -> Result<(f64, f64), TrafficError> {
    if predictions.len() != actuals.len() || predictions.is_empty() {
        return Err(TrafficError::LengthMismatch(predictions.len(), actuals.len()));
    }
    let n = predictions.len() as f64;
    let (abs, sq) = predictions
        .iter()
        .zip(actuals)
        .fold((0.0, 0.0), |(a, s), (p, y)| {
            let e = p - y;
            (a + e.abs(), s + e * e)
        });
    Ok((abs / n, (sq / n).sqrt()))
}

/// Parameters of the bundled daily-sinusoid traffic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTraffic {
    /// Number of days generated, the first of which is forecaster history.
    pub days: usize,
    pub start_epoch_s: i64,
    /// Per-RU daily mean load.
    pub mean_load: Vec<f64>,
    /// Per-RU daily amplitude.
    pub amplitude: Vec<f64>,
    /// Hour of the daily peak.
    pub peak_hour: f64,
    pub noise_std: f64,
}

impl Default for SyntheticTraffic {
    fn default() -> Self {
        Self {
            days: 2,
            start_epoch_s: 1_700_000_000 - 1_700_000_000 % 86_400,
            mean_load: vec![50.0, 50.0],
            amplitude: vec![40.0, 40.0],
            peak_hour: 17.0,
            noise_std: 3.0,
        }
    }
}

/// Generates one series per RU id: daily sinusoid plus seeded Gaussian noise,
/// clamped at zero.
pub fn synthetic_series(params: &SyntheticTraffic, ru_ids: &[RuId], seed: u64) -> Vec<TrafficSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x7AFF1C);
    let noise = Normal::new(0.0, params.noise_std.max(0.0)).expect("finite std");
    let n = params.days * SEASON_LENGTH;
    let timestamps: Vec<i64> = (0..n as i64)
        .map(|k| params.start_epoch_s + k * SAMPLE_SPACING_S)
        .collect();
    ru_ids
        .iter()
        .enumerate()
        .map(|(i, &ru_id)| {
            let mean = params.mean_load.get(i).or(params.mean_load.last()).copied().unwrap_or(50.0);
            let amp = params.amplitude.get(i).or(params.amplitude.last()).copied().unwrap_or(0.0);
            let values = (0..n)
                .map(|k| {
                    let hour = (k % SEASON_LENGTH) as f64 * 0.25;
                    let phase = 2.0 * std::f64::consts::PI * (hour - params.peak_hour) / 24.0;
                    (mean + amp * phase.cos() + noise.sample(&mut rng)).max(0.0)
                })
                .collect();
            TrafficSeries {
                ru_id,
                timestamps: timestamps.clone(),
                values,
            }
        })
        .collect()
}
