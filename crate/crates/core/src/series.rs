//! Event-time series: velocity, block coarse-graining, causal rolling means,
//! power spectra and stationarity diagnostics.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

use crate::stats::{fit_line, CompensatedSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("fit range holds {points} usable spectral points, need at least {needed}")]
    DegenerateRange { points: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

fn ensure_len(got: usize, needed: usize) -> Result<()> {
    if got < needed {
        Err(SeriesError::TooShort { needed, got })
    } else {
        Ok(())
    }
}

/// One value per transaction tick, densely indexed from `origin_tick`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickSeries {
    pub values: Vec<f64>,
    pub origin_tick: u64,
    pub label: String,
}

impl TickSeries {
    pub fn new(label: impl Into<String>, origin_tick: u64, values: Vec<f64>) -> Self {
        Self { values, origin_tick, label: label.into() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Tick of the last sample.
    pub fn end_tick(&self) -> Option<u64> {
        (!self.values.is_empty()).then(|| self.origin_tick + self.values.len() as u64 - 1)
    }
}

/// Non-overlapping block means of a tick series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseSeries {
    pub block_size: usize,
    pub values: Vec<f64>,
    pub origin_tick: u64,
}

impl CoarseSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-tick price change `x(k) - x(k-1)`, in the units of the input.
pub fn velocity(mid: &TickSeries) -> Result<TickSeries> {
    ensure_len(mid.len(), 2)?;
    let values = mid.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(TickSeries::new(format!("velocity({})", mid.label), mid.origin_tick + 1, values))
}

/// Means of consecutive blocks of `k` samples; a trailing partial block is
/// dropped.
pub fn coarse_grain(s: &TickSeries, k: usize) -> Result<CoarseSeries> {
    if k == 0 {
        return Err(SeriesError::InvalidParameter("block size must be at least 1"));
    }
    ensure_len(s.len(), k)?;
    Ok(CoarseSeries { block_size: k, values: block_means(&s.values, k), origin_tick: s.origin_tick })
}

pub(crate) fn block_means(values: &[f64], k: usize) -> Vec<f64> {
    values.chunks_exact(k).map(|c| c.iter().sum::<f64>() / k as f64).collect()
}

/// Causal mean over the `s * k` most recent samples. The output starts at
/// the first tick with a full window.
pub fn rolling_mean(series: &TickSeries, k: usize, s: usize) -> Result<TickSeries> {
    if k == 0 || s == 0 {
        return Err(SeriesError::InvalidParameter("window parameters must be at least 1"));
    }
    let w = s * k;
    ensure_len(series.len(), w)?;
    let x = &series.values;
    let mut out = Vec::with_capacity(x.len() - w + 1);
    let mut acc = CompensatedSum::default();
    for (i, &v) in x.iter().enumerate() {
        if i >= w && (i - w) % w == 0 {
            // re-anchor the running sum once per window length
            acc = CompensatedSum::default();
            x[i + 1 - w..i].iter().for_each(|&y| acc.add(y));
        } else if i >= w {
            acc.add(-x[i - w]);
        }
        acc.add(v);
        if i + 1 >= w {
            out.push(acc.value() / w as f64);
        }
    }
    Ok(TickSeries::new(
        format!("mean_{}x{}({})", s, k, series.label),
        series.origin_tick + w as u64 - 1,
        out,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Taper {
    Rectangular,
    /// Periodic Hann (raised cosine) window.
    Hann,
}

impl Taper {
    fn weights(self, len: usize) -> Vec<f64> {
        match self {
            Taper::Rectangular => vec![1.0; len],
            Taper::Hann => (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect(),
        }
    }
}

/// Segment-averaged periodogram settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub segments: usize,
    /// Fractional overlap between consecutive segments, in `[0, 1)`.
    pub overlap: f64,
    pub taper: Taper,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { segments: 8, overlap: 0.5, taper: Taper::Hann }
    }
}

impl SpectrumConfig {
    /// Plain periodogram of the whole series.
    pub fn raw() -> Self {
        Self { segments: 1, overlap: 0.0, taper: Taper::Rectangular }
    }
}

/// One-sided power per frequency bin, `omega` in radians per tick. The zero
/// frequency is excluded. Bin powers sum to the (segment-averaged) variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub power: Vec<f64>,
    pub segment_len: usize,
    pub segments: usize,
}

impl Spectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

pub const MIN_SPECTRUM_LEN: usize = 64;

pub fn power_spectrum(s: &TickSeries) -> Result<Spectrum> {
    power_spectrum_with(s, &SpectrumConfig::default())
}

/// Welch estimate: each segment has its own mean removed and is tapered
/// before the transform, then the segment periodograms are averaged.
pub fn power_spectrum_with(s: &TickSeries, cfg: &SpectrumConfig) -> Result<Spectrum> {
    ensure_len(s.len(), MIN_SPECTRUM_LEN)?;
    if cfg.segments == 0 || !(0.0..1.0).contains(&cfg.overlap) {
        return Err(SeriesError::InvalidParameter("segments >= 1 and overlap in [0, 1)"));
    }
    let n = s.len();
    let k = cfg.segments;
    let seg_len = (n as f64 / (1.0 + (k - 1) as f64 * (1.0 - cfg.overlap))).floor() as usize;
    let step = if k > 1 { ((n - seg_len) / (k - 1)).max(1) } else { 0 };
    if seg_len < 4 {
        return Err(SeriesError::TooShort { needed: 4 * k, got: n });
    }
    let window = cfg.taper.weights(seg_len);
    let w_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg_len);
    let half = seg_len / 2;
    let mut power = vec![0.0; half];
    let mut buf = vec![Complex::new(0.0, 0.0); seg_len];
    for seg in 0..k {
        let chunk = &s.values[seg * step..seg * step + seg_len];
        let mean = chunk.iter().sum::<f64>() / seg_len as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (j, p) in power.iter_mut().enumerate() {
            let bin = j + 1;
            let fold = if 2 * bin == seg_len { 1.0 } else { 2.0 };
            *p += fold * buf[bin].norm_sqr();
        }
    }
    let norm = 1.0 / (k as f64 * seg_len as f64 * w_energy);
    power.iter_mut().for_each(|p| *p *= norm);
    let omega = (1..=half).map(|j| 2.0 * PI * j as f64 / seg_len as f64).collect();
    Ok(Spectrum { omega, power, segment_len: seg_len, segments: k })
}

/// Frequency window `[lo, hi]` (inclusive, radians per tick) for the
/// power-law fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitRange {
    pub lo: f64,
    pub hi: f64,
}

/// Upper edge of the long-time-scale regime used by the default fit range.
pub const LOW_FREQUENCY_EDGE: f64 = 1e-2;
pub const MIN_FIT_POINTS: usize = 10;

impl FitRange {
    /// From the lowest resolved frequency up to `max(10 * omega_min, 1e-2)`:
    /// at least one decade, extended over the whole long-time-scale band
    /// when the series is long enough to resolve it.
    pub fn low_frequency(omega: &[f64]) -> Self {
        let lo = omega.iter().copied().fold(f64::INFINITY, f64::min);
        Self { lo, hi: (10.0 * lo).max(LOW_FREQUENCY_EDGE) * (1.0 + 1e-12) }
    }
}

/// Exponent `alpha` of `S(omega) ~ omega^-alpha` from a log-log
/// least-squares slope over `range` (default: [`FitRange::low_frequency`]).
pub fn spectral_exponent(omega: &[f64], power: &[f64], range: Option<FitRange>) -> Result<f64> {
    assert_eq!(omega.len(), power.len());
    let range = range.unwrap_or_else(|| FitRange::low_frequency(omega));
    let (xs, ys): (Vec<f64>, Vec<f64>) = omega
        .iter()
        .zip(power)
        .filter(|(&w, &p)| w >= range.lo && w <= range.hi && w > 0.0 && p > 0.0)
        .map(|(w, p)| (w.ln(), p.ln()))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(SeriesError::DegenerateRange { points: xs.len(), needed: MIN_FIT_POINTS });
    }
    let fit = fit_line(&xs, &ys).ok_or(SeriesError::DegenerateRange { points: xs.len(), needed: MIN_FIT_POINTS })?;
    Ok(-fit.slope)
}

pub const MAX_AUTOCOV_LAG: usize = 10;
pub const MIN_SEGMENT_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentStats {
    pub start: usize,
    pub len: usize,
    pub mean: f64,
    /// Autocovariance at lags `0..=10`.
    pub autocov: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub segments: Vec<SegmentStats>,
    /// Standard error of a single segment mean, from the pooled long-run
    /// variance (Bartlett weights over lags 0..=10).
    pub pooled_se: f64,
    /// Largest pairwise gap between segment means, in standard errors of a
    /// difference of two means.
    pub max_gap_se: f64,
    pub unstable: bool,
}

pub const STATIONARITY_GAP_SE: f64 = 3.0;

/// Splits the series into `n_segments` equal parts and checks that the
/// first moment is stable across them.
pub fn weak_stationarity_report(s: &TickSeries, n_segments: usize) -> Result<StationarityReport> {
    if n_segments < 2 {
        return Err(SeriesError::InvalidParameter("need at least two segments"));
    }
    ensure_len(s.len(), n_segments * MIN_SEGMENT_LEN)?;
    let len = s.len() / n_segments;
    let segments: Vec<SegmentStats> = (0..n_segments)
        .map(|i| {
            let chunk = &s.values[i * len..(i + 1) * len];
            let mean = chunk.iter().sum::<f64>() / len as f64;
            let autocov = (0..=MAX_AUTOCOV_LAG)
                .map(|lag| {
                    chunk[lag..].iter().zip(chunk).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / len as f64
                })
                .collect();
            SegmentStats { start: i * len, len, mean, autocov }
        })
        .collect();

    let pooled: Vec<f64> = (0..=MAX_AUTOCOV_LAG)
        .map(|lag| segments.iter().map(|seg| seg.autocov[lag]).sum::<f64>() / n_segments as f64)
        .collect();
    let bandwidth = (MAX_AUTOCOV_LAG + 1) as f64;
    let long_run = pooled[0]
        + 2.0 * (1..=MAX_AUTOCOV_LAG).map(|l| (1.0 - l as f64 / bandwidth) * pooled[l]).sum::<f64>();
    // Bartlett weights keep this non-negative up to rounding; fall back to
    // the plain variance if strong negative correlation drives it to zero.
    let long_run = if long_run > 0.0 { long_run } else { pooled[0] };
    let pooled_se = (long_run / len as f64).sqrt();

    let means: Vec<f64> = segments.iter().map(|seg| seg.mean).collect();
    let spread = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) - means.iter().copied().fold(f64::INFINITY, f64::min);
    let diff_se = pooled_se * 2f64.sqrt();
    let max_gap_se = if diff_se > 0.0 {
        spread / diff_se
    } else if spread > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(StationarityReport { segments, pooled_se, max_gap_se, unstable: max_gap_se > STATIONARITY_GAP_SE })
}
