use serde::Serialize;

use super::KineticsError;
use crate::series::CoarseSeries;
use crate::stats::{fit_line, fit_through_origin};

/// Velocity per unit of inner-layer flow, fitted through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFreePath {
    /// Signed zero-intercept slope.
    pub slope: f64,
    /// Ordinary slope of the fit with an intercept; diagnostic only.
    pub slope_with_intercept: Option<f64>,
    pub blocks: usize,
}

impl MeanFreePath {
    /// `L = |slope|`.
    pub fn length(&self) -> f64 {
        self.slope.abs()
    }

    /// Zero-intercept fit over paired blocks.
    pub fn fit(f: &[f64], v: &[f64]) -> Result<Self, KineticsError> {
        let fit = fit_through_origin(f, v).ok_or(KineticsError::DegenerateRegressor)?;
        Ok(Self { slope: fit.slope, slope_with_intercept: fit_line(f, v).map(|l| l.slope), blocks: f.len() })
    }
}

/// Fits `v = L f` over the `s` most recent aligned blocks.
pub fn fit_mean_free_path(v_blocks: &CoarseSeries, f_blocks: &CoarseSeries, s: usize) -> Result<MeanFreePath, KineticsError> {
    if v_blocks.block_size != f_blocks.block_size || v_blocks.origin_tick != f_blocks.origin_tick {
        return Err(KineticsError::InvalidParams("velocity and flow blocks are not aligned"));
    }
    let n = v_blocks.len().min(f_blocks.len());
    if s == 0 || n < s {
        return Err(KineticsError::InsufficientData { needed: s.max(1), got: n });
    }
    MeanFreePath::fit(&f_blocks.values[n - s..n], &v_blocks.values[n - s..n])
}
