//! Kinetic estimators on the inner layer: particle flow, mean free path,
//! Knudsen numbers, the inverse-density law, depletion rates and the
//! abnormal-regime detector.

mod detect;
mod flow;
mod indicator;
mod kappa;
mod knudsen;
mod mfp;
mod rates;

pub use detect::{detect_regimes, flag_records, merge_intervals, RegimeFlags, RegimeInterval, RegimeReport};
pub use flow::{inner_flow, InnerLayerSample};
pub use indicator::{IndicatorPipeline, IndicatorRecord};
pub use kappa::{fit_kappa, fit_kappa_per_side, fit_kappa_symmetric, KappaFit, MIN_KAPPA_SAMPLES};
pub use knudsen::{knudsen, knudsen_number, Knudsen, PathEstimate};
pub use mfp::{fit_mean_free_path, MeanFreePath};
pub use rates::{depletion_rate, halving_time, joint_threshold_quantile, Depletion, JointQuantile, MIN_JOINT_SAMPLES};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("regressor is identically zero over the window")]
    DegenerateRegressor,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("inner layer is empty")]
    EmptyInnerLayer,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

/// Fallback inner-layer depth when it cannot be estimated from data.
pub const DEFAULT_GAMMA_C: u32 = 18;
pub const DEFAULT_THETA_KN: f64 = 0.1;
pub const DEFAULT_THETA_LAMBDA_QUANTILE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KineticParams {
    pub gamma_c_minus: u32,
    pub gamma_c_plus: u32,
    /// Block size in ticks.
    pub k: usize,
    /// Window length in blocks.
    pub s: usize,
    pub theta_kn: f64,
    pub theta_lambda_quantile: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self::knudsen_series()
    }
}

impl KineticParams {
    fn preset(k: usize, s: usize) -> Self {
        Self {
            gamma_c_minus: DEFAULT_GAMMA_C,
            gamma_c_plus: DEFAULT_GAMMA_C,
            k,
            s,
            theta_kn: DEFAULT_THETA_KN,
            theta_lambda_quantile: DEFAULT_THETA_LAMBDA_QUANTILE,
        }
    }

    /// Block size for the correlation curves and pooled mean-free-path fit.
    pub fn correlation() -> Self {
        Self::preset(20, 100)
    }

    /// Time-resolved Knudsen number.
    pub fn knudsen_series() -> Self {
        Self::preset(4, 100)
    }

    /// Depletion-rate and Knudsen-number detector.
    pub fn detector() -> Self {
        Self::preset(2, 100)
    }

    pub fn with_gamma_c(mut self, minus: u32, plus: u32) -> Self {
        self.gamma_c_minus = minus;
        self.gamma_c_plus = plus;
        self
    }

    pub fn gamma_c(&self, side: crate::Side) -> u32 {
        match side {
            crate::Side::Minus => self.gamma_c_minus,
            crate::Side::Plus => self.gamma_c_plus,
        }
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        if self.gamma_c_minus < 1 || self.gamma_c_plus < 1 {
            return Err(KineticsError::InvalidParams("gamma_c must be at least 1"));
        }
        if self.k < 1 {
            return Err(KineticsError::InvalidParams("k must be at least 1"));
        }
        if self.s < 10 {
            return Err(KineticsError::InvalidParams("window must hold at least 10 blocks"));
        }
        if !(self.theta_lambda_quantile > 0.0 && self.theta_lambda_quantile < 1.0) {
            return Err(KineticsError::InvalidParams("quantile must lie in (0, 1)"));
        }
        if !self.theta_kn.is_finite() {
            return Err(KineticsError::InvalidParams("theta_kn must be finite"));
        }
        Ok(())
    }
}
