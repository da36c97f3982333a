use serde::Serialize;

use super::indicator::IndicatorRecord;
use crate::book::Side;

/// Per-side detector state at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RegimeFlags {
    pub minus: bool,
    pub plus: bool,
}

impl RegimeFlags {
    /// Side `j` fires when `lambda^j < theta_lambda` and `Kn^j > theta_kn`.
    pub fn evaluate(r: &IndicatorRecord, theta_lambda: f64, theta_kn: f64) -> Self {
        let fires = |side| r.lambda(side).is_some_and(|l| l < theta_lambda) && r.kn(side).exceeds(theta_kn);
        Self { minus: fires(Side::Minus), plus: fires(Side::Plus) }
    }
}

/// Inclusive run of consecutive flagged ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeInterval {
    pub side: Side,
    pub start_tick: u64,
    pub end_tick: u64,
}

impl RegimeInterval {
    pub fn len(&self) -> u64 {
        self.end_tick - self.start_tick + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub theta_lambda: f64,
    pub theta_kn: f64,
    pub minus: Vec<RegimeInterval>,
    pub plus: Vec<RegimeInterval>,
}

impl RegimeReport {
    pub fn intervals(&self, side: Side) -> &[RegimeInterval] {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn flagged_ticks(&self, side: Side) -> u64 {
        self.intervals(side).iter().map(RegimeInterval::len).sum()
    }
}

/// Merges flagged ticks into runs; ticks must be increasing.
pub fn merge_intervals(side: Side, flagged: impl IntoIterator<Item = u64>) -> Vec<RegimeInterval> {
    let mut out: Vec<RegimeInterval> = Vec::new();
    for t in flagged {
        match out.last_mut() {
            Some(iv) if iv.end_tick + 1 == t => iv.end_tick = t,
            _ => out.push(RegimeInterval { side, start_tick: t, end_tick: t }),
        }
    }
    out
}

/// Writes the regime flags into each record.
pub fn flag_records(records: &mut [IndicatorRecord], theta_lambda: f64, theta_kn: f64) {
    for r in records {
        let f = RegimeFlags::evaluate(r, theta_lambda, theta_kn);
        r.minus_regime = f.minus;
        r.plus_regime = f.plus;
    }
}

pub fn detect_regimes(records: &[IndicatorRecord], theta_lambda: f64, theta_kn: f64) -> RegimeReport {
    let flags: Vec<(u64, RegimeFlags)> =
        records.iter().map(|r| (r.tick, RegimeFlags::evaluate(r, theta_lambda, theta_kn))).collect();
    RegimeReport {
        theta_lambda,
        theta_kn,
        minus: merge_intervals(Side::Minus, flags.iter().filter(|(_, f)| f.minus).map(|(t, _)| *t)),
        plus: merge_intervals(Side::Plus, flags.iter().filter(|(_, f)| f.plus).map(|(t, _)| *t)),
    }
}
