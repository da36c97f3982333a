//! Streaming drivers that walk consecutive transaction snapshots.

use std::borrow::Borrow;

use crate::book::{BookState, Side};
use crate::kinetics::{inner_flow, InnerLayerSample, KineticParams, KineticsError, MeanFreePath};
use crate::layers::{layer_delta, layer_profile, CorrAccumulator, CorrCurve, CorrError, CorrMode, DepthRange};
use crate::series::TickSeries;

/// Per-depth and cumulative correlation curves of one side.
#[derive(Debug, Clone, PartialEq)]
pub struct SideCurves {
    pub per_depth: CorrCurve,
    pub cumulative: CorrCurve,
}

/// Correlation curves for both sides, `[minus, plus]`. A tick without a
/// mid-price change or without a previous best on a side is a gap for that
/// side.
pub fn correlation_curves<B: Borrow<BookState>>(
    books: impl IntoIterator<Item = B>,
    k: usize,
    gamma_max: i64,
) -> Result<[SideCurves; 2], CorrError> {
    let range = DepthRange::up_to(gamma_max);
    let mut acc = [CorrAccumulator::new(Side::Minus, k, gamma_max)?, CorrAccumulator::new(Side::Plus, k, gamma_max)?];
    let mut prev: Option<BookState> = None;
    for b in books {
        let curr = b.borrow();
        if let Some(p) = &prev {
            let v = match (p.best_and_mid(), curr.best_and_mid()) {
                (Ok(a), Ok(b)) => Some((b.mid_half_ticks - a.mid_half_ticks) as f64 / 2.0),
                _ => None,
            };
            for (a, side) in acc.iter_mut().zip(Side::BOTH) {
                match (v, layer_delta(p, curr, side, range)) {
                    (Some(v), Some(d)) => a.push(v, &d)?,
                    _ => a.push_gap(),
                }
            }
        }
        prev = Some(curr.clone());
    }
    let curves = |a: &CorrAccumulator| -> Result<SideCurves, CorrError> {
        Ok(SideCurves { per_depth: a.curve(CorrMode::PerDepth)?, cumulative: a.curve(CorrMode::Cumulative)? })
    };
    Ok([curves(&acc[0])?, curves(&acc[1])?])
}

/// `V_gamma(t)`: volume within depths `0..=gamma` of `side`, with depth
/// measured from the previous snapshot's best (the current one for the
/// first snapshot or after an empty side). An empty side contributes zero.
pub fn depth_volume_series<B: Borrow<BookState>>(books: impl IntoIterator<Item = B>, side: Side, gamma: i64) -> TickSeries {
    depth_volume_table(books, &[(side, gamma)]).pop().expect("one series requested")
}

/// [`depth_volume_series`] for several `(side, gamma)` pairs in one pass.
pub fn depth_volume_table<B: Borrow<BookState>>(books: impl IntoIterator<Item = B>, series: &[(Side, i64)]) -> Vec<TickSeries> {
    let mut values = vec![Vec::new(); series.len()];
    let mut origin = None;
    let mut prev_best: [Option<i64>; 2] = [None, None];
    for b in books {
        let curr = b.borrow();
        origin.get_or_insert(curr.tick_index());
        for (out, &(side, gamma)) in values.iter_mut().zip(series) {
            let v = match prev_best[side as usize].or(curr.best(side)) {
                Some(r) => layer_profile(curr, side, r, DepthRange::new(0, gamma)).n_gamma.iter().sum::<u64>() as f64,
                None => 0.0,
            };
            out.push(v);
        }
        prev_best = Side::BOTH.map(|s| curr.best(s));
    }
    series
        .iter()
        .zip(values)
        .map(|(&(side, gamma), v)| TickSeries::new(format!("V_{gamma}^{}", side.as_str()), origin.unwrap_or(0), v))
        .collect()
}

/// Inner-layer samples for every snapshot after the first.
pub fn inner_samples<B: Borrow<BookState>>(books: impl IntoIterator<Item = B>, params: &KineticParams) -> Vec<InnerLayerSample> {
    let mut out = Vec::new();
    let mut prev: Option<BookState> = None;
    for b in books {
        let curr = b.borrow();
        if let Some(p) = &prev {
            out.push(inner_flow(p, curr, params));
        }
        prev = Some(curr.clone());
    }
    out
}

/// Means of `k` consecutive inner-layer samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowBlock {
    pub start_tick: u64,
    /// `[f^-, f^+]`.
    pub f: [f64; 2],
    /// Best-price velocity per side; `None` if any tick lacked a reference.
    pub v_side: [Option<f64>; 2],
    /// Mid-price velocity; `None` if either side lacked a reference.
    pub v: Option<f64>,
}

impl FlowBlock {
    /// `f^-` on the minus side and `-f^+` on the plus side, so that
    /// trend-following flow gives positive slopes on both.
    pub fn regressor(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.f[0],
            Side::Plus => -self.f[1],
        }
    }
}

/// Non-overlapping blocks of `k` samples; a trailing partial block is dropped.
pub fn flow_blocks(samples: &[InnerLayerSample], k: usize) -> Vec<FlowBlock> {
    assert!(k > 0);
    samples
        .chunks_exact(k)
        .map(|c| {
            let n = k as f64;
            let mean = |f: &dyn Fn(&InnerLayerSample) -> Option<f64>| -> Option<f64> {
                c.iter().map(f).sum::<Option<f64>>().map(|x| x / n)
            };
            let side_v = |side: Side| mean(&|s| if s.no_ref(side) { None } else { s.v_side(side) });
            FlowBlock {
                start_tick: c[0].tick,
                f: Side::BOTH.map(|side| c.iter().map(|s| s.f(side) as f64).sum::<f64>() / n),
                v_side: Side::BOTH.map(side_v),
                v: mean(&|s| if s.no_ref_minus || s.no_ref_plus { None } else { s.v }),
            }
        })
        .collect()
}

/// Zero-intercept fits over the blocks with a defined velocity: per side
/// (`v^± = L^± · regressor`) and pooled (`v = L · (f^- - f^+)`).
pub fn fit_flow_blocks(blocks: &[FlowBlock]) -> [Result<MeanFreePath, KineticsError>; 3] {
    let fit = |pairs: Vec<(f64, f64)>| {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        MeanFreePath::fit(&x, &y)
    };
    let side = |s: Side| fit(blocks.iter().filter_map(|b| b.v_side[s as usize].map(|v| (b.regressor(s), v))).collect());
    [side(Side::Minus), side(Side::Plus), fit(blocks.iter().filter_map(|b| b.v.map(|v| (b.f[0] - b.f[1], v))).collect())]
}

/// Mid-price series in ticks; ticks without a two-sided book repeat the
/// last defined mid.
pub fn mid_series<B: Borrow<BookState>>(books: impl IntoIterator<Item = B>) -> TickSeries {
    let mut values = Vec::new();
    let mut origin = None;
    let mut last = None;
    for b in books {
        let curr = b.borrow();
        if let Some(m) = curr.mid() {
            last = Some(m);
        }
        if let Some(m) = last {
            origin.get_or_insert(curr.tick_index());
            values.push(m);
        }
    }
    TickSeries::new("mid", origin.unwrap_or(0), values)
}
