//! Depth-axis view of the book and the velocity/order-flow correlation
//! curves that locate the inner-layer boundary `gamma_c`.

use serde::Serialize;
use thiserror::Error;

use crate::book::{BookState, Side};
use crate::stats::CoMoments;

pub const DEFAULT_GAMMA_MIN: i64 = -10;
pub const DEFAULT_GAMMA_MAX: i64 = 100;
/// Block count below which a correlation curve is not reported.
pub const MIN_CORR_BLOCKS: usize = 30;
/// Curves passed to [`find_gamma_c`] must reach at least this depth.
pub const MIN_SCAN_DEPTH: i64 = 30;

/// `sign(side) * (q - ref_best)`: positive away from the spread on both
/// sides, negative for placements inside the previous spread.
pub fn depth_of(q: i64, side: Side, ref_best: i64) -> i64 {
    side.sign() * (q - ref_best)
}

/// Price of depth `gamma` on `side` relative to `ref_best`.
pub fn price_at_depth(gamma: i64, side: Side, ref_best: i64) -> i64 {
    ref_best + side.sign() * gamma
}

/// Inclusive depth window `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DepthRange {
    pub min: i64,
    pub max: i64,
}

impl Default for DepthRange {
    fn default() -> Self {
        Self { min: DEFAULT_GAMMA_MIN, max: DEFAULT_GAMMA_MAX }
    }
}

impl DepthRange {
    pub fn new(min: i64, max: i64) -> Self {
        assert!(min <= max, "empty depth range {min}..={max}");
        Self { min, max }
    }

    /// `[-10, gamma_max]`.
    pub fn up_to(gamma_max: i64) -> Self {
        Self::new(DEFAULT_GAMMA_MIN.min(gamma_max), gamma_max)
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, gamma: i64) -> bool {
        (self.min..=self.max).contains(&gamma)
    }

    pub fn index(&self, gamma: i64) -> Option<usize> {
        self.contains(gamma).then(|| (gamma - self.min) as usize)
    }

    pub fn depths(&self) -> impl Iterator<Item = i64> {
        self.min..=self.max
    }

    /// Price interval covered on `side`, as `(low, high)` inclusive.
    fn prices(&self, side: Side, ref_best: i64) -> (i64, i64) {
        let a = price_at_depth(self.min, side, ref_best);
        let b = price_at_depth(self.max, side, ref_best);
        (a.min(b), a.max(b))
    }
}

/// Volume per depth on one side at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthProfile {
    pub side: Side,
    pub ref_best: i64,
    pub tick: u64,
    pub range: DepthRange,
    /// `N_gamma` for `gamma = range.min..=range.max`.
    pub n_gamma: Vec<u64>,
}

impl DepthProfile {
    pub fn n_at(&self, gamma: i64) -> u64 {
        self.range.index(gamma).map_or(0, |i| self.n_gamma[i])
    }

    /// `V_gamma` for `gamma = 0..=range.max`: prefix sums from depth 0.
    pub fn cumulative(&self) -> Vec<u64> {
        prefix_from_zero(&self.n_gamma, self.range, 0u64)
    }

    pub fn cumulative_at(&self, gamma: i64) -> u64 {
        (0..=gamma.min(self.range.max)).map(|g| self.n_at(g)).sum()
    }
}

fn prefix_from_zero<T: Copy + std::ops::Add<Output = T>>(values: &[T], range: DepthRange, zero: T) -> Vec<T> {
    if range.max < 0 {
        return Vec::new();
    }
    let start = range.index(0.max(range.min)).unwrap();
    // Depths below zero never enter the cumulative sums.
    let mut acc = zero;
    let mut out = Vec::with_capacity((range.max + 1) as usize);
    for _ in 0..range.min.max(0) {
        out.push(zero);
    }
    for &v in &values[start..] {
        acc = acc + v;
        out.push(acc);
    }
    out
}

/// Bins every level of `side` by depth against `ref_best`. Levels outside
/// `range` are ignored; an empty side yields an all-zero profile.
pub fn layer_profile(state: &BookState, side: Side, ref_best: i64, range: DepthRange) -> DepthProfile {
    let mut n_gamma = vec![0u64; range.len()];
    let (lo, hi) = range.prices(side, ref_best);
    for (&price, &vol) in state.levels(side).range(lo..=hi) {
        n_gamma[range.index(depth_of(price, side, ref_best)).unwrap()] += vol;
    }
    DepthProfile { side, ref_best, tick: state.tick_index(), range, n_gamma }
}

/// Per-depth volume change between two consecutive snapshots, binned
/// against the earlier best price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerDelta {
    pub side: Side,
    pub ref_best: i64,
    pub tick: u64,
    pub range: DepthRange,
    pub delta_n: Vec<i64>,
    pub adds: Vec<u64>,
    pub removes: Vec<u64>,
}

impl LayerDelta {
    pub fn delta_at(&self, gamma: i64) -> i64 {
        self.range.index(gamma).map_or(0, |i| self.delta_n[i])
    }

    /// `Delta V_gamma` for `gamma = 0..=range.max`.
    pub fn cumulative(&self) -> Vec<i64> {
        prefix_from_zero(&self.delta_n, self.range, 0i64)
    }

    /// Net change, creations and annihilations summed over `[lo, hi]`.
    pub fn sum_over(&self, lo: i64, hi: i64) -> (i64, u64, u64) {
        let (mut f, mut c, mut a) = (0, 0, 0);
        for g in lo.max(self.range.min)..=hi.min(self.range.max) {
            let i = self.range.index(g).unwrap();
            f += self.delta_n[i];
            c += self.adds[i];
            a += self.removes[i];
        }
        (f, c, a)
    }
}

/// Reference is `prev`'s best on `side`; `None` when that side was empty.
pub fn layer_delta(prev: &BookState, curr: &BookState, side: Side, range: DepthRange) -> Option<LayerDelta> {
    prev.best(side).map(|b| layer_delta_at(prev, curr, side, b, range))
}

/// Signed per-level change `N(Q, curr) - N(Q, prev)` over the union of both
/// books' levels, split into adds and removes per level, then binned.
pub fn layer_delta_at(prev: &BookState, curr: &BookState, side: Side, ref_best: i64, range: DepthRange) -> LayerDelta {
    let n = range.len();
    let mut out = LayerDelta {
        side,
        ref_best,
        tick: curr.tick_index(),
        range,
        delta_n: vec![0; n],
        adds: vec![0; n],
        removes: vec![0; n],
    };
    let (lo, hi) = range.prices(side, ref_best);
    let mut a = prev.levels(side).range(lo..=hi).peekable();
    let mut b = curr.levels(side).range(lo..=hi).peekable();
    loop {
        let (price, before, after) = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&(&pa, &va)), Some(&(&pb, &vb))) if pa == pb => {
                a.next();
                b.next();
                (pa, va, vb)
            }
            (Some(&(&pa, &va)), Some(&(&pb, _))) if pa < pb => {
                a.next();
                (pa, va, 0)
            }
            (Some(&(&pa, &va)), None) => {
                a.next();
                (pa, va, 0)
            }
            (_, Some(&(&pb, &vb))) => {
                b.next();
                (pb, 0, vb)
            }
        };
        if before == after {
            continue;
        }
        let i = range.index(depth_of(price, side, ref_best)).unwrap();
        let d = after as i64 - before as i64;
        out.delta_n[i] += d;
        if d > 0 {
            out.adds[i] += d as u64;
        } else {
            out.removes[i] += (-d) as u64;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrMode {
    /// Against `Delta N_gamma` at each depth.
    PerDepth,
    /// Against `Delta V_gamma`, the change summed from depth 0.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrCurve {
    pub side: Side,
    pub mode: CorrMode,
    pub k: usize,
    pub n_blocks: usize,
    /// Depths `0..=gamma_max`.
    pub gamma: Vec<i64>,
    /// `None` where either block series has zero variance.
    pub corr: Vec<Option<f64>>,
}

impl CorrCurve {
    pub fn at(&self, gamma: i64) -> Option<f64> {
        usize::try_from(gamma).ok().and_then(|i| self.corr.get(i).copied().flatten())
    }

    pub fn gamma_max(&self) -> i64 {
        self.gamma.last().copied().unwrap_or(-1)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrError {
    #[error("need at least {needed} complete blocks, got {got}")]
    InsufficientBlocks { needed: usize, got: usize },
    #[error("block size must be at least 1")]
    ZeroBlockSize,
    #[error("delta for side {got} fed to a {expected} accumulator")]
    SideMismatch { expected: Side, got: Side },
}

/// One-pass accumulator for both correlation curves of one side.
///
/// Ticks are grouped into consecutive blocks of `k`; each complete block
/// contributes one `(mean v, mean Delta N_gamma)` pair per depth. A gap
/// (tick without a defined velocity or reference price) discards the
/// partial block so that blocks always cover `k` consecutive ticks.
#[derive(Debug, Clone)]
pub struct CorrAccumulator {
    side: Side,
    k: usize,
    gamma_max: i64,
    fill: usize,
    v_sum: f64,
    dn_sum: Vec<i64>,
    per_depth: Vec<CoMoments>,
    cumulative: Vec<CoMoments>,
    blocks: usize,
}

impl CorrAccumulator {
    pub fn new(side: Side, k: usize, gamma_max: i64) -> Result<Self, CorrError> {
        if k == 0 {
            return Err(CorrError::ZeroBlockSize);
        }
        let n = (gamma_max.max(0) + 1) as usize;
        Ok(Self {
            side,
            k,
            gamma_max,
            fill: 0,
            v_sum: 0.0,
            dn_sum: vec![0; n],
            per_depth: vec![CoMoments::new(); n],
            cumulative: vec![CoMoments::new(); n],
            blocks: 0,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn push(&mut self, v: f64, delta: &LayerDelta) -> Result<(), CorrError> {
        if delta.side != self.side {
            return Err(CorrError::SideMismatch { expected: self.side, got: delta.side });
        }
        self.v_sum += v;
        for (g, slot) in self.dn_sum.iter_mut().enumerate() {
            *slot += delta.delta_at(g as i64);
        }
        self.fill += 1;
        if self.fill == self.k {
            self.close_block();
        }
        Ok(())
    }

    pub fn push_gap(&mut self) {
        self.fill = 0;
        self.v_sum = 0.0;
        self.dn_sum.iter_mut().for_each(|x| *x = 0);
    }

    fn close_block(&mut self) {
        let k = self.k as f64;
        let v = self.v_sum / k;
        let mut cum = 0i64;
        for (g, &dn) in self.dn_sum.iter().enumerate() {
            cum += dn;
            self.per_depth[g].push(v, dn as f64 / k);
            self.cumulative[g].push(v, cum as f64 / k);
        }
        self.blocks += 1;
        self.push_gap();
    }

    pub fn merge(&mut self, other: &CorrAccumulator) {
        assert_eq!((self.side, self.k, self.gamma_max), (other.side, other.k, other.gamma_max));
        for (a, b) in self.per_depth.iter_mut().zip(&other.per_depth) {
            a.merge(b);
        }
        for (a, b) in self.cumulative.iter_mut().zip(&other.cumulative) {
            a.merge(b);
        }
        self.blocks += other.blocks;
    }

    pub fn curve(&self, mode: CorrMode) -> Result<CorrCurve, CorrError> {
        if self.blocks < MIN_CORR_BLOCKS {
            return Err(CorrError::InsufficientBlocks { needed: MIN_CORR_BLOCKS, got: self.blocks });
        }
        let src = match mode {
            CorrMode::PerDepth => &self.per_depth,
            CorrMode::Cumulative => &self.cumulative,
        };
        Ok(CorrCurve {
            side: self.side,
            mode,
            k: self.k,
            n_blocks: self.blocks,
            gamma: (0..src.len() as i64).collect(),
            corr: src.iter().map(CoMoments::correlation).collect(),
        })
    }
}

/// Correlation curve between block means of `v` and of the per-depth (or
/// cumulative) order-flow changes. `v[i]` and `deltas[i]` describe the same
/// tick.
pub fn corr_curve(v: &[f64], deltas: &[LayerDelta], k: usize, gamma_max: i64, mode: CorrMode) -> Result<CorrCurve, CorrError> {
    assert_eq!(v.len(), deltas.len());
    let side = deltas.first().map_or(Side::Minus, |d| d.side);
    let mut acc = CorrAccumulator::new(side, k, gamma_max)?;
    for (&vi, d) in v.iter().zip(deltas) {
        acc.push(vi, d)?;
    }
    acc.curve(mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GammaC {
    /// Depth of maximal `|corr|` on the cumulative curve.
    pub gamma_c: i64,
    /// Last depth before the per-depth curve leaves its small-depth sign.
    pub sign_change: i64,
    pub method_agreement: i64,
    /// Sign (+1 or -1) of the per-depth curve near the best price.
    pub inner_sign: i8,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GammaCError {
    #[error("cumulative curve has no defined value at positive depth")]
    NoPeak,
    #[error("per-depth curve never changes sign")]
    NoSignChange,
    #[error("curves must span depths 0..={needed}, got 0..={got}")]
    ShortCurve { needed: i64, got: i64 },
}

/// Number of depths from the best price used to fix the inner-layer sign.
pub const INNER_SIGN_DEPTHS: i64 = 4;

/// Argmax over `gamma > 0` of `|corr|`; ties go to the smallest depth.
pub fn peak_depth(cumulative: &CorrCurve) -> Result<i64, GammaCError> {
    let mut best: Option<(i64, f64)> = None;
    for (&g, c) in cumulative.gamma.iter().zip(&cumulative.corr) {
        if let (true, Some(c)) = (g > 0, c) {
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((g, c.abs()));
            }
        }
    }
    best.map(|(g, _)| g).ok_or(GammaCError::NoPeak)
}

/// Sign of the summed per-depth correlation over the first few depths.
pub fn inner_sign(per_depth: &CorrCurve) -> Option<i8> {
    let s: f64 = (0..INNER_SIGN_DEPTHS).filter_map(|g| per_depth.at(g)).sum();
    if s > 0.0 {
        Some(1)
    } else if s < 0.0 {
        Some(-1)
    } else {
        None
    }
}

/// Smallest `gamma > 0` where the curve has sign `reference` and the next
/// defined depth has the opposite sign. Undefined depths are skipped.
pub fn sign_change_depth(per_depth: &CorrCurve, reference: i8) -> Result<i64, GammaCError> {
    let r = f64::from(reference);
    let defined: Vec<(i64, f64)> =
        per_depth.gamma.iter().zip(&per_depth.corr).filter_map(|(&g, c)| c.map(|c| (g, c))).collect();
    defined
        .windows(2)
        .find(|w| w[0].0 > 0 && r * w[0].1 > 0.0 && r * w[1].1 < 0.0)
        .map(|w| w[0].0)
        .ok_or(GammaCError::NoSignChange)
}

pub fn find_gamma_c(per_depth: &CorrCurve, cumulative: &CorrCurve) -> Result<GammaC, GammaCError> {
    for c in [per_depth, cumulative] {
        if c.gamma_max() < MIN_SCAN_DEPTH {
            return Err(GammaCError::ShortCurve { needed: MIN_SCAN_DEPTH, got: c.gamma_max() });
        }
    }
    let gamma_c = peak_depth(cumulative)?;
    let inner_sign = inner_sign(per_depth).ok_or(GammaCError::NoSignChange)?;
    let sign_change = sign_change_depth(per_depth, inner_sign)?;
    Ok(GammaC { gamma_c, sign_change, method_agreement: (gamma_c - sign_change).abs(), inner_sign })
}
