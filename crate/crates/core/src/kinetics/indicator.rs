use std::collections::VecDeque;

use serde::Serialize;

use super::flow::{inner_flow, InnerLayerSample};
use super::knudsen::{knudsen, Knudsen, PathEstimate};
use super::mfp::MeanFreePath;
use super::rates::depletion_rate;
use super::{KineticParams, KineticsError};
use crate::book::{BookState, Side};

/// Rolling kinetic indicators at one tick, computed over the window of the
/// `S * k` most recent ticks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IndicatorRecord {
    pub tick: u64,
    pub mid: Option<f64>,
    pub l_minus: Option<f64>,
    pub l_plus: Option<f64>,
    /// Pooled fit of the mid-price velocity on `f^- - f^+`.
    pub l_sym: Option<f64>,
    pub kn_minus: Knudsen,
    pub kn_plus: Knudsen,
    pub kn_sym: Knudsen,
    pub i_bar_minus: f64,
    pub i_bar_plus: f64,
    pub f_bar_minus: f64,
    pub f_bar_plus: f64,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub valid_blocks_minus: usize,
    pub valid_blocks_plus: usize,
    pub one_sided_book: bool,
    pub minus_regime: bool,
    pub plus_regime: bool,
}

impl IndicatorRecord {
    pub fn kn(&self, side: Side) -> Knudsen {
        match side {
            Side::Minus => self.kn_minus,
            Side::Plus => self.kn_plus,
        }
    }

    pub fn lambda(&self, side: Side) -> Option<f64> {
        match side {
            Side::Minus => self.lambda_minus,
            Side::Plus => self.lambda_plus,
        }
    }

    pub fn i_bar(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.i_bar_minus,
            Side::Plus => self.i_bar_plus,
        }
    }
}

/// Means of one block of `k` consecutive samples.
#[derive(Debug, Clone, Copy, Default)]
struct Block {
    f: [f64; 2],
    v_side: [f64; 2],
    i: [f64; 2],
    v: f64,
    valid: [bool; 2],
    valid_sym: bool,
}

fn idx(side: Side) -> usize {
    match side {
        Side::Minus => 0,
        Side::Plus => 1,
    }
}

impl Block {
    fn from_samples<'a>(samples: impl ExactSizeIterator<Item = &'a InnerLayerSample>) -> Self {
        let k = samples.len() as f64;
        let mut b = Block { valid: [true; 2], valid_sym: true, ..Block::default() };
        for s in samples {
            for side in Side::BOTH {
                let j = idx(side);
                b.f[j] += s.f(side) as f64;
                b.i[j] += s.inner(side) as f64;
                match s.v_side(side) {
                    Some(v) if !s.no_ref(side) => b.v_side[j] += v,
                    _ => b.valid[j] = false,
                }
            }
            match s.v {
                Some(v) if !s.no_ref_minus && !s.no_ref_plus => b.v += v,
                _ => b.valid_sym = false,
            }
        }
        for j in 0..2 {
            b.f[j] /= k;
            b.i[j] /= k;
            b.v_side[j] /= k;
        }
        b.v /= k;
        b
    }

    /// Regressor for side `j`: `f^-` on the minus side, `-f^+` on the plus
    /// side, so that both slopes are positive for trend-following flow.
    fn regressor(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.f[0],
            Side::Plus => -self.f[1],
        }
    }
}

/// Single-pass fold of the snapshot stream into [`IndicatorRecord`]s.
///
/// Each tick closes a block of the `k` most recent samples. Blocks are kept
/// in `k` phase buffers of length `S`, so the buffer of the current phase
/// always holds the `S` blocks that tile the window ending at this tick.
#[derive(Debug, Clone)]
pub struct IndicatorPipeline {
    params: KineticParams,
    prev: Option<BookState>,
    recent: VecDeque<InnerLayerSample>,
    phases: Vec<VecDeque<Block>>,
    seen: usize,
}

impl IndicatorPipeline {
    pub fn new(params: KineticParams) -> Result<Self, KineticsError> {
        params.validate()?;
        Ok(Self {
            params,
            prev: None,
            recent: VecDeque::with_capacity(params.k),
            phases: vec![VecDeque::with_capacity(params.s); params.k],
            seen: 0,
        })
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    /// Feeds the next transaction snapshot. The first call only primes the
    /// previous-state reference.
    pub fn push_book(&mut self, book: &BookState) -> Option<IndicatorRecord> {
        let out = self.prev.as_ref().map(|prev| inner_flow(prev, book, &self.params));
        self.prev = Some(book.clone());
        out.and_then(|s| self.push_sample(&s))
    }

    pub fn push_sample(&mut self, sample: &InnerLayerSample) -> Option<IndicatorRecord> {
        let (k, s) = (self.params.k, self.params.s);
        if self.recent.len() == k {
            self.recent.pop_front();
        }
        self.recent.push_back(*sample);
        let phase = self.seen % k;
        self.seen += 1;
        if self.recent.len() < k {
            return None;
        }
        let buf = &mut self.phases[phase];
        if buf.len() == s {
            buf.pop_front();
        }
        buf.push_back(Block::from_samples(self.recent.iter()));
        (buf.len() == s).then(|| self.record(phase, sample))
    }

    fn record(&self, phase: usize, last: &InnerLayerSample) -> IndicatorRecord {
        let blocks = &self.phases[phase];
        let n = blocks.len() as f64;
        let mean = |f: &dyn Fn(&Block) -> f64| blocks.iter().map(f).sum::<f64>() / n;
        let i_bar = [mean(&|b| b.i[0]), mean(&|b| b.i[1])];
        let f_bar = [mean(&|b| b.f[0]), mean(&|b| b.f[1])];

        let mut path = [PathEstimate::Missing; 2];
        let mut valid = [0usize; 2];
        for side in Side::BOTH {
            let j = idx(side);
            let (x, y): (Vec<f64>, Vec<f64>) =
                blocks.iter().filter(|b| b.valid[j]).map(|b| (b.regressor(side), b.v_side[j])).unzip();
            valid[j] = x.len();
            path[j] = if last.empty(side) || i_bar[j] == 0.0 {
                PathEstimate::Divergent
            } else if 2 * x.len() < blocks.len() {
                PathEstimate::Missing
            } else {
                MeanFreePath::fit(&x, &y).map_or(PathEstimate::Missing, |m| PathEstimate::Finite(m.length()))
            };
        }
        let (x, y): (Vec<f64>, Vec<f64>) =
            blocks.iter().filter(|b| b.valid_sym).map(|b| (b.f[0] - b.f[1], b.v)).unzip();
        let l_sym = if 2 * x.len() < blocks.len() { None } else { MeanFreePath::fit(&x, &y).ok().map(|m| m.length()) };

        let (kn_minus, kn_plus, kn_sym) = knudsen(path[0], path[1], &self.params);
        let lambda = |j: usize| depletion_rate(f_bar[j], i_bar[j]).ok().map(|d| d.lambda);
        let finite = |p: PathEstimate| match p {
            PathEstimate::Finite(l) => Some(l),
            _ => None,
        };
        IndicatorRecord {
            tick: last.tick,
            mid: last.mid,
            l_minus: finite(path[0]),
            l_plus: finite(path[1]),
            l_sym,
            kn_minus,
            kn_plus,
            kn_sym,
            i_bar_minus: i_bar[0],
            i_bar_plus: i_bar[1],
            f_bar_minus: f_bar[0],
            f_bar_plus: f_bar[1],
            lambda_minus: lambda(0),
            lambda_plus: lambda(1),
            valid_blocks_minus: valid[0],
            valid_blocks_plus: valid[1],
            one_sided_book: last.one_sided() || i_bar.contains(&0.0),
            minus_regime: false,
            plus_regime: false,
        }
    }

    /// Runs the pipeline over a sequence of snapshots.
    pub fn run<'a>(params: KineticParams, books: impl IntoIterator<Item = &'a BookState>) -> Result<Vec<IndicatorRecord>, KineticsError> {
        let mut p = Self::new(params)?;
        Ok(books.into_iter().filter_map(|b| p.push_book(b)).collect())
    }

    pub fn run_samples<'a>(
        params: KineticParams,
        samples: impl IntoIterator<Item = &'a InnerLayerSample>,
    ) -> Result<Vec<IndicatorRecord>, KineticsError> {
        let mut p = Self::new(params)?;
        Ok(samples.into_iter().filter_map(|s| p.push_sample(s)).collect())
    }
}
