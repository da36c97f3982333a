use serde::Serialize;

use super::KineticParams;
use crate::book::{BookState, Side};
use crate::layers::{layer_delta_at, layer_profile, DepthRange};

/// Inner-layer bookkeeping for one transaction tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InnerLayerSample {
    pub tick: u64,
    pub f_minus: i64,
    pub f_plus: i64,
    pub c_minus: u64,
    pub c_plus: u64,
    pub a_minus: u64,
    pub a_plus: u64,
    pub i_minus: u64,
    pub i_plus: u64,
    /// Mid-price in ticks after this tick.
    pub mid: Option<f64>,
    /// Mid-price change in ticks.
    pub v: Option<f64>,
    /// Change of the minus-side best price in ticks.
    pub v_minus: Option<f64>,
    pub v_plus: Option<f64>,
    /// Side was empty at the previous tick, so depth had no reference and
    /// the flow is not defined.
    pub no_ref_minus: bool,
    pub no_ref_plus: bool,
    pub empty_minus: bool,
    pub empty_plus: bool,
}

impl InnerLayerSample {
    /// Combined flow `f^- - f^+`.
    pub fn f_i(&self) -> i64 {
        self.f_minus - self.f_plus
    }

    pub fn f(&self, side: Side) -> i64 {
        match side {
            Side::Minus => self.f_minus,
            Side::Plus => self.f_plus,
        }
    }

    pub fn inner(&self, side: Side) -> u64 {
        match side {
            Side::Minus => self.i_minus,
            Side::Plus => self.i_plus,
        }
    }

    pub fn v_side(&self, side: Side) -> Option<f64> {
        match side {
            Side::Minus => self.v_minus,
            Side::Plus => self.v_plus,
        }
    }

    pub fn no_ref(&self, side: Side) -> bool {
        match side {
            Side::Minus => self.no_ref_minus,
            Side::Plus => self.no_ref_plus,
        }
    }

    pub fn empty(&self, side: Side) -> bool {
        match side {
            Side::Minus => self.empty_minus,
            Side::Plus => self.empty_plus,
        }
    }

    pub fn one_sided(&self) -> bool {
        self.empty_minus || self.empty_plus
    }
}

struct SideFlow {
    f: i64,
    c: u64,
    a: u64,
    inner: u64,
    v: Option<f64>,
    no_ref: bool,
    empty: bool,
}

fn side_flow(prev: &BookState, curr: &BookState, side: Side, gamma_c: u32) -> SideFlow {
    let range = DepthRange::new(0, i64::from(gamma_c));
    let empty = curr.is_empty(side);
    let v = match (prev.best(side), curr.best(side)) {
        (Some(a), Some(b)) => Some((b - a) as f64),
        _ => None,
    };
    match prev.best(side) {
        Some(r) => {
            let d = layer_delta_at(prev, curr, side, r, range);
            let (f, c, a) = d.sum_over(0, range.max);
            let inner = layer_profile(curr, side, r, range).n_gamma.iter().sum();
            SideFlow { f, c, a, inner, v, no_ref: false, empty }
        }
        None => {
            // Without a previous best the occupancy is counted from the
            // current best; the flow itself stays undefined.
            let inner = curr.best(side).map_or(0, |b| layer_profile(curr, side, b, range).n_gamma.iter().sum());
            SideFlow { f: 0, c: 0, a: 0, inner, v, no_ref: true, empty }
        }
    }
}

/// Flow and occupancy of the inner layer (`0 <= gamma <= gamma_c`, depth
/// against `prev`'s best) between two consecutive snapshots.
pub fn inner_flow(prev: &BookState, curr: &BookState, params: &KineticParams) -> InnerLayerSample {
    let m = side_flow(prev, curr, Side::Minus, params.gamma_c_minus);
    let p = side_flow(prev, curr, Side::Plus, params.gamma_c_plus);
    let v = match (prev.best_and_mid(), curr.best_and_mid()) {
        (Ok(a), Ok(b)) => Some((b.mid_half_ticks - a.mid_half_ticks) as f64 / 2.0),
        _ => None,
    };
    InnerLayerSample {
        tick: curr.tick_index(),
        f_minus: m.f,
        f_plus: p.f,
        c_minus: m.c,
        c_plus: p.c,
        a_minus: m.a,
        a_plus: p.a,
        i_minus: m.inner,
        i_plus: p.inner,
        mid: curr.mid(),
        v,
        v_minus: m.v,
        v_plus: p.v,
        no_ref_minus: m.no_ref,
        no_ref_plus: p.no_ref,
        empty_minus: m.empty,
        empty_plus: p.empty,
    }
}
