//! Order-level simulator behind the synthetic scenarios. Orders are tracked
//! individually per price level so cancellations remove whole orders; the
//! emitted log is level-aggregated like any other input.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::book::{OrderEvent, Side};

/// Per-side flow intensities. All rates are per event-time tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FlowParams {
    /// New free orders land uniformly on depths `0..=inner_depth`.
    pub inner_depth: i64,
    /// Free orders per tick over the whole zone.
    pub inner_add: f64,
    /// Per-order cancellation probability per tick of free orders.
    pub inner_cancel: f64,
    /// Mean free-order size in volume units.
    pub order_size: f64,
    /// Probability per tick of an order improving a wide spread.
    pub fill: f64,
    /// Pegged reservoir band `res_lo..=res_hi`: its orders keep their depth
    /// when the best price moves, so the band total changes only through
    /// reservoir adds and cancels.
    pub res_lo: i64,
    pub res_hi: i64,
    pub res_initial: u64,
    /// Reservoir adds per tick; cancels per tick are drawn independently of
    /// the band content, which makes the total a random walk.
    pub res_add: f64,
    pub res_cancel: f64,
    /// Extra per-order cancellation probability for reservoir orders.
    pub res_decay: f64,
    pub res_size: f64,
}

impl FlowParams {
    fn reservoir(&self) -> bool {
        self.res_hi >= self.res_lo && (self.res_initial > 0 || self.res_add > 0.0)
    }
}

/// Whole-market settings for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepParams {
    pub flow: [FlowParams; 2],
    /// Probability that the tick's market order hits the minus side.
    pub sell_share: f64,
    /// Probability that a market order takes the whole best level.
    pub sweep: f64,
    /// Expected extra orders per inner depth after each mid-price move.
    pub trend: f64,
    pub planted_gamma: i64,
}

pub(crate) fn idx(side: Side) -> usize {
    match side {
        Side::Minus => 0,
        Side::Plus => 1,
    }
}

#[derive(Debug, Clone, Copy)]
struct Order {
    size: u64,
    pegged: bool,
}

pub(crate) struct Sim {
    rng: ChaCha8Rng,
    levels: [BTreeMap<i64, VecDeque<Order>>; 2],
    pub events: Vec<OrderEvent>,
    ts: i64,
    mean_gap_ms: f64,
    pub tick: u64,
    last_mid: Option<i64>,
    last_move: i64,
    anchor: i64,
    /// Lowest mid-price seen at a tick close, in half ticks.
    pub low_mid2: Option<i64>,
}

impl Sim {
    pub fn new(seed: u64, mid: i64, mean_gap_ms: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            levels: [BTreeMap::new(), BTreeMap::new()],
            events: Vec::new(),
            ts: 0,
            mean_gap_ms,
            tick: 0,
            last_mid: None,
            last_move: 0,
            anchor: mid,
            low_mid2: None,
        }
    }

    pub fn best(&self, side: Side) -> Option<i64> {
        let m = &self.levels[idx(side)];
        match side {
            Side::Minus => m.last_key_value().map(|(p, _)| *p),
            Side::Plus => m.first_key_value().map(|(p, _)| *p),
        }
    }

    /// Mid-price in half ticks.
    pub fn mid2(&self) -> Option<i64> {
        Some(self.best(Side::Minus)? + self.best(Side::Plus)?)
    }

    pub fn level_volume(&self, side: Side, price: i64) -> u64 {
        self.levels[idx(side)].get(&price).map_or(0, |q| q.iter().map(|o| o.size).sum())
    }

    /// Volume resting at depths `0..=depth` from the best price.
    pub fn inner_volume(&self, side: Side, depth: i64) -> u64 {
        let Some(b) = self.best(side) else { return 0 };
        let far = b + side.sign() * depth;
        let (lo, hi) = if far < b { (far, b) } else { (b, far) };
        self.levels[idx(side)].range(lo..=hi).flat_map(|(_, q)| q.iter().map(|o| o.size)).sum()
    }

    fn price_at(&self, side: Side, depth: i64) -> i64 {
        let r = match self.best(side) {
            Some(b) => b,
            // Empty side: depth 0 sits one tick outside the opposite best.
            None => match self.best(side.opposite()) {
                Some(o) => o + side.sign(),
                None => self.anchor,
            },
        };
        r + side.sign() * depth
    }

    fn size(&mut self, mean: f64) -> u64 {
        let s = mean * self.rng.random_range(0.5..1.5);
        (s.round() as u64).max(1)
    }

    fn place(&mut self, side: Side, price: i64, order: Order) {
        if let Some(o) = self.best(side.opposite()) {
            // never cross: generated flow only rests
            if side.sign() * (o - price) >= 0 {
                return;
            }
        }
        self.levels[idx(side)].entry(price).or_default().push_back(order);
        self.events.push(OrderEvent::add(self.ts, side, price, order.size));
    }

    pub fn add(&mut self, side: Side, price: i64, size: u64) {
        self.place(side, price, Order { size, pegged: false });
    }

    fn remove(&mut self, side: Side, price: i64, pos: usize) -> Order {
        let book = &mut self.levels[idx(side)];
        let q = book.get_mut(&price).expect("level exists");
        let o = q.remove(pos).expect("order exists");
        if q.is_empty() {
            book.remove(&price);
        }
        self.events.push(OrderEvent::cancel(self.ts, side, price, o.size));
        o
    }

    /// Cancels one random order of the given class resting at `price`.
    fn cancel_at(&mut self, side: Side, price: i64, pegged: bool) -> bool {
        let Some(q) = self.levels[idx(side)].get(&price) else { return false };
        let hits: Vec<usize> = q.iter().enumerate().filter(|(_, o)| o.pegged == pegged).map(|(i, _)| i).collect();
        if hits.is_empty() {
            return false;
        }
        let pos = hits[self.rng.random_range(0..hits.len())];
        self.remove(side, price, pos);
        true
    }

    /// Cancels every order on `side` except those at `keep`.
    pub fn cancel_all_except(&mut self, side: Side, keep: Option<i64>) {
        let prices: Vec<i64> = self.levels[idx(side)].keys().copied().filter(|p| Some(*p) != keep).collect();
        for p in prices {
            while self.levels[idx(side)].contains_key(&p) {
                self.remove(side, p, 0);
            }
        }
    }

    /// Shifts every level of `side` one tick toward the opposite best while
    /// the spread is wider than one tick, keeping the depth profile.
    pub fn follow(&mut self, side: Side) {
        let (Some(b), Some(o)) = (self.best(side), self.best(side.opposite())) else { return };
        let gap = (side.sign() * (b - o) - 1).min(1);
        if gap <= 0 {
            return;
        }
        let levels = std::mem::take(&mut self.levels[idx(side)]);
        for (&p, q) in &levels {
            let v = q.iter().map(|o| o.size).sum();
            self.events.push(OrderEvent::cancel(self.ts, side, p, v));
        }
        for (p, q) in levels {
            let v = q.iter().map(|o| o.size).sum();
            let to = p - side.sign() * gap;
            self.events.push(OrderEvent::add(self.ts, side, to, v));
            self.levels[idx(side)].insert(to, q);
        }
    }

    /// Market order against the best level of `side`; returns false when
    /// the side is empty.
    pub fn execute(&mut self, side: Side, volume: u64) -> bool {
        let Some(best) = self.best(side) else { return false };
        let book = &mut self.levels[idx(side)];
        let q = book.get_mut(&best).unwrap();
        let avail: u64 = q.iter().map(|o| o.size).sum();
        let mut left = volume.clamp(1, avail);
        let traded = left;
        while left > 0 {
            let front = q.front_mut().unwrap();
            if front.size <= left {
                left -= front.size;
                q.pop_front();
            } else {
                front.size -= left;
                left = 0;
            }
        }
        if q.is_empty() {
            book.remove(&best);
        }
        self.events.push(OrderEvent::execute(self.ts, side, best, traded));
        true
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).map_or(0.0, |p| p.sample(&mut self.rng)) as u64
    }

    /// Seeds both sides around the anchor: free orders at their equilibrium
    /// occupancy and the reservoir at its initial size, one aggregated add
    /// per level.
    pub fn seed_book(&mut self, flow: &[FlowParams; 2], spread: i64) {
        let bests = [self.anchor - spread / 2, self.anchor - spread / 2 + spread];
        for side in Side::BOTH {
            let f = flow[idx(side)];
            let free_per_level = f.inner_add / (f.inner_depth + 1) as f64 / f.inner_cancel;
            let mut per_depth: BTreeMap<i64, Vec<Order>> = BTreeMap::new();
            for d in 0..=f.inner_depth {
                let n = self.poisson(free_per_level);
                let n = if d == 0 { n.max(1) } else { n };
                for _ in 0..n {
                    let size = self.size(f.order_size);
                    per_depth.entry(d).or_default().push(Order { size, pegged: false });
                }
            }
            if f.reservoir() {
                for _ in 0..f.res_initial {
                    let d = self.rng.random_range(f.res_lo..=f.res_hi);
                    let size = self.size(f.res_size);
                    per_depth.entry(d).or_default().push(Order { size, pegged: true });
                }
            }
            for (d, orders) in per_depth {
                let price = bests[idx(side)] + side.sign() * d;
                let total = orders.iter().map(|o| o.size).sum();
                self.levels[idx(side)].insert(price, orders.into());
                self.events.push(OrderEvent::add(self.ts, side, price, total));
            }
        }
        self.last_mid = self.mid2();
    }

    fn pegged_orders(&self, side: Side) -> Vec<i64> {
        self.levels[idx(side)].iter().flat_map(|(&p, q)| q.iter().filter(|o| o.pegged).map(move |_| p)).collect()
    }

    /// Moves reservoir orders that left the band back into it, wrapping
    /// around so the band keeps its shape relative to the best.
    fn repeg(&mut self, side: Side, f: &FlowParams) {
        let Some(r) = self.best(side) else { return };
        let width = f.res_hi - f.res_lo + 1;
        let outside: Vec<i64> = self.levels[idx(side)]
            .iter()
            .filter(|(&p, q)| {
                let d = side.sign() * (p - r);
                (d < f.res_lo || d > f.res_hi) && q.iter().any(|o| o.pegged)
            })
            .map(|(&p, _)| p)
            .collect();
        for p in outside {
            let d = side.sign() * (p - r);
            let target = r + side.sign() * (f.res_lo + (d - f.res_lo).rem_euclid(width));
            while let Some(pos) = self.levels[idx(side)].get(&p).and_then(|q| q.iter().position(|o| o.pegged)) {
                let o = self.remove(side, p, pos);
                self.place(side, target, o);
            }
        }
    }

    fn reservoir_flow(&mut self, side: Side, f: &FlowParams) {
        if !f.reservoir() || self.best(side).is_none() {
            return;
        }
        self.repeg(side, f);
        let pegged = self.pegged_orders(side);
        let n_cancel = (self.poisson(f.res_cancel + f.res_decay * pegged.len() as f64) as usize).min(pegged.len());
        let prices: Vec<i64> = (0..n_cancel).map(|_| pegged[self.rng.random_range(0..pegged.len())]).collect();
        for p in prices {
            self.cancel_at(side, p, true);
        }
        let n_add = self.poisson(f.res_add);
        for _ in 0..n_add {
            let d = self.rng.random_range(f.res_lo..=f.res_hi);
            let p = self.price_at(side, d);
            let size = self.size(f.res_size);
            self.place(side, p, Order { size, pegged: true });
        }
    }

    fn base_flow(&mut self, side: Side, f: &FlowParams) {
        // Cancellations: one draw for the total, then levels by weight.
        let weights: Vec<(i64, f64)> = self.levels[idx(side)]
            .iter()
            .map(|(&p, q)| (p, f.inner_cancel * q.iter().filter(|o| !o.pegged).count() as f64))
            .filter(|w| w.1 > 0.0)
            .collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        let n = self.poisson(total);
        for _ in 0..n {
            let mut u = self.rng.random::<f64>() * total;
            let pick = weights.iter().find(|w| {
                u -= w.1;
                u <= 0.0
            });
            if let Some(&(p, _)) = pick.or(weights.last()) {
                self.cancel_at(side, p, false);
            }
        }
        let n_inner = self.poisson(f.inner_add);
        for _ in 0..n_inner {
            let d = self.rng.random_range(0..=f.inner_depth);
            let p = self.price_at(side, d);
            let v = self.size(f.order_size);
            self.add(side, p, v);
        }
        if let (Some(b), Some(o)) = (self.best(side), self.best(side.opposite())) {
            if (o - b).abs() > 1 && self.rng.random::<f64>() < f.fill {
                let v = self.size(f.order_size);
                self.add(side, b - side.sign(), v);
            }
        }
    }

    /// Requoting after the last mid-price move: the trailing side adds
    /// within the planted depth and cancels in the band just beyond it.
    fn trend_flow(&mut self, p: &StepParams) {
        if p.trend <= 0.0 || self.last_move == 0 {
            return;
        }
        let side = if self.last_move > 0 { Side::Minus } else { Side::Plus };
        let Some(r) = self.best(side) else { return };
        let g = p.planted_gamma;
        let f = p.flow[idx(side)];
        let n_add = self.poisson(p.trend * (g + 1) as f64);
        let n_cancel = self.poisson(p.trend * (g + 1) as f64);
        for _ in 0..n_cancel {
            let d = self.rng.random_range(g + 1..=2 * g + 1);
            self.cancel_at(side, r + side.sign() * d, false);
        }
        for _ in 0..n_add {
            let d = self.rng.random_range(0..=g);
            let v = self.size(f.order_size);
            self.add(side, r + side.sign() * d, v);
        }
    }

    /// Market-order size against a level of `avail` units.
    fn market_size(&mut self, avail: u64, sweep: f64) -> u64 {
        if self.rng.random::<f64>() < sweep {
            avail
        } else {
            ((avail as f64 * self.rng.random::<f64>()).floor() as u64).clamp(1, avail)
        }
    }

    fn clock(&mut self) {
        if self.mean_gap_ms > 0.0 {
            let gap = Exp::new(1.0 / self.mean_gap_ms).map_or(0.0, |e| e.sample(&mut self.rng));
            self.ts += gap.round() as i64;
        }
    }

    /// Closes the tick with one market order and updates the move memory.
    pub fn close_tick(&mut self, side: Side, volume: u64) {
        let side = if self.best(side).is_some() { side } else { side.opposite() };
        if self.execute(side, volume) {
            self.tick += 1;
            let mid = self.mid2();
            self.last_move = match (self.last_mid, mid) {
                (Some(a), Some(b)) => b - a,
                _ => 0,
            };
            if let Some(m) = mid {
                self.last_mid = mid;
                self.low_mid2 = Some(self.low_mid2.map_or(m, |l| l.min(m)));
            }
        }
    }

    /// One full tick: clock, requoting, reservoir and base flow on both
    /// sides in random order, then one market order.
    pub fn step(&mut self, p: &StepParams) {
        self.clock();
        self.trend_flow(p);
        // a fixed order would let one side close the spread first every tick
        let first = if self.rng.random_bool(0.5) { Side::Minus } else { Side::Plus };
        for side in [first, first.opposite()] {
            self.reservoir_flow(side, &p.flow[idx(side)]);
            self.base_flow(side, &p.flow[idx(side)]);
        }
        let side = if self.rng.random::<f64>() < p.sell_share { Side::Minus } else { Side::Plus };
        let side = if self.best(side).is_some() { side } else { side.opposite() };
        let Some(best) = self.best(side) else { return };
        let avail = self.level_volume(side, best);
        let vol = self.market_size(avail, p.sweep);
        self.close_tick(side, vol);
    }
}
