//! Independent brute-force recomputations used as test oracles, plus the
//! shared scenario checks in [`scenarios`]. The oracles reuse no matching,
//! layer or correlation code; books are only read through their level maps.

#![allow(dead_code)]

pub mod scenarios;

use knudsen_core::{Action, BookState, OrderEvent, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive book: one `(price, volume)` list per side, scanned linearly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NaiveBook {
    pub minus: Vec<(i64, u64)>,
    pub plus: Vec<(i64, u64)>,
}

impl NaiveBook {
    pub fn side(&self, side: Side) -> &Vec<(i64, u64)> {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut Vec<(i64, u64)> {
        match side {
            Side::Minus => &mut self.minus,
            Side::Plus => &mut self.plus,
        }
    }

    pub fn volume(&self, side: Side, price: i64) -> u64 {
        self.side(side).iter().filter(|(p, _)| *p == price).map(|(_, v)| *v).sum()
    }

    pub fn best(&self, side: Side) -> Option<i64> {
        let prices = self.side(side).iter().map(|(p, _)| *p);
        match side {
            Side::Minus => prices.max(),
            Side::Plus => prices.min(),
        }
    }

    /// Half-ticks, so the mid is an exact integer.
    pub fn mid2(&self) -> Option<i64> {
        Some(self.best(Side::Minus)? + self.best(Side::Plus)?)
    }

    fn change(&mut self, side: Side, price: i64, delta: i64) {
        let levels = self.side_mut(side);
        match levels.iter().position(|(p, _)| *p == price) {
            Some(i) => {
                let v = levels[i].1 as i64 + delta;
                assert!(v >= 0);
                if v == 0 {
                    levels.remove(i);
                } else {
                    levels[i].1 = v as u64;
                }
            }
            None => {
                assert!(delta > 0);
                levels.push((price, delta as u64));
            }
        }
    }

    /// Applies a valid event; returns whether it traded.
    pub fn apply(&mut self, ev: &OrderEvent) -> bool {
        match ev.action {
            Action::Cancel => {
                self.change(ev.side, ev.price, -(ev.volume as i64));
                false
            }
            Action::Execute => {
                assert_eq!(self.best(ev.side), Some(ev.price));
                self.change(ev.side, ev.price, -(ev.volume as i64));
                true
            }
            Action::Add => {
                let opp = ev.side.opposite();
                let mut left = ev.volume;
                let mut traded = false;
                while left > 0 {
                    let Some(b) = self.best(opp) else { break };
                    let crosses = match ev.side {
                        Side::Minus => ev.price >= b,
                        Side::Plus => ev.price <= b,
                    };
                    if !crosses {
                        break;
                    }
                    let take = left.min(self.volume(opp, b));
                    self.change(opp, b, -(take as i64));
                    left -= take;
                    traded = true;
                }
                if left > 0 {
                    self.change(ev.side, ev.price, left as i64);
                }
                traded
            }
        }
    }

    pub fn sorted(&self, side: Side) -> Vec<(i64, u64)> {
        let mut v = self.side(side).clone();
        v.sort();
        v
    }
}

/// Random valid log with crossing adds, inside-spread placements, partial
/// cancels and executes, generated against a [`NaiveBook`].
pub fn random_log(seed: u64, n: usize) -> Vec<OrderEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut book = NaiveBook::default();
    let mut ts = 0i64;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        ts += rng.random_range(0..=3);
        let side = if rng.random_bool(0.5) { Side::Minus } else { Side::Plus };
        let roll: f64 = rng.random();
        let levels = book.side(side).clone();
        let ev = if roll < 0.25 && !levels.is_empty() {
            let (p, v) = levels[rng.random_range(0..levels.len())];
            OrderEvent::cancel(ts, side, p, rng.random_range(1..=v))
        } else if roll < 0.45 && !levels.is_empty() {
            let b = book.best(side).unwrap();
            OrderEvent::execute(ts, side, b, rng.random_range(1..=book.volume(side, b)))
        } else {
            let (lo, hi) = book.mid2().map_or((199, 201), |m| (m.div_euclid(2), (m + 1).div_euclid(2)));
            // negative offsets land inside the spread or cross it
            let offset = rng.random_range(-2..=12);
            let price = match side {
                Side::Minus => lo - offset,
                Side::Plus => hi + offset,
            };
            OrderEvent::add(ts, side, price, rng.random_range(1..=5))
        };
        book.apply(&ev);
        out.push(ev);
    }
    out
}

/// Book after every transaction, by full recomputation from the log start.
pub fn naive_snapshots(log: &[OrderEvent]) -> Vec<NaiveBook> {
    let mut book = NaiveBook::default();
    let mut out = Vec::new();
    for ev in log {
        if book.apply(ev) {
            out.push(book.clone());
        }
    }
    out
}

pub fn depth(q: i64, side: Side, reference: i64) -> i64 {
    match side {
        Side::Minus => reference - q,
        Side::Plus => q - reference,
    }
}

/// Volume at exactly depth `g`.
pub fn n_at(book: &NaiveBook, side: Side, reference: i64, g: i64) -> i64 {
    book.side(side).iter().filter(|(p, _)| depth(*p, side, reference) == g).map(|(_, v)| *v as i64).sum()
}

/// Volume at depths `0..=g`, counted level by level.
pub fn v_upto(book: &NaiveBook, side: Side, reference: i64, g: i64) -> i64 {
    book.side(side)
        .iter()
        .filter(|(p, _)| (0..=g).contains(&depth(*p, side, reference)))
        .map(|(_, v)| *v as i64)
        .sum()
}

/// Two-pass Pearson correlation; `None` for a constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Per-depth and cumulative correlation curves from scratch: per snapshot
/// pair, `v` is the mid change and `dN(g)` the change in depth-`g` volume
/// against the earlier best. A pair without `v` or without an earlier best
/// breaks the current block.
pub fn naive_curves(snaps: &[NaiveBook], side: Side, k: usize, gamma_max: i64) -> (Vec<Option<f64>>, Vec<Option<f64>>, usize) {
    let depths = (gamma_max + 1) as usize;
    let mut blocks_v = Vec::new();
    let mut blocks_dn: Vec<Vec<f64>> = Vec::new();
    let mut run: Vec<(f64, Vec<i64>)> = Vec::new();
    for w in snaps.windows(2) {
        let (p, c) = (&w[0], &w[1]);
        let ok = match (p.mid2(), c.mid2(), p.best(side)) {
            (Some(a), Some(b), Some(r)) => Some(((b - a) as f64 / 2.0, r)),
            _ => None,
        };
        let Some((v, r)) = ok else {
            run.clear();
            continue;
        };
        let dn = (0..=gamma_max).map(|g| n_at(c, side, r, g) - n_at(p, side, r, g)).collect();
        run.push((v, dn));
        if run.len() == k {
            blocks_v.push(run.iter().map(|x| x.0).sum::<f64>() / k as f64);
            blocks_dn.push((0..depths).map(|g| run.iter().map(|x| x.1[g] as f64).sum::<f64>() / k as f64).collect());
            run.clear();
        }
    }
    let mut per = Vec::new();
    let mut cum = Vec::new();
    for g in 0..depths {
        let col: Vec<f64> = blocks_dn.iter().map(|b| b[g]).collect();
        let cumcol: Vec<f64> = blocks_dn.iter().map(|b| b[..=g].iter().sum()).collect();
        per.push(pearson(&blocks_v, &col));
        cum.push(pearson(&blocks_v, &cumcol));
    }
    (per, cum, blocks_v.len())
}

/// Expected per-price volume changes `(side, price, delta)` of one valid
/// event on `book`; a crossing add consumes opposite levels best first.
pub fn event_changes(book: &BookState, ev: &OrderEvent) -> Vec<(Side, i64, i64)> {
    match ev.action {
        Action::Cancel | Action::Execute => vec![(ev.side, ev.price, -(ev.volume as i64))],
        Action::Add => {
            let opp = ev.side.opposite();
            let mut left = ev.volume;
            let mut out = Vec::new();
            let levels: Vec<(i64, u64)> = match opp {
                Side::Plus => book.levels(opp).iter().map(|(p, v)| (*p, *v)).collect(),
                Side::Minus => book.levels(opp).iter().rev().map(|(p, v)| (*p, *v)).collect(),
            };
            for (p, v) in levels {
                let reachable = match ev.side {
                    Side::Minus => ev.price >= p,
                    Side::Plus => ev.price <= p,
                };
                if left == 0 || !reachable {
                    break;
                }
                let take = left.min(v);
                out.push((opp, p, -(take as i64)));
                left -= take;
            }
            if left > 0 {
                out.push((ev.side, ev.price, left as i64));
            }
            out
        }
    }
}
