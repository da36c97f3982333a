//! Level-aggregated limit order book and transaction-clocked replay.
//!
//! Prices are integer ticks (multiples of the market's minimum price unit)
//! and volumes are integer units (multiples of the minimum order size). The
//! book keeps one aggregated volume per price level and never stores empty
//! levels, so gaps between quoted prices are represented directly.
//!
//! Event time advances by one on every transaction. [`Replay`] turns an
//! ordered event log into one [`Snapshot`] per transaction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side of the book. `Minus` holds bids (buy orders), `Plus` holds asks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Minus, Side::Plus];

    /// +1 for the ask side, -1 for the bid side.
    pub fn sign(self) -> i64 {
        match self {
            Side::Minus => -1,
            Side::Plus => 1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Add,
    Cancel,
    Execute,
}

/// One submission, cancellation or execution at a price level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderEvent {
    pub timestamp_ms: i64,
    pub side: Side,
    pub price: i64,
    pub action: Action,
    pub volume: u64,
}

impl OrderEvent {
    pub fn add(timestamp_ms: i64, side: Side, price: i64, volume: u64) -> Self {
        Self { timestamp_ms, side, price, action: Action::Add, volume }
    }

    pub fn cancel(timestamp_ms: i64, side: Side, price: i64, volume: u64) -> Self {
        Self { timestamp_ms, side, price, action: Action::Cancel, volume }
    }

    pub fn execute(timestamp_ms: i64, side: Side, price: i64, volume: u64) -> Self {
        Self { timestamp_ms, side, price, action: Action::Execute, volume }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketSpecError {
    #[error("minimum price increment must be positive, got {0}")]
    DeltaX(f64),
    #[error("minimum order size must be positive, got {0}")]
    DeltaN(f64),
}

/// Instrument metadata. The unit sizes only matter when converting ticks and
/// volume units back to calendar price and notional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub symbol: String,
    pub delta_x: f64,
    pub delta_n: f64,
}

impl MarketSpec {
    pub fn new(symbol: impl Into<String>, delta_x: f64, delta_n: f64) -> Result<Self, MarketSpecError> {
        if !(delta_x > 0.0 && delta_x.is_finite()) {
            return Err(MarketSpecError::DeltaX(delta_x));
        }
        if !(delta_n > 0.0 && delta_n.is_finite()) {
            return Err(MarketSpecError::DeltaN(delta_n));
        }
        Ok(Self { symbol: symbol.into(), delta_x, delta_n })
    }

    pub fn price(&self, ticks: f64) -> f64 {
        ticks * self.delta_x
    }
}

impl Default for MarketSpec {
    fn default() -> Self {
        Self { symbol: "SYNTH".to_string(), delta_x: 1.0, delta_n: 1.0 }
    }
}

/// Reasons an event cannot be applied. The book is left untouched.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EventError {
    #[error("volume must be at least one unit")]
    ZeroVolume,
    #[error("cancel at empty {side} level {price}")]
    CancelOnEmptyLevel { side: Side, price: i64 },
    #[error("{side} level {price} holds {available}, cannot remove {requested}")]
    NegativeVolume { side: Side, price: i64, requested: u64, available: u64 },
    #[error("execute of {requested} on {side} exceeds best-level volume {available}")]
    ExecuteBeyondDepth { side: Side, requested: u64, available: u64 },
    #[error("execute on {side} at {price} but best price is {best:?}")]
    ExecuteOffBest { side: Side, price: i64, best: Option<i64> },
    #[error("timestamp {timestamp_ms} precedes previous event at {previous_ms}")]
    TimestampRegression { timestamp_ms: i64, previous_ms: i64 },
}

/// Raised when a mid-price is requested from a one-sided book.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("{0} side of the book is empty")]
pub struct EmptySide(pub Side);

/// Best prices and the mid-price in half-tick units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BestPrices {
    pub minus: i64,
    pub plus: i64,
    pub mid_half_ticks: i64,
}

impl BestPrices {
    /// Mid-price in ticks; always a multiple of one half.
    pub fn mid(&self) -> f64 {
        self.mid_half_ticks as f64 / 2.0
    }

    pub fn spread(&self) -> i64 {
        self.plus - self.minus
    }
}

/// What an applied event did to the event clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    /// Book changed without a trade.
    Quiet,
    /// A transaction occurred; `volume` units traded against `side`.
    Transaction { side: Side, price: i64, volume: u64 },
}

/// Outstanding volume per price level on both sides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BookState {
    minus: BTreeMap<i64, u64>,
    plus: BTreeMap<i64, u64>,
    tick_index: u64,
    last_transaction_ts: Option<i64>,
    last_event_ts: Option<i64>,
}

impl BookState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a book directly from level maps; zero volumes are dropped.
    pub fn from_levels(
        minus: impl IntoIterator<Item = (i64, u64)>,
        plus: impl IntoIterator<Item = (i64, u64)>,
    ) -> Self {
        let mut state = Self::new();
        for (price, volume) in minus {
            if volume > 0 {
                *state.minus.entry(price).or_insert(0) += volume;
            }
        }
        for (price, volume) in plus {
            if volume > 0 {
                *state.plus.entry(price).or_insert(0) += volume;
            }
        }
        state
    }

    pub fn levels(&self, side: Side) -> &BTreeMap<i64, u64> {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    fn levels_mut(&mut self, side: Side) -> &mut BTreeMap<i64, u64> {
        match side {
            Side::Minus => &mut self.minus,
            Side::Plus => &mut self.plus,
        }
    }

    pub fn volume_at(&self, side: Side, price: i64) -> u64 {
        self.levels(side).get(&price).copied().unwrap_or(0)
    }

    pub fn total_volume(&self, side: Side) -> u64 {
        self.levels(side).values().sum()
    }

    pub fn is_empty(&self, side: Side) -> bool {
        self.levels(side).is_empty()
    }

    /// Highest bid or lowest ask.
    pub fn best(&self, side: Side) -> Option<i64> {
        match side {
            Side::Minus => self.minus.keys().next_back().copied(),
            Side::Plus => self.plus.keys().next().copied(),
        }
    }

    pub fn best_and_mid(&self) -> Result<BestPrices, EmptySide> {
        let minus = self.best(Side::Minus).ok_or(EmptySide(Side::Minus))?;
        let plus = self.best(Side::Plus).ok_or(EmptySide(Side::Plus))?;
        Ok(BestPrices { minus, plus, mid_half_ticks: minus + plus })
    }

    /// Mid-price in ticks, if both sides are quoted.
    pub fn mid(&self) -> Option<f64> {
        self.best_and_mid().ok().map(|b| b.mid())
    }

    /// Number of transactions applied so far (the event-time index).
    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }

    pub fn last_transaction_ts(&self) -> Option<i64> {
        self.last_transaction_ts
    }

    /// Applies one event. On error the book is unchanged.
    ///
    /// An add that reaches the opposite best is matched against opposite
    /// levels in price priority; any remainder rests at the limit price. If
    /// anything traded, the add counts as one transaction.
    pub fn apply(&mut self, ev: &OrderEvent) -> Result<Applied, EventError> {
        if ev.volume == 0 {
            return Err(EventError::ZeroVolume);
        }
        if let Some(prev) = self.last_event_ts {
            if ev.timestamp_ms < prev {
                return Err(EventError::TimestampRegression { timestamp_ms: ev.timestamp_ms, previous_ms: prev });
            }
        }
        let applied = match ev.action {
            Action::Add => self.apply_add(ev),
            Action::Cancel => self.apply_cancel(ev)?,
            Action::Execute => self.apply_execute(ev)?,
        };
        self.last_event_ts = Some(ev.timestamp_ms);
        if let Applied::Transaction { .. } = applied {
            self.tick_index += 1;
            self.last_transaction_ts = Some(ev.timestamp_ms);
        }
        Ok(applied)
    }

    fn crosses(side: Side, limit: i64, opposite_best: i64) -> bool {
        match side {
            Side::Minus => limit >= opposite_best,
            Side::Plus => limit <= opposite_best,
        }
    }

    fn apply_add(&mut self, ev: &OrderEvent) -> Applied {
        let opposite = ev.side.opposite();
        let mut remaining = ev.volume;
        let mut traded = 0;
        let mut first_price = None;
        while remaining > 0 {
            let Some(best) = self.best(opposite) else { break };
            if !Self::crosses(ev.side, ev.price, best) {
                break;
            }
            first_price.get_or_insert(best);
            let levels = self.levels_mut(opposite);
            let level = levels.get_mut(&best).expect("best level exists");
            let take = remaining.min(*level);
            *level -= take;
            if *level == 0 {
                levels.remove(&best);
            }
            remaining -= take;
            traded += take;
        }
        if remaining > 0 {
            *self.levels_mut(ev.side).entry(ev.price).or_insert(0) += remaining;
        }
        match first_price {
            Some(price) => Applied::Transaction { side: opposite, price, volume: traded },
            None => Applied::Quiet,
        }
    }

    fn apply_cancel(&mut self, ev: &OrderEvent) -> Result<Applied, EventError> {
        let levels = self.levels_mut(ev.side);
        let Some(level) = levels.get_mut(&ev.price) else {
            return Err(EventError::CancelOnEmptyLevel { side: ev.side, price: ev.price });
        };
        if *level < ev.volume {
            return Err(EventError::NegativeVolume {
                side: ev.side,
                price: ev.price,
                requested: ev.volume,
                available: *level,
            });
        }
        *level -= ev.volume;
        if *level == 0 {
            levels.remove(&ev.price);
        }
        Ok(Applied::Quiet)
    }

    fn apply_execute(&mut self, ev: &OrderEvent) -> Result<Applied, EventError> {
        let best = self.best(ev.side);
        let Some(best_price) = best else {
            return Err(EventError::ExecuteBeyondDepth { side: ev.side, requested: ev.volume, available: 0 });
        };
        if best_price != ev.price {
            return Err(EventError::ExecuteOffBest { side: ev.side, price: ev.price, best });
        }
        let levels = self.levels_mut(ev.side);
        let level = levels.get_mut(&best_price).expect("best level exists");
        if *level < ev.volume {
            return Err(EventError::ExecuteBeyondDepth { side: ev.side, requested: ev.volume, available: *level });
        }
        *level -= ev.volume;
        if *level == 0 {
            levels.remove(&best_price);
        }
        Ok(Applied::Transaction { side: ev.side, price: best_price, volume: ev.volume })
    }
}

/// Functional form of [`BookState::apply`].
pub fn apply_event(state: &BookState, ev: &OrderEvent) -> Result<BookState, EventError> {
    let mut next = state.clone();
    next.apply(ev)?;
    Ok(next)
}

/// Identifies the transaction that closed a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransactionMarker {
    pub tick: u64,
    pub timestamp_ms: i64,
    /// Zero-based position of the closing event in the log.
    pub log_offset: usize,
    pub side: Side,
    pub price: i64,
    pub volume: u64,
}

/// Book state immediately after a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub book: BookState,
    pub marker: TransactionMarker,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("event at log offset {offset}: {source}")]
pub struct ReplayError {
    pub offset: usize,
    #[source]
    pub source: EventError,
}

/// Pull-based replay: yields one snapshot per transaction and stops at the
/// first invalid event.
pub struct Replay<I> {
    events: I,
    book: BookState,
    offset: usize,
    first_tx_ts: Option<i64>,
    last_tx_ts: Option<i64>,
    transactions: u64,
    failed: bool,
}

impl<I: Iterator<Item = OrderEvent>> Replay<I> {
    pub fn new(events: impl IntoIterator<IntoIter = I, Item = OrderEvent>) -> Self {
        Self::from_state(BookState::new(), events)
    }

    /// Continues from an existing book.
    pub fn from_state(book: BookState, events: impl IntoIterator<IntoIter = I, Item = OrderEvent>) -> Self {
        Self {
            events: events.into_iter(),
            book,
            offset: 0,
            first_tx_ts: None,
            last_tx_ts: None,
            transactions: 0,
            failed: false,
        }
    }

    /// Current book (after the last consumed event).
    pub fn book(&self) -> &BookState {
        &self.book
    }

    pub fn transactions(&self) -> u64 {
        self.transactions
    }

    /// Average calendar milliseconds between consecutive transactions seen
    /// so far. Reporting only; all analytics run on the transaction clock.
    pub fn mean_tick_ms(&self) -> Option<f64> {
        match (self.first_tx_ts, self.last_tx_ts) {
            (Some(first), Some(last)) if self.transactions > 1 => {
                Some((last - first) as f64 / (self.transactions - 1) as f64)
            }
            _ => None,
        }
    }
}

impl<I: Iterator<Item = OrderEvent>> Iterator for Replay<I> {
    type Item = Result<Snapshot, ReplayError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        for ev in self.events.by_ref() {
            let offset = self.offset;
            self.offset += 1;
            match self.book.apply(&ev) {
                Ok(Applied::Quiet) => {}
                Ok(Applied::Transaction { side, price, volume }) => {
                    self.transactions += 1;
                    self.first_tx_ts.get_or_insert(ev.timestamp_ms);
                    self.last_tx_ts = Some(ev.timestamp_ms);
                    let marker = TransactionMarker {
                        tick: self.book.tick_index(),
                        timestamp_ms: ev.timestamp_ms,
                        log_offset: offset,
                        side,
                        price,
                        volume,
                    };
                    return Some(Ok(Snapshot { book: self.book.clone(), marker }));
                }
                Err(source) => {
                    self.failed = true;
                    return Some(Err(ReplayError { offset, source }));
                }
            }
        }
        None
    }
}

/// Replays a whole log into memory.
pub fn replay(log: &[OrderEvent]) -> Result<Vec<Snapshot>, ReplayError> {
    Replay::new(log.iter().copied()).collect()
}
