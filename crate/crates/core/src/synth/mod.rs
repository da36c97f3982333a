//! Synthetic order flow with planted ground truth: a zero-intelligence base
//! flow, optional trend-following requotes with a known inner depth, a
//! density sweep, a scripted flash crash and a one-sided halt.

mod oracle;
mod sim;

pub use oracle::{correlated_normal_pairs, generate_known_slope, kinetic_samples, KnownSlope};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{OrderEvent, Side};
use sim::{idx, FlowParams, Sim, StepParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Stationary,
    DensitySweep,
    FlashCrash,
    OneSidedHalt,
}

impl std::str::FromStr for Scenario {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stationary" => Ok(Scenario::Stationary),
            "density_sweep" | "density-sweep" => Ok(Scenario::DensitySweep),
            "flash_crash" | "flash-crash" => Ok(Scenario::FlashCrash),
            "one_sided_halt" | "one-sided-halt" => Ok(Scenario::OneSidedHalt),
            _ => Err(SynthError::ConfigInvalid(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    ConfigInvalid(String),
}

/// Generator settings. Rates are per event-time tick unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Minimum log length; generation stops at the first tick boundary
    /// past it (scripted scenarios may run longer).
    pub n_events: usize,
    /// New orders per tick per level near the best price.
    pub base_depth_rate: f64,
    /// Per-order cancellation probability per tick near the best price.
    pub cancel_rate: f64,
    /// Market orders per second per side; only drives timestamps, since
    /// every tick closes with exactly one market order.
    pub market_order_rate: f64,
    /// Extra requotes per inner depth after each mid-price move.
    pub trend_follow_strength: f64,
    pub planted_gamma_c: u32,
    /// Target volume per side within depths `0..=planted_gamma_c`.
    pub inner_density_target: f64,
    pub scenario: Scenario,
    /// Probability that a market order takes the whole best level.
    pub sweep_probability: f64,
    /// Probability per tick that an order improves a spread wider than one
    /// tick.
    pub spread_fill_rate: f64,
    /// Free orders arrive on depths `0..=fast_zone_depth`.
    pub fast_zone_depth: u32,
    /// Outer edge of the pegged reservoir band that starts just beyond the
    /// fast zone. Reservoir orders hold their depth as the price moves.
    pub reservoir_depth: u32,
    /// Reservoir orders per side at the start.
    pub reservoir_orders: u64,
    /// Reservoir adds per tick per side.
    pub reservoir_rate: f64,
    /// Reservoir cancels per tick per side, independent of the reservoir
    /// content; equal to `reservoir_rate` the band total is a random walk.
    pub reservoir_cancel_rate: f64,
    /// Reservoir order size relative to the free-order size.
    pub reservoir_order_scale: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_events: 100_000,
            base_depth_rate: 0.01,
            cancel_rate: 0.005,
            market_order_rate: 0.6,
            trend_follow_strength: 0.4,
            planted_gamma_c: 18,
            inner_density_target: 300.0,
            scenario: Scenario::Stationary,
            sweep_probability: 0.3,
            spread_fill_rate: 0.3,
            fast_zone_depth: 44,
            reservoir_depth: 100,
            reservoir_orders: 0,
            reservoir_rate: 0.0,
            reservoir_cancel_rate: 0.0,
            reservoir_order_scale: 1.0,
        }
    }
}

impl SynthConfig {
    /// Stationary book with trend-following requotes planted at `gamma`.
    pub fn planted(seed: u64, gamma: u32) -> Self {
        Self { seed, planted_gamma_c: gamma, fast_zone_depth: 2 * gamma + 8, ..Self::default() }
    }

    /// Stationary book whose pegged reservoir makes the volume out to depth
    /// 100 a random walk while the best level stays stationary.
    pub fn deep_reservoir(seed: u64) -> Self {
        Self {
            seed,
            base_depth_rate: 0.04,
            cancel_rate: 0.02,
            trend_follow_strength: 0.0,
            reservoir_orders: 300,
            reservoir_rate: 0.02,
            reservoir_cancel_rate: 0.02,
            reservoir_order_scale: 120.0,
            inner_density_target: 30.0,
            ..Self::default()
        }
    }

    pub fn scenario(seed: u64, scenario: Scenario) -> Self {
        match scenario {
            Scenario::Stationary => Self::deep_reservoir(seed),
            // large enough that the smallest regime's orders are not all
            // rounded to one unit; about 10^4 ticks per regime
            Scenario::DensitySweep => {
                Self { seed, scenario, n_events: 500_000, inner_density_target: 1200.0, ..Self::default() }
            }
            // many short-lived orders keep the untouched side's occupancy
            // within a few percent while the other side depletes
            Scenario::FlashCrash => Self {
                seed,
                scenario,
                base_depth_rate: 0.3,
                cancel_rate: 0.15,
                trend_follow_strength: 0.0,
                ..Self::default()
            },
            _ => Self { seed, scenario, ..Self::default() },
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let rates = [
            self.base_depth_rate,
            self.cancel_rate,
            self.market_order_rate,
            self.trend_follow_strength,
            self.inner_density_target,
            self.sweep_probability,
            self.spread_fill_rate,
            self.reservoir_rate,
            self.reservoir_cancel_rate,
            self.reservoir_order_scale,
        ];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(SynthError::ConfigInvalid("rates must be finite and non-negative".into()));
        }
        if self.planted_gamma_c < 1 {
            return Err(SynthError::ConfigInvalid("planted_gamma_c must be at least 1".into()));
        }
        if self.n_events < 1000 {
            return Err(SynthError::ConfigInvalid("n_events must be at least 1000".into()));
        }
        if self.cancel_rate <= 0.0 || self.cancel_rate > 1.0 {
            return Err(SynthError::ConfigInvalid("cancel_rate must lie in (0, 1]".into()));
        }
        if self.base_depth_rate <= 0.0 || self.inner_density_target <= 0.0 {
            return Err(SynthError::ConfigInvalid("base flow and density must be positive".into()));
        }
        if self.sweep_probability > 1.0 || self.spread_fill_rate > 1.0 {
            return Err(SynthError::ConfigInvalid("probabilities must not exceed 1".into()));
        }
        if self.fast_zone_depth < self.planted_gamma_c {
            return Err(SynthError::ConfigInvalid("need planted_gamma_c <= fast_zone_depth".into()));
        }
        let reservoir = self.reservoir_orders > 0 || self.reservoir_rate > 0.0;
        if reservoir && self.reservoir_depth <= self.fast_zone_depth {
            return Err(SynthError::ConfigInvalid("reservoir must lie beyond the fast zone".into()));
        }
        Ok(())
    }

    /// Flow whose orders have mean size `order_size`.
    fn flow_sized(&self, order_size: f64) -> FlowParams {
        let inner_depth = i64::from(self.fast_zone_depth);
        FlowParams {
            inner_depth,
            inner_add: self.base_depth_rate * (inner_depth + 1) as f64,
            inner_cancel: self.cancel_rate,
            order_size,
            fill: self.spread_fill_rate,
            res_lo: inner_depth + 1,
            res_hi: i64::from(self.reservoir_depth),
            res_initial: self.reservoir_orders,
            res_add: self.reservoir_rate,
            res_cancel: self.reservoir_cancel_rate,
            res_decay: 0.0,
            res_size: order_size * self.reservoir_order_scale,
        }
    }

    fn step_params_sized(&self, order_size: f64) -> StepParams {
        let f = self.flow_sized(order_size);
        StepParams {
            flow: [f, f],
            sell_share: 0.5,
            sweep: self.sweep_probability,
            trend: self.trend_follow_strength,
            planted_gamma: i64::from(self.planted_gamma_c),
        }
    }

    /// Mean volume per side within depths `0..=planted_gamma_c` under
    /// orders of mean size `order_size`, measured on a separate pilot run.
    fn inner_volume(&self, order_size: f64) -> f64 {
        let p = self.step_params_sized(order_size);
        let mut sim = Sim::new(self.seed ^ PILOT_SEED_SALT, START_PRICE, 0.0);
        sim.seed_book(&p.flow, 1);
        let depth = i64::from(self.planted_gamma_c);
        let mut total = 0u64;
        for _ in 0..PILOT_TICKS {
            sim.step(&p);
            if sim.tick > PILOT_BURN_IN {
                total += Side::BOTH.iter().map(|&s| sim.inner_volume(s, depth)).sum::<u64>();
            }
        }
        (total as f64 / (2 * (PILOT_TICKS - PILOT_BURN_IN)) as f64).max(1.0)
    }

    /// Per-tick parameters for each density in `densities`. Volume is
    /// nearly proportional to order size; integer sizes and partial fills
    /// bend it for small orders, so each first guess gets one correction
    /// pilot at its own size.
    fn step_params<const N: usize>(&self, densities: [f64; N]) -> [StepParams; N] {
        let per_unit = self.inner_volume(PILOT_ORDER_SIZE) / PILOT_ORDER_SIZE;
        densities.map(|d| {
            let guess = d / per_unit;
            self.step_params_sized(guess * d / self.inner_volume(guess))
        })
    }

    fn sim(&self) -> Sim {
        let gap = if self.market_order_rate > 0.0 { 500.0 / self.market_order_rate } else { 0.0 };
        Sim::new(self.seed, 100_000, gap)
    }
}

/// Initial mid-price of every scenario, in ticks.
pub const START_PRICE: i64 = 100_000;

const PILOT_TICKS: u64 = 5000;
const PILOT_BURN_IN: u64 = 1000;
const PILOT_ORDER_SIZE: f64 = 4.0;
const PILOT_SEED_SALT: u64 = 0x5eed_9110_7000_0001;

/// Deterministic event log for the configured scenario.
pub fn generate(config: &SynthConfig) -> Result<Vec<OrderEvent>, SynthError> {
    config.validate()?;
    Ok(match config.scenario {
        Scenario::Stationary => {
            let [p] = config.step_params([config.inner_density_target]);
            let mut sim = config.sim();
            sim.seed_book(&p.flow, 1);
            while sim.events.len() < config.n_events {
                sim.step(&p);
            }
            sim.events
        }
        Scenario::DensitySweep => generate_density_sweep(config)?.events,
        Scenario::FlashCrash => generate_flash_crash(config)?.events,
        Scenario::OneSidedHalt => generate_one_sided_halt(config)?.events,
    })
}

/// Density multipliers of the sweep regimes, applied to
/// `inner_density_target`.
pub const DENSITY_REGIMES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRegime {
    /// First and last transaction tick of the regime.
    pub start_tick: u64,
    pub end_tick: u64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySweep {
    pub events: Vec<OrderEvent>,
    pub regimes: Vec<DensityRegime>,
}

/// Consecutive regimes of equal event budget whose order sizes scale with
/// the target density; event counts per tick stay the same.
pub fn generate_density_sweep(config: &SynthConfig) -> Result<DensitySweep, SynthError> {
    config.validate()?;
    let params = config.step_params(DENSITY_REGIMES.map(|m| config.inner_density_target * m));
    let mut sim = config.sim();
    sim.seed_book(&params[0].flow, 1);
    let budget = config.n_events / DENSITY_REGIMES.len();
    let mut regimes = Vec::new();
    for (i, m) in DENSITY_REGIMES.iter().enumerate() {
        let target = config.inner_density_target * m;
        let p = params[i];
        let start_tick = sim.tick + 1;
        let until = budget * (i + 1);
        while sim.events.len() < until {
            sim.step(&p);
        }
        regimes.push(DensityRegime { start_tick, end_tick: sim.tick, target });
    }
    Ok(DensitySweep { events: sim.events, regimes })
}

/// Tick indices delimiting the scripted phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrashScript {
    pub depletion_start: u64,
    /// Tick whose snapshot has an empty minus side.
    pub exhaustion_tick: u64,
    pub rebound_start: u64,
    pub rebound_end: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlashCrash {
    pub events: Vec<OrderEvent>,
    pub script: CrashScript,
}

pub const CRASH_NORMAL_TICKS: u64 = 4000;
pub const CRASH_DEPLETION_TICKS: u64 = 600;
pub const CRASH_HALT_TICKS: u64 = 3;
pub const CRASH_REBOUND_TICKS: u64 = 600;
/// Distance below the lowest earlier mid-price at which quotes return
/// after the exhaustion.
pub const CRASH_TROUGH_GAP: i64 = 25;

/// Cancellation rate multiplier reached at the end of a depletion phase,
/// less one.
const DEPLETION_CANCEL_BOOST: f64 = 3.0;

/// Extra share of market orders hitting the depleting side at the end of
/// the phase.
const DEPLETION_LEAN: f64 = 0.3;

/// Depleting flow on `side` at progress `u` in `[0, 1]`: new orders fade
/// out, cancellations speed up and market orders lean onto the side. The
/// other side is pegged behind the move by [`Sim::follow`].
fn depleting(base: &StepParams, side: Side, u: f64) -> StepParams {
    let mut p = *base;
    let f = &mut p.flow[idx(side)];
    f.inner_add *= 1.0 - u;
    f.res_add = 0.0;
    f.inner_cancel *= 1.0 + DEPLETION_CANCEL_BOOST * u;
    f.res_decay = 0.01 * u;
    f.fill *= 1.0 - u;
    let lean = 0.5 + DEPLETION_LEAN * u;
    p.sell_share = if side == Side::Minus { lean } else { 1.0 - lean };
    p
}

fn empty_side(sim: &mut Sim, side: Side) {
    let best = sim.best(side);
    sim.cancel_all_except(side, best);
    if let Some(b) = best {
        let v = sim.level_volume(side, b);
        sim.close_tick(side, v);
    }
}

/// Normal flow, a minus-side depletion ending in an empty minus side, a
/// short halt, bids returning well below the last price, a plus-side
/// depletion driving the rebound, then normal flow again.
pub fn generate_flash_crash(config: &SynthConfig) -> Result<FlashCrash, SynthError> {
    config.validate()?;
    let [base] = config.step_params([config.inner_density_target]);
    let mut sim = config.sim();
    sim.seed_book(&base.flow, 1);
    while sim.tick < CRASH_NORMAL_TICKS {
        sim.step(&base);
    }
    let depletion_start = sim.tick + 1;
    while sim.tick < CRASH_NORMAL_TICKS + CRASH_DEPLETION_TICKS - 1 {
        let u = (sim.tick + 1 - depletion_start) as f64 / CRASH_DEPLETION_TICKS as f64;
        sim.follow(Side::Plus);
        sim.step(&depleting(&base, Side::Minus, u));
    }
    empty_side(&mut sim, Side::Minus);
    let exhaustion_tick = sim.tick;

    let mut halt = base;
    halt.flow[0].inner_add = 0.0;
    halt.flow[0].res_add = 0.0;
    halt.flow[0].fill = 0.0;
    halt.sell_share = 0.0;
    halt.trend = 0.0;
    while sim.tick < exhaustion_tick + CRASH_HALT_TICKS {
        sim.step(&halt);
    }
    // Both sides come back at a price well below anything traded so far.
    let low = sim.low_mid2.map_or(START_PRICE, |m| m.div_euclid(2)) - CRASH_TROUGH_GAP;
    let v = base.flow[0].order_size.ceil() as u64;
    sim.add(Side::Minus, low, v);
    for d in 1..=3 {
        sim.add(Side::Plus, low + d, v);
    }
    let rebound_start = sim.tick + 1;
    while sim.tick < rebound_start - 1 + CRASH_REBOUND_TICKS {
        let u = (sim.tick + 1 - rebound_start) as f64 / CRASH_REBOUND_TICKS as f64;
        sim.follow(Side::Minus);
        sim.step(&depleting(&base, Side::Plus, u));
    }
    let rebound_end = sim.tick;
    while sim.events.len() < config.n_events || sim.tick < rebound_end + 1000 {
        sim.step(&base);
    }
    Ok(FlashCrash { events: sim.events, script: CrashScript { depletion_start, exhaustion_tick, rebound_start, rebound_end } })
}

/// Ticks with an empty minus side in the halt scenario.
pub const HALT_TICKS: u64 = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct OneSidedHalt {
    pub events: Vec<OrderEvent>,
    /// First and last tick with an empty minus side.
    pub halt: (u64, u64),
}

/// Normal flow interrupted by a period without any bids.
pub fn generate_one_sided_halt(config: &SynthConfig) -> Result<OneSidedHalt, SynthError> {
    config.validate()?;
    let [base] = config.step_params([config.inner_density_target]);
    let mut sim = config.sim();
    sim.seed_book(&base.flow, 1);
    while sim.tick < CRASH_NORMAL_TICKS {
        sim.step(&base);
    }
    empty_side(&mut sim, Side::Minus);
    let start = sim.tick;
    let mut halt = base;
    halt.flow[0].inner_add = 0.0;
    halt.flow[0].res_add = 0.0;
    halt.flow[0].fill = 0.0;
    halt.sell_share = 0.0;
    while sim.tick < start + HALT_TICKS - 1 {
        sim.step(&halt);
    }
    let end = sim.tick;
    while sim.events.len() < config.n_events || sim.tick < end + 1000 {
        sim.step(&base);
    }
    Ok(OneSidedHalt { events: sim.events, halt: (start, end) })
}
