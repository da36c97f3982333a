//! Limit-order-book reconstruction in transaction time and the kinetic
//! indicators built on it: layer profiles, inner-layer flow, mean free path,
//! Knudsen number, depletion rates and regime detection.

pub mod analysis;
pub mod book;
pub mod io;
pub mod kinetics;
pub mod layers;
pub mod series;
pub mod stats;
pub mod synth;

pub use book::{
    apply_event, replay, Action, Applied, BestPrices, BookState, EmptySide, EventError, MarketSpec, OrderEvent,
    Replay, ReplayError, Side, Snapshot, TransactionMarker,
};
pub use series::{
    coarse_grain, power_spectrum, power_spectrum_with, rolling_mean, spectral_exponent, velocity,
    weak_stationarity_report, CoarseSeries, FitRange, SeriesError, Spectrum, SpectrumConfig, StationarityReport,
    Taper, TickSeries,
};
pub use layers::{
    corr_curve, depth_of, find_gamma_c, layer_delta, layer_delta_at, layer_profile, CorrAccumulator, CorrCurve,
    CorrError, CorrMode, DepthProfile, DepthRange, GammaC, GammaCError, LayerDelta,
};
pub use kinetics::{
    IndicatorPipeline, IndicatorRecord, InnerLayerSample, KineticParams, KineticsError, Knudsen, PathEstimate,
};
pub use analysis::{
    correlation_curves, depth_volume_series, depth_volume_table, fit_flow_blocks, flow_blocks, inner_samples, mid_series, FlowBlock, SideCurves,
};
pub use synth::{generate, Scenario, SynthConfig, SynthError};
pub use io::{config_fingerprint, parse_event_log, read_event_log, write_event_log, EventLogReader, IndicatorWriter, LogError};
