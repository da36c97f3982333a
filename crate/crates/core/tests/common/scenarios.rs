//! Per-seed checks of the generator scenarios, shared by the scenario tests
//! and the acceptance suite. Each returns a description of the first
//! violation.

use knudsen_core::kinetics::KineticParams;
use knudsen_core::synth::{generate_density_sweep, generate_flash_crash};
use knudsen_core::{
    depth_volume_series, generate, power_spectrum, replay, spectral_exponent, weak_stationarity_report, BookState,
    EmptySide, IndicatorPipeline, IndicatorRecord, OrderEvent, Replay, Scenario, Side, SynthConfig,
};

pub const SCENARIOS: [Scenario; 4] =
    [Scenario::Stationary, Scenario::DensitySweep, Scenario::FlashCrash, Scenario::OneSidedHalt];

pub fn books(log: Vec<OrderEvent>) -> Result<Vec<BookState>, String> {
    Replay::new(log).map(|s| s.map(|s| s.book).map_err(|e| e.to_string())).collect()
}

pub fn records(params: KineticParams, books: &[BookState]) -> Vec<IndicatorRecord> {
    let mut pipe = IndicatorPipeline::new(params).expect("preset parameters are valid");
    books.iter().filter_map(|b| pipe.push_book(b)).collect()
}

/// Every scenario, cut short at `n_events`, replays without errors.
pub fn replays_cleanly(seed: u64, n_events: usize) -> Result<(), String> {
    for scenario in SCENARIOS {
        let cfg = SynthConfig { n_events, ..SynthConfig::scenario(seed, scenario) };
        let log = generate(&cfg).map_err(|e| e.to_string())?;
        replay(&log).map_err(|e| format!("{scenario:?}: {e}"))?;
    }
    Ok(())
}

/// Mean occupancy per side and regime within 20% of the regime target,
/// over ticks whose Kn-series window lies inside the regime.
pub fn density_sweep_on_target(seed: u64) -> Result<(), String> {
    let params = KineticParams::knudsen_series();
    let window = (params.k * params.s) as u64;
    let sweep = generate_density_sweep(&SynthConfig::scenario(seed, Scenario::DensitySweep)).map_err(|e| e.to_string())?;
    let recs = records(params, &books(sweep.events)?);
    for r in &sweep.regimes {
        let inside: Vec<&IndicatorRecord> =
            recs.iter().filter(|x| x.tick >= r.start_tick + window && x.tick <= r.end_tick).collect();
        if inside.is_empty() {
            return Err(format!("regime {} has no full window", r.target));
        }
        for side in Side::BOTH {
            let mean = inside.iter().map(|x| x.i_bar(side)).sum::<f64>() / inside.len() as f64;
            if (mean / r.target - 1.0).abs() > 0.2 {
                return Err(format!("{} side <I> {mean:.1} for target {}", side.as_str(), r.target));
            }
        }
    }
    Ok(())
}

/// On the first 10^5 ticks of the stationary scenario, V0 is not flagged by
/// the 4-segment stationarity report, alpha(V0) lies in [-0.3, 0.3] and
/// alpha(V100) in [1.6, 2.4], on both sides.
pub fn stationary_depth_volumes(seed: u64) -> Result<(), String> {
    let cfg = SynthConfig { n_events: 2_200_000, ..SynthConfig::scenario(seed, Scenario::Stationary) };
    let log = generate(&cfg).map_err(|e| e.to_string())?;
    let b = books(log)?;
    let b = &b[..b.len().min(100_000)];
    let mut errs = Vec::new();
    for side in Side::BOTH {
        let v0 = depth_volume_series(b, side, 0);
        let st = weak_stationarity_report(&v0, 4).map_err(|e| e.to_string())?;
        if st.unstable {
            errs.push(format!("V0 {} flagged at {:.2} SE", side.as_str(), st.max_gap_se));
        }
        for (g, lo, hi) in [(0, -0.3, 0.3), (100, 1.6, 2.4)] {
            let sp = power_spectrum(&depth_volume_series(b, side, g)).map_err(|e| e.to_string())?;
            let a = spectral_exponent(&sp.omega, &sp.power, None).map_err(|e| e.to_string())?;
            if !(lo..=hi).contains(&a) {
                errs.push(format!("alpha(V{g} {}) = {a:.3}", side.as_str()));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs.join(", "))
    }
}

/// Scripted crash on the detector window: the minus side is empty at the
/// exhaustion tick with an infinite Kn, rolling minus occupancy falls at
/// least 8x from the depletion start, and plus occupancy stays within 30%
/// of its value there.
pub fn flash_crash_script(seed: u64) -> Result<(), String> {
    let fc = generate_flash_crash(&SynthConfig::scenario(seed, Scenario::FlashCrash)).map_err(|e| e.to_string())?;
    let sc = fc.script;
    let b = books(fc.events)?;
    if b[(sc.exhaustion_tick - 1) as usize].best_and_mid().err() != Some(EmptySide(Side::Minus)) {
        return Err(format!("minus side not empty at tick {}", sc.exhaustion_tick));
    }
    let recs = records(KineticParams::detector(), &b);
    let rec = |t: u64| recs.iter().find(|r| r.tick == t).ok_or(format!("no record at {t}"));
    if !rec(sc.exhaustion_tick)?.kn_minus.is_infinite() {
        return Err("Kn- finite at exhaustion".into());
    }
    let start = rec(sc.depletion_start)?;
    let phase: Vec<&IndicatorRecord> =
        recs.iter().filter(|r| (sc.depletion_start..=sc.exhaustion_tick).contains(&r.tick)).collect();
    let low = phase.iter().map(|r| r.i_bar_minus).fold(f64::INFINITY, f64::min);
    if start.i_bar_minus < 8.0 * low {
        return Err(format!("<I-> fell only {:.2}x", start.i_bar_minus / low));
    }
    for r in &phase {
        if (r.i_bar_plus / start.i_bar_plus - 1.0).abs() > 0.3 {
            return Err(format!("<I+> {:.1} vs {:.1} at tick {}", r.i_bar_plus, start.i_bar_plus, r.tick));
        }
    }
    Ok(())
}
