use std::collections::BTreeSet;
use std::io::Write;

use knudsen_core::kinetics::{
    detect_regimes, fit_kappa_per_side, fit_kappa_symmetric, inner_flow, joint_threshold_quantile, KappaFit,
};
use knudsen_core::layers::find_gamma_c;
use knudsen_core::synth::{generate_density_sweep, generate_flash_crash, generate_one_sided_halt};
use knudsen_core::{
    config_fingerprint, correlation_curves, depth_volume_table, fit_flow_blocks, flow_blocks,
    layer_profile, power_spectrum, spectral_exponent, weak_stationarity_report, write_event_log, CorrError,
    DepthRange, IndicatorPipeline, IndicatorRecord, IndicatorWriter, KineticParams, KineticsError, Knudsen,
    MarketSpec, Scenario, SeriesError, Side, SynthConfig,
};
use serde_json::json;

use crate::stream::{csv_writer, num, open_output, opt, summary, with_snapshots};
use crate::{CliError, Common};

fn market(c: &Common) -> Result<MarketSpec, CliError> {
    MarketSpec::new(&c.symbol, c.delta_x, c.delta_n).map_err(|e| CliError::Input(e.to_string()))
}

/// `preset` with the command-line overrides applied.
fn params(c: &Common, preset: KineticParams) -> Result<KineticParams, CliError> {
    let p = KineticParams {
        k: c.k.unwrap_or(preset.k),
        s: c.window_s.unwrap_or(preset.s),
        gamma_c_minus: c.gamma_c_minus.unwrap_or(preset.gamma_c_minus),
        gamma_c_plus: c.gamma_c_plus.unwrap_or(preset.gamma_c_plus),
        theta_kn: c.theta_kn,
        ..preset
    };
    p.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(p)
}

fn kinetics_err(e: KineticsError) -> CliError {
    match e {
        KineticsError::InsufficientData { .. } | KineticsError::DegenerateRegressor | KineticsError::EmptyInnerLayer => {
            CliError::Insufficient(e.to_string())
        }
        KineticsError::InvalidParams(_) => CliError::Input(e.to_string()),
    }
}

fn series_err(e: SeriesError) -> CliError {
    match e {
        SeriesError::InvalidParameter(_) => CliError::Input(e.to_string()),
        _ => CliError::Insufficient(e.to_string()),
    }
}

fn records(c: &Common, p: KineticParams) -> Result<Vec<IndicatorRecord>, CliError> {
    let mut pipe = IndicatorPipeline::new(p).map_err(kinetics_err)?;
    let recs: Vec<IndicatorRecord> = with_snapshots(&c.input, |s| Ok(s.filter_map(|s| pipe.push_book(&s.book)).collect()))?;
    if recs.is_empty() {
        return Err(CliError::Insufficient(format!("log is shorter than one window of {} ticks", p.k * p.s)));
    }
    Ok(recs)
}

fn lambdas(recs: &[IndicatorRecord]) -> (Vec<f64>, Vec<f64>) {
    recs.iter().map(|r| (r.lambda_minus.unwrap_or(f64::NAN), r.lambda_plus.unwrap_or(f64::NAN))).unzip()
}

fn kn_cell(k: Knudsen) -> String {
    match k {
        Knudsen::Finite(x) => num(x),
        Knudsen::Infinite => "inf".into(),
        Knudsen::Undefined => String::new(),
    }
}

pub fn replay(c: &Common) -> Result<(), CliError> {
    let spec = market(c)?;
    let mut w = csv_writer(&c.out)?;
    w.write_record([
        "tick", "ts_ms", "best_minus", "best_plus", "mid_ticks", "mid_price", "volume_minus", "volume_plus",
    ])?;
    let (n, first, last) = with_snapshots(&c.input, |snaps| {
        let (mut n, mut first, mut last) = (0u64, None, None);
        for s in snaps {
            let b = &s.book;
            let best = |side| b.best(side).map(|p: i64| p.to_string()).unwrap_or_default();
            let mid = b.mid();
            w.write_record([
                b.tick_index().to_string(),
                s.marker.timestamp_ms.to_string(),
                best(Side::Minus),
                best(Side::Plus),
                opt(mid),
                opt(mid.map(|m| spec.price(m))),
                b.total_volume(Side::Minus).to_string(),
                b.total_volume(Side::Plus).to_string(),
            ])?;
            n += 1;
            first.get_or_insert(s.marker.timestamp_ms);
            last = Some(s.marker.timestamp_ms);
        }
        Ok((n, first, last))
    })?;
    w.flush()?;
    let mean_tick_ms = match (first, last) {
        (Some(a), Some(b)) if n > 1 => Some((b - a) as f64 / (n - 1) as f64),
        _ => None,
    };
    summary(json!({ "command": "replay", "transactions": n, "mean_tick_ms": mean_tick_ms }));
    Ok(())
}

pub fn spectrum(c: &Common, gammas: &[i64]) -> Result<(), CliError> {
    if gammas.iter().any(|&g| g < 0) {
        return Err(CliError::Input("depths must be non-negative".into()));
    }
    let pairs: Vec<(Side, i64)> = gammas.iter().flat_map(|&g| Side::BOTH.map(|s| (s, g))).collect();
    let table = with_snapshots(&c.input, |s| Ok(depth_volume_table(s.map(|s| s.book), &pairs)))?;
    let mut w = csv_writer(&c.out)?;
    w.write_record(["series", "omega", "power"])?;
    let mut fits = Vec::new();
    for s in &table {
        let sp = power_spectrum(s).map_err(series_err)?;
        let alpha = spectral_exponent(&sp.omega, &sp.power, None).map_err(series_err)?;
        let unstable = weak_stationarity_report(s, 4).ok().map(|r| r.unstable);
        for (o, p) in sp.omega.iter().zip(&sp.power) {
            w.write_record([s.label.as_str(), &num(*o), &num(*p)])?;
        }
        fits.push(json!({ "series": s.label, "alpha": alpha, "ticks": s.len(), "segments": sp.segments, "unstable_mean": unstable }));
    }
    w.flush()?;
    summary(json!({ "command": "spectrum", "series": fits }));
    Ok(())
}

pub fn corr(c: &Common) -> Result<(), CliError> {
    let k = c.k.unwrap_or(KineticParams::correlation().k);
    if c.gamma_max < 0 {
        return Err(CliError::Input("gamma-max must be non-negative".into()));
    }
    let curves = with_snapshots(&c.input, |s| {
        correlation_curves(s.map(|s| s.book), k, c.gamma_max).map_err(|e| match e {
            CorrError::InsufficientBlocks { .. } => CliError::Insufficient(e.to_string()),
            _ => CliError::Input(e.to_string()),
        })
    })?;
    let mut w = csv_writer(&c.out)?;
    w.write_record(["side", "gamma", "per_depth", "cumulative"])?;
    let mut report = Vec::new();
    for (side, sc) in Side::BOTH.iter().zip(&curves) {
        for (i, g) in sc.per_depth.gamma.iter().enumerate() {
            w.write_record([side.as_str(), &g.to_string(), &opt(sc.per_depth.corr[i]), &opt(sc.cumulative.corr[i])])?;
        }
        let gc = match find_gamma_c(&sc.per_depth, &sc.cumulative) {
            Ok(g) => json!(g),
            Err(e) => json!({ "error": e.to_string() }),
        };
        report.push(json!({ "side": side, "blocks": sc.per_depth.n_blocks, "gamma_c": gc }));
    }
    w.flush()?;
    summary(json!({ "command": "corr", "k": k, "sides": report }));
    Ok(())
}

pub fn mfp(c: &Common) -> Result<(), CliError> {
    let p = params(c, KineticParams::correlation())?;
    let samples = with_snapshots(&c.input, |snaps| {
        let mut prev = None;
        let mut out = Vec::new();
        for s in snaps {
            if let Some(pb) = &prev {
                out.push(inner_flow(pb, &s.book, &p));
            }
            prev = Some(s.book);
        }
        Ok(out)
    })?;
    let mut blocks = flow_blocks(&samples, p.k);
    if let Some(s) = c.window_s {
        let skip = blocks.len().saturating_sub(s);
        blocks.drain(..skip);
    }
    let fits = fit_flow_blocks(&blocks);
    if fits.iter().all(Result::is_err) {
        return Err(CliError::Insufficient(format!("no usable blocks of {} ticks", p.k)));
    }
    let mut w = csv_writer(&c.out)?;
    w.write_record(["start_tick", "f_minus", "f_plus", "v_minus", "v_plus", "v"])?;
    for b in &blocks {
        w.write_record([b.start_tick.to_string(), num(b.f[0]), num(b.f[1]), opt(b.v_side[0]), opt(b.v_side[1]), opt(b.v)])?;
    }
    w.flush()?;
    let fit_json = |r: &Result<_, KineticsError>| match r {
        Ok(m) => json!(m),
        Err(e) => json!({ "error": e.to_string() }),
    };
    summary(json!({
        "command": "mfp",
        "k": p.k,
        "blocks": blocks.len(),
        "minus": fit_json(&fits[0]),
        "plus": fit_json(&fits[1]),
        "sym": fit_json(&fits[2]),
    }));
    Ok(())
}

pub fn knudsen(c: &Common) -> Result<(), CliError> {
    let spec = market(c)?;
    let p = params(c, KineticParams::knudsen_series())?;
    let fingerprint = config_fingerprint(&json!({ "command": "knudsen", "params": p, "market": spec }));
    let mut pipe = IndicatorPipeline::new(p).map_err(kinetics_err)?;
    let mut w = IndicatorWriter::new(open_output(&c.out)?, &spec.symbol, &fingerprint);
    let n = with_snapshots(&c.input, |snaps| {
        let mut n = 0u64;
        for s in snaps {
            if let Some(r) = pipe.push_book(&s.book) {
                w.write(&r)?;
                n += 1;
            }
        }
        Ok(n)
    })?;
    w.into_inner().flush()?;
    if n == 0 {
        return Err(CliError::Insufficient(format!("log is shorter than one window of {} ticks", p.k * p.s)));
    }
    summary(json!({ "command": "knudsen", "records": n, "config": fingerprint, "params": p }));
    Ok(())
}

pub fn kappa(c: &Common) -> Result<(), CliError> {
    let p = params(c, KineticParams::knudsen_series())?;
    let recs = records(c, p)?;
    let col = |f: &dyn Fn(&IndicatorRecord) -> f64| recs.iter().map(f).collect::<Vec<f64>>();
    let kn = |k: Knudsen| k.value().unwrap_or(f64::NAN);
    let (knm, knp, kns) = (col(&|r| kn(r.kn_minus)), col(&|r| kn(r.kn_plus)), col(&|r| kn(r.kn_sym)));
    let (im, ip) = (col(&|r| r.i_bar_minus), col(&|r| r.i_bar_plus));
    let (minus, plus) = fit_kappa_per_side(&knm, &knp, &im, &ip).map_err(kinetics_err)?;
    let sym = fit_kappa_symmetric(&kns, &im, &ip).map_err(kinetics_err)?;
    let mut w = csv_writer(&c.out)?;
    w.write_record(["tick", "i_bar_minus", "i_bar_plus", "kn_minus", "kn_plus", "kn_sym"])?;
    for r in &recs {
        w.write_record([
            r.tick.to_string(),
            num(r.i_bar_minus),
            num(r.i_bar_plus),
            kn_cell(r.kn_minus),
            kn_cell(r.kn_plus),
            kn_cell(r.kn_sym),
        ])?;
    }
    w.flush()?;
    let fit = |f: &KappaFit| json!({ "fit": f, "min_occupancy": f.min_occupancy(p.theta_kn) });
    summary(json!({ "command": "kappa", "theta_kn": p.theta_kn, "minus": fit(&minus), "plus": fit(&plus), "sym": fit(&sym) }));
    Ok(())
}

pub fn rates(c: &Common, bins: usize, q: f64) -> Result<(), CliError> {
    if bins == 0 {
        return Err(CliError::Input("bins must be at least 1".into()));
    }
    let p = params(c, KineticParams::detector())?;
    let recs = records(c, p)?;
    let (lm, lp) = lambdas(&recs);
    let jq = joint_threshold_quantile(&lm, &lp, q).map_err(kinetics_err)?;
    let finite: Vec<(f64, f64)> = lm.iter().zip(&lp).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).collect();
    let lo = finite.iter().map(|x| x.0.min(x.1)).fold(f64::INFINITY, f64::min);
    let hi = finite.iter().map(|x| x.0.max(x.1)).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let bin = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![0u64; bins * bins];
    for (a, b) in &finite {
        counts[bin(*a) * bins + bin(*b)] += 1;
    }
    let mut w = csv_writer(&c.out)?;
    w.write_record(["lambda_minus_lo", "lambda_minus_hi", "lambda_plus_lo", "lambda_plus_hi", "count"])?;
    for i in 0..bins {
        for j in 0..bins {
            let edge = |n: usize| num(lo + n as f64 * width);
            w.write_record([edge(i), edge(i + 1), edge(j), edge(j + 1), counts[i * bins + j].to_string()])?;
        }
    }
    w.flush()?;
    summary(json!({ "command": "rates", "k": p.k, "window_s": p.s, "quantile": jq }));
    Ok(())
}

pub fn detect(c: &Common) -> Result<(), CliError> {
    let p = params(c, KineticParams::detector())?;
    let recs = records(c, p)?;
    let (theta_lambda, source) = match c.theta_lambda {
        Some(t) => (t, "flag"),
        None => {
            let (lm, lp) = lambdas(&recs);
            (joint_threshold_quantile(&lm, &lp, p.theta_lambda_quantile).map_err(kinetics_err)?.theta, "joint_quantile")
        }
    };
    let report = detect_regimes(&recs, theta_lambda, p.theta_kn);
    let mut w = csv_writer(&c.out)?;
    w.write_record(["side", "start_tick", "end_tick", "ticks"])?;
    for iv in report.minus.iter().chain(&report.plus) {
        w.write_record([iv.side.as_str(), &iv.start_tick.to_string(), &iv.end_tick.to_string(), &iv.len().to_string()])?;
    }
    w.flush()?;
    summary(json!({
        "command": "detect",
        "theta_lambda": theta_lambda,
        "theta_lambda_source": source,
        "theta_kn": p.theta_kn,
        "records": recs.len(),
        "minus_intervals": report.minus.len(),
        "plus_intervals": report.plus.len(),
        "minus_flagged_ticks": report.flagged_ticks(Side::Minus),
        "plus_flagged_ticks": report.flagged_ticks(Side::Plus),
    }));
    Ok(())
}

pub fn profile(c: &Common, ticks: &[u64]) -> Result<(), CliError> {
    let spec = market(c)?;
    if c.gamma_max < 0 {
        return Err(CliError::Input("gamma-max must be non-negative".into()));
    }
    let wanted: BTreeSet<u64> = ticks.iter().copied().collect();
    let last = *wanted.last().expect("clap requires at least one tick");
    let range = DepthRange::up_to(c.gamma_max);
    let mut w = csv_writer(&c.out)?;
    w.write_record(["tick", "side", "gamma", "volume", "cumulative", "notional"])?;
    let found = with_snapshots(&c.input, |snaps| {
        let mut found = BTreeSet::new();
        for s in snaps.take_while(|s| s.book.tick_index() <= last) {
            let t = s.book.tick_index();
            if !wanted.contains(&t) {
                continue;
            }
            found.insert(t);
            for side in Side::BOTH {
                let Some(best) = s.book.best(side) else { continue };
                let prof = layer_profile(&s.book, side, best, range);
                for ((g, n), cum) in range.depths().zip(&prof.n_gamma).zip(prof.cumulative()) {
                    w.write_record([
                        t.to_string(),
                        side.as_str().to_string(),
                        g.to_string(),
                        n.to_string(),
                        cum.to_string(),
                        num(cum as f64 * spec.delta_n),
                    ])?;
                }
            }
        }
        Ok(found)
    })?;
    w.flush()?;
    let missing: Vec<u64> = wanted.difference(&found).copied().collect();
    if found.is_empty() {
        return Err(CliError::Insufficient("none of the requested ticks occur in the log".into()));
    }
    summary(json!({ "command": "profile", "ticks": found, "missing": missing }));
    Ok(())
}

pub fn synth(c: &Common, n_events: Option<usize>) -> Result<(), CliError> {
    let mut cfg = SynthConfig::scenario(c.seed, c.scenario);
    if let Some(n) = n_events {
        cfg.n_events = n;
    }
    let invalid = |e: knudsen_core::SynthError| CliError::Input(e.to_string());
    let (events, detail) = match c.scenario {
        Scenario::Stationary => (knudsen_core::generate(&cfg).map_err(invalid)?, json!(null)),
        Scenario::DensitySweep => {
            let d = generate_density_sweep(&cfg).map_err(invalid)?;
            (d.events, json!(d.regimes))
        }
        Scenario::FlashCrash => {
            let f = generate_flash_crash(&cfg).map_err(invalid)?;
            (f.events, json!(f.script))
        }
        Scenario::OneSidedHalt => {
            let h = generate_one_sided_halt(&cfg).map_err(invalid)?;
            (h.events, json!({ "halt_start": h.halt.0, "halt_end": h.halt.1 }))
        }
    };
    let mut out = open_output(&c.out)?;
    write_event_log(&mut out, &events).map_err(|e| CliError::Input(e.to_string()))?;
    out.flush()?;
    summary(json!({ "command": "synth", "events": events.len(), "config": cfg, "script": detail }));
    Ok(())
}
