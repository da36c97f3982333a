//! Event-log CSV and newline-delimited indicator records.
//!
//! Log rows are `ts_ms,side,price_ticks,action,volume_units` with side `B`
//! (bid, minus) or `S` (ask, plus) and action `A`dd, `C`ancel or e`X`ecute.

use std::io::{Read, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::book::{Action, OrderEvent, Side};
use crate::kinetics::{IndicatorRecord, Knudsen};

pub const EVENT_LOG_HEADER: [&str; 5] = ["ts_ms", "side", "price_ticks", "action", "volume_units"];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line 1: expected header {}", EVENT_LOG_HEADER.join(","))]
    MissingHeader,
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: timestamp {ts} precedes {prev}")]
    NonMonotonicTimestamp { line: u64, ts: i64, prev: i64 },
    #[error("line {line}: unknown action {action:?}")]
    UnknownAction { line: u64, action: String },
    #[error("line {line}: {source}")]
    Csv { line: u64, source: csv::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LogError {
    /// Line of the offending row, when one is known.
    pub fn line(&self) -> Option<u64> {
        match self {
            LogError::MissingHeader => Some(1),
            LogError::MalformedRow { line, .. }
            | LogError::NonMonotonicTimestamp { line, .. }
            | LogError::UnknownAction { line, .. }
            | LogError::Csv { line, .. } => Some(*line),
            LogError::Io(_) => None,
        }
    }
}

/// Streaming event-log parser. Holds one row in memory; yields nothing after
/// the first error.
pub struct EventLogReader<R: Read> {
    rows: csv::Reader<R>,
    record: csv::StringRecord,
    prev_ts: Option<i64>,
    failed: bool,
}

/// Checks the header and returns the row iterator.
pub fn parse_event_log<R: Read>(input: R) -> Result<EventLogReader<R>, LogError> {
    let mut rows = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut record = csv::StringRecord::new();
    let header_ok = match rows.read_record(&mut record) {
        Ok(true) => record.iter().eq(EVENT_LOG_HEADER),
        Ok(false) => false,
        Err(e) => return Err(csv_error(e)),
    };
    if !header_ok {
        return Err(LogError::MissingHeader);
    }
    Ok(EventLogReader { rows, record, prev_ts: None, failed: false })
}

/// Reads a whole log into memory.
pub fn read_event_log<R: Read>(input: R) -> Result<Vec<OrderEvent>, LogError> {
    parse_event_log(input)?.collect()
}

fn csv_error(e: csv::Error) -> LogError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => LogError::Io(io),
            _ => unreachable!(),
        },
        _ => LogError::Csv { line, source: e },
    }
}

fn parse_row(fields: &csv::StringRecord, line: u64) -> Result<OrderEvent, LogError> {
    let malformed = |reason: String| LogError::MalformedRow { line, reason };
    if fields.len() != 5 {
        return Err(malformed(format!("expected 5 fields, found {}", fields.len())));
    }
    let timestamp_ms: i64 = fields[0].parse().map_err(|_| malformed(format!("bad timestamp {:?}", &fields[0])))?;
    let side = match &fields[1] {
        "B" => Side::Minus,
        "S" => Side::Plus,
        s => return Err(malformed(format!("bad side {s:?}"))),
    };
    let price: i64 = fields[2].parse().map_err(|_| malformed(format!("price {:?} is not an integer tick", &fields[2])))?;
    let action = match &fields[3] {
        "A" => Action::Add,
        "C" => Action::Cancel,
        "X" => Action::Execute,
        a => return Err(LogError::UnknownAction { line, action: a.to_string() }),
    };
    let volume: u64 = fields[4].parse().map_err(|_| malformed(format!("bad volume {:?}", &fields[4])))?;
    Ok(OrderEvent { timestamp_ms, side, price, action, volume })
}

impl<R: Read> Iterator for EventLogReader<R> {
    type Item = Result<OrderEvent, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = match self.rows.read_record(&mut self.record) {
            Ok(false) => return None,
            Err(e) => Err(csv_error(e)),
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                parse_row(&self.record, line).and_then(|ev| match self.prev_ts {
                    Some(prev) if ev.timestamp_ms < prev => {
                        Err(LogError::NonMonotonicTimestamp { line, ts: ev.timestamp_ms, prev })
                    }
                    _ => {
                        self.prev_ts = Some(ev.timestamp_ms);
                        Ok(ev)
                    }
                })
            }
        };
        self.failed = out.is_err();
        Some(out)
    }
}

fn side_code(side: Side) -> &'static str {
    match side {
        Side::Minus => "B",
        Side::Plus => "S",
    }
}

fn action_code(action: Action) -> &'static str {
    match action {
        Action::Add => "A",
        Action::Cancel => "C",
        Action::Execute => "X",
    }
}

/// Writes a log that [`parse_event_log`] reads back unchanged.
pub fn write_event_log<'a, W: Write>(out: W, events: impl IntoIterator<Item = &'a OrderEvent>) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| csv_error(e);
    w.write_record(EVENT_LOG_HEADER).map_err(wrap)?;
    for ev in events {
        w.write_record([
            ev.timestamp_ms.to_string().as_str(),
            side_code(ev.side),
            &ev.price.to_string(),
            action_code(ev.action),
            &ev.volume.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush()?;
    Ok(())
}

/// First 16 hex digits of the SHA-256 of the configuration's JSON form.
pub fn config_fingerprint<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configuration serializes to JSON");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// `Kn` as a JSON value: a number, the token `"inf"`, or null.
#[derive(Serialize)]
#[serde(untagged)]
enum KnValue {
    Finite(f64),
    Token(&'static str),
    Missing(Option<f64>),
}

impl From<Knudsen> for KnValue {
    fn from(k: Knudsen) -> Self {
        match k {
            Knudsen::Finite(x) => KnValue::Finite(x),
            Knudsen::Infinite => KnValue::Token("inf"),
            Knudsen::Undefined => KnValue::Missing(None),
        }
    }
}

#[derive(Serialize)]
struct FlatRecord<'a> {
    symbol: &'a str,
    config: &'a str,
    tick: u64,
    mid: Option<f64>,
    l_minus: Option<f64>,
    l_plus: Option<f64>,
    l_sym: Option<f64>,
    kn_minus: KnValue,
    kn_minus_inf: bool,
    kn_plus: KnValue,
    kn_plus_inf: bool,
    kn_sym: KnValue,
    kn_sym_inf: bool,
    i_bar_minus: f64,
    i_bar_plus: f64,
    f_bar_minus: f64,
    f_bar_plus: f64,
    lambda_minus: Option<f64>,
    lambda_plus: Option<f64>,
    valid_blocks_minus: usize,
    valid_blocks_plus: usize,
    one_sided_book: bool,
    minus_regime: bool,
    plus_regime: bool,
}

/// Writes one JSON object per line, tagged with the market symbol and the
/// configuration fingerprint.
pub struct IndicatorWriter<W: Write> {
    out: W,
    symbol: String,
    fingerprint: String,
}

impl<W: Write> IndicatorWriter<W> {
    pub fn new(out: W, symbol: impl Into<String>, fingerprint: impl Into<String>) -> Self {
        Self { out, symbol: symbol.into(), fingerprint: fingerprint.into() }
    }

    pub fn write(&mut self, r: &IndicatorRecord) -> std::io::Result<()> {
        let flat = FlatRecord {
            symbol: &self.symbol,
            config: &self.fingerprint,
            tick: r.tick,
            mid: r.mid,
            l_minus: r.l_minus,
            l_plus: r.l_plus,
            l_sym: r.l_sym,
            kn_minus: r.kn_minus.into(),
            kn_minus_inf: r.kn_minus.is_infinite(),
            kn_plus: r.kn_plus.into(),
            kn_plus_inf: r.kn_plus.is_infinite(),
            kn_sym: r.kn_sym.into(),
            kn_sym_inf: r.kn_sym.is_infinite(),
            i_bar_minus: r.i_bar_minus,
            i_bar_plus: r.i_bar_plus,
            f_bar_minus: r.f_bar_minus,
            f_bar_plus: r.f_bar_plus,
            lambda_minus: r.lambda_minus,
            lambda_plus: r.lambda_plus,
            valid_blocks_minus: r.valid_blocks_minus,
            valid_blocks_plus: r.valid_blocks_plus,
            one_sided_book: r.one_sided_book,
            minus_regime: r.minus_regime,
            plus_regime: r.plus_regime,
        };
        serde_json::to_writer(&mut self.out, &flat)?;
        self.out.write_all(b"\n")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty() {
        let got = read_event_log("ts_ms,side,price_ticks,action,volume_units\n".as_bytes()).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn row_maps_directly() {
        let text = "ts_ms,side,price_ticks,action,volume_units\n1000,B,100500,A,2\n";
        let got = read_event_log(text.as_bytes()).unwrap();
        assert_eq!(got, vec![OrderEvent::add(1000, Side::Minus, 100500, 2)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let h = "ts_ms,side,price_ticks,action,volume_units\n";
        let cases = [
            (format!("{h}1,B,10,A,1\n2,B,10.5,A,1\n"), 3),
            (format!("{h}1,B,10,A,1\n2,Q,10,A,1\n"), 3),
            (format!("{h}1,B,10,A\n"), 2),
        ];
        for (text, line) in cases {
            let e = read_event_log(text.as_bytes()).unwrap_err();
            assert!(matches!(e, LogError::MalformedRow { .. }), "{e}");
            assert_eq!(e.line(), Some(line));
        }
        let e = read_event_log(format!("{h}5,B,10,A,1\n4,B,10,C,1\n").as_bytes()).unwrap_err();
        assert!(matches!(e, LogError::NonMonotonicTimestamp { line: 3, .. }));
        let e = read_event_log(format!("{h}5,B,10,M,1\n").as_bytes()).unwrap_err();
        assert!(matches!(e, LogError::UnknownAction { line: 2, .. }));
        assert!(matches!(read_event_log("1,B,10,A,1\n".as_bytes()), Err(LogError::MissingHeader)));
        assert!(matches!(read_event_log("".as_bytes()), Err(LogError::MissingHeader)));
    }

    #[test]
    fn reader_stops_after_first_error() {
        let text = "ts_ms,side,price_ticks,action,volume_units\n1,B,x,A,1\n2,B,10,A,1\n";
        let rows: Vec<_> = parse_event_log(text.as_bytes()).unwrap().collect();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn equal_timestamps_are_accepted() {
        let text = "ts_ms,side,price_ticks,action,volume_units\n7,S,11,A,3\n7,S,11,X,1\n";
        assert_eq!(read_event_log(text.as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn infinite_knudsen_is_a_token() {
        let r = IndicatorRecord { kn_minus: Knudsen::Infinite, kn_plus: Knudsen::Finite(0.25), ..IndicatorRecord::default() };
        let mut w = IndicatorWriter::new(Vec::new(), "SYNTH", "abc");
        w.write(&r).unwrap();
        let line = String::from_utf8(w.into_inner()).unwrap();
        assert!(line.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["kn_minus"], "inf");
        assert_eq!(v["kn_minus_inf"], true);
        assert_eq!(v["kn_plus"], 0.25);
        assert_eq!(v["kn_plus_inf"], false);
        assert_eq!(v["kn_sym"], serde_json::Value::Null);
        assert_eq!(v["symbol"], "SYNTH");
        assert_eq!(v["config"], "abc");
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = config_fingerprint(&crate::KineticParams::detector());
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_fingerprint(&crate::KineticParams::detector()));
        assert_ne!(a, config_fingerprint(&crate::KineticParams::knudsen_series()));
    }
}
