//! Input replay and output sinks.

use std::cell::RefCell;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};

use knudsen_core::{parse_event_log, LogError, Replay, ReplayError, Snapshot};

use crate::{out_path, CliError};

fn open_input(path: &str) -> Result<Box<dyn Read>, CliError> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    Ok(match out_path(path) {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?)),
    })
}

/// Streams the snapshots of the log at `path` through `f`. A parse or
/// replay error ends the stream and overrides `f`'s result.
pub fn with_snapshots<T>(
    path: &str,
    f: impl FnOnce(&mut dyn Iterator<Item = Snapshot>) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let parse_err: RefCell<Option<LogError>> = RefCell::new(None);
    let replay_err: RefCell<Option<ReplayError>> = RefCell::new(None);
    let reader = parse_event_log(open_input(path)?).map_err(|e| CliError::Input(e.to_string()))?;
    let events = reader.map_while(|r| r.map_err(|e| *parse_err.borrow_mut() = Some(e)).ok());
    let mut snapshots = Replay::new(events).map_while(|r| r.map_err(|e| *replay_err.borrow_mut() = Some(e)).ok());
    let out = f(&mut snapshots);
    drop(snapshots);
    if let Some(e) = parse_err.into_inner() {
        return Err(CliError::Input(e.to_string()));
    }
    if let Some(e) = replay_err.into_inner() {
        return Err(CliError::Input(e.to_string()));
    }
    out
}

/// Shortest decimal that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_writer(path: &str) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::Writer::from_writer(open_output(path)?))
}

/// One-line JSON summary on stderr.
pub fn summary(value: serde_json::Value) {
    eprintln!("{value}");
}
