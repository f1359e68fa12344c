use std::path::Path;

use super::log::{read_log_file, LogContents, LogError, LogRecord};
use super::session::Session;
use super::HostError;
use crate::exercise::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("scenario mismatch: log was recorded with {expected}, got {actual}")]
    ScenarioMismatch { expected: String, actual: String },
    #[error("corrupt log at line {line} (entry {entry}): {reason}")]
    CorruptLog { line: usize, entry: usize, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Host(#[from] HostError),
}

impl From<LogError> for ReplayError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::Io(e) => ReplayError::Io(e),
            LogError::Corrupt { line, entry, reason } => ReplayError::CorruptLog { line, entry, reason },
        }
    }
}

/// First host tick whose replayed digest differs from the recorded one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub tick_index: u64,
    pub recorded: String,
    pub replayed: String,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    /// World digest after every host tick.
    pub digests: Vec<String>,
    pub world_ticks: u64,
    pub separation_events: u64,
    pub messages: usize,
}

impl ReplayReport {
    pub fn host_ticks(&self) -> u64 {
        self.digests.len() as u64
    }

    pub fn final_digest(&self) -> Option<&str> {
        self.digests.last().map(String::as_str)
    }

    /// Compares against the digests recorded in the log; ticks without a
    /// recorded digest are skipped.
    pub fn verify(&self, log: &LogContents) -> Result<usize, Divergence> {
        let mut checked = 0;
        for (tick, recorded) in log.digests() {
            let replayed = self.digests.get(tick as usize).map(String::as_str).unwrap_or("");
            if replayed != recorded {
                return Err(Divergence { tick_index: tick, recorded: recorded.to_string(), replayed: replayed.to_string() });
            }
            checked += 1;
        }
        Ok(checked)
    }
}

/// Re-runs a recorded session offline and returns its digest stream.
///
/// The run spans every tick the log mentions; a log with no entries spans the
/// scenario duration.
pub fn replay(log: &LogContents, scenario: &Scenario) -> Result<ReplayReport, ReplayError> {
    let actual = scenario.digest();
    if log.header.scenario_digest != actual {
        return Err(ReplayError::ScenarioMismatch { expected: log.header.scenario_digest.clone(), actual });
    }
    if log.header.tick_seconds != scenario.tick_seconds {
        return Err(ReplayError::ScenarioMismatch {
            expected: format!("tick_seconds {}", log.header.tick_seconds),
            actual: format!("tick_seconds {}", scenario.tick_seconds),
        });
    }
    let span = match log.records.iter().map(LogRecord::tick_index).max() {
        Some(max) => max + 1,
        None => scenario.duration_ticks(),
    };
    let mut session = Session::for_replay(&log.header, scenario.clone())?;
    let mut digests = Vec::with_capacity(span as usize);
    let mut messages = log.messages().peekable();
    let mut count = 0;
    for tick in 0..span {
        while let Some((_, m)) = messages.next_if(|(t, _)| *t == tick) {
            session.enqueue(m.clone());
            count += 1;
        }
        let report = session.tick()?;
        digests.push(report.digest);
    }
    Ok(ReplayReport {
        digests,
        world_ticks: session.world().clock.tick_index,
        separation_events: session.separation_total(),
        messages: count,
    })
}

pub fn replay_file(path: impl AsRef<Path>, scenario: &Scenario) -> Result<(LogContents, ReplayReport), ReplayError> {
    let log = read_log_file(path)?;
    let report = replay(&log, scenario)?;
    Ok((log, report))
}
