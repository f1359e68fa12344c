//! Append-only `.atclog` event log.
//!
//! Line 1 is a JSON [`LogHeader`]. Every following line is either
//! `{"tick_index":N,"message":{..}}` for an inbound message, in the order the
//! host drained it, or `{"tick_index":N,"digest":".."}` closing host tick N.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::protocol::Message;

pub const LOG_SCHEMA_VERSION: u32 = 1;
pub const LOG_EXTENSION: &str = "atclog";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: u32,
    pub scenario_digest: String,
    pub tick_seconds: f64,
    /// Wall clock at creation, RFC 3339. The only non-reproducible field.
    pub started_at: String,
    pub session_id: String,
    pub block_id: String,
    pub heartbeat_timeout_s: f64,
    pub grace_s: f64,
    pub pointer_rate_hz: f64,
    /// SHA-256 of the shared session token, when one is required.
    #[serde(default)]
    pub token_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    Message { tick_index: u64, message: Message },
    Digest { tick_index: u64, digest: String },
}

impl LogRecord {
    pub fn tick_index(&self) -> u64 {
        match self {
            LogRecord::Message { tick_index, .. } | LogRecord::Digest { tick_index, .. } => *tick_index,
        }
    }

    fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct M<'a> {
            tick_index: u64,
            message: &'a Message,
        }
        #[derive(Serialize)]
        struct D<'a> {
            tick_index: u64,
            digest: &'a str,
        }
        match self {
            LogRecord::Message { tick_index, message } => serde_json::to_string(&M { tick_index: *tick_index, message }),
            LogRecord::Digest { tick_index, digest } => serde_json::to_string(&D { tick_index: *tick_index, digest }),
        }
        .expect("log records always serialize")
    }

    fn from_line(line: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let obj = v.as_object().ok_or("entry is not a JSON object")?;
        let tick_index = obj.get("tick_index").and_then(Value::as_u64).ok_or("missing tick_index")?;
        match (obj.get("message"), obj.get("digest")) {
            (Some(m), None) => {
                let message = serde_json::from_value(m.clone()).map_err(|e| format!("bad message: {e}"))?;
                Ok(LogRecord::Message { tick_index, message })
            }
            (None, Some(Value::String(d))) => Ok(LogRecord::Digest { tick_index, digest: d.clone() }),
            _ => Err("entry must carry exactly one of message or digest".into()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log io: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log at line {line} (entry {entry}): {reason}")]
    Corrupt { line: usize, entry: usize, reason: String },
}

/// Writer side of a session log. Records are always counted; they are kept
/// in memory and/or streamed to a file depending on construction.
#[derive(Debug)]
pub struct EventLog {
    header: LogHeader,
    file: Option<BufWriter<File>>,
    path: Option<PathBuf>,
    records: Option<Vec<LogRecord>>,
    message_count: u64,
    digest_count: u64,
}

impl EventLog {
    pub fn in_memory(header: LogHeader) -> Self {
        Self { header, file: None, path: None, records: Some(Vec::new()), message_count: 0, digest_count: 0 }
    }

    /// Counts records without storing them.
    pub fn discard(header: LogHeader) -> Self {
        Self { header, file: None, path: None, records: None, message_count: 0, digest_count: 0 }
    }

    pub fn create(path: impl AsRef<Path>, header: LogHeader, keep_in_memory: bool) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let mut file = BufWriter::new(File::create(&path)?);
        writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        Ok(Self { header, file: Some(file), path: Some(path), records: keep_in_memory.then(Vec::new), message_count: 0, digest_count: 0 })
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> Option<&[LogRecord]> {
        self.records.as_deref()
    }

    pub fn message_count(&self) -> u64 {
        self.message_count
    }

    pub fn digest_count(&self) -> u64 {
        self.digest_count
    }

    pub fn append(&mut self, record: LogRecord) -> Result<(), LogError> {
        match record {
            LogRecord::Message { .. } => self.message_count += 1,
            LogRecord::Digest { .. } => self.digest_count += 1,
        }
        if let Some(f) = &mut self.file {
            writeln!(f, "{}", record.to_line())?;
        }
        if let Some(r) = &mut self.records {
            r.push(record);
        }
        Ok(())
    }

    /// Flushes buffered lines and fsyncs the file.
    pub fn sync(&mut self) -> Result<(), LogError> {
        if let Some(f) = &mut self.file {
            f.flush()?;
            f.get_ref().sync_data()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        if let Some(f) = &mut self.file {
            f.flush()?;
        }
        Ok(())
    }
}

impl Drop for EventLog {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// Everything read back from a log file.
#[derive(Debug, Clone, PartialEq)]
pub struct LogContents {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

impl LogContents {
    pub fn messages(&self) -> impl Iterator<Item = (u64, &Message)> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Message { tick_index, message } => Some((*tick_index, message)),
            LogRecord::Digest { .. } => None,
        })
    }

    pub fn digests(&self) -> impl Iterator<Item = (u64, &str)> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Digest { tick_index, digest } => Some((*tick_index, digest.as_str())),
            LogRecord::Message { .. } => None,
        })
    }

    pub fn message_count(&self) -> usize {
        self.messages().count()
    }
}

/// Reads and checks a log. Entries must be ordered by tick; within a tick all
/// messages precede the single digest that closes it.
pub fn read_log(reader: impl BufRead) -> Result<LogContents, LogError> {
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(l) => l?,
        None => return Err(LogError::Corrupt { line: 1, entry: 0, reason: "missing header".into() }),
    };
    let header: LogHeader =
        serde_json::from_str(&first).map_err(|e| LogError::Corrupt { line: 1, entry: 0, reason: format!("bad header: {e}") })?;
    let mut records = Vec::new();
    // (tick, closed) of the last record
    let mut cursor: Option<(u64, bool)> = None;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let corrupt = |reason: String| LogError::Corrupt { line: line_no, entry: i, reason };
        if line.trim().is_empty() {
            return Err(corrupt("blank line".into()));
        }
        let record = LogRecord::from_line(&line).map_err(corrupt)?;
        let tick = record.tick_index();
        if let Some((last, closed)) = cursor {
            if tick < last || (tick == last && closed) {
                return Err(corrupt(format!("tick_index {tick} out of order after {last}")));
            }
        }
        cursor = Some((tick, matches!(record, LogRecord::Digest { .. })));
        records.push(record);
    }
    Ok(LogContents { header, records })
}

pub fn read_log_file(path: impl AsRef<Path>) -> Result<LogContents, LogError> {
    let f = File::open(path)?;
    read_log(io::BufReader::new(f))
}
