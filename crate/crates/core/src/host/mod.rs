//! The authoritative exercise host: sessions, recording, replay and the
//! network service.
//!
//! Each [`Session`] is driven by exactly one executor calling
//! [`Session::tick`]; transports only enqueue decoded messages and forward
//! the returned [`Outbound`] values.

mod client;
mod log;
mod replay;
pub mod server;
mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::exercise::{Scenario, ValidationIssue};
use crate::protocol::{clone_block, BlockConfig, BlockError, Phase};

pub use client::ScriptedClient;
pub use log::{read_log, read_log_file, EventLog, LogContents, LogError, LogHeader, LogRecord, LOG_EXTENSION, LOG_SCHEMA_VERSION};
pub use replay::{replay, replay_file, Divergence, ReplayError, ReplayReport};
pub use session::{ClientInfo, LogTarget, Outbound, Session, SessionConfig, TickReport, GO_AROUND_ALT_FT, HOST_SENDER};

#[derive(Debug, thiserror::Error)]
pub enum HostError {
    #[error("scenario has {} validation error(s){}", .0.iter().filter(|i| i.severity == crate::exercise::Severity::Error).count(), first_issue(.0))]
    InvalidScenario(Vec<ValidationIssue>),
    #[error("scenario world could not be built: {0}")]
    InvalidWorld(String),
    #[error("no such block {0}")]
    NoSuchBlock(String),
    #[error("block {0} already runs an active session")]
    BlockBusy(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Log(#[from] LogError),
}

fn first_issue(issues: &[ValidationIssue]) -> String {
    issues.first().map(|i| format!(": {i}")).unwrap_or_default()
}

/// Read-only monitoring summary served at `/healthz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub sessions: usize,
    pub blocks: usize,
    pub uptime_s: f64,
}

/// In-process host: a set of blocks, each running at most one active session.
#[derive(Debug)]
pub struct Host {
    blocks: BTreeMap<String, BlockConfig>,
    sessions: BTreeMap<String, Session>,
    config: SessionConfig,
    counter: u64,
    started: Instant,
}

impl Host {
    /// Blocks are named `B1..Bn`, each cloned from the first.
    pub fn new(block_count: u32, config: SessionConfig) -> Self {
        let mut host = Self { blocks: BTreeMap::new(), sessions: BTreeMap::new(), config, counter: 0, started: Instant::now() };
        if block_count > 0 {
            let template = BlockConfig::new("B1");
            host.blocks.insert("B1".into(), template);
            for i in 2..=block_count {
                host.clone_block(&format!("B{i}")).expect("fresh ids");
            }
        }
        host
    }

    pub fn block_ids(&self) -> BTreeSet<String> {
        self.blocks.keys().cloned().collect()
    }

    pub fn clone_block(&mut self, new_id: &str) -> Result<&BlockConfig, HostError> {
        let template = self.blocks.values().next().cloned().unwrap_or_else(|| BlockConfig::new(new_id));
        let cfg = if self.blocks.is_empty() { template } else { clone_block(&template, new_id, &self.block_ids())? };
        self.blocks.insert(new_id.to_string(), cfg);
        Ok(&self.blocks[new_id])
    }

    /// Opens a LOBBY session on `block_id`.
    pub fn create_session(&mut self, scenario: Scenario, block_id: &str, target: LogTarget) -> Result<&mut Session, HostError> {
        let block = self.blocks.get(block_id).ok_or_else(|| HostError::NoSuchBlock(block_id.to_string()))?.clone();
        if self.sessions.values().any(|s| s.block_id() == block_id && s.phase() != Phase::Ended) {
            return Err(HostError::BlockBusy(block_id.to_string()));
        }
        self.counter += 1;
        let id = format!("{block_id}-{}", self.counter);
        let session = Session::create(&id, scenario, block, &self.config, target)?;
        Ok(self.sessions.entry(id).or_insert(session))
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn session_mut(&mut self, id: &str) -> Option<&mut Session> {
        self.sessions.get_mut(id)
    }

    /// The non-ended session on a block, if any.
    pub fn active_session(&mut self, block_id: &str) -> Option<&mut Session> {
        self.sessions.values_mut().find(|s| s.block_id() == block_id && s.phase() != Phase::Ended)
    }

    pub fn health(&self) -> Health {
        Health {
            sessions: self.sessions.values().filter(|s| s.phase() != Phase::Ended).count(),
            blocks: self.blocks.len(),
            uptime_s: self.started.elapsed().as_secs_f64(),
        }
    }
}
