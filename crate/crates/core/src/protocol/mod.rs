//! Wire protocol between the exercise host and its stations.
//!
//! Every frame is one UTF-8 JSON [`Message`]. The host owns block occupancy,
//! tutor attachments and control grants; the types here are plain values and
//! the registries are driven by the host's per-session executor.

mod block;
mod heartbeat;
mod message;
mod mirror;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use block::{
    clone_block, AttachError, BlockConfig, BlockError, BlockOccupancy, ControlGrant, GrantError, JoinedSeat, TutorAttachment,
    MAX_CONTROLLER_STATIONS, MAX_PILOT_STATIONS, SUPERVISORS_PER_BLOCK,
};
pub use heartbeat::{check_heartbeat, Liveness, SeqTracker};
pub use message::{
    decode_message, encode_message, Alert, DecodeError, Hello, Message, Payload, PointerColor, PointerOverlay, PointerShape, Reject,
    RejectReason, StateSnapshot, SupervisorCommand, Welcome, PAYLOAD_TAGS, PROTOCOL_VERSION,
};
pub use mirror::{
    apply_mirror_frame, make_mirror_frame, picture_digest, picture_from_world, FrameBody, MirrorError, MirrorFrame, MirrorOp,
    MirrorReceiver, MirrorStream, Picture, Track, SNAPSHOT_INTERVAL,
};

pub type ClientId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Controller,
    Coordinator,
    PseudoPilot,
    Supervisor,
    RemoteTutor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StationKind {
    ControllerStn,
    PilotStn,
    SupervisorStn,
}

/// Addressable station within a block; `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StationId {
    pub block_id: String,
    pub kind: StationKind,
    pub index: u32,
}

impl StationId {
    pub fn controller(block_id: &str, index: u32) -> Self {
        Self { block_id: block_id.to_string(), kind: StationKind::ControllerStn, index }
    }

    pub fn pilot(block_id: &str, index: u32) -> Self {
        Self { block_id: block_id.to_string(), kind: StationKind::PilotStn, index }
    }

    pub fn supervisor(block_id: &str) -> Self {
        Self { block_id: block_id.to_string(), kind: StationKind::SupervisorStn, index: 1 }
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            StationKind::ControllerStn => 'C',
            StationKind::PilotStn => 'P',
            StationKind::SupervisorStn => 'S',
        };
        write!(f, "{}/{}{}", self.block_id, k, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Lobby,
    Running,
    Paused,
    Ended,
}
