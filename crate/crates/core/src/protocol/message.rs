use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClientId, ControlGrant, MirrorFrame, Phase, Picture, Role, StationId};
use crate::exercise::{Scenario, ScriptedEventKind};
use crate::sim::SeparationEvent;

pub const PROTOCOL_VERSION: u32 = 1;

/// Every payload tag accepted by the codec.
pub const PAYLOAD_TAGS: [&str; 15] = [
    "HELLO",
    "WELCOME",
    "REJECT",
    "STATE_SNAPSHOT",
    "STATE_DELTA",
    "PILOT_CMD",
    "MIRROR_FRAME",
    "POINTER",
    "CONTROL_GRANT",
    "CONTROL_REVOKE",
    "CONTROL_INPUT",
    "TRANSMISSION",
    "SUPERVISOR_CMD",
    "HEARTBEAT",
    "BYE",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub protocol_version: u32,
    pub seq: u64,
    pub sent_at_tick: u64,
    pub session_id: String,
    pub sender: ClientId,
    pub payload: Payload,
}

impl Message {
    pub fn new(seq: u64, sent_at_tick: u64, session_id: &str, sender: &str, payload: Payload) -> Self {
        Self {
            protocol_version: PROTOCOL_VERSION,
            seq,
            sent_at_tick,
            session_id: session_id.to_string(),
            sender: sender.to_string(),
            payload,
        }
    }

    pub fn tag(&self) -> &'static str {
        self.payload.tag()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub desired_role: Role,
    #[serde(default)]
    pub desired_station: Option<u32>,
    pub client_name: String,
    #[serde(default)]
    pub token: Option<String>,
    /// Client id from an earlier WELCOME; asks for the same seat back.
    #[serde(default)]
    pub resume: Option<ClientId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welcome {
    pub client_id: ClientId,
    pub role: Role,
    pub station: Option<StationId>,
    pub tick: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    Version,
    BlockFull,
    StationTaken,
    NoSuchStation,
    NoSuchSession,
    NoOccupant,
    AlreadyAttached,
    TutorBusy,
    NotAttached,
    GrantExists,
    NotGranted,
    GraceExpired,
    StationReassigned,
    UnknownClient,
    NotJoined,
    Forbidden,
    NotSupervisor,
    BadPhase,
    UnknownCallsign,
    BadCommand,
    BlockBusy,
    Decode,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match serde_json::to_value(self) {
            Ok(Value::String(s)) => f.write_str(&s),
            _ => write!(f, "{self:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub reason: RejectReason,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub tick: u64,
    pub phase: Phase,
    pub digest: String,
    pub tracks: Picture,
    #[serde(default)]
    pub alerts: Vec<Alert>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointerShape {
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointerColor {
    Red,
}

/// Tutor pointer drawn on the student's scope. Shape and colour are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerOverlay {
    pub tutor_id: ClientId,
    pub target_station: StationId,
    pub x_nm: f64,
    pub y_nm: f64,
    pub shape: PointerShape,
    pub color: PointerColor,
    pub visible: bool,
}

impl PointerOverlay {
    pub fn new(tutor_id: &str, target_station: StationId, x_nm: f64, y_nm: f64, visible: bool) -> Self {
        Self { tutor_id: tutor_id.to_string(), target_station, x_nm, y_nm, shape: PointerShape::Circle, color: PointerColor::Red, visible }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SupervisorCommand {
    LoadScenario {
        scenario: Box<Scenario>,
    },
    Start,
    Pause,
    Resume,
    Stop,
    InjectEvent {
        kind: ScriptedEventKind,
        callsign: String,
        #[serde(default)]
        description: String,
    },
    ReassignStation {
        client_id: ClientId,
        station: u32,
    },
}

/// Something a station should flash: a loss of separation, a fired exercise
/// event, or an action taken by a tutor on a student's behalf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Alert {
    Separation { event: SeparationEvent },
    Scripted { event: ScriptedEventKind, callsign: String, description: String },
    ControlInput { tutor_id: ClientId, station: StationId, command: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Payload {
    Hello(Hello),
    Welcome(Welcome),
    Reject(Reject),
    StateSnapshot(StateSnapshot),
    StateDelta {
        tick: u64,
        phase: Phase,
        frame: MirrorFrame,
        #[serde(default)]
        alerts: Vec<Alert>,
    },
    PilotCmd {
        command: String,
    },
    MirrorFrame {
        tick: u64,
        frame: MirrorFrame,
        #[serde(default)]
        alerts: Vec<Alert>,
    },
    Pointer(PointerOverlay),
    /// Client to host: a request (`grant` empty). Host to client: the grant.
    ControlGrant {
        #[serde(default)]
        grant: Option<ControlGrant>,
    },
    ControlRevoke {
        #[serde(default)]
        grant: Option<ControlGrant>,
    },
    ControlInput {
        command: String,
    },
    Transmission {
        frequency: String,
        text: String,
    },
    SupervisorCmd {
        command: SupervisorCommand,
    },
    Heartbeat {
        /// Asks the host for a full snapshot on the next frame.
        #[serde(default)]
        resync: bool,
    },
    Bye {},
}

impl Payload {
    pub fn tag(&self) -> &'static str {
        match self {
            Payload::Hello(_) => "HELLO",
            Payload::Welcome(_) => "WELCOME",
            Payload::Reject(_) => "REJECT",
            Payload::StateSnapshot(_) => "STATE_SNAPSHOT",
            Payload::StateDelta { .. } => "STATE_DELTA",
            Payload::PilotCmd { .. } => "PILOT_CMD",
            Payload::MirrorFrame { .. } => "MIRROR_FRAME",
            Payload::Pointer(_) => "POINTER",
            Payload::ControlGrant { .. } => "CONTROL_GRANT",
            Payload::ControlRevoke { .. } => "CONTROL_REVOKE",
            Payload::ControlInput { .. } => "CONTROL_INPUT",
            Payload::Transmission { .. } => "TRANSMISSION",
            Payload::SupervisorCmd { .. } => "SUPERVISOR_CMD",
            Payload::Heartbeat { .. } => "HEARTBEAT",
            Payload::Bye {} => "BYE",
        }
    }

    pub fn reject(reason: RejectReason, detail: impl Into<String>) -> Self {
        Payload::Reject(Reject { reason, detail: detail.into() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown payload tag {0:?}")]
    UnknownPayload(String),
    #[error("unsupported protocol version {got}, expected {expected}", expected = PROTOCOL_VERSION)]
    Version { got: u64 },
}

impl DecodeError {
    pub fn reject_reason(&self) -> RejectReason {
        match self {
            DecodeError::Version { .. } => RejectReason::Version,
            _ => RejectReason::Decode,
        }
    }
}

pub fn encode_message(m: &Message) -> Vec<u8> {
    serde_json::to_vec(m).expect("messages always serialize")
}

/// Parses one frame. The version gate runs before payload decoding so a peer
/// on another protocol revision gets a version rejection, not a parse error.
pub fn decode_message(bytes: &[u8]) -> Result<Message, DecodeError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| DecodeError::Malformed("frame is not a JSON object".into()))?;
    let version =
        obj.get("protocol_version").and_then(Value::as_u64).ok_or_else(|| DecodeError::Malformed("missing protocol_version".into()))?;
    if version != PROTOCOL_VERSION as u64 {
        return Err(DecodeError::Version { got: version });
    }
    let tag = obj
        .get("payload")
        .and_then(|p| p.get("type"))
        .and_then(Value::as_str)
        .ok_or_else(|| DecodeError::Malformed("payload has no type tag".into()))?;
    if !PAYLOAD_TAGS.contains(&tag) {
        return Err(DecodeError::UnknownPayload(tag.to_string()));
    }
    serde_json::from_value(value).map_err(|e| DecodeError::Malformed(e.to_string()))
}
