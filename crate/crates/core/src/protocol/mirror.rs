//! Radar-picture mirroring by state deltas.
//!
//! A sender keeps the last picture it sent to each receiver and emits the
//! ADD/REMOVE/MOVE operations that turn it into the current one. Every frame
//! names the digest of the picture it applies to; a receiver holding anything
//! else must ask for a full snapshot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StationId;
use crate::canonical::CanonicalWriter;
use crate::sim::{Position, WorldState};

/// Delta frames between forced full snapshots.
pub const SNAPSHOT_INTERVAL: u32 = 50;

/// One aircraft as drawn on a radar scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub callsign: String,
    pub position: Position,
    pub heading_deg: f64,
    pub ground_speed_kt: f64,
    pub sector: String,
    #[serde(default)]
    pub emergency: bool,
    #[serde(default)]
    pub radio_failure: bool,
}

impl Track {
    fn same_label(&self, other: &Track) -> bool {
        self.sector == other.sector && self.emergency == other.emergency && self.radio_failure == other.radio_failure
    }
}

pub type Picture = BTreeMap<String, Track>;

pub fn picture_from_world(world: &WorldState) -> Picture {
    world
        .aircraft
        .values()
        .map(|a| {
            let t = Track {
                callsign: a.callsign.clone(),
                position: a.position,
                heading_deg: a.heading_deg,
                ground_speed_kt: a.ground_speed_kt,
                sector: a.controlling_sector.clone(),
                emergency: a.emergency,
                radio_failure: a.radio_failure,
            };
            (t.callsign.clone(), t)
        })
        .collect()
}

pub fn picture_digest(picture: &Picture) -> String {
    let mut w = CanonicalWriter::new("picture/v1");
    for t in picture.values() {
        w.field("cs", &t.callsign)
            .num("x", t.position.x_nm)
            .num("y", t.position.y_nm)
            .num("alt", t.position.alt_ft)
            .num("hdg", t.heading_deg)
            .num("gs", t.ground_speed_kt)
            .field("sec", &t.sector)
            .field("emg", if t.emergency { "1" } else { "0" })
            .field("rf", if t.radio_failure { "1" } else { "0" })
            .end_record();
    }
    w.digest()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MirrorOp {
    /// Inserts or replaces a track.
    Add {
        track: Track,
    },
    Remove {
        callsign: String,
    },
    Move {
        callsign: String,
        position: Position,
        heading_deg: f64,
        ground_speed_kt: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameBody {
    Ops(Vec<MirrorOp>),
    FullSnapshot(Vec<Track>),
}

/// Exactly one of `ops` and `full_snapshot` is present on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMirrorFrame", into = "RawMirrorFrame")]
pub struct MirrorFrame {
    pub target_station: StationId,
    /// Digest of the picture the ops apply to; absent on snapshots.
    pub base_digest: Option<String>,
    /// Digest of the picture after applying this frame.
    pub digest: String,
    pub body: FrameBody,
}

impl MirrorFrame {
    pub fn is_snapshot(&self) -> bool {
        matches!(self.body, FrameBody::FullSnapshot(_))
    }

    pub fn ops(&self) -> &[MirrorOp] {
        match &self.body {
            FrameBody::Ops(ops) => ops,
            FrameBody::FullSnapshot(_) => &[],
        }
    }

    pub fn snapshot(target_station: StationId, picture: &Picture) -> Self {
        Self {
            target_station,
            base_digest: None,
            digest: picture_digest(picture),
            body: FrameBody::FullSnapshot(picture.values().cloned().collect()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawMirrorFrame {
    target_station: StationId,
    #[serde(default)]
    base_digest: Option<String>,
    digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ops: Option<Vec<MirrorOp>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    full_snapshot: Option<Vec<Track>>,
}

impl TryFrom<RawMirrorFrame> for MirrorFrame {
    type Error = String;

    fn try_from(raw: RawMirrorFrame) -> Result<Self, Self::Error> {
        let body = match (raw.ops, raw.full_snapshot) {
            (Some(ops), None) => FrameBody::Ops(ops),
            (None, Some(tracks)) => FrameBody::FullSnapshot(tracks),
            _ => return Err("mirror frame needs exactly one of ops and full_snapshot".into()),
        };
        Ok(Self { target_station: raw.target_station, base_digest: raw.base_digest, digest: raw.digest, body })
    }
}

impl From<MirrorFrame> for RawMirrorFrame {
    fn from(f: MirrorFrame) -> Self {
        let (ops, full_snapshot) = match f.body {
            FrameBody::Ops(ops) => (Some(ops), None),
            FrameBody::FullSnapshot(t) => (None, Some(t)),
        };
        Self { target_station: f.target_station, base_digest: f.base_digest, digest: f.digest, ops, full_snapshot }
    }
}

/// Builds the frame taking `prev` to `curr`. A snapshot is sent when `prev` is
/// unknown or `frames_since_snapshot` has reached the snapshot interval.
pub fn make_mirror_frame(
    target_station: StationId,
    prev: Option<&Picture>,
    curr: &Picture,
    frames_since_snapshot: u32,
    snapshot_interval: u32,
) -> MirrorFrame {
    let Some(prev) = prev.filter(|_| frames_since_snapshot < snapshot_interval) else {
        return MirrorFrame::snapshot(target_station, curr);
    };
    let mut ops = Vec::new();
    for cs in prev.keys().filter(|cs| !curr.contains_key(*cs)) {
        ops.push(MirrorOp::Remove { callsign: cs.clone() });
    }
    for (cs, new) in curr {
        match prev.get(cs) {
            None => ops.push(MirrorOp::Add { track: new.clone() }),
            Some(old) if old == new => {}
            Some(old) if old.same_label(new) => ops.push(MirrorOp::Move {
                callsign: cs.clone(),
                position: new.position,
                heading_deg: new.heading_deg,
                ground_speed_kt: new.ground_speed_kt,
            }),
            Some(_) => ops.push(MirrorOp::Add { track: new.clone() }),
        }
    }
    MirrorFrame { target_station, base_digest: Some(picture_digest(prev)), digest: picture_digest(curr), body: FrameBody::Ops(ops) }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MirrorError {
    #[error("frame base {expected} does not match local picture {actual}; full snapshot required")]
    DigestMismatch { expected: String, actual: String },
    #[error("MOVE for unknown track {0}")]
    UnknownTrack(String),
}

/// Applies a frame; snapshots replace the picture wholesale.
pub fn apply_mirror_frame(picture: &Picture, frame: &MirrorFrame) -> Result<Picture, MirrorError> {
    let ops = match &frame.body {
        FrameBody::FullSnapshot(tracks) => {
            return Ok(tracks.iter().map(|t| (t.callsign.clone(), t.clone())).collect());
        }
        FrameBody::Ops(ops) => ops,
    };
    let actual = picture_digest(picture);
    if frame.base_digest.as_deref() != Some(actual.as_str()) {
        return Err(MirrorError::DigestMismatch { expected: frame.base_digest.clone().unwrap_or_default(), actual });
    }
    let mut next = picture.clone();
    for op in ops {
        match op {
            MirrorOp::Add { track } => {
                next.insert(track.callsign.clone(), track.clone());
            }
            MirrorOp::Remove { callsign } => {
                next.remove(callsign);
            }
            MirrorOp::Move { callsign, position, heading_deg, ground_speed_kt } => {
                let t = next.get_mut(callsign).ok_or_else(|| MirrorError::UnknownTrack(callsign.clone()))?;
                t.position = *position;
                t.heading_deg = *heading_deg;
                t.ground_speed_kt = *ground_speed_kt;
            }
        }
    }
    Ok(next)
}

/// Sender side of one mirrored stream.
#[derive(Debug, Clone)]
pub struct MirrorStream {
    pub target_station: StationId,
    last_sent: Option<Picture>,
    frames_since_snapshot: u32,
    snapshot_interval: u32,
}

impl MirrorStream {
    pub fn new(target_station: StationId) -> Self {
        Self::with_interval(target_station, SNAPSHOT_INTERVAL)
    }

    pub fn with_interval(target_station: StationId, snapshot_interval: u32) -> Self {
        Self { target_station, last_sent: None, frames_since_snapshot: 0, snapshot_interval }
    }

    /// The next frame is a full snapshot.
    pub fn force_resync(&mut self) {
        self.last_sent = None;
    }

    /// Records that the receiver already holds `picture` (e.g. from a state
    /// snapshot), so the next frame can be a delta against it.
    pub fn prime(&mut self, picture: &Picture) {
        self.last_sent = Some(picture.clone());
        self.frames_since_snapshot = 0;
    }

    pub fn next_frame(&mut self, curr: &Picture) -> MirrorFrame {
        let frame = make_mirror_frame(
            self.target_station.clone(),
            self.last_sent.as_ref(),
            curr,
            self.frames_since_snapshot,
            self.snapshot_interval,
        );
        self.frames_since_snapshot = if frame.is_snapshot() { 0 } else { self.frames_since_snapshot + 1 };
        self.last_sent = Some(curr.clone());
        frame
    }
}

/// Receiver side: tracks the reconstructed picture and whether a resync is
/// needed.
#[derive(Debug, Clone, Default)]
pub struct MirrorReceiver {
    pub picture: Picture,
    pub needs_resync: bool,
    synced: bool,
}

impl MirrorReceiver {
    /// Applies a frame. On mismatch the picture is kept and `needs_resync`
    /// stays set until a snapshot arrives.
    pub fn receive(&mut self, frame: &MirrorFrame) -> Result<(), MirrorError> {
        if !self.synced && !frame.is_snapshot() {
            self.needs_resync = true;
            return Err(MirrorError::DigestMismatch {
                expected: frame.base_digest.clone().unwrap_or_default(),
                actual: picture_digest(&self.picture),
            });
        }
        match apply_mirror_frame(&self.picture, frame) {
            Ok(p) => {
                self.picture = p;
                self.needs_resync = false;
                self.synced = true;
                Ok(())
            }
            Err(e) => {
                self.needs_resync = true;
                Err(e)
            }
        }
    }

    pub fn digest(&self) -> String {
        picture_digest(&self.picture)
    }
}
