//! Deterministic air-traffic simulation.
//!
//! Everything here is a pure function over immutable values: the host calls
//! [`step_world`] once per tick and [`apply_pilot_command`] for each accepted
//! pilot input, and the same inputs always produce the same [`world_digest`].
//!
//! Geometry is a flat local Cartesian plane in nautical miles with `+x` east
//! and `+y` north. Headings are degrees clockwise from north.

mod command;
mod conflict;
mod digest;
mod kinematics;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use command::{apply_pilot_command, parse_pilot_command, CommandError, PilotCommand, PilotVerb};
pub use conflict::{detect_conflicts, SeparationEvent};
pub use digest::world_digest;
pub use kinematics::{step_world, Performance};

/// Normalizes any finite angle into `[0, 360)`.
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub tick_index: u64,
    pub tick_seconds: f64,
}

impl SimClock {
    pub fn new(tick_seconds: f64) -> Self {
        Self { tick_index: 0, tick_seconds }
    }

    pub fn elapsed_s(&self) -> f64 {
        self.tick_index as f64 * self.tick_seconds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x_nm: f64,
    pub y_nm: f64,
    #[serde(default)]
    pub alt_ft: f64,
}

impl Position {
    pub fn new(x_nm: f64, y_nm: f64, alt_ft: f64) -> Self {
        Self { x_nm, y_nm, alt_ft }
    }

    pub fn lateral_distance(&self, other: &Position) -> f64 {
        (self.x_nm - other.x_nm).hypot(self.y_nm - other.y_nm)
    }

    /// Bearing in degrees from `self` to `other`, in `[0, 360)`.
    pub fn bearing_to(&self, other: &Position) -> f64 {
        let dx = other.x_nm - self.x_nm;
        let dy = other.y_nm - self.y_nm;
        normalize_heading(dx.atan2(dy).to_degrees())
    }

    pub fn is_valid(&self) -> bool {
        self.x_nm.is_finite() && self.y_nm.is_finite() && self.alt_ft.is_finite() && self.alt_ft >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub callsign: String,
    pub position: Position,
    pub heading_deg: f64,
    pub ground_speed_kt: f64,
    #[serde(default)]
    pub vertical_rate_fpm: f64,
    #[serde(default)]
    pub cleared_heading_deg: Option<f64>,
    #[serde(default)]
    pub cleared_alt_ft: Option<f64>,
    #[serde(default)]
    pub cleared_speed_kt: Option<f64>,
    #[serde(default)]
    pub direct_to: Option<String>,
    pub controlling_sector: String,
    #[serde(default)]
    pub emergency: bool,
    #[serde(default)]
    pub radio_failure: bool,
}

impl AircraftState {
    /// A level aircraft with no clearances.
    pub fn new(callsign: impl Into<String>, position: Position, heading_deg: f64, ground_speed_kt: f64) -> Self {
        Self {
            callsign: callsign.into(),
            position,
            heading_deg: normalize_heading(heading_deg),
            ground_speed_kt,
            vertical_rate_fpm: 0.0,
            cleared_heading_deg: None,
            cleared_alt_ft: None,
            cleared_speed_kt: None,
            direct_to: None,
            controlling_sector: String::new(),
            emergency: false,
            radio_failure: false,
        }
    }

    pub fn in_sector(mut self, sector: impl Into<String>) -> Self {
        self.controlling_sector = sector.into();
        self
    }

    /// Checks the value domains of every field; returns the offending field name.
    pub fn domain_violation(&self) -> Option<&'static str> {
        let heading_ok = |h: f64| h.is_finite() && (0.0..360.0).contains(&h);
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if self.callsign.is_empty() {
            return Some("callsign");
        }
        if !self.position.is_valid() {
            return Some("position");
        }
        if !heading_ok(self.heading_deg) {
            return Some("heading_deg");
        }
        if !nonneg(self.ground_speed_kt) {
            return Some("ground_speed_kt");
        }
        if !self.vertical_rate_fpm.is_finite() {
            return Some("vertical_rate_fpm");
        }
        if self.cleared_heading_deg.is_some_and(|h| !heading_ok(h)) {
            return Some("cleared_heading_deg");
        }
        if self.cleared_alt_ft.is_some_and(|a| !nonneg(a)) {
            return Some("cleared_alt_ft");
        }
        if self.cleared_speed_kt.is_some_and(|s| !nonneg(s)) {
            return Some("cleared_speed_kt");
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationMinima {
    pub lateral_nm: f64,
    pub vertical_ft: f64,
}

impl Default for SeparationMinima {
    fn default() -> Self {
        Self { lateral_nm: 5.0, vertical_ft: 1000.0 }
    }
}

impl SeparationMinima {
    pub fn is_valid(&self) -> bool {
        self.lateral_nm.is_finite() && self.lateral_nm > 0.0 && self.vertical_ft.is_finite() && self.vertical_ft > 0.0
    }
}

/// Static navigation data the simulation needs: waypoint positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Airspace {
    pub waypoints: BTreeMap<String, Position>,
}

impl Airspace {
    pub fn waypoint(&self, name: &str) -> Option<&Position> {
        self.waypoints.get(name)
    }
}

/// An aircraft waiting to enter the exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingSpawn {
    pub entry_tick: u64,
    pub aircraft: AircraftState,
}

/// Authoritative simulation snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub clock: SimClock,
    pub aircraft: BTreeMap<String, AircraftState>,
    /// Ordered by `(entry_tick, callsign)`.
    pub pending_spawns: Vec<PendingSpawn>,
    pub airspace: Arc<Airspace>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("duplicate callsign {0}")]
    DuplicateCallsign(String),
    #[error("tick_seconds must be positive and finite")]
    BadTick,
}

impl WorldState {
    pub fn new(tick_seconds: f64, airspace: Arc<Airspace>) -> Result<Self, WorldError> {
        if !(tick_seconds.is_finite() && tick_seconds > 0.0) {
            return Err(WorldError::BadTick);
        }
        Ok(Self { clock: SimClock::new(tick_seconds), aircraft: BTreeMap::new(), pending_spawns: Vec::new(), airspace })
    }

    pub fn with_aircraft(mut self, aircraft: impl IntoIterator<Item = AircraftState>) -> Result<Self, WorldError> {
        for a in aircraft {
            self.insert_aircraft(a)?;
        }
        Ok(self)
    }

    pub fn insert_aircraft(&mut self, a: AircraftState) -> Result<(), WorldError> {
        if self.has_callsign(&a.callsign) {
            return Err(WorldError::DuplicateCallsign(a.callsign));
        }
        self.aircraft.insert(a.callsign.clone(), a);
        Ok(())
    }

    pub fn schedule_spawn(&mut self, entry_tick: u64, aircraft: AircraftState) -> Result<(), WorldError> {
        if self.has_callsign(&aircraft.callsign) {
            return Err(WorldError::DuplicateCallsign(aircraft.callsign));
        }
        let key = (entry_tick, aircraft.callsign.clone());
        let idx = self.pending_spawns.partition_point(|p| (p.entry_tick, p.aircraft.callsign.as_str()) < (key.0, key.1.as_str()));
        self.pending_spawns.insert(idx, PendingSpawn { entry_tick, aircraft });
        Ok(())
    }

    pub fn has_callsign(&self, callsign: &str) -> bool {
        self.aircraft.contains_key(callsign) || self.pending_spawns.iter().any(|p| p.aircraft.callsign == callsign)
    }

    pub fn get(&self, callsign: &str) -> Option<&AircraftState> {
        self.aircraft.get(callsign)
    }
}
