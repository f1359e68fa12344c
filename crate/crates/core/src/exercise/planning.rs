//! Session and rotation planning for a training cohort.
//!
//! A cohort is split into fixed groups in roster order. Within a group,
//! students rotate through the controller, coordinator and pilot seats in
//! slots of 20 to 30 minutes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Smallest workable group: one controller, one coordinator, one pilot.
pub const MIN_GROUP: usize = 3;
pub const MIN_SLOT_S: u64 = 1200;
pub const MAX_SLOT_S: u64 = 1800;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("session capacity {0} is below the minimum group of {MIN_GROUP}")]
    CapacityTooSmall(usize),
    #[error("group size {0} is below the minimum of {MIN_GROUP}")]
    GroupTooSmall(usize),
    #[error("at least one controller station is required")]
    NoStations,
    #[error("exercise duration must be positive")]
    NoDuration,
}

/// A seat in the training room; station numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "seat", content = "station", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Seat {
    Controller(u32),
    Coordinator(u32),
    Pilot(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSlot {
    pub slot_index: u32,
    pub start_s: u64,
    pub end_s: u64,
    /// Seat to index into the group roster.
    pub assignments: BTreeMap<Seat, usize>,
}

impl RotationSlot {
    pub fn controllers(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignments.iter().filter(|(seat, _)| matches!(seat, Seat::Controller(_))).map(|(_, &s)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSchedule {
    pub slot_length_s: u64,
    pub slots: Vec<RotationSlot>,
    /// Set when the slots cannot give every student a controller seat; the
    /// schedule is still the best effort.
    pub infeasible: bool,
}

/// Builds the seat rotation for one group.
///
/// Slot length is `duration / ceil(group / (2 * stations))` clamped to
/// 20-30 minutes (shortened to the whole exercise when that is under 20
/// minutes). Slot `k` rotates the roster by `k * stations`: the first
/// `stations` students control, the next `stations` coordinate, the rest fly
/// pilot stations, so each slot's coordinators control in the following slot.
pub fn rotation_schedule(group_size: usize, duration_s: u64, controller_stations: u32) -> Result<RotationSchedule, PlanError> {
    if group_size < MIN_GROUP {
        return Err(PlanError::GroupTooSmall(group_size));
    }
    if controller_stations == 0 {
        return Err(PlanError::NoStations);
    }
    if duration_s == 0 {
        return Err(PlanError::NoDuration);
    }
    let stations = controller_stations as usize;
    let on_station_per_slot = 2 * stations;
    let rounds = group_size.div_ceil(on_station_per_slot) as u64;
    let mut slot_length = (duration_s / rounds).clamp(MIN_SLOT_S, MAX_SLOT_S);
    if slot_length > duration_s {
        slot_length = duration_s;
    }
    let slot_count = duration_s / slot_length;

    let controllers_per_slot = stations.min(group_size);
    let coordinators_per_slot = stations.min(group_size - controllers_per_slot);
    let slots = (0..slot_count)
        .map(|k| {
            let offset = (k as usize * stations) % group_size;
            let mut assignments = BTreeMap::new();
            for pos in 0..group_size {
                let student = (offset + pos) % group_size;
                let seat = if pos < controllers_per_slot {
                    Seat::Controller(pos as u32 + 1)
                } else if pos < controllers_per_slot + coordinators_per_slot {
                    Seat::Coordinator((pos - controllers_per_slot) as u32 + 1)
                } else {
                    Seat::Pilot((pos - controllers_per_slot - coordinators_per_slot) as u32 + 1)
                };
                assignments.insert(seat, student);
            }
            RotationSlot { slot_index: k as u32, start_s: k * slot_length, end_s: (k + 1) * slot_length, assignments }
        })
        .collect();

    Ok(RotationSchedule { slot_length_s: slot_length, slots, infeasible: (slot_count as usize) * controllers_per_slot < group_size })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedSession {
    /// 1-based.
    pub session_index: u32,
    pub students: Vec<String>,
    /// Empty unless built with [`SessionPlan::with_rotations`].
    #[serde(default)]
    pub rotation: Option<RotationSchedule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub session_count: usize,
    pub sessions: Vec<PlannedSession>,
}

/// Splits the roster, in order, into `ceil(n / capacity)` sessions. The last
/// session takes the remainder.
pub fn plan_sessions<S: AsRef<str>>(students: &[S], session_capacity: usize) -> Result<SessionPlan, PlanError> {
    if session_capacity < MIN_GROUP {
        return Err(PlanError::CapacityTooSmall(session_capacity));
    }
    let sessions: Vec<PlannedSession> = students
        .chunks(session_capacity)
        .enumerate()
        .map(|(i, chunk)| PlannedSession {
            session_index: i as u32 + 1,
            students: chunk.iter().map(|s| s.as_ref().to_string()).collect(),
            rotation: None,
        })
        .collect();
    Ok(SessionPlan { session_count: sessions.len(), sessions })
}

impl SessionPlan {
    /// Attaches a rotation to every session large enough to rotate.
    pub fn with_rotations(mut self, duration_s: u64, controller_stations: u32) -> Result<Self, PlanError> {
        for s in &mut self.sessions {
            s.rotation = match rotation_schedule(s.students.len(), duration_s, controller_stations) {
                Ok(r) => Some(r),
                Err(PlanError::GroupTooSmall(_)) => None,
                Err(e) => return Err(e),
            };
        }
        Ok(self)
    }

    /// Sessions whose rotation leaves somebody without a controller seat,
    /// including groups too small to rotate at all.
    pub fn infeasible_sessions(&self) -> Vec<u32> {
        self.sessions.iter().filter(|s| s.rotation.as_ref().is_none_or(|r| r.infeasible)).map(|s| s.session_index).collect()
    }
}

/// Roster of `n` generated student ids, `S001`..
pub fn numbered_roster(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("S{i:03}")).collect()
}
