//! Block capacity, seat occupancy, tutor attachments and control grants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClientId, RejectReason, Role, StationId};

pub const MAX_CONTROLLER_STATIONS: u32 = 10;
pub const MAX_PILOT_STATIONS: u32 = 10;
pub const SUPERVISORS_PER_BLOCK: u32 = 1;

/// One supervisor's unit of capacity. Limits are fixed; only the id varies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    block_id: String,
}

impl BlockConfig {
    pub fn new(block_id: impl Into<String>) -> Self {
        Self { block_id: block_id.into() }
    }

    pub fn block_id(&self) -> &str {
        &self.block_id
    }

    pub fn max_controller_stations(&self) -> u32 {
        MAX_CONTROLLER_STATIONS
    }

    pub fn max_pilot_stations(&self) -> u32 {
        MAX_PILOT_STATIONS
    }

    pub fn supervisor_count(&self) -> u32 {
        SUPERVISORS_PER_BLOCK
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockError {
    #[error("block id {0} already exists")]
    DuplicateBlockId(String),
    #[error("no such block {0}")]
    NoSuchBlock(String),
}

/// Produces a new block with the template's limits under an unused id.
pub fn clone_block(template: &BlockConfig, new_block_id: &str, existing: &BTreeSet<String>) -> Result<BlockConfig, BlockError> {
    if existing.contains(new_block_id) || template.block_id == new_block_id {
        return Err(BlockError::DuplicateBlockId(new_block_id.to_string()));
    }
    Ok(BlockConfig::new(new_block_id))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorAttachment {
    pub tutor_id: ClientId,
    pub controller_station: StationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlGrant {
    pub tutor_id: ClientId,
    pub target_station: StationId,
    pub granted_at_tick: u64,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AttachError {
    #[error("controller station already has a tutor")]
    AlreadyAttached,
    #[error("tutor is attached to another station")]
    TutorBusy,
    #[error("controller station is not occupied")]
    NoOccupant,
    #[error("no such controller station")]
    NoSuchStation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GrantError {
    #[error("tutor is not attached to a station")]
    NotAttached,
    #[error("station already has an active control grant")]
    GrantExists,
    #[error("station has no seated controller")]
    NoOccupant,
}

impl From<AttachError> for RejectReason {
    fn from(e: AttachError) -> Self {
        match e {
            AttachError::AlreadyAttached => RejectReason::AlreadyAttached,
            AttachError::TutorBusy => RejectReason::TutorBusy,
            AttachError::NoOccupant => RejectReason::NoOccupant,
            AttachError::NoSuchStation => RejectReason::NoSuchStation,
        }
    }
}

impl From<GrantError> for RejectReason {
    fn from(e: GrantError) -> Self {
        match e {
            GrantError::NotAttached => RejectReason::NotAttached,
            GrantError::GrantExists => RejectReason::GrantExists,
            GrantError::NoOccupant => RejectReason::NoOccupant,
        }
    }
}

/// Where a client ended up after joining.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinedSeat {
    pub role: Role,
    /// The client's own station, or for coordinators and tutors the
    /// controller station they work with.
    pub station: StationId,
}

/// Live occupancy of one block.
///
/// Invariants: at most 10 controllers, 10 pilots and 1 supervisor; at most
/// one coordinator per seated controller station; tutor attachments form a
/// partial one-to-one map onto controller stations; at most one active grant
/// per station, always held by that station's attached tutor.
#[derive(Debug, Clone)]
pub struct BlockOccupancy {
    config: BlockConfig,
    controllers: BTreeMap<u32, ClientId>,
    pilots: BTreeMap<u32, ClientId>,
    supervisor: Option<ClientId>,
    coordinators: BTreeMap<u32, ClientId>,
    tutor_by_station: BTreeMap<u32, ClientId>,
    station_by_tutor: BTreeMap<ClientId, u32>,
    grants: BTreeMap<u32, ControlGrant>,
}

impl BlockOccupancy {
    pub fn new(config: BlockConfig) -> Self {
        Self {
            config,
            controllers: BTreeMap::new(),
            pilots: BTreeMap::new(),
            supervisor: None,
            coordinators: BTreeMap::new(),
            tutor_by_station: BTreeMap::new(),
            station_by_tutor: BTreeMap::new(),
            grants: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &BlockConfig {
        &self.config
    }

    pub fn block_id(&self) -> &str {
        self.config.block_id()
    }

    pub fn controller_count(&self) -> usize {
        self.controllers.len()
    }

    pub fn pilot_count(&self) -> usize {
        self.pilots.len()
    }

    pub fn supervisor(&self) -> Option<&ClientId> {
        self.supervisor.as_ref()
    }

    pub fn controller_at(&self, index: u32) -> Option<&ClientId> {
        self.controllers.get(&index)
    }

    pub fn coordinator_at(&self, index: u32) -> Option<&ClientId> {
        self.coordinators.get(&index)
    }

    pub fn tutor_at(&self, index: u32) -> Option<&ClientId> {
        self.tutor_by_station.get(&index)
    }

    pub fn is_empty(&self) -> bool {
        self.controllers.is_empty()
            && self.pilots.is_empty()
            && self.supervisor.is_none()
            && self.coordinators.is_empty()
            && self.tutor_by_station.is_empty()
    }

    /// Whether `client` holds any seat or tutor attachment in this block.
    pub fn is_seated(&self, client: &str) -> bool {
        [&self.controllers, &self.pilots, &self.coordinators].iter().any(|m| find(m, client).is_some())
            || self.supervisor.as_deref() == Some(client)
            || self.station_by_tutor.contains_key(client)
    }

    /// Seats a client in the requested role.
    ///
    /// Controllers and pilots take the requested station or the lowest free
    /// one. Coordinators and tutors must name an occupied controller station.
    /// A client holds at most one seat; a second join is `ALREADY_ATTACHED`.
    pub fn join(&mut self, client: &str, role: Role, desired_station: Option<u32>) -> Result<JoinedSeat, RejectReason> {
        if self.is_seated(client) {
            return Err(RejectReason::AlreadyAttached);
        }
        let block = self.config.block_id.clone();
        match role {
            Role::Controller => {
                let idx = take_slot(&mut self.controllers, MAX_CONTROLLER_STATIONS, desired_station, client)?;
                Ok(JoinedSeat { role, station: StationId::controller(&block, idx) })
            }
            Role::PseudoPilot => {
                let idx = take_slot(&mut self.pilots, MAX_PILOT_STATIONS, desired_station, client)?;
                Ok(JoinedSeat { role, station: StationId::pilot(&block, idx) })
            }
            Role::Supervisor => {
                if self.supervisor.is_some() {
                    return Err(RejectReason::BlockFull);
                }
                self.supervisor = Some(client.to_string());
                Ok(JoinedSeat { role, station: StationId::supervisor(&block) })
            }
            Role::Coordinator => {
                let idx = desired_station.ok_or(RejectReason::NoOccupant)?;
                if !self.controllers.contains_key(&idx) {
                    return Err(RejectReason::NoOccupant);
                }
                if self.coordinators.contains_key(&idx) {
                    return Err(RejectReason::StationTaken);
                }
                self.coordinators.insert(idx, client.to_string());
                Ok(JoinedSeat { role, station: StationId::controller(&block, idx) })
            }
            Role::RemoteTutor => {
                let idx = desired_station.ok_or(RejectReason::NoOccupant)?;
                let att = self.attach_tutor(client, idx)?;
                Ok(JoinedSeat { role, station: att.controller_station })
            }
        }
    }

    /// Frees every seat, attachment and grant held by `client`.
    pub fn leave(&mut self, client: &str) {
        if let Some(idx) = find(&self.controllers, client) {
            self.controllers.remove(&idx);
            self.grants.remove(&idx);
        }
        if let Some(idx) = find(&self.pilots, client) {
            self.pilots.remove(&idx);
        }
        if let Some(idx) = find(&self.coordinators, client) {
            self.coordinators.remove(&idx);
        }
        if self.supervisor.as_deref() == Some(client) {
            self.supervisor = None;
        }
        self.detach_tutor(client);
    }

    /// Moves a seated controller or pilot to another free station of the same kind.
    pub fn reassign(&mut self, client: &str, index: u32) -> Result<StationId, RejectReason> {
        let block = self.config.block_id.clone();
        if let Some(from) = find(&self.controllers, client) {
            if from == index {
                return Ok(StationId::controller(&block, index));
            }
            check_free(&self.controllers, MAX_CONTROLLER_STATIONS, index)?;
            // a vacated station may still hold a tutor or coordinator waiting for its student
            let clash = |m: &BTreeMap<u32, ClientId>| m.contains_key(&from) && m.contains_key(&index);
            if clash(&self.tutor_by_station) || clash(&self.coordinators) {
                return Err(RejectReason::StationTaken);
            }
            if self.tutor_by_station.contains_key(&from) || self.coordinators.contains_key(&from) {
                // tutor and coordinator follow the student to the new station
                if let Some(t) = self.tutor_by_station.remove(&from) {
                    self.station_by_tutor.insert(t.clone(), index);
                    self.tutor_by_station.insert(index, t);
                }
                if let Some(c) = self.coordinators.remove(&from) {
                    self.coordinators.insert(index, c);
                }
            }
            if let Some(mut g) = self.grants.remove(&from) {
                g.target_station = StationId::controller(&block, index);
                self.grants.insert(index, g);
            }
            let c = self.controllers.remove(&from).expect("found above");
            self.controllers.insert(index, c);
            return Ok(StationId::controller(&block, index));
        }
        if let Some(from) = find(&self.pilots, client) {
            if from != index {
                check_free(&self.pilots, MAX_PILOT_STATIONS, index)?;
                let p = self.pilots.remove(&from).expect("found above");
                self.pilots.insert(index, p);
            }
            return Ok(StationId::pilot(&block, index));
        }
        Err(RejectReason::NotJoined)
    }

    pub fn attach_tutor(&mut self, tutor: &str, controller_index: u32) -> Result<TutorAttachment, AttachError> {
        if controller_index == 0 || controller_index > MAX_CONTROLLER_STATIONS {
            return Err(AttachError::NoSuchStation);
        }
        if self.is_seated(tutor) {
            return Err(AttachError::TutorBusy);
        }
        if self.tutor_by_station.contains_key(&controller_index) {
            return Err(AttachError::AlreadyAttached);
        }
        if !self.controllers.contains_key(&controller_index) {
            return Err(AttachError::NoOccupant);
        }
        self.tutor_by_station.insert(controller_index, tutor.to_string());
        self.station_by_tutor.insert(tutor.to_string(), controller_index);
        Ok(TutorAttachment {
            tutor_id: tutor.to_string(),
            controller_station: StationId::controller(&self.config.block_id, controller_index),
        })
    }

    /// Removes the tutor's attachment and any grant it holds.
    pub fn detach_tutor(&mut self, tutor: &str) -> Option<TutorAttachment> {
        let idx = self.station_by_tutor.remove(tutor)?;
        self.tutor_by_station.remove(&idx);
        self.grants.remove(&idx);
        Some(TutorAttachment { tutor_id: tutor.to_string(), controller_station: StationId::controller(&self.config.block_id, idx) })
    }

    pub fn attachment_of(&self, tutor: &str) -> Option<TutorAttachment> {
        self.station_by_tutor.get(tutor).map(|&idx| TutorAttachment {
            tutor_id: tutor.to_string(),
            controller_station: StationId::controller(&self.config.block_id, idx),
        })
    }

    pub fn attachments(&self) -> Vec<TutorAttachment> {
        self.tutor_by_station
            .iter()
            .map(|(&idx, t)| TutorAttachment { tutor_id: t.clone(), controller_station: StationId::controller(&self.config.block_id, idx) })
            .collect()
    }

    pub fn grant_control(&mut self, tutor: &str, tick: u64) -> Result<ControlGrant, GrantError> {
        let idx = *self.station_by_tutor.get(tutor).ok_or(GrantError::NotAttached)?;
        if !self.controllers.contains_key(&idx) {
            return Err(GrantError::NoOccupant);
        }
        if self.grants.contains_key(&idx) {
            return Err(GrantError::GrantExists);
        }
        let grant = ControlGrant {
            tutor_id: tutor.to_string(),
            target_station: StationId::controller(&self.config.block_id, idx),
            granted_at_tick: tick,
            active: true,
        };
        self.grants.insert(idx, grant.clone());
        Ok(grant)
    }

    /// Revokes the tutor's grant; revoking nothing is a successful no-op.
    pub fn revoke_control(&mut self, tutor: &str) -> Option<ControlGrant> {
        let idx = *self.station_by_tutor.get(tutor)?;
        if self.grants.get(&idx).is_some_and(|g| g.tutor_id == tutor) {
            let mut g = self.grants.remove(&idx).expect("checked");
            g.active = false;
            return Some(g);
        }
        None
    }

    pub fn active_grant_of(&self, tutor: &str) -> Option<&ControlGrant> {
        let idx = self.station_by_tutor.get(tutor)?;
        self.grants.get(idx).filter(|g| g.tutor_id == tutor)
    }

    pub fn grants(&self) -> impl Iterator<Item = &ControlGrant> {
        self.grants.values()
    }

    /// Checks every structural invariant; used by property tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.controllers.len() > MAX_CONTROLLER_STATIONS as usize || self.pilots.len() > MAX_PILOT_STATIONS as usize {
            return Err("capacity exceeded".into());
        }
        if self.controllers.keys().chain(self.pilots.keys()).any(|&i| i == 0 || i > 10) {
            return Err("station index out of range".into());
        }
        if self.tutor_by_station.len() != self.station_by_tutor.len() {
            return Err("attachment maps disagree in size".into());
        }
        for (idx, t) in &self.tutor_by_station {
            if self.station_by_tutor.get(t) != Some(idx) {
                return Err(format!("attachment {t}->{idx} not mirrored"));
            }
        }
        for (idx, g) in &self.grants {
            if self.tutor_by_station.get(idx) != Some(&g.tutor_id) || !g.active {
                return Err(format!("grant on {idx} without matching attachment"));
            }
        }
        let mut holders = BTreeSet::new();
        let seated = [&self.controllers, &self.pilots, &self.coordinators].into_iter().flat_map(|m| m.values());
        for c in seated.chain(self.supervisor.iter()).chain(self.station_by_tutor.keys()) {
            if !holders.insert(c) {
                return Err(format!("{c} holds more than one seat"));
            }
        }
        for idx in self.coordinators.keys() {
            if *idx == 0 || *idx > MAX_CONTROLLER_STATIONS {
                return Err("coordinator on invalid station".into());
            }
        }
        Ok(())
    }
}

fn find(map: &BTreeMap<u32, ClientId>, client: &str) -> Option<u32> {
    map.iter().find(|(_, c)| c.as_str() == client).map(|(&i, _)| i)
}

fn check_free(map: &BTreeMap<u32, ClientId>, max: u32, index: u32) -> Result<(), RejectReason> {
    if index == 0 || index > max {
        return Err(RejectReason::NoSuchStation);
    }
    if map.contains_key(&index) {
        return Err(RejectReason::StationTaken);
    }
    Ok(())
}

fn take_slot(map: &mut BTreeMap<u32, ClientId>, max: u32, desired: Option<u32>, client: &str) -> Result<u32, RejectReason> {
    let idx = match desired {
        Some(i) => {
            check_free(map, max, i)?;
            i
        }
        None => (1..=max).find(|i| !map.contains_key(i)).ok_or(RejectReason::BlockFull)?,
    };
    map.insert(idx, client.to_string());
    Ok(idx)
}
