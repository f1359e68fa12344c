//! One exercise session and its serial tick executor.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::canonical::sha256_hex;
use crate::exercise::{has_errors, validate_scenario, Scenario, ScriptedEventKind};
use crate::protocol::{
    check_heartbeat, picture_digest, picture_from_world, Alert, BlockConfig, BlockOccupancy, ClientId, Hello, Liveness, Message,
    MirrorStream, Payload, Phase, Picture, RejectReason, Role, SeqTracker, StateSnapshot, StationId, SupervisorCommand, Welcome,
};
use crate::sim::{apply_pilot_command, parse_pilot_command, step_world, world_digest, CommandError, SeparationEvent, WorldState};

use super::log::{EventLog, LogError, LogHeader, LogRecord, LOG_SCHEMA_VERSION};
use super::HostError;

/// Sender id used on every host-originated message.
pub const HOST_SENDER: &str = "host";

/// Altitude a go-around climbs to when below it.
pub const GO_AROUND_ALT_FT: f64 = 3000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub heartbeat_timeout_s: f64,
    pub grace_s: f64,
    /// Pointer updates forwarded per tutor per second.
    pub pointer_rate_hz: f64,
    /// Shared token every HELLO must carry, if set.
    pub token: Option<String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self { heartbeat_timeout_s: 10.0, grace_s: 120.0, pointer_rate_hz: 10.0, token: None }
    }
}

/// Where a session writes its log.
#[derive(Debug, Clone)]
pub enum LogTarget {
    Memory,
    Discard,
    File(std::path::PathBuf),
}

/// A message addressed to one client (or, for replies to HELLO, to the
/// transport-assigned sender name of the connection).
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: String,
    pub message: Message,
}

#[derive(Debug, Clone)]
pub struct TickReport {
    pub host_tick: u64,
    pub world_tick: u64,
    pub phase: Phase,
    pub digest: String,
    pub separation_events: Vec<SeparationEvent>,
    pub alerts: Vec<Alert>,
    pub outbound: Vec<Outbound>,
    pub processed: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientInfo {
    pub id: ClientId,
    pub name: String,
    pub role: Role,
    pub seat: StationId,
    pub last_seen: u64,
}

pub struct Session {
    id: String,
    block: BlockOccupancy,
    scenario: Scenario,
    phase: Phase,
    world: WorldState,
    timeout_ticks: u64,
    grace_ticks: u64,
    pointers_per_tick: u32,
    token_digest: Option<String>,
    log: EventLog,
    inbox: VecDeque<Message>,
    seq: SeqTracker,
    clients: BTreeMap<ClientId, ClientInfo>,
    departed: BTreeMap<ClientId, ClientInfo>,
    streams: BTreeMap<ClientId, MirrorStream>,
    snapshot_due: BTreeSet<ClientId>,
    pointer_counts: BTreeMap<ClientId, u32>,
    fired: Vec<bool>,
    host_tick: u64,
    out_seq: u64,
    next_client: u64,
    separation_total: u64,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("block", &self.block.block_id())
            .field("phase", &self.phase)
            .field("host_tick", &self.host_tick)
            .field("world_tick", &self.world.clock.tick_index)
            .finish()
    }
}

fn ticks_for(seconds: f64, tick_seconds: f64) -> u64 {
    (seconds / tick_seconds).ceil().max(0.0) as u64
}

impl Session {
    /// Opens a LOBBY session. The scenario must validate without errors.
    pub fn create(
        session_id: &str,
        scenario: Scenario,
        block: BlockConfig,
        config: &SessionConfig,
        target: LogTarget,
    ) -> Result<Self, HostError> {
        let issues = validate_scenario(&scenario);
        if has_errors(&issues) {
            return Err(HostError::InvalidScenario(issues));
        }
        let header = LogHeader {
            schema_version: LOG_SCHEMA_VERSION,
            scenario_digest: scenario.digest(),
            tick_seconds: scenario.tick_seconds,
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            session_id: session_id.to_string(),
            block_id: block.block_id().to_string(),
            heartbeat_timeout_s: config.heartbeat_timeout_s,
            grace_s: config.grace_s,
            pointer_rate_hz: config.pointer_rate_hz,
            token_digest: config.token.as_ref().map(|t| sha256_hex(t.as_bytes())),
        };
        let log = match target {
            LogTarget::Memory => EventLog::in_memory(header),
            LogTarget::Discard => EventLog::discard(header),
            LogTarget::File(path) => EventLog::create(path, header, false)?,
        };
        Self::from_log(scenario, block, log)
    }

    /// Rebuilds the tick-0 session a log header describes, for replay.
    pub fn for_replay(header: &LogHeader, scenario: Scenario) -> Result<Self, HostError> {
        let block = BlockConfig::new(header.block_id.clone());
        Self::from_log(scenario, block, EventLog::discard(header.clone()))
    }

    fn from_log(scenario: Scenario, block: BlockConfig, log: EventLog) -> Result<Self, HostError> {
        let h = log.header().clone();
        let world = scenario.initial_world().map_err(|e| HostError::InvalidWorld(e.to_string()))?;
        Ok(Self {
            id: h.session_id.clone(),
            block: BlockOccupancy::new(block),
            fired: vec![false; scenario.events.len()],
            scenario,
            phase: Phase::Lobby,
            world,
            timeout_ticks: ticks_for(h.heartbeat_timeout_s, h.tick_seconds),
            grace_ticks: ticks_for(h.grace_s, h.tick_seconds),
            pointers_per_tick: (h.pointer_rate_hz * h.tick_seconds).ceil().max(1.0) as u32,
            token_digest: h.token_digest.clone(),
            log,
            inbox: VecDeque::new(),
            seq: SeqTracker::default(),
            clients: BTreeMap::new(),
            departed: BTreeMap::new(),
            streams: BTreeMap::new(),
            snapshot_due: BTreeSet::new(),
            pointer_counts: BTreeMap::new(),
            host_tick: 0,
            out_seq: 0,
            next_client: 0,
            separation_total: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn block_id(&self) -> &str {
        self.block.block_id()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn occupancy(&self) -> &BlockOccupancy {
        &self.block
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut EventLog {
        &mut self.log
    }

    /// Host ticks completed so far.
    pub fn host_tick(&self) -> u64 {
        self.host_tick
    }

    pub fn separation_total(&self) -> u64 {
        self.separation_total
    }

    pub fn clients(&self) -> impl Iterator<Item = &ClientInfo> {
        self.clients.values()
    }

    pub fn client(&self, id: &str) -> Option<&ClientInfo> {
        self.clients.get(id)
    }

    pub fn picture(&self) -> Picture {
        picture_from_world(&self.world)
    }

    pub fn picture_digest(&self) -> String {
        picture_digest(&self.picture())
    }

    pub fn world_digest(&self) -> String {
        world_digest(&self.world)
    }

    pub fn pending_inbound(&self) -> usize {
        self.inbox.len()
    }

    /// Queues an inbound message for the next tick.
    pub fn enqueue(&mut self, message: Message) {
        self.inbox.push_back(message);
    }

    /// Runs one host tick: drain and log the inbox, apply it, advance the
    /// world when running, check liveness, emit frames, record the digest.
    pub fn tick(&mut self) -> Result<TickReport, LogError> {
        let phase_before = self.phase;
        let mut out = Vec::new();
        let mut alerts = Vec::new();
        let mut processed = 0;
        let mut duplicates = 0;
        self.pointer_counts.clear();

        while let Some(msg) = self.inbox.pop_front() {
            self.log.append(LogRecord::Message { tick_index: self.host_tick, message: msg.clone() })?;
            if !self.seq.accept(&msg.sender, msg.seq) {
                duplicates += 1;
                continue;
            }
            processed += 1;
            self.handle(msg, &mut out, &mut alerts);
        }

        let mut separation_events = Vec::new();
        if self.phase == Phase::Running {
            self.fire_due_events(&mut alerts);
            let (next, events) = step_world(&self.world, &self.scenario.minima);
            self.world = next;
            self.separation_total += events.len() as u64;
            alerts.extend(events.iter().cloned().map(|event| Alert::Separation { event }));
            separation_events = events;
            if self.world.clock.tick_index >= self.scenario.duration_ticks() {
                self.phase = Phase::Ended;
            }
        }

        self.check_liveness(&mut out);
        self.emit_frames(&alerts, &mut out);

        let digest = world_digest(&self.world);
        self.log.append(LogRecord::Digest { tick_index: self.host_tick, digest: digest.clone() })?;
        if self.phase != phase_before {
            self.log.sync()?;
        }
        let report = TickReport {
            host_tick: self.host_tick,
            world_tick: self.world.clock.tick_index,
            phase: self.phase,
            digest,
            separation_events,
            alerts,
            outbound: out,
            processed,
            duplicates,
        };
        self.host_tick += 1;
        Ok(report)
    }

    fn host_message(&mut self, payload: Payload) -> Message {
        self.out_seq += 1;
        Message::new(self.out_seq, self.host_tick, &self.id, HOST_SENDER, payload)
    }

    fn send(&mut self, out: &mut Vec<Outbound>, to: &str, payload: Payload) {
        let message = self.host_message(payload);
        out.push(Outbound { to: to.to_string(), message });
    }

    fn reject(&mut self, out: &mut Vec<Outbound>, to: &str, reason: RejectReason, detail: impl Into<String>) {
        self.send(out, to, Payload::reject(reason, detail));
    }

    fn handle(&mut self, msg: Message, out: &mut Vec<Outbound>, alerts: &mut Vec<Alert>) {
        let sender = msg.sender.clone();
        if let Payload::Hello(h) = &msg.payload {
            self.on_hello(&sender, h, out);
            return;
        }
        let Some(client) = self.clients.get_mut(&sender) else {
            self.reject(out, &sender, RejectReason::NotJoined, "send HELLO first");
            return;
        };
        client.last_seen = self.host_tick;
        let role = client.role;
        let seat = client.seat.clone();

        match msg.payload {
            Payload::Hello(_) => unreachable!("handled above"),
            Payload::PilotCmd { command } => {
                if !matches!(role, Role::PseudoPilot | Role::Controller | Role::Supervisor) {
                    self.reject(out, &sender, RejectReason::Forbidden, "role may not issue pilot commands");
                } else if let Err((reason, detail)) = self.execute_command(&command, &sender) {
                    self.reject(out, &sender, reason, detail);
                }
            }
            Payload::ControlInput { command } => {
                if role != Role::RemoteTutor {
                    self.reject(out, &sender, RejectReason::Forbidden, "only tutors send control input");
                    return;
                }
                let Some(grant) = self.block.active_grant_of(&sender).cloned() else {
                    self.reject(out, &sender, RejectReason::NotGranted, "no active control grant");
                    return;
                };
                let station = grant.target_station.to_string();
                match self.execute_command(&command, &station) {
                    Ok(()) => alerts.push(Alert::ControlInput { tutor_id: sender.clone(), station: grant.target_station, command }),
                    Err((reason, detail)) => self.reject(out, &sender, reason, detail),
                }
            }
            Payload::Pointer(ref p) => {
                if role != Role::RemoteTutor {
                    self.reject(out, &sender, RejectReason::Forbidden, "only tutors send pointers");
                    return;
                }
                let Some(att) = self.block.attachment_of(&sender) else {
                    self.reject(out, &sender, RejectReason::NotAttached, "tutor is not attached");
                    return;
                };
                if p.tutor_id != sender || p.target_station != att.controller_station {
                    self.reject(out, &sender, RejectReason::Forbidden, "pointer must name own id and station");
                    return;
                }
                let count = self.pointer_counts.entry(sender.clone()).or_insert(0);
                *count += 1;
                if *count > self.pointers_per_tick {
                    return;
                }
                for to in self.station_occupants(&att.controller_station) {
                    out.push(Outbound { to, message: msg.clone() });
                }
            }
            Payload::ControlGrant { .. } => {
                if role != Role::RemoteTutor {
                    self.reject(out, &sender, RejectReason::Forbidden, "only tutors request control");
                    return;
                }
                match self.block.grant_control(&sender, self.world.clock.tick_index) {
                    Ok(grant) => {
                        let mut to = self.station_occupants(&grant.target_station);
                        to.push(sender.clone());
                        for c in to {
                            self.send(out, &c, Payload::ControlGrant { grant: Some(grant.clone()) });
                        }
                    }
                    Err(e) => self.reject(out, &sender, e.into(), e.to_string()),
                }
            }
            Payload::ControlRevoke { .. } => {
                let tutor = match role {
                    Role::RemoteTutor => Some(sender.clone()),
                    Role::Controller => self.block.tutor_at(seat.index).cloned(),
                    _ => {
                        self.reject(out, &sender, RejectReason::Forbidden, "only tutors and controllers revoke");
                        return;
                    }
                };
                let revoked = tutor.and_then(|t| self.block.revoke_control(&t));
                match revoked {
                    Some(g) => {
                        let mut to = self.station_occupants(&g.target_station);
                        to.push(g.tutor_id.clone());
                        for c in to {
                            self.send(out, &c, Payload::ControlRevoke { grant: Some(g.clone()) });
                        }
                    }
                    None => self.send(out, &sender, Payload::ControlRevoke { grant: None }),
                }
            }
            Payload::Transmission { .. } => {
                let to: Vec<_> = self.clients.keys().filter(|c| **c != sender).cloned().collect();
                for c in to {
                    out.push(Outbound { to: c, message: msg.clone() });
                }
            }
            Payload::SupervisorCmd { command } => {
                if role != Role::Supervisor {
                    self.reject(out, &sender, RejectReason::NotSupervisor, "supervisor role required");
                } else if let Err((reason, detail)) = self.on_supervisor(command, out, alerts) {
                    self.reject(out, &sender, reason, detail);
                }
            }
            Payload::Heartbeat { resync } => {
                if resync {
                    if let Some(s) = self.streams.get_mut(&sender) {
                        s.force_resync();
                    }
                }
            }
            Payload::Bye {} => {
                self.drop_client(&sender, out);
                self.departed.remove(&sender);
            }
            Payload::Welcome(_)
            | Payload::Reject(_)
            | Payload::StateSnapshot(_)
            | Payload::StateDelta { .. }
            | Payload::MirrorFrame { .. } => {
                self.reject(out, &sender, RejectReason::Forbidden, "host-only payload");
            }
        }
    }

    /// Clients seated at a controller station: the controller and coordinator.
    fn station_occupants(&self, station: &StationId) -> Vec<ClientId> {
        let mut v: Vec<ClientId> = self.block.controller_at(station.index).into_iter().cloned().collect();
        v.extend(self.block.coordinator_at(station.index).cloned());
        v
    }

    fn execute_command(&mut self, text: &str, issued_by: &str) -> Result<(), (RejectReason, String)> {
        if !matches!(self.phase, Phase::Running | Phase::Paused) {
            return Err((RejectReason::BadPhase, format!("no traffic in {:?}", self.phase)));
        }
        let cmd = parse_pilot_command(text, &self.world.airspace, issued_by).map_err(command_reject)?;
        match self.world.get(&cmd.callsign) {
            None => return Err((RejectReason::UnknownCallsign, cmd.callsign)),
            Some(a) if a.radio_failure => {
                return Err((RejectReason::BadCommand, format!("{} has no radio contact", cmd.callsign)));
            }
            Some(_) => {}
        }
        self.world = apply_pilot_command(&self.world, &cmd).map_err(command_reject)?;
        Ok(())
    }

    fn on_supervisor(
        &mut self,
        command: SupervisorCommand,
        out: &mut Vec<Outbound>,
        alerts: &mut Vec<Alert>,
    ) -> Result<(), (RejectReason, String)> {
        let bad_phase = |p: Phase| Err((RejectReason::BadPhase, format!("not allowed in {p:?}")));
        match command {
            SupervisorCommand::LoadScenario { scenario } => {
                if self.phase != Phase::Lobby {
                    return bad_phase(self.phase);
                }
                let issues = validate_scenario(&scenario);
                if let Some(first) = issues.iter().find(|i| i.severity == crate::exercise::Severity::Error) {
                    return Err((RejectReason::BadCommand, first.to_string()));
                }
                if scenario.tick_seconds != self.scenario.tick_seconds {
                    return Err((RejectReason::BadCommand, "tick_seconds must match the session".into()));
                }
                let world = scenario.initial_world().map_err(|e| (RejectReason::BadCommand, e.to_string()))?;
                self.fired = vec![false; scenario.events.len()];
                self.scenario = *scenario;
                self.world = world;
            }
            SupervisorCommand::Start => match self.phase {
                Phase::Lobby => self.phase = Phase::Running,
                p => return bad_phase(p),
            },
            SupervisorCommand::Pause => match self.phase {
                Phase::Running => self.phase = Phase::Paused,
                p => return bad_phase(p),
            },
            SupervisorCommand::Resume => match self.phase {
                Phase::Paused => self.phase = Phase::Running,
                p => return bad_phase(p),
            },
            SupervisorCommand::Stop => match self.phase {
                Phase::Running | Phase::Paused => self.phase = Phase::Ended,
                p => return bad_phase(p),
            },
            SupervisorCommand::InjectEvent { kind, callsign, description } => {
                if !matches!(self.phase, Phase::Running | Phase::Paused) {
                    return bad_phase(self.phase);
                }
                if !self.world.aircraft.contains_key(&callsign) {
                    return Err((RejectReason::UnknownCallsign, callsign));
                }
                self.apply_event(kind, &callsign);
                alerts.push(Alert::Scripted { event: kind, callsign, description });
            }
            SupervisorCommand::ReassignStation { client_id, station } => {
                let Some(info) = self.clients.get(&client_id) else {
                    return Err((RejectReason::UnknownClient, client_id));
                };
                let old = info.seat.clone();
                let new = self.block.reassign(&client_id, station).map_err(|r| (r, format!("station {station}")))?;
                if new != old {
                    for c in self.clients.values_mut().filter(|c| c.seat == old) {
                        c.seat = new.clone();
                    }
                    for s in self.streams.values_mut().filter(|s| s.target_station == old) {
                        s.target_station = new.clone();
                    }
                }
                let info = self.clients[&client_id].clone();
                let welcome = self.welcome(&info);
                self.send(out, &client_id, welcome);
            }
        }
        Ok(())
    }

    fn apply_event(&mut self, kind: ScriptedEventKind, callsign: &str) {
        let Some(a) = self.world.aircraft.get_mut(callsign) else { return };
        match kind {
            ScriptedEventKind::EmergencyDeclared => a.emergency = true,
            ScriptedEventKind::RadioFailure => a.radio_failure = true,
            ScriptedEventKind::GoAround => {
                a.direct_to = None;
                a.cleared_heading_deg = Some(a.heading_deg);
                a.cleared_alt_ft = Some(a.position.alt_ft.max(GO_AROUND_ALT_FT));
            }
        }
    }

    /// Scenario events fire once their tick has come and their aircraft is
    /// airborne.
    fn fire_due_events(&mut self, alerts: &mut Vec<Alert>) {
        let now = self.world.clock.tick_index;
        for i in 0..self.scenario.events.len() {
            let ev = &self.scenario.events[i];
            if self.fired[i] || ev.trigger_tick > now || !self.world.aircraft.contains_key(&ev.callsign) {
                continue;
            }
            let (kind, callsign, description) = (ev.kind, ev.callsign.clone(), ev.description.clone());
            self.fired[i] = true;
            self.apply_event(kind, &callsign);
            alerts.push(Alert::Scripted { event: kind, callsign, description });
        }
    }

    fn welcome(&self, info: &ClientInfo) -> Payload {
        Payload::Welcome(Welcome {
            client_id: info.id.clone(),
            role: info.role,
            station: Some(info.seat.clone()),
            tick: self.world.clock.tick_index,
            phase: self.phase,
        })
    }

    fn on_hello(&mut self, route: &str, h: &Hello, out: &mut Vec<Outbound>) {
        if let Some(expected) = &self.token_digest {
            if h.token.as_ref().map(|t| sha256_hex(t.as_bytes())).as_ref() != Some(expected) {
                self.reject(out, route, RejectReason::Forbidden, "bad session token");
                return;
            }
        }
        if let Some(prev) = &h.resume {
            self.on_resume(route, prev, out);
            return;
        }
        let id = format!("{}{}", role_prefix(h.desired_role), self.next_client + 1);
        match self.block.join(&id, h.desired_role, h.desired_station) {
            Ok(seat) => {
                self.next_client += 1;
                let info = ClientInfo {
                    id: id.clone(),
                    name: h.client_name.clone(),
                    role: seat.role,
                    seat: seat.station,
                    last_seen: self.host_tick,
                };
                self.seat_client(route, info, out);
            }
            Err(reason) => self.reject(out, route, reason, format!("{:?} join refused", h.desired_role)),
        }
    }

    fn seat_client(&mut self, route: &str, info: ClientInfo, out: &mut Vec<Outbound>) {
        let welcome = self.welcome(&info);
        self.send(out, route, welcome);
        self.streams.insert(info.id.clone(), MirrorStream::new(info.seat.clone()));
        self.snapshot_due.insert(info.id.clone());
        self.departed.remove(&info.id);
        self.clients.insert(info.id.clone(), info);
    }

    fn on_resume(&mut self, route: &str, prev: &str, out: &mut Vec<Outbound>) {
        if let Some(info) = self.clients.get_mut(prev) {
            // still seated (alive or suspect): rebind, keep grants
            info.last_seen = self.host_tick;
            let info = info.clone();
            let welcome = self.welcome(&info);
            self.send(out, route, welcome);
            if let Some(s) = self.streams.get_mut(prev) {
                s.force_resync();
            }
            self.snapshot_due.insert(info.id);
            return;
        }
        let Some(info) = self.departed.get(prev).cloned() else {
            self.reject(out, route, RejectReason::UnknownClient, prev.to_string());
            return;
        };
        if self.host_tick.saturating_sub(info.last_seen) > self.grace_ticks {
            self.reject(out, route, RejectReason::GraceExpired, "join as a new client");
            return;
        }
        let seated = match info.role {
            Role::RemoteTutor => self.block.attach_tutor(&info.id, info.seat.index).map(|_| ()).map_err(RejectReason::from),
            role => self.block.join(&info.id, role, Some(info.seat.index)).map(|_| ()),
        };
        match seated {
            Ok(()) => {
                let info = ClientInfo { last_seen: self.host_tick, ..info };
                self.seat_client(route, info, out);
            }
            Err(RejectReason::StationTaken | RejectReason::AlreadyAttached | RejectReason::BlockFull) => {
                self.reject(out, route, RejectReason::StationReassigned, info.seat.to_string());
            }
            Err(reason) => self.reject(out, route, reason, info.seat.to_string()),
        }
    }

    /// Frees everything the client holds and parks it for a possible resume.
    fn drop_client(&mut self, id: &str, out: &mut Vec<Outbound>) {
        let Some(info) = self.clients.remove(id) else { return };
        if let Some(g) = self.block.active_grant_of(id).cloned() {
            for c in self.station_occupants(&g.target_station) {
                let mut g = g.clone();
                g.active = false;
                self.send(out, &c, Payload::ControlRevoke { grant: Some(g) });
            }
        }
        if info.role == Role::Controller {
            // a tutor's grant on this station lapses with the controller
            if let Some(t) = self.block.tutor_at(info.seat.index).cloned() {
                if let Some(mut g) = self.block.active_grant_of(&t).cloned() {
                    g.active = false;
                    self.send(out, &t, Payload::ControlRevoke { grant: Some(g) });
                }
            }
        }
        self.block.leave(id);
        self.streams.remove(id);
        self.snapshot_due.remove(id);
        self.departed.insert(id.to_string(), info);
    }

    fn check_liveness(&mut self, out: &mut Vec<Outbound>) {
        let dead: Vec<ClientId> = self
            .clients
            .values()
            .filter(|c| check_heartbeat(c.last_seen, self.host_tick, self.timeout_ticks) == Liveness::Dead)
            .map(|c| c.id.clone())
            .collect();
        for id in dead {
            self.drop_client(&id, out);
        }
    }

    /// Liveness of a seated client as of the current host tick.
    pub fn liveness(&self, id: &str) -> Option<Liveness> {
        let c = self.clients.get(id)?;
        Some(check_heartbeat(c.last_seen, self.host_tick, self.timeout_ticks))
    }

    fn emit_frames(&mut self, alerts: &[Alert], out: &mut Vec<Outbound>) {
        let picture = picture_from_world(&self.world);
        let tick = self.world.clock.tick_index;
        let phase = self.phase;
        let ids: Vec<ClientId> = self.clients.keys().cloned().collect();
        for id in ids {
            let info = &self.clients[&id];
            let role = info.role;
            let visible: Vec<Alert> = alerts.iter().filter(|a| alert_visible(a, info)).cloned().collect();
            if self.snapshot_due.remove(&id) {
                let snap = Payload::StateSnapshot(StateSnapshot {
                    tick,
                    phase,
                    digest: picture_digest(&picture),
                    tracks: picture.clone(),
                    alerts: visible.clone(),
                });
                self.send(out, &id, snap);
                if role != Role::RemoteTutor {
                    if let Some(s) = self.streams.get_mut(&id) {
                        s.prime(&picture);
                    }
                    continue;
                }
            }
            let Some(stream) = self.streams.get_mut(&id) else { continue };
            let frame = stream.next_frame(&picture);
            let payload = if role == Role::RemoteTutor {
                Payload::MirrorFrame { tick, frame, alerts: visible }
            } else {
                Payload::StateDelta { tick, phase, frame, alerts: visible }
            };
            self.send(out, &id, payload);
        }
    }
}

fn alert_visible(alert: &Alert, client: &ClientInfo) -> bool {
    match alert {
        Alert::ControlInput { station, .. } => {
            client.role == Role::Supervisor || client.role != Role::PseudoPilot && client.seat == *station
        }
        _ => true,
    }
}

fn role_prefix(role: Role) -> &'static str {
    match role {
        Role::Controller => "ctl",
        Role::Coordinator => "crd",
        Role::PseudoPilot => "plt",
        Role::Supervisor => "sup",
        Role::RemoteTutor => "tut",
    }
}

fn command_reject(e: CommandError) -> (RejectReason, String) {
    let reason = match e {
        CommandError::UnknownCallsign(_) => RejectReason::UnknownCallsign,
        _ => RejectReason::BadCommand,
    };
    (reason, e.to_string())
}
