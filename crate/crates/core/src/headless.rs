//! Scripted exercises without a network: a supervisor and one pseudo-pilot
//! driven from a text script, recorded like a live session.
//!
//! Script lines are `<tick> <pilot command>`; `#` starts a comment. Ticks
//! are world ticks and must not decrease.
//!
//! ```
//! use atcsim::headless::parse_pilot_script;
//! let s = parse_pilot_script("# turn\n10 AAL1 FH 270\n10 AAL1 C 8000\n").unwrap();
//! assert_eq!(s.lines.len(), 2);
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::exercise::Scenario;
use crate::host::{HostError, LogError, LogTarget, Session, SessionConfig};
use crate::protocol::{BlockConfig, Hello, Message, Payload, Phase, RejectReason, Role, SupervisorCommand};
use crate::sim::{parse_pilot_command, CommandError, WorldState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    /// 1-based line number in the source text.
    pub line: usize,
    pub at_tick: u64,
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PilotScript {
    pub lines: Vec<ScriptLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: tick {tick} is before tick {previous}")]
    Order { line: usize, tick: u64, previous: u64 },
}

pub fn parse_pilot_script(text: &str) -> Result<PilotScript, ScriptError> {
    let mut lines = Vec::new();
    let mut previous = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (tick, command) = body
            .split_once(char::is_whitespace)
            .ok_or_else(|| ScriptError::Syntax { line, message: "expected `<tick> <command>`".into() })?;
        let at_tick: u64 = tick.parse().map_err(|_| ScriptError::Syntax { line, message: format!("bad tick {tick:?}") })?;
        if at_tick < previous {
            return Err(ScriptError::Order { line, tick: at_tick, previous });
        }
        previous = at_tick;
        lines.push(ScriptLine { line, at_tick, command: command.trim().to_string() });
    }
    Ok(PilotScript { lines })
}

#[derive(Debug, thiserror::Error)]
pub enum HeadlessError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("line {line}: {error}")]
    Command { line: usize, error: CommandError },
    #[error("line {line}: callsign {callsign} is not in the scenario")]
    UnknownCallsign { line: usize, callsign: String },
    #[error(transparent)]
    Host(#[from] HostError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("host refused the headless {role:?} client: {reason}")]
    Join { role: Role, reason: RejectReason },
}

#[derive(Debug, Clone)]
pub struct HeadlessConfig {
    pub scenario: Scenario,
    pub script: PilotScript,
    /// Stop after this much simulated time; defaults to the scenario duration.
    pub duration_s: Option<f64>,
    pub log: LogTarget,
}

/// A command the host refused while the script ran.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptReject {
    pub line: usize,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct HeadlessReport {
    pub session_id: String,
    pub final_digest: String,
    /// World digest after every host tick.
    pub digests: Vec<String>,
    pub world_ticks: u64,
    pub host_ticks: u64,
    pub separation_events: u64,
    pub commands_sent: usize,
    pub rejects: Vec<ScriptReject>,
    pub log_path: Option<PathBuf>,
    pub world: WorldState,
}

/// Checks every command parses and names a scheduled aircraft.
pub fn check_script(script: &PilotScript, scenario: &Scenario) -> Result<(), HeadlessError> {
    let airspace = scenario.airspace();
    let callsigns: BTreeSet<&str> = scenario.schedule.iter().map(|e| e.callsign.as_str()).collect();
    for l in &script.lines {
        let cmd = parse_pilot_command(&l.command, &airspace, "script").map_err(|error| HeadlessError::Command { line: l.line, error })?;
        if !callsigns.contains(cmd.callsign.as_str()) {
            return Err(HeadlessError::UnknownCallsign { line: l.line, callsign: cmd.callsign });
        }
    }
    Ok(())
}

struct Scripted {
    route: String,
    id: String,
    seq: u64,
}

impl Scripted {
    fn msg(&mut self, session: &str, tick: u64, payload: Payload) -> Message {
        self.seq += 1;
        let sender = if self.id.is_empty() { &self.route } else { &self.id };
        Message::new(self.seq, tick, session, sender, payload)
    }
}

/// Runs the scenario to completion with the scripted pilot.
///
/// Host tick 0 seats a supervisor and a pilot; tick 1 starts the exercise.
/// A line for world tick `t` is sent in the host tick that advances the world
/// from `t` to `t + 1`. Both clients heartbeat every tick.
pub fn run_headless(config: HeadlessConfig) -> Result<HeadlessReport, HeadlessError> {
    check_script(&config.script, &config.scenario)?;
    let scenario_ticks = config.scenario.duration_ticks();
    let limit = config
        .duration_s
        .map(|d| ((d / config.scenario.tick_seconds).ceil().max(0.0) as u64).min(scenario_ticks))
        .unwrap_or(scenario_ticks);
    let mut session = Session::create("B1-1", config.scenario, BlockConfig::new("B1"), &SessionConfig::default(), config.log)?;
    let sid = session.id().to_string();

    let mut sup = Scripted { route: "headless-sup".into(), id: String::new(), seq: 0 };
    let mut plt = Scripted { route: "headless-plt".into(), id: String::new(), seq: 0 };
    for (c, role) in [(&mut sup, Role::Supervisor), (&mut plt, Role::PseudoPilot)] {
        let hello =
            Payload::Hello(Hello { desired_role: role, desired_station: None, client_name: c.route.clone(), token: None, resume: None });
        let m = c.msg(&sid, 0, hello);
        session.enqueue(m);
    }
    let mut digests = Vec::new();
    let first = session.tick()?;
    digests.push(first.digest);
    for (c, role) in [(&mut sup, Role::Supervisor), (&mut plt, Role::PseudoPilot)] {
        for o in first.outbound.iter().filter(|o| o.to == c.route) {
            match &o.message.payload {
                Payload::Welcome(w) => c.id = w.client_id.clone(),
                Payload::Reject(r) => return Err(HeadlessError::Join { role, reason: r.reason }),
                _ => {}
            }
        }
    }

    let mut next_line = 0;
    let mut rejects = Vec::new();
    let mut started = false;
    while session.phase() != Phase::Ended {
        let host_tick = session.host_tick();
        let world_tick = session.world().clock.tick_index;
        if !started {
            session.enqueue(sup.msg(&sid, host_tick, Payload::SupervisorCmd { command: SupervisorCommand::Start }));
            started = true;
        }
        // script lines sent this tick, to attribute rejects
        let mut sent = Vec::new();
        while let Some(l) = config.script.lines.get(next_line).filter(|l| l.at_tick <= world_tick) {
            let m = plt.msg(&sid, host_tick, Payload::PilotCmd { command: l.command.clone() });
            sent.push(l.line);
            session.enqueue(m);
            next_line += 1;
        }
        if world_tick >= limit {
            session.enqueue(sup.msg(&sid, host_tick, Payload::SupervisorCmd { command: SupervisorCommand::Stop }));
        }
        session.enqueue(sup.msg(&sid, host_tick, Payload::Heartbeat { resync: false }));
        session.enqueue(plt.msg(&sid, host_tick, Payload::Heartbeat { resync: false }));
        let report = session.tick()?;
        let mut pending = sent.into_iter();
        // rejects to the pilot arrive in the order its commands were processed
        for o in report.outbound.iter().filter(|o| o.to == plt.id) {
            if let Payload::Reject(r) = &o.message.payload {
                let line = pending.next().unwrap_or(0);
                rejects.push(ScriptReject { line, reason: r.reason, detail: r.detail.clone() });
            }
        }
        digests.push(report.digest);
    }
    session.log_mut().sync()?;
    Ok(HeadlessReport {
        session_id: sid,
        final_digest: session.world_digest(),
        world_ticks: session.world().clock.tick_index,
        host_ticks: session.host_tick(),
        separation_events: session.separation_total(),
        commands_sent: next_line,
        rejects,
        log_path: session.log().path().map(PathBuf::from),
        digests,
        world: session.world().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exercise::ScheduledEntry;
    use crate::sim::Position;

    fn one_aircraft() -> Scenario {
        let mut s = Scenario::empty("headless");
        s.duration_s = 60.0;
        s.schedule = vec![ScheduledEntry::new("AAL1", 0, Position::new(0.0, 0.0, 10000.0), 0.0, 360.0)];
        s
    }

    fn run(script: &str, duration: Option<f64>) -> HeadlessReport {
        run_headless(HeadlessConfig {
            scenario: one_aircraft(),
            script: parse_pilot_script(script).unwrap(),
            duration_s: duration,
            log: LogTarget::Memory,
        })
        .unwrap()
    }

    #[test]
    fn script_grammar() {
        assert!(matches!(parse_pilot_script("x AAL1 FH 10"), Err(ScriptError::Syntax { line: 1, .. })));
        assert!(matches!(parse_pilot_script("5\n"), Err(ScriptError::Syntax { line: 1, .. })));
        assert!(matches!(parse_pilot_script("5 AAL1 FH 10\n\n3 AAL1 FH 20"), Err(ScriptError::Order { line: 3, tick: 3, previous: 5 })));
        let s = parse_pilot_script("  # header\n0 AAL1 FH 10 # trailing\n").unwrap();
        assert_eq!(s.lines, vec![ScriptLine { line: 2, at_tick: 0, command: "AAL1 FH 10".into() }]);
    }

    #[test]
    fn empty_script_flies_sixty_ticks() {
        let r = run("", None);
        assert_eq!(r.world_ticks, 60);
        assert!(r.rejects.is_empty());
        // north at 360 kt for 60 s is 6 NM
        let a = r.world.get("AAL1").unwrap();
        assert!((a.position.y_nm - 6.0).abs() < 1e-9 && a.position.x_nm.abs() < 1e-9);
        assert_eq!(r.digests.len() as u64, r.host_ticks);
    }

    #[test]
    fn deterministic_and_turns() {
        let a = run("10 AAL1 FH 090\n", None);
        let b = run("10 AAL1 FH 090\n", None);
        let straight = run("", None);
        assert_eq!(a.final_digest, b.final_digest);
        assert_eq!(a.digests, b.digests);
        assert_ne!(a.final_digest, straight.final_digest);
    }

    #[test]
    fn duration_cap_stops_early() {
        let r = run("", Some(20.0));
        assert_eq!(r.world_ticks, 20);
    }

    #[test]
    fn unknown_callsign_rejected_up_front() {
        let err = run_headless(HeadlessConfig {
            scenario: one_aircraft(),
            script: parse_pilot_script("3 ZZZ9 FH 100").unwrap(),
            duration_s: None,
            log: LogTarget::Memory,
        })
        .unwrap_err();
        assert!(matches!(err, HeadlessError::UnknownCallsign { line: 1, .. }));
    }

    #[test]
    fn command_before_spawn_is_reported() {
        let mut sc = one_aircraft();
        sc.schedule[0].entry_tick = 30;
        let r = run_headless(HeadlessConfig {
            scenario: sc,
            script: parse_pilot_script("5 AAL1 FH 100").unwrap(),
            duration_s: None,
            log: LogTarget::Memory,
        })
        .unwrap();
        assert_eq!(r.rejects.len(), 1);
        assert_eq!((r.rejects[0].line, r.rejects[0].reason), (1, RejectReason::UnknownCallsign));
    }
}
