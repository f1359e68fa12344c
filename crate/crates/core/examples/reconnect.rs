//! A controller drops off the network, is declared dead, and resumes its seat
//! inside the grace window; a second attempt after the window is refused.

use atcsim::exercise::parse_scenario;
use atcsim::host::{LogTarget, ScriptedClient, Session, SessionConfig};
use atcsim::protocol::{BlockConfig, Payload, Role, SupervisorCommand};

fn main() {
    let scenario = parse_scenario(include_bytes!("../data/terminal_area.json")).expect("scenario");
    let config = SessionConfig { heartbeat_timeout_s: 5.0, grace_s: 20.0, ..SessionConfig::default() };
    let mut s = Session::create("B1-1", scenario, BlockConfig::new("B1"), &config, LogTarget::Memory).expect("session");
    let mut sup = ScriptedClient::new("sup");
    let mut ctl = ScriptedClient::new("laptop-7");
    sup.hello(&mut s, Role::Supervisor, None, None);
    ctl.hello(&mut s, Role::Controller, Some(3), None);
    let r = s.tick().expect("tick");
    sup.receive(&r);
    ctl.receive(&r);
    let id = ctl.id().expect("welcomed").to_string();
    sup.send(&mut s, Payload::SupervisorCmd { command: SupervisorCommand::Start });
    println!("{id} seated at station 3");

    // the controller goes silent; the supervisor keeps heartbeating
    let mut gone_at = None;
    for _ in 0..12 {
        sup.send(&mut s, Payload::Heartbeat { resync: false });
        let r = s.tick().expect("tick");
        if gone_at.is_none() && s.client(&id).is_none() {
            gone_at = Some(r.host_tick);
            println!("host tick {}: {id} timed out, station 3 free: {}", r.host_tick, s.occupancy().controller_at(3).is_none());
        }
    }

    ctl.reconnect("laptop-7-retry");
    ctl.hello(&mut s, Role::Controller, None, Some(id.clone()));
    let r = s.tick().expect("tick");
    for m in ctl.receive(&r) {
        match &m.payload {
            Payload::Welcome(w) => println!("resumed as {} at {:?}", w.client_id, w.station.as_ref().map(|st| st.to_string())),
            Payload::StateSnapshot(snap) => {
                println!("snapshot digest matches host: {}", snap.digest == s.picture_digest());
            }
            _ => {}
        }
    }

    // silent again, this time past the grace window
    for _ in 0..30 {
        sup.send(&mut s, Payload::Heartbeat { resync: false });
        s.tick().expect("tick");
    }
    ctl.reconnect("laptop-7-late");
    ctl.hello(&mut s, Role::Controller, None, Some(id));
    let r = s.tick().expect("tick");
    for m in ctl.receive(&r) {
        if let Payload::Reject(j) = &m.payload {
            println!("late resume refused: {} ({})", j.reason, j.detail);
        }
    }
}
