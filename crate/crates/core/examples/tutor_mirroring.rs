//! A remote tutor attaches to a controller station and rebuilds its radar
//! picture from MIRROR_FRAME deltas, checking the digest after every frame.

use atcsim::exercise::parse_scenario;
use atcsim::host::{LogTarget, ScriptedClient, Session, SessionConfig};
use atcsim::protocol::{BlockConfig, MirrorReceiver, Payload, PointerOverlay, Role, StationId, SupervisorCommand};

fn main() {
    let scenario = parse_scenario(include_bytes!("../data/terminal_area.json")).expect("scenario");
    let mut s = Session::create("B1-1", scenario, BlockConfig::new("B1"), &SessionConfig::default(), LogTarget::Memory).expect("session");

    let mut sup = ScriptedClient::new("sup");
    let mut ctl = ScriptedClient::new("ctl");
    let mut tut = ScriptedClient::new("tut");
    sup.hello(&mut s, Role::Supervisor, None, None);
    ctl.hello(&mut s, Role::Controller, Some(2), None);
    let r = s.tick().expect("tick");
    sup.receive(&r);
    ctl.receive(&r);
    // the tutor can only attach to an occupied station
    tut.hello(&mut s, Role::RemoteTutor, Some(2), None);
    sup.send(&mut s, Payload::SupervisorCmd { command: SupervisorCommand::Start });

    let station = StationId::controller("B1", 2);
    let mut rx = MirrorReceiver::default();
    let (mut snapshots, mut deltas) = (0, 0);
    for t in 0..180u64 {
        let report = s.tick().expect("tick");
        for m in tut.receive(&report) {
            if let Payload::MirrorFrame { frame, .. } = &m.payload {
                rx.receive(frame).expect("frame applies");
                if frame.is_snapshot() {
                    snapshots += 1;
                } else {
                    deltas += 1;
                }
                assert_eq!(rx.digest(), s.picture_digest(), "tutor picture diverged");
            }
        }
        let pointers = ctl.receive(&report).iter().filter(|m| m.tag() == "POINTER").count();
        if pointers > 0 {
            println!("tick {:>3}: {} sees the tutor pointer", report.world_tick, ctl.address());
        }

        for c in [&mut sup, &mut ctl] {
            c.send(&mut s, Payload::Heartbeat { resync: false });
        }
        // one forced resync halfway, as after a dropped frame
        tut.send(&mut s, Payload::Heartbeat { resync: t == 90 });
        if t % 30 == 0 {
            let id = tut.address().to_string();
            tut.send(&mut s, Payload::Pointer(PointerOverlay::new(&id, station.clone(), t as f64 / 10.0, 5.0, true)));
        }
    }
    println!("{} applied {snapshots} snapshots and {deltas} deltas for {station}", tut.address());
    println!("world tick {}, {} tracks, digest {}", s.world().clock.tick_index, rx.picture.len(), rx.digest());
}
