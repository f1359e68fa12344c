//! A tutor is granted control of a student's station, issues a clearance on
//! the student's behalf, and the student takes control back.

use atcsim::exercise::parse_scenario;
use atcsim::host::{LogTarget, ScriptedClient, Session, SessionConfig, TickReport};
use atcsim::protocol::{Alert, BlockConfig, Payload, Role, SupervisorCommand};

fn show(who: &mut ScriptedClient, report: &TickReport) {
    for m in who.receive(report) {
        match &m.payload {
            Payload::ControlGrant { grant: Some(g) } => {
                println!("  {} <- CONTROL_GRANT {} on {}", who.address(), g.tutor_id, g.target_station)
            }
            Payload::ControlRevoke { grant } => println!("  {} <- CONTROL_REVOKE {:?}", who.address(), grant.as_ref().map(|g| &g.tutor_id)),
            Payload::Reject(r) => println!("  {} <- REJECT {} {}", who.address(), r.reason, r.detail),
            Payload::StateDelta { alerts, .. } | Payload::MirrorFrame { alerts, .. } => {
                for a in alerts {
                    if let Alert::ControlInput { tutor_id, station, command } = a {
                        println!("  {} <- alert: {tutor_id} sent {command:?} for {station}", who.address());
                    }
                }
            }
            _ => {}
        }
    }
}

fn main() {
    let scenario = parse_scenario(include_bytes!("../data/terminal_area.json")).expect("scenario");
    let mut s = Session::create("B1-1", scenario, BlockConfig::new("B1"), &SessionConfig::default(), LogTarget::Memory).expect("session");
    let mut sup = ScriptedClient::new("sup");
    let mut ctl = ScriptedClient::new("student");
    let mut tut = ScriptedClient::new("tutor");
    sup.hello(&mut s, Role::Supervisor, None, None);
    ctl.hello(&mut s, Role::Controller, Some(1), None);
    let r = s.tick().expect("tick");
    sup.receive(&r);
    ctl.receive(&r);
    tut.hello(&mut s, Role::RemoteTutor, Some(1), None);
    sup.send(&mut s, Payload::SupervisorCmd { command: SupervisorCommand::Start });
    tut.receive(&s.tick().expect("tick"));

    let step = |label: &str, s: &mut Session, sender: &mut ScriptedClient, payload: Payload, all: [&mut ScriptedClient; 2]| {
        println!("{label}");
        sender.send(s, payload);
        let r = s.tick().expect("tick");
        show(sender, &r);
        for c in all {
            show(c, &r);
        }
    };

    let mut spare = ScriptedClient::new("nobody");
    step(
        "tutor types before any grant",
        &mut s,
        &mut tut,
        Payload::ControlInput { command: "QFA12 FH 180".into() },
        [&mut ctl, &mut spare],
    );
    step("tutor takes control", &mut s, &mut tut, Payload::ControlGrant { grant: None }, [&mut ctl, &mut spare]);
    step(
        "tutor clears QFA12 heading 180",
        &mut s,
        &mut tut,
        Payload::ControlInput { command: "QFA12 FH 180".into() },
        [&mut ctl, &mut spare],
    );
    println!("  QFA12 cleared heading: {:?}", s.world().get("QFA12").and_then(|a| a.cleared_heading_deg));
    step("student takes control back", &mut s, &mut ctl, Payload::ControlRevoke { grant: None }, [&mut tut, &mut spare]);
    step("tutor tries again", &mut s, &mut tut, Payload::ControlInput { command: "QFA12 FH 200".into() }, [&mut ctl, &mut spare]);
}
