//! Parses pseudo-pilot console input and applies it to a world.

use atcsim::exercise::{parse_scenario, Scenario};
use atcsim::sim::{apply_pilot_command, parse_pilot_command, step_world};

fn main() {
    let scenario: Scenario = parse_scenario(include_bytes!("../data/terminal_area.json")).expect("bundled scenario is valid");
    let airspace = scenario.airspace();
    let mut world = scenario.initial_world().expect("world");
    let (w, _) = step_world(&world, &scenario.minima);
    world = w;

    for line in ["QFA12 FH 120", "voz841 d 6000", "QFA12 DCT BRAVO", "QFA12 FH 360", "QFA12 C -5", "QFA12 DCT NOWHERE", "ZZZ1 SPD 200"] {
        match parse_pilot_command(line, &airspace, "B1/P1").and_then(|cmd| {
            let next = apply_pilot_command(&world, &cmd)?;
            Ok((cmd, next))
        }) {
            Ok((cmd, next)) => {
                println!("{line:<20} -> {cmd}");
                world = next;
            }
            Err(e) => println!("{line:<20} !! {e}"),
        }
    }

    for _ in 0..60 {
        world = step_world(&world, &scenario.minima).0;
    }
    for a in world.aircraft.values() {
        println!("{:<7} hdg {:6.1} alt {:7.0} direct {:?}", a.callsign, a.heading_deg, a.position.alt_ft, a.direct_to);
    }
}
