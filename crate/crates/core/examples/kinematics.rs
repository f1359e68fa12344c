//! Steps a small world and prints how aircraft turn, climb and slow toward
//! their clearances, and when separation is lost.

use std::sync::Arc;

use atcsim::sim::{step_world, world_digest, AircraftState, Airspace, Position, SeparationMinima, WorldState};

fn main() {
    let mut turning = AircraftState::new("QFA12", Position::new(0.0, 0.0, 8000.0), 90.0, 300.0);
    turning.cleared_heading_deg = Some(180.0);
    turning.cleared_alt_ft = Some(10000.0);
    turning.cleared_speed_kt = Some(250.0);

    let a = AircraftState::new("VOZ1", Position::new(-20.0, 20.0, 12000.0), 90.0, 360.0);
    let b = AircraftState::new("VOZ2", Position::new(20.0, 20.0, 12400.0), 270.0, 360.0);

    let mut world =
        WorldState::new(1.0, Arc::new(Airspace::default())).and_then(|w| w.with_aircraft([turning, a, b])).expect("valid world");
    let minima = SeparationMinima::default();

    for _ in 0..120 {
        let (next, events) = step_world(&world, &minima);
        world = next;
        let t = world.clock.tick_index;
        let q = &world.aircraft["QFA12"];
        if t.is_multiple_of(10) {
            println!(
                "t={t:>3} QFA12 hdg {:6.2} alt {:7.1} spd {:5.1} at ({:7.3}, {:7.3})",
                q.heading_deg, q.position.alt_ft, q.ground_speed_kt, q.position.x_nm, q.position.y_nm
            );
        }
        for e in events.iter().filter(|_| t.is_multiple_of(10)) {
            println!("      loss of separation {}/{}: {:.2} NM, {:.0} ft", e.pair.0, e.pair.1, e.lateral_nm, e.vertical_ft);
        }
    }
    println!("digest {}", world_digest(&world));
}
