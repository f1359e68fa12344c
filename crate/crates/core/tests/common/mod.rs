#![allow(dead_code)]

pub mod ws;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use atcsim::exercise::{Scenario, ScheduledEntry, Sector, Waypoint};
use atcsim::protocol::{Picture, Track};
use atcsim::sim::{AircraftState, Airspace, Position, SeparationMinima, WorldState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn callsign(i: usize) -> String {
    format!("T{i:04}")
}

/// `n` aircraft packed into a square of side `span` NM and a band of
/// `band_ft`, dense enough that many pairs lose separation.
pub fn random_aircraft(r: &mut ChaCha8Rng, n: usize, span: f64, band_ft: f64) -> Vec<AircraftState> {
    (0..n)
        .map(|i| {
            let p = Position::new(r.gen_range(-span..span), r.gen_range(-span..span), r.gen_range(0.0..band_ft));
            AircraftState::new(callsign(i), p, r.gen_range(0.0..360.0), r.gen_range(0.0..500.0))
        })
        .collect()
}

pub fn world_of(aircraft: Vec<AircraftState>, tick_seconds: f64) -> WorldState {
    WorldState::new(tick_seconds, Arc::new(Airspace::default())).unwrap().with_aircraft(aircraft).unwrap()
}

/// Exhaustive pairwise check written from the definition: a pair is in
/// conflict when it is strictly inside both minima.
pub fn brute_force_pairs(aircraft: &[AircraftState], minima: &SeparationMinima) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for i in 0..aircraft.len() {
        for j in 0..aircraft.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&aircraft[i], &aircraft[j]);
            let dx = a.position.x_nm - b.position.x_nm;
            let dy = a.position.y_nm - b.position.y_nm;
            let lateral = (dx * dx + dy * dy).sqrt();
            let vertical = (a.position.alt_ft - b.position.alt_ft).abs();
            if lateral < minima.lateral_nm && vertical < minima.vertical_ft {
                let pair = if a.callsign < b.callsign {
                    (a.callsign.clone(), b.callsign.clone())
                } else {
                    (b.callsign.clone(), a.callsign.clone())
                };
                out.insert(pair);
            }
        }
    }
    out
}

pub fn track(cs: &str, x: f64, y: f64, alt: f64) -> Track {
    Track {
        callsign: cs.to_string(),
        position: Position::new(x, y, alt),
        heading_deg: 90.0,
        ground_speed_kt: 250.0,
        sector: "S1".into(),
        emergency: false,
        radio_failure: false,
    }
}

/// One step of a random picture evolution: adds, removes, moves and label
/// changes.
pub fn evolve(r: &mut ChaCha8Rng, picture: &Picture, next_id: &mut usize) -> Picture {
    let mut p = picture.clone();
    for _ in 0..r.gen_range(0..3) {
        *next_id += 1;
        let cs = callsign(*next_id);
        p.insert(cs.clone(), track(&cs, r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0), r.gen_range(0.0..30000.0)));
    }
    let keys: Vec<String> = p.keys().cloned().collect();
    for cs in keys {
        match r.gen_range(0..10) {
            0 => {
                p.remove(&cs);
            }
            1 => {
                let t = p.get_mut(&cs).unwrap();
                t.emergency = !t.emergency;
            }
            2 => {
                p.get_mut(&cs).unwrap().sector = format!("S{}", r.gen_range(1..4));
            }
            3..=7 => {
                let t = p.get_mut(&cs).unwrap();
                t.position.x_nm += r.gen_range(-0.2..0.2);
                t.position.y_nm += r.gen_range(-0.2..0.2);
                t.heading_deg = r.gen_range(0.0..360.0);
                t.ground_speed_kt = r.gen_range(100.0..400.0);
            }
            _ => {}
        }
    }
    p
}

pub fn square(id: &str, x0: f64, y0: f64, side: f64) -> Sector {
    Sector {
        id: id.to_string(),
        boundary: vec![
            Position::new(x0, y0, 0.0),
            Position::new(x0 + side, y0, 0.0),
            Position::new(x0 + side, y0 + side, 0.0),
            Position::new(x0, y0 + side, 0.0),
        ],
        frequency_label: String::new(),
    }
}

/// A structurally valid scenario with `n` aircraft spread far apart, so no
/// spawn conflicts arise; waypoints and routes are populated.
pub fn random_scenario(r: &mut ChaCha8Rng, n: usize, duration_s: f64) -> Scenario {
    let mut s = Scenario::empty("generated");
    s.duration_s = duration_s;
    s.sectors = vec![square("WEST", -200.0, -200.0, 200.0), square("EAST", 0.0, -200.0, 200.0)];
    s.waypoints = (0..4)
        .map(|i| Waypoint { name: format!("WP{i}"), position: Position::new(r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0), 0.0) })
        .collect();
    let ticks = (duration_s / s.tick_seconds) as u64;
    s.schedule = (0..n)
        .map(|i| {
            let pos = Position::new(-180.0 + 40.0 * (i % 9) as f64, -180.0 + 40.0 * (i / 9) as f64, 2000.0 + 1500.0 * (i % 7) as f64);
            let mut e =
                ScheduledEntry::new(&callsign(i), r.gen_range(0..ticks.min(30)), pos, r.gen_range(0.0..360.0), r.gen_range(150.0..450.0));
            if r.gen_bool(0.5) {
                e.route = vec![format!("WP{}", r.gen_range(0..4))];
            }
            if r.gen_bool(0.3) {
                e.cleared_alt_ft = Some(r.gen_range(1000.0..20000.0));
            }
            e
        })
        .collect();
    s
}

/// A random pilot script over the scenario's callsigns and waypoints.
pub fn random_script(r: &mut ChaCha8Rng, scenario: &Scenario, lines: usize) -> String {
    let ticks = scenario.duration_ticks();
    let mut at: Vec<u64> = (0..lines).map(|_| r.gen_range(0..ticks)).collect();
    at.sort_unstable();
    let mut out = String::new();
    for t in at {
        let cs = &scenario.schedule[r.gen_range(0..scenario.schedule.len())].callsign;
        let cmd = match r.gen_range(0..5) {
            0 => format!("{cs} FH {}", r.gen_range(0..360)),
            1 => format!("{cs} C {}", r.gen_range(10..300) * 100),
            2 => format!("{cs} D {}", r.gen_range(10..300) * 100),
            3 => format!("{cs} SPD {}", r.gen_range(120..450)),
            _ => format!("{cs} DCT {}", scenario.waypoints[r.gen_range(0..scenario.waypoints.len())].name),
        };
        out.push_str(&format!("{t} {cmd}\n"));
    }
    out
}
