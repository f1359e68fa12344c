use crate::canonical::{fmt_opt, CanonicalWriter};

use super::{AircraftState, WorldState};

pub(crate) fn write_aircraft(w: &mut CanonicalWriter, a: &AircraftState) {
    w.field("cs", &a.callsign)
        .num("x", a.position.x_nm)
        .num("y", a.position.y_nm)
        .num("alt", a.position.alt_ft)
        .num("hdg", a.heading_deg)
        .num("gs", a.ground_speed_kt)
        .num("vr", a.vertical_rate_fpm)
        .field("chdg", fmt_opt(a.cleared_heading_deg))
        .field("calt", fmt_opt(a.cleared_alt_ft))
        .field("cspd", fmt_opt(a.cleared_speed_kt))
        .field("dct", a.direct_to.as_deref().unwrap_or("-"))
        .field("sec", &a.controlling_sector)
        .field("emg", if a.emergency { "1" } else { "0" })
        .field("rf", if a.radio_failure { "1" } else { "0" })
        .end_record();
}

/// SHA-256 over a canonical rendering of the world, hex encoded.
///
/// Aircraft are rendered in callsign order with six-decimal numbers, so two
/// worlds that agree to that precision hash identically.
pub fn world_digest(world: &WorldState) -> String {
    let mut w = CanonicalWriter::new("world/v1");
    w.field("tick", world.clock.tick_index.to_string()).num("dt", world.clock.tick_seconds).end_record();
    let mut aircraft: Vec<&AircraftState> = world.aircraft.values().collect();
    aircraft.sort_by(|a, b| a.callsign.cmp(&b.callsign));
    for a in aircraft {
        write_aircraft(&mut w, a);
    }
    for p in &world.pending_spawns {
        w.field("pending", &p.aircraft.callsign).field("at", p.entry_tick.to_string()).end_record();
    }
    w.digest()
}
