use super::{detect_conflicts, normalize_heading, AircraftState, Airspace, SeparationEvent, SeparationMinima, WorldState};

/// Slack absorbed when comparing a remaining turn against one tick's turn.
const ANGLE_EPS: f64 = 1e-9;

/// Generic performance figures applied to every aircraft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    pub turn_rate_dps: f64,
    pub speed_change_kt_per_s: f64,
    pub climb_fpm: f64,
    pub descent_fpm: f64,
}

impl Default for Performance {
    fn default() -> Self {
        Self { turn_rate_dps: 3.0, speed_change_kt_per_s: 1.0, climb_fpm: 1800.0, descent_fpm: 1500.0 }
    }
}

/// Advances the world by one tick with default performance.
pub fn step_world(world: &WorldState, minima: &SeparationMinima) -> (WorldState, Vec<SeparationEvent>) {
    step_world_with(world, minima, &Performance::default())
}

/// Advances the world by one tick.
///
/// Order: due spawns enter at their spawn point, then every aircraft is
/// integrated with explicit Euler. Displacement uses the heading and speed
/// held at the start of the tick; heading, altitude and speed then move toward
/// their cleared targets. Separation is checked on the resulting picture.
pub fn step_world_with(world: &WorldState, minima: &SeparationMinima, perf: &Performance) -> (WorldState, Vec<SeparationEvent>) {
    let mut next = world.clone();
    let now = world.clock.tick_index;
    let due = next.pending_spawns.partition_point(|p| p.entry_tick <= now);
    for spawn in next.pending_spawns.drain(..due) {
        next.aircraft.insert(spawn.aircraft.callsign.clone(), spawn.aircraft);
    }

    let dt = world.clock.tick_seconds;
    for a in next.aircraft.values_mut() {
        advance_aircraft(a, &world.airspace, perf, dt);
    }
    next.clock.tick_index += 1;

    let events = detect_conflicts(next.aircraft.values(), minima, next.clock.tick_index);
    (next, events)
}

fn advance_aircraft(a: &mut AircraftState, airspace: &Airspace, perf: &Performance, dt: f64) {
    let heading0 = a.heading_deg;
    let speed0 = a.ground_speed_kt;
    let distance = speed0 / 3600.0 * dt;

    let mut target_heading = a.cleared_heading_deg;
    let mut reached_fix = false;
    if let Some(fix) = a.direct_to.as_ref().and_then(|name| airspace.waypoint(name)) {
        let remaining = a.position.lateral_distance(fix);
        target_heading = Some(a.position.bearing_to(fix));
        reached_fix = remaining <= distance;
    }

    let (sin, cos) = heading0.to_radians().sin_cos();
    a.position.x_nm += distance * sin;
    a.position.y_nm += distance * cos;

    if reached_fix {
        // fix passed: hold the current heading
        a.direct_to = None;
    } else if let Some(target) = target_heading {
        a.heading_deg = turn_toward(heading0, target, perf.turn_rate_dps * dt);
    }

    let alt0 = a.position.alt_ft;
    match a.cleared_alt_ft {
        Some(target) => {
            let diff = target - alt0;
            if diff == 0.0 {
                a.vertical_rate_fpm = 0.0;
            } else {
                let rate = if diff > 0.0 { perf.climb_fpm } else { -perf.descent_fpm };
                let step = rate / 60.0 * dt;
                if diff.abs() <= step.abs() {
                    a.position.alt_ft = target;
                    a.vertical_rate_fpm = 0.0;
                } else {
                    a.position.alt_ft = alt0 + step;
                    a.vertical_rate_fpm = rate;
                }
            }
        }
        None => {
            let alt = alt0 + a.vertical_rate_fpm / 60.0 * dt;
            if alt <= 0.0 {
                a.position.alt_ft = 0.0;
                a.vertical_rate_fpm = 0.0;
            } else {
                a.position.alt_ft = alt;
            }
        }
    }

    if let Some(target) = a.cleared_speed_kt {
        let step = perf.speed_change_kt_per_s * dt;
        let diff = target - speed0;
        a.ground_speed_kt = if diff.abs() <= step { target } else { speed0 + step.copysign(diff) };
    }
}

/// Signed shorter-way turn from `from` to `to` in `(-180, 180]`; an exact
/// reversal is a right turn.
pub(crate) fn turn_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

fn turn_toward(from: f64, to: f64, max_step: f64) -> f64 {
    let delta = turn_delta(from, to);
    if delta.abs() <= max_step + ANGLE_EPS {
        normalize_heading(to)
    } else {
        normalize_heading(from + max_step.copysign(delta))
    }
}
