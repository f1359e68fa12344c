use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::is_self_intersecting;
use super::scenario::Scenario;
use crate::sim::{detect_conflicts, AircraftState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    BadValue,
    BadName,
    DuplicateName,
    NoSectors,
    BadPolygon,
    UndefinedWaypoint,
    UndefinedSector,
    DuplicateCallsign,
    UnknownEventTarget,
    SpawnAfterDuration,
    EventAfterDuration,
    SpawnConflict,
    UnknownField,
    UnsupportedVersion,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().expect("string tag"))
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    pub path: String,
    pub message: String,
}

/// Renders as `SEVERITY CODE path: message`.
impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.code, self.path, self.message)
    }
}

fn error(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue { severity: Severity::Error, code, path: path.into(), message: message.into() }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn is_upper_ident(s: &str, allow_underscore: bool) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || (allow_underscore && c == '_'))
}

/// Shape and cross-reference checks that make a document unusable when they
/// fail. `parse_scenario` rejects on the first of these.
pub(crate) fn structural_issues(s: &Scenario) -> Vec<ValidationIssue> {
    let mut out = Vec::new();
    if !positive(s.duration_s) {
        out.push(error(IssueCode::BadValue, "duration_s", "must be positive"));
    }
    if !positive(s.tick_seconds) {
        out.push(error(IssueCode::BadValue, "tick_seconds", "must be positive"));
    }
    if !positive(s.minima.lateral_nm) {
        out.push(error(IssueCode::BadValue, "minima.lateral_nm", "must be positive"));
    }
    if !positive(s.minima.vertical_ft) {
        out.push(error(IssueCode::BadValue, "minima.vertical_ft", "must be positive"));
    }

    let mut names = HashSet::new();
    for (i, w) in s.waypoints.iter().enumerate() {
        if !is_upper_ident(&w.name, true) {
            out.push(error(IssueCode::BadName, format!("waypoints[{i}].name"), format!("{:?} is not an uppercase identifier", w.name)));
        }
        if !names.insert(w.name.as_str()) {
            out.push(error(IssueCode::DuplicateName, format!("waypoints[{i}].name"), format!("waypoint {} defined twice", w.name)));
        }
        if !(w.position.x_nm.is_finite() && w.position.y_nm.is_finite()) {
            out.push(error(IssueCode::BadValue, format!("waypoints[{i}].position"), "coordinates must be finite"));
        }
    }

    if s.sectors.is_empty() {
        out.push(error(IssueCode::NoSectors, "sectors", "at least one sector is required"));
    }
    let mut sector_ids = HashSet::new();
    for (i, sec) in s.sectors.iter().enumerate() {
        if sec.id.is_empty() || !sector_ids.insert(sec.id.as_str()) {
            out.push(error(IssueCode::DuplicateName, format!("sectors[{i}].id"), format!("sector id {:?} empty or repeated", sec.id)));
        }
        if sec.boundary.len() < 3 {
            out.push(error(IssueCode::BadPolygon, format!("sectors[{i}].boundary"), "needs at least 3 vertices"));
        } else if sec.boundary.iter().any(|p| !(p.x_nm.is_finite() && p.y_nm.is_finite())) {
            out.push(error(IssueCode::BadPolygon, format!("sectors[{i}].boundary"), "coordinates must be finite"));
        } else if is_self_intersecting(&sec.boundary) {
            out.push(error(IssueCode::BadPolygon, format!("sectors[{i}].boundary"), "polygon intersects itself"));
        }
    }

    for (i, e) in s.schedule.iter().enumerate() {
        if !is_upper_ident(&e.callsign, false) {
            out.push(error(
                IssueCode::BadName,
                format!("schedule[{i}].callsign"),
                format!("{:?} is not an uppercase alphanumeric callsign", e.callsign),
            ));
        }
        let probe = AircraftState {
            callsign: e.callsign.clone(),
            position: e.position,
            heading_deg: e.heading_deg,
            ground_speed_kt: e.ground_speed_kt,
            vertical_rate_fpm: e.vertical_rate_fpm,
            cleared_heading_deg: e.cleared_heading_deg,
            cleared_alt_ft: e.cleared_alt_ft,
            cleared_speed_kt: e.cleared_speed_kt,
            direct_to: None,
            controlling_sector: String::new(),
            emergency: false,
            radio_failure: false,
        };
        if let Some(field) = probe.domain_violation() {
            out.push(error(IssueCode::BadValue, format!("schedule[{i}].{field}"), "value outside its domain"));
        }
        if let Some(sector) = &e.sector {
            if !sector_ids.contains(sector.as_str()) {
                out.push(error(IssueCode::UndefinedSector, format!("schedule[{i}].sector"), format!("sector {sector} is not defined")));
            }
        }
        for (j, wp) in e.route.iter().enumerate() {
            if !names.contains(wp.as_str()) {
                out.push(error(IssueCode::UndefinedWaypoint, format!("schedule[{i}].route[{j}]"), format!("waypoint {wp} is not defined")));
            }
        }
    }
    out
}

/// Every problem with a scenario, structural and semantic; empty means valid.
///
/// Spawn conflicts are warnings: an exercise may deliberately start with an
/// infringement for the trainee to resolve.
pub fn validate_scenario(s: &Scenario) -> Vec<ValidationIssue> {
    let mut out = s.parse_warnings.clone();
    out.extend(structural_issues(s));

    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (i, e) in s.schedule.iter().enumerate() {
        if let Some(&prev) = first_seen.get(e.callsign.as_str()) {
            out.push(error(
                IssueCode::DuplicateCallsign,
                format!("schedule[{i}].callsign"),
                format!("callsign {} already used by schedule[{prev}]", e.callsign),
            ));
        } else {
            first_seen.insert(&e.callsign, i);
        }
        if e.entry_tick as f64 * s.tick_seconds >= s.duration_s {
            out.push(error(
                IssueCode::SpawnAfterDuration,
                format!("schedule[{i}].entry_tick"),
                format!("entry tick {} is at or after the end of the exercise", e.entry_tick),
            ));
        }
    }

    for (i, ev) in s.events.iter().enumerate() {
        if !first_seen.contains_key(ev.callsign.as_str()) {
            out.push(error(
                IssueCode::UnknownEventTarget,
                format!("events[{i}].callsign"),
                format!("no scheduled aircraft {}", ev.callsign),
            ));
        }
        if ev.trigger_tick as f64 * s.tick_seconds >= s.duration_s {
            out.push(error(
                IssueCode::EventAfterDuration,
                format!("events[{i}].trigger_tick"),
                format!("trigger tick {} is at or after the end of the exercise", ev.trigger_tick),
            ));
        }
    }

    let mut by_tick: BTreeMap<u64, Vec<AircraftState>> = BTreeMap::new();
    for e in &s.schedule {
        by_tick.entry(e.entry_tick).or_default().push(s.initial_aircraft(e));
    }
    for (tick, group) in by_tick {
        for ev in detect_conflicts(&group, &s.minima, tick) {
            let idx = s.schedule.iter().position(|e| e.callsign == ev.pair.1).unwrap_or(0);
            out.push(ValidationIssue {
                severity: Severity::Warning,
                code: IssueCode::SpawnConflict,
                path: format!("schedule[{idx}]"),
                message: format!(
                    "{} and {} spawn at tick {tick} {:.2} NM / {:.0} ft apart",
                    ev.pair.0, ev.pair.1, ev.lateral_nm, ev.vertical_ft
                ),
            });
        }
    }
    out
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}
