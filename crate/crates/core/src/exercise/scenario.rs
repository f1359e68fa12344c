use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::geometry::point_in_polygon;
use super::validate::{structural_issues, validate_scenario, IssueCode, Severity, ValidationIssue};
use crate::canonical::sha256_hex;
use crate::sim::{AircraftState, Airspace, Position, SeparationMinima, WorldState};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

const KNOWN_KEYS: [&str; 9] =
    ["schema_version", "title", "duration_s", "tick_seconds", "minima", "waypoints", "sectors", "schedule", "events"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub name: String,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub id: String,
    pub boundary: Vec<Position>,
    #[serde(default)]
    pub frequency_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledEntry {
    pub callsign: String,
    pub entry_tick: u64,
    pub position: Position,
    pub heading_deg: f64,
    pub ground_speed_kt: f64,
    #[serde(default)]
    pub vertical_rate_fpm: f64,
    #[serde(default)]
    pub cleared_heading_deg: Option<f64>,
    #[serde(default)]
    pub cleared_alt_ft: Option<f64>,
    #[serde(default)]
    pub cleared_speed_kt: Option<f64>,
    /// Controlling sector; when absent, the sector containing the spawn point
    /// (or the first sector) is used.
    #[serde(default)]
    pub sector: Option<String>,
    /// Waypoint names; the aircraft spawns flying direct to the first one.
    #[serde(default)]
    pub route: Vec<String>,
}

impl ScheduledEntry {
    pub fn new(callsign: &str, entry_tick: u64, position: Position, heading_deg: f64, ground_speed_kt: f64) -> Self {
        Self {
            callsign: callsign.to_string(),
            entry_tick,
            position,
            heading_deg,
            ground_speed_kt,
            vertical_rate_fpm: 0.0,
            cleared_heading_deg: None,
            cleared_alt_ft: None,
            cleared_speed_kt: None,
            sector: None,
            route: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScriptedEventKind {
    EmergencyDeclared,
    RadioFailure,
    GoAround,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub trigger_tick: u64,
    pub kind: ScriptedEventKind,
    pub callsign: String,
    #[serde(default)]
    pub description: String,
}

fn default_duration() -> f64 {
    3600.0
}

fn default_tick() -> f64 {
    1.0
}

/// An exercise definition as loaded by the supervisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub title: String,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_tick")]
    pub tick_seconds: f64,
    #[serde(default)]
    pub minima: SeparationMinima,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub sectors: Vec<Sector>,
    #[serde(default)]
    pub schedule: Vec<ScheduledEntry>,
    #[serde(default)]
    pub events: Vec<ScriptedEvent>,
    /// Top-level keys not understood by this schema version, kept verbatim.
    #[serde(skip)]
    pub extra: BTreeMap<String, Value>,
    /// Warnings raised while parsing (unknown fields, version skew).
    #[serde(skip)]
    pub parse_warnings: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl Scenario {
    /// An empty scenario with one sector, used when nothing else is loaded.
    pub fn empty(title: &str) -> Self {
        Self {
            schema_version: SCENARIO_SCHEMA_VERSION,
            title: title.to_string(),
            duration_s: default_duration(),
            tick_seconds: default_tick(),
            minima: SeparationMinima::default(),
            waypoints: Vec::new(),
            sectors: vec![Sector {
                id: "S1".into(),
                boundary: vec![
                    Position::new(-50.0, -50.0, 0.0),
                    Position::new(50.0, -50.0, 0.0),
                    Position::new(50.0, 50.0, 0.0),
                    Position::new(-50.0, 50.0, 0.0),
                ],
                frequency_label: "S1".into(),
            }],
            schedule: Vec::new(),
            events: Vec::new(),
            extra: BTreeMap::new(),
            parse_warnings: Vec::new(),
        }
    }

    pub fn airspace(&self) -> Airspace {
        Airspace { waypoints: self.waypoints.iter().map(|w| (w.name.clone(), w.position)).collect() }
    }

    /// Number of ticks in the exercise, rounding a partial last tick up.
    pub fn duration_ticks(&self) -> u64 {
        (self.duration_s / self.tick_seconds).ceil() as u64
    }

    pub fn initial_aircraft(&self, entry: &ScheduledEntry) -> AircraftState {
        let sector = entry
            .sector
            .clone()
            .or_else(|| self.sectors.iter().find(|s| point_in_polygon(&entry.position, &s.boundary)).map(|s| s.id.clone()))
            .or_else(|| self.sectors.first().map(|s| s.id.clone()))
            .unwrap_or_default();
        AircraftState {
            callsign: entry.callsign.clone(),
            position: entry.position,
            heading_deg: entry.heading_deg,
            ground_speed_kt: entry.ground_speed_kt,
            vertical_rate_fpm: entry.vertical_rate_fpm,
            cleared_heading_deg: entry.cleared_heading_deg,
            cleared_alt_ft: entry.cleared_alt_ft,
            cleared_speed_kt: entry.cleared_speed_kt,
            direct_to: entry.route.first().cloned(),
            controlling_sector: sector,
            emergency: false,
            radio_failure: false,
        }
    }

    /// World at tick 0 with every scheduled entry pending.
    pub fn initial_world(&self) -> Result<WorldState, crate::sim::WorldError> {
        let mut world = WorldState::new(self.tick_seconds, Arc::new(self.airspace()))?;
        for entry in &self.schedule {
            world.schedule_spawn(entry.entry_tick, self.initial_aircraft(entry))?;
        }
        Ok(world)
    }

    pub fn digest(&self) -> String {
        sha256_hex(serialize_scenario(self).as_bytes())
    }
}

fn warning(code: IssueCode, path: String, message: String) -> ValidationIssue {
    ValidationIssue { severity: Severity::Warning, code, path, message }
}

fn error(code: IssueCode, path: String, message: String) -> ValidationIssue {
    ValidationIssue { severity: Severity::Error, code, path, message }
}

/// Parses and structurally validates a scenario document.
///
/// Unknown fields are an error when `schema_version` is the supported one;
/// for any other version they are kept (top level) or dropped (nested) with a
/// warning in [`Scenario::parse_warnings`].
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let (scenario, errors) = parse_unchecked(bytes)?;
    if let Some(issue) = errors.into_iter().chain(structural_issues(&scenario)).next() {
        return Err(ScenarioError::Schema { path: issue.path, message: issue.message });
    }
    Ok(scenario)
}

/// Parses as far as the document allows and reports every issue found,
/// including unknown fields and all validation findings. Only malformed JSON,
/// type errors and a missing `schema_version` are hard errors.
pub fn lint_scenario(bytes: &[u8]) -> Result<(Scenario, Vec<ValidationIssue>), ScenarioError> {
    let (scenario, mut issues) = parse_unchecked(bytes)?;
    issues.extend(validate_scenario(&scenario));
    Ok((scenario, issues))
}

/// Deserializes without structural checks. Unknown fields under the current
/// schema version come back as ERROR issues.
fn parse_unchecked(bytes: &[u8]) -> Result<(Scenario, Vec<ValidationIssue>), ScenarioError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let Value::Object(mut object) = value else {
        return Err(ScenarioError::Parse("scenario must be a JSON object".into()));
    };
    let version = object
        .get("schema_version")
        .ok_or_else(|| ScenarioError::Parse("schema_version: missing".into()))?
        .as_u64()
        .ok_or_else(|| ScenarioError::Parse("schema_version must be a non-negative integer".into()))?;
    let strict = version == u64::from(SCENARIO_SCHEMA_VERSION);

    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    if !strict {
        warnings.push(warning(
            IssueCode::UnsupportedVersion,
            "schema_version".into(),
            format!("schema_version {version} differs from supported {SCENARIO_SCHEMA_VERSION}; unknown fields preserved"),
        ));
    }

    let mut extra = BTreeMap::new();
    let unknown: Vec<String> = object.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())).cloned().collect();
    for key in unknown {
        let v = object.remove(&key).expect("key listed above");
        if strict {
            errors.push(error(IssueCode::UnknownField, key, "unknown field".into()));
            continue;
        }
        warnings.push(warning(IssueCode::UnknownField, key.clone(), "unknown field preserved".into()));
        extra.insert(key, v);
    }

    let mut ignored = Vec::new();
    let mut record = |path: serde_ignored::Path<'_>| ignored.push(path.to_string());
    let de = serde_ignored::Deserializer::new(Value::Object(object), &mut record);
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Parse(format!("{path}: {}", e.into_inner()))
    })?;
    for path in ignored {
        if strict {
            errors.push(error(IssueCode::UnknownField, path, "unknown field".into()));
        } else {
            warnings.push(warning(IssueCode::UnknownField, path, "unknown nested field ignored".into()));
        }
    }
    scenario.extra = extra;
    scenario.parse_warnings = warnings;
    Ok((scenario, errors))
}

/// Pretty-printed JSON; preserved unknown top-level keys are written back.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut value = serde_json::to_value(scenario).expect("scenario serializes");
    if let Value::Object(map) = &mut value {
        for (k, v) in &scenario.extra {
            map.insert(k.clone(), v.clone());
        }
    }
    serde_json::to_string_pretty(&value).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "schema_version": 1,
        "title": "minimal",
        "waypoints": [{"name": "WPT_A", "position": {"x_nm": 10.0, "y_nm": 0.0}}],
        "sectors": [{"id": "APP", "boundary": [{"x_nm": -50, "y_nm": -50}, {"x_nm": 50, "y_nm": -50}, {"x_nm": 0, "y_nm": 50}], "frequency_label": "124.5"}],
        "schedule": [{"callsign": "QFA12", "entry_tick": 0, "position": {"x_nm": 0, "y_nm": 0, "alt_ft": 5000}, "heading_deg": 90, "ground_speed_kt": 250, "route": ["WPT_A"]}]
    }"#;

    #[test]
    fn minimal_file_fills_defaults() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(s.duration_s, 3600.0);
        assert_eq!(s.tick_seconds, 1.0);
        assert_eq!(s.minima, SeparationMinima::default());
        assert!(s.events.is_empty());
        assert!(s.parse_warnings.is_empty());
        let a = s.initial_aircraft(&s.schedule[0]);
        assert_eq!(a.controlling_sector, "APP");
        assert_eq!(a.direct_to.as_deref(), Some("WPT_A"));
    }

    #[test]
    fn undefined_route_waypoint_names_route_index() {
        let text = MINIMAL.replace(r#""route": ["WPT_A"]"#, r#""route": ["WPT_A", "NOWHERE"]"#);
        match parse_scenario(text.as_bytes()) {
            Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "schedule[0].route[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(parse_scenario(b"{\"schema_version\": 1,"), Err(ScenarioError::Parse(_))));
        assert!(matches!(parse_scenario(b"[1,2]"), Err(ScenarioError::Parse(_))));
        let text = MINIMAL.replace(r#""heading_deg": 90"#, r#""heading_deg": "east""#);
        match parse_scenario(text.as_bytes()) {
            Err(ScenarioError::Parse(msg)) => assert!(msg.contains("schedule[0].heading_deg"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected_at_current_version() {
        let text = MINIMAL.replace(r#""title": "minimal","#, r#""title": "minimal", "weather": "fog","#);
        assert!(matches!(parse_scenario(text.as_bytes()), Err(ScenarioError::Schema { path, .. }) if path == "weather"));
        let nested = MINIMAL.replace(r#""frequency_label": "124.5""#, r#""frequency_label": "124.5", "colour": 3"#);
        assert!(matches!(parse_scenario(nested.as_bytes()), Err(ScenarioError::Schema { path, .. }) if path.contains("colour")));
    }

    #[test]
    fn unknown_field_preserved_at_other_version() {
        let text = MINIMAL
            .replace(r#""schema_version": 1"#, r#""schema_version": 2"#)
            .replace(r#""title": "minimal","#, r#""title": "minimal", "weather": {"wind": 270},"#);
        let s = parse_scenario(text.as_bytes()).unwrap();
        assert_eq!(s.extra.get("weather"), Some(&serde_json::json!({"wind": 270})));
        let codes: Vec<_> = s.parse_warnings.iter().map(|w| w.code).collect();
        assert_eq!(codes, [IssueCode::UnsupportedVersion, IssueCode::UnknownField]);
        let again = parse_scenario(serialize_scenario(&s).as_bytes()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn non_positive_duration_rejected() {
        let text = MINIMAL.replace(r#""title": "minimal","#, r#""title": "minimal", "duration_s": 0,"#);
        assert!(matches!(parse_scenario(text.as_bytes()), Err(ScenarioError::Schema { path, .. }) if path == "duration_s"));
    }

    #[test]
    fn initial_world_has_no_active_aircraft() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        let w = s.initial_world().unwrap();
        assert!(w.aircraft.is_empty());
        assert_eq!(w.pending_spawns.len(), 1);
        assert_eq!(s.duration_ticks(), 3600);
    }
}
