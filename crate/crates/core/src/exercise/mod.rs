//! Scenario files, scenario validation and cohort planning.

mod geometry;
mod planning;
mod scenario;
mod validate;

pub use geometry::{is_self_intersecting, point_in_polygon};
pub use planning::{
    numbered_roster, plan_sessions, rotation_schedule, PlanError, PlannedSession, RotationSchedule, RotationSlot, Seat, SessionPlan,
    MAX_SLOT_S, MIN_GROUP, MIN_SLOT_S,
};
pub use scenario::{
    lint_scenario, parse_scenario, serialize_scenario, Scenario, ScenarioError, ScheduledEntry, ScriptedEvent, ScriptedEventKind, Sector,
    Waypoint, SCENARIO_SCHEMA_VERSION,
};
pub use validate::{has_errors, validate_scenario, IssueCode, Severity, ValidationIssue};
