use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Airspace, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", content = "arg", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PilotVerb {
    FlyHeading(f64),
    ClimbTo(f64),
    DescendTo(f64),
    Speed(f64),
    DirectTo(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotCommand {
    pub callsign: String,
    #[serde(flatten)]
    pub verb: PilotVerb,
    pub issued_by: String,
}

impl fmt::Display for PilotCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verb {
            PilotVerb::FlyHeading(h) => write!(f, "{} FH {}", self.callsign, h),
            PilotVerb::ClimbTo(a) => write!(f, "{} C {}", self.callsign, a),
            PilotVerb::DescendTo(a) => write!(f, "{} D {}", self.callsign, a),
            PilotVerb::Speed(s) => write!(f, "{} SPD {}", self.callsign, s),
            PilotVerb::DirectTo(w) => write!(f, "{} DCT {}", self.callsign, w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown callsign {0}")]
    UnknownCallsign(String),
    #[error("waypoint {0} is not in the scenario")]
    WaypointNotInScenario(String),
}

fn is_ident(s: &str, allow_underscore: bool) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || (allow_underscore && c == '_'))
}

fn parse_number(verb: &str, raw: &str) -> Result<f64, CommandError> {
    let v: f64 = raw.parse().map_err(|_| CommandError::Syntax(format!("{verb} expects a number, got {raw:?}")))?;
    if !v.is_finite() {
        return Err(CommandError::Syntax(format!("{verb} expects a finite number, got {raw:?}")));
    }
    Ok(v)
}

/// Parses pilot console input: `<CALLSIGN> (FH <hdg> | C <alt> | D <alt> | SPD <kt> | DCT <waypoint>)`.
///
/// Case-insensitive; tokens are separated by exactly one space. Headings must
/// lie in `[0, 360)`, altitudes and speeds must be non-negative, and a direct
/// waypoint must exist in `airspace`.
pub fn parse_pilot_command(text: &str, airspace: &Airspace, issued_by: &str) -> Result<PilotCommand, CommandError> {
    let text = text.trim();
    let tokens: Vec<&str> = text.split(' ').collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(CommandError::Syntax("tokens must be separated by single spaces".into()));
    }
    let [callsign, verb, arg] = tokens[..] else {
        return Err(CommandError::Syntax(format!("expected 3 tokens, got {}", tokens.len())));
    };
    if !is_ident(callsign, false) {
        return Err(CommandError::Syntax(format!("bad callsign {callsign:?}")));
    }
    let verb_upper = verb.to_ascii_uppercase();
    let verb = match verb_upper.as_str() {
        "FH" => {
            let h = parse_number("FH", arg)?;
            if !(0.0..360.0).contains(&h) {
                return Err(CommandError::Domain(format!("heading {arg} outside [0, 360)")));
            }
            PilotVerb::FlyHeading(h)
        }
        "C" | "D" => {
            let alt = parse_number(&verb_upper, arg)?;
            if alt < 0.0 {
                return Err(CommandError::Domain(format!("altitude {arg} is negative")));
            }
            if verb_upper == "C" {
                PilotVerb::ClimbTo(alt)
            } else {
                PilotVerb::DescendTo(alt)
            }
        }
        "SPD" => {
            let kt = parse_number("SPD", arg)?;
            if kt < 0.0 {
                return Err(CommandError::Domain(format!("speed {arg} is negative")));
            }
            PilotVerb::Speed(kt)
        }
        "DCT" => {
            if !is_ident(arg, true) {
                return Err(CommandError::Syntax(format!("bad waypoint name {arg:?}")));
            }
            let name = arg.to_ascii_uppercase();
            if airspace.waypoint(&name).is_none() {
                return Err(CommandError::WaypointNotInScenario(name));
            }
            PilotVerb::DirectTo(name)
        }
        other => return Err(CommandError::Syntax(format!("unknown verb {other:?}"))),
    };
    Ok(PilotCommand { callsign: callsign.to_ascii_uppercase(), verb, issued_by: issued_by.to_string() })
}

/// Records the clearance carried by `cmd`. Kinematic state is untouched until
/// the next step.
pub fn apply_pilot_command(world: &WorldState, cmd: &PilotCommand) -> Result<WorldState, CommandError> {
    if !world.aircraft.contains_key(&cmd.callsign) {
        return Err(CommandError::UnknownCallsign(cmd.callsign.clone()));
    }
    if let PilotVerb::DirectTo(name) = &cmd.verb {
        if world.airspace.waypoint(name).is_none() {
            return Err(CommandError::WaypointNotInScenario(name.clone()));
        }
    }
    let mut next = world.clone();
    let a = next.aircraft.get_mut(&cmd.callsign).expect("checked above");
    match &cmd.verb {
        PilotVerb::FlyHeading(h) => {
            a.cleared_heading_deg = Some(*h);
            a.direct_to = None;
        }
        PilotVerb::ClimbTo(alt) | PilotVerb::DescendTo(alt) => a.cleared_alt_ft = Some(*alt),
        PilotVerb::Speed(kt) => a.cleared_speed_kt = Some(*kt),
        PilotVerb::DirectTo(name) => {
            a.direct_to = Some(name.clone());
            a.cleared_heading_deg = None;
        }
    }
    Ok(next)
}
