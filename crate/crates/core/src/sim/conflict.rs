use serde::{Deserialize, Serialize};

use super::{AircraftState, SeparationMinima};

/// Simultaneous loss of lateral and vertical separation between two aircraft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationEvent {
    /// Lexicographically ordered.
    pub pair: (String, String),
    pub lateral_nm: f64,
    pub vertical_ft: f64,
    pub tick_index: u64,
}

/// Returns every pair closer than both minima, sorted by callsign pair.
///
/// A pair exactly at either minimum is separated. Candidates are found with
/// a sweep over `x`, so the cost is near-linear for spread-out traffic.
pub fn detect_conflicts<'a>(
    aircraft: impl IntoIterator<Item = &'a AircraftState>,
    minima: &SeparationMinima,
    tick_index: u64,
) -> Vec<SeparationEvent> {
    let mut sorted: Vec<&AircraftState> = aircraft.into_iter().collect();
    sorted.sort_by(|a, b| a.position.x_nm.total_cmp(&b.position.x_nm).then_with(|| a.callsign.cmp(&b.callsign)));

    let mut events = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if b.position.x_nm - a.position.x_nm >= minima.lateral_nm {
                break;
            }
            let vertical = (a.position.alt_ft - b.position.alt_ft).abs();
            if vertical >= minima.vertical_ft {
                continue;
            }
            let lateral = a.position.lateral_distance(&b.position);
            if lateral < minima.lateral_nm {
                let pair = if a.callsign <= b.callsign {
                    (a.callsign.clone(), b.callsign.clone())
                } else {
                    (b.callsign.clone(), a.callsign.clone())
                };
                events.push(SeparationEvent { pair, lateral_nm: lateral, vertical_ft: vertical, tick_index });
            }
        }
    }
    events.sort_by(|x, y| x.pair.cmp(&y.pair));
    events
}
