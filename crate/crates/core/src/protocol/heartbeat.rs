use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ClientId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Liveness {
    Alive,
    Suspect,
    Dead,
}

/// Alive up to half the timeout, suspect up to the timeout, dead beyond.
pub fn check_heartbeat(last_seen_tick: u64, now_tick: u64, timeout_ticks: u64) -> Liveness {
    let gap = now_tick.saturating_sub(last_seen_tick);
    if gap.saturating_mul(2) <= timeout_ticks {
        Liveness::Alive
    } else if gap <= timeout_ticks {
        Liveness::Suspect
    } else {
        Liveness::Dead
    }
}

/// Duplicate suppression: a sender's sequence numbers must strictly increase.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    last: HashMap<ClientId, u64>,
}

impl SeqTracker {
    /// Records `seq` and returns true when it is newer than anything seen
    /// from `sender`.
    pub fn accept(&mut self, sender: &str, seq: u64) -> bool {
        match self.last.get_mut(sender) {
            Some(last) if seq <= *last => false,
            Some(last) => {
                *last = seq;
                true
            }
            None => {
                self.last.insert(sender.to_string(), seq);
                true
            }
        }
    }

    pub fn last(&self, sender: &str) -> Option<u64> {
        self.last.get(sender).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn liveness_boundaries() {
        assert_eq!(check_heartbeat(100, 100, 10), Liveness::Alive);
        assert_eq!(check_heartbeat(100, 105, 10), Liveness::Alive);
        assert_eq!(check_heartbeat(100, 106, 10), Liveness::Suspect);
        assert_eq!(check_heartbeat(100, 110, 10), Liveness::Suspect);
        assert_eq!(check_heartbeat(100, 111, 10), Liveness::Dead);
        // clock behind last_seen counts as no gap
        assert_eq!(check_heartbeat(100, 90, 10), Liveness::Alive);
    }

    #[test]
    fn sequence_must_increase() {
        let mut t = SeqTracker::default();
        assert!(t.accept("a", 1));
        assert!(!t.accept("a", 1));
        assert!(!t.accept("a", 0));
        assert!(t.accept("a", 5));
        assert!(t.accept("b", 1));
        assert_eq!(t.last("a"), Some(5));
    }
}
