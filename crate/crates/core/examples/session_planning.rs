//! Splits cohorts into sessions and builds the seat rotation for one group.

use atcsim::exercise::{numbered_roster, plan_sessions, Seat};

fn main() {
    for n in [30, 60, 100] {
        let plan = plan_sessions(&numbered_roster(n), 6).expect("capacity >= 3");
        let sizes: Vec<usize> = plan.sessions.iter().map(|s| s.students.len()).collect();
        println!("{n:>3} students, 6 per session -> {} sessions {sizes:?}", plan.session_count);
    }

    let plan = plan_sessions(&numbered_roster(6), 6).and_then(|p| p.with_rotations(3600, 3)).expect("rotation");
    let session = &plan.sessions[0];
    let rotation = session.rotation.as_ref().expect("group of 6 rotates");
    println!("\none group of 6 on 3 controller stations, {} s slots", rotation.slot_length_s);
    for slot in &rotation.slots {
        let who = |seat: Seat| slot.assignments.get(&seat).map(|&i| session.students[i].as_str()).unwrap_or("-");
        let seats = |make: fn(u32) -> Seat| (1..=3).map(|i| who(make(i))).collect::<Vec<_>>().join(" ");
        println!(
            "slot {} [{:>4}-{:>4}s] control {} | coordinate {} | pilots {}",
            slot.slot_index,
            slot.start_s,
            slot.end_s,
            seats(Seat::Controller),
            seats(Seat::Coordinator),
            seats(Seat::Pilot),
        );
    }
    println!("infeasible sessions: {:?}", plan.infeasible_sessions());
}
