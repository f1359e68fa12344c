//! Fills one block and shows which joins the host turns away.

use atcsim::protocol::{BlockConfig, BlockOccupancy, Role};

fn main() {
    let mut block = BlockOccupancy::new(BlockConfig::new("B1"));
    for i in 1..=11 {
        let r = block.join(&format!("ctl{i}"), Role::Controller, None);
        println!("controller {i:>2}: {r:?}");
    }
    for i in 1..=10 {
        block.join(&format!("plt{i}"), Role::PseudoPilot, None).expect("pilot seat");
    }
    println!("pilots seated: {}", block.pilot_count());
    println!("supervisor 1: {:?}", block.join("sup1", Role::Supervisor, None));
    println!("supervisor 2: {:?}", block.join("sup2", Role::Supervisor, None));
    println!("coordinator at 3: {:?}", block.join("crd1", Role::Coordinator, Some(3)));
    println!("second coordinator at 3: {:?}", block.join("crd2", Role::Coordinator, Some(3)));

    println!("tutor on station 3: {:?}", block.join("tut1", Role::RemoteTutor, Some(3)));
    println!("second tutor on station 3: {:?}", block.join("tut2", Role::RemoteTutor, Some(3)));

    block.leave("ctl3");
    println!("after ctl3 leaves: controllers {}, tutor attachments {:?}", block.controller_count(), block.attachments());
    block.check_invariants().expect("occupancy invariants");
}
