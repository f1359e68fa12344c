//! Remote ATC simulation training: a deterministic exercise host with
//! role-based stations, radar-picture mirroring for remote tutors, tutor
//! remote control, cloneable supervisor blocks and event-sourced replay.

pub mod canonical;
pub mod exercise;
pub mod headless;
pub mod host;
pub mod protocol;
pub mod sim;
