//! Runs a scripted exercise to an .atclog file, then replays the file and
//! checks every recorded per-tick digest.

use atcsim::exercise::parse_scenario;
use atcsim::headless::{parse_pilot_script, run_headless, HeadlessConfig};
use atcsim::host::{replay_file, LogTarget};

fn main() {
    let scenario = parse_scenario(include_bytes!("../data/terminal_area.json")).expect("scenario");
    let script = parse_pilot_script(include_str!("../data/terminal_area.pilots")).expect("script");
    let dir = std::env::temp_dir().join(format!("atcsim-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("terminal_area.atclog");

    let run =
        run_headless(HeadlessConfig { scenario: scenario.clone(), script, duration_s: Some(300.0), log: LogTarget::File(path.clone()) })
            .expect("headless run");
    println!("recorded {} host ticks, {} commands, {} separation events", run.host_ticks, run.commands_sent, run.separation_events);
    println!("live   final digest {}", run.final_digest);

    let (log, report) = replay_file(&path, &scenario).expect("replay");
    println!("replay final digest {}", report.final_digest().unwrap_or("-"));
    match report.verify(&log) {
        Ok(n) => println!("{n} per-tick digests reproduced"),
        Err(d) => println!("diverged at host tick {}", d.tick_index),
    }

    let mut edited = scenario.clone();
    edited.title.push_str(" (edited)");
    match replay_file(&path, &edited) {
        Err(e) => println!("replay against an edited scenario: {e}"),
        Ok(_) => println!("edited scenario unexpectedly accepted"),
    }
    let _ = std::fs::remove_dir_all(&dir);
}
