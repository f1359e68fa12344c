//! Lints scenario documents the way `atcsim validate` does.

use atcsim::exercise::{has_errors, lint_scenario};

fn main() {
    let docs: [(&str, &[u8]); 4] = [
        ("terminal_area.json", include_bytes!("../data/terminal_area.json")),
        ("duplicate_callsign.json", include_bytes!("../data/duplicate_callsign.json")),
        (
            "inline: unknown field and late event",
            br#"{"schema_version":1,"duration_s":60,"colour":"blue",
                "sectors":[{"id":"S","boundary":[{"x_nm":0,"y_nm":0},{"x_nm":10,"y_nm":0},{"x_nm":0,"y_nm":10}]}],
                "schedule":[{"callsign":"A1","entry_tick":0,"position":{"x_nm":1,"y_nm":1,"alt_ft":5000},"heading_deg":0,"ground_speed_kt":200}],
                "events":[{"trigger_tick":90,"kind":"GO_AROUND","callsign":"A1"}]}"#,
        ),
        ("inline: not json", b"{ schema_version: 1"),
    ];
    for (name, bytes) in docs {
        println!("== {name}");
        match lint_scenario(bytes) {
            Ok((scenario, issues)) => {
                for i in &issues {
                    println!("{i}");
                }
                let verdict = if has_errors(&issues) { "rejected" } else { "ok" };
                println!("-> {verdict}: {} aircraft, {} events", scenario.schedule.len(), scenario.events.len());
            }
            Err(e) => println!("-> unreadable: {e}"),
        }
    }
}
