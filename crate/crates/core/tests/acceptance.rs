//! Acceptance suite: one PASS/FAIL line per criterion, each checked against
//! its own time budget. Runs without the test harness so the lines always
//! show.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;

use atcsim::exercise::{numbered_roster, parse_scenario, plan_sessions, serialize_scenario, Scenario};
use atcsim::host::server::{serve, ServeConfig, ServerHandle};
use atcsim::host::{read_log_file, LogTarget, ScriptedClient, Session, SessionConfig};
use atcsim::protocol::{
    picture_digest, AttachError, BlockConfig, BlockOccupancy, MirrorReceiver, MirrorStream, Payload, Picture, PointerOverlay, RejectReason,
    Role, StationId, SupervisorCommand,
};
use atcsim::sim::{detect_conflicts, step_world, AircraftState, Position, SeparationMinima};
use common::ws::WsClient;
use common::{brute_force_pairs, evolve, random_aircraft, random_scenario, random_script, rng, world_of};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("session arithmetic", Duration::from_secs(1), session_arithmetic),
        ("block capacity", Duration::from_secs(5), block_capacity),
        ("tutor attachment 1:1", Duration::from_secs(10), tutor_attachment),
        ("mirror fidelity", Duration::from_secs(30), mirror_fidelity),
        ("deterministic replay", Duration::from_secs(60), deterministic_replay),
        ("conflict oracle", Duration::from_secs(30), conflict_oracle),
        ("kinematics", Duration::from_secs(10), kinematics),
        ("reconnection", Duration::from_secs(30), reconnection),
        ("desk-scale load", Duration::from_secs(120), desk_scale_load),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > limit => Err(format!("{detail}; over time limit")),
            other => other,
        };
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{verdict} {name} [{:.2}s / {}s]: {detail}", took.as_secs_f64(), limit.as_secs());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}

fn session_arithmetic() -> Outcome {
    for (n, expected) in [(30, 5), (60, 10), (100, 17)] {
        let plan = plan_sessions(&numbered_roster(n), 6).map_err(|e| e.to_string())?;
        ensure!(plan.session_count == expected, "{n} students gave {} sessions, expected {expected}", plan.session_count);
        ensure!(plan.session_count == n.div_ceil(6), "count is not ceil({n}/6)");
    }
    Ok("30/60/100 students at 6 per session -> 5/10/17".into())
}

fn terminal_area() -> Scenario {
    parse_scenario(&std::fs::read(data("terminal_area.json")).unwrap()).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn block_capacity() -> Outcome {
    let mut s = Session::create("B1-1", terminal_area(), BlockConfig::new("B1"), &SessionConfig::default(), LogTarget::Memory)
        .map_err(|e| e.to_string())?;
    let mut clients: Vec<(Role, ScriptedClient)> = Vec::new();
    for (role, n) in [(Role::Controller, 11), (Role::PseudoPilot, 11), (Role::Supervisor, 2)] {
        for i in 0..n {
            let mut c = ScriptedClient::new(&format!("{role:?}-{i}"));
            c.hello(&mut s, role, None, None);
            clients.push((role, c));
        }
    }
    let report = s.tick().map_err(|e| e.to_string())?;
    let mut admitted: BTreeMap<String, usize> = BTreeMap::new();
    let mut full: BTreeMap<String, usize> = BTreeMap::new();
    for (role, c) in &mut clients {
        for m in c.receive(&report) {
            match &m.payload {
                Payload::Welcome(_) => *admitted.entry(format!("{role:?}")).or_default() += 1,
                Payload::Reject(r) if r.reason == RejectReason::BlockFull => *full.entry(format!("{role:?}")).or_default() += 1,
                _ => {}
            }
        }
    }
    let expect = |m: &BTreeMap<String, usize>, k: &str| m.get(k).copied().unwrap_or(0);
    ensure!(expect(&admitted, "Controller") == 10, "controllers admitted: {admitted:?}");
    ensure!(expect(&admitted, "PseudoPilot") == 10, "pilots admitted: {admitted:?}");
    ensure!(expect(&admitted, "Supervisor") == 1, "supervisors admitted: {admitted:?}");
    ensure!(expect(&full, "Controller") == 1, "11th controller not BLOCK_FULL: {full:?}");
    ensure!(expect(&full, "Supervisor") == 1, "2nd supervisor not BLOCK_FULL: {full:?}");
    ensure!(expect(&full, "PseudoPilot") == 1, "11th pilot not BLOCK_FULL: {full:?}");
    Ok("admitted 10 controllers, 10 pilots, 1 supervisor; extras got BLOCK_FULL".into())
}

fn tutor_attachment() -> Outcome {
    let mut second_attempts = 0u64;
    for seq in 0..1000u64 {
        let mut r = rng(seq);
        let mut b = BlockOccupancy::new(BlockConfig::new("B1"));
        for step in 0..r.gen_range(20..120) {
            let who = format!("t{}", r.gen_range(0..14));
            match r.gen_range(0..7) {
                0 => {
                    let _ = b.join(&format!("c{}", r.gen_range(0..14)), Role::Controller, Some(r.gen_range(1..11)));
                }
                1 => b.leave(&format!("c{}", r.gen_range(0..14))),
                2 | 3 => {
                    let station = r.gen_range(1..11);
                    let tutor_busy = b.attachment_of(&who).is_some();
                    let station_busy = b.attachments().iter().any(|a| a.controller_station == StationId::controller("B1", station));
                    let result = b.attach_tutor(&who, station);
                    if tutor_busy {
                        second_attempts += 1;
                        ensure!(result == Err(AttachError::TutorBusy), "seq {seq} step {step}: second attach by {who} gave {result:?}");
                    } else if station_busy {
                        second_attempts += 1;
                        ensure!(
                            result == Err(AttachError::AlreadyAttached),
                            "seq {seq} step {step}: second tutor on station gave {result:?}"
                        );
                    }
                }
                4 => {
                    b.detach_tutor(&who);
                }
                5 => {
                    let _ = b.reassign(&format!("c{}", r.gen_range(0..14)), r.gen_range(1..11));
                }
                _ => {
                    let _ = b.grant_control(&who, step);
                }
            }
            let atts = b.attachments();
            let tutors: BTreeSet<_> = atts.iter().map(|a| a.tutor_id.clone()).collect();
            let stations: BTreeSet<_> = atts.iter().map(|a| a.controller_station.clone()).collect();
            ensure!(tutors.len() == atts.len() && stations.len() == atts.len(), "seq {seq} step {step}: not a partial bijection");
            b.check_invariants().map_err(|e| format!("seq {seq} step {step}: {e}"))?;
        }
    }
    ensure!(second_attempts > 0, "no second-attach attempts generated");
    Ok(format!("1000 sequences, {second_attempts} second attaches all rejected"))
}

fn mirror_fidelity() -> Outcome {
    let mut frames = 0u64;
    let mut resyncs = 0u64;
    for seq in 0..1000u64 {
        let mut r = rng(10_000 + seq);
        let mut stream = MirrorStream::with_interval(StationId::controller("B1", 1), r.gen_range(1..30));
        let mut rx = MirrorReceiver::default();
        let mut p = Picture::new();
        let mut next = 0;
        for step in 0..r.gen_range(10..80) {
            p = evolve(&mut r, &p, &mut next);
            if r.gen_bool(0.05) {
                stream.force_resync();
                resyncs += 1;
            }
            let frame = stream.next_frame(&p);
            rx.receive(&frame).map_err(|e| format!("seq {seq} step {step}: {e}"))?;
            frames += 1;
            ensure!(rx.digest() == picture_digest(&p), "seq {seq} step {step}: receiver digest differs from sender");
            ensure!(rx.picture == p, "seq {seq} step {step}: reconstructed picture differs");
        }
    }
    Ok(format!("1000 sequences, {frames} frames, {resyncs} forced resyncs, 0 mismatches"))
}

fn deterministic_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_atcsim");
    let mut verified = 0u64;
    for run in 0..20u64 {
        let mut r = rng(20_000 + run);
        let n = r.gen_range(2..25);
        let duration = r.gen_range(60..300) as f64;
        let scenario = random_scenario(&mut r, n, duration);
        let lines = r.gen_range(5..40);
        let script = random_script(&mut r, &scenario, lines);
        let sc = dir.path().join(format!("s{run}.json"));
        let ps = dir.path().join(format!("s{run}.pilots"));
        let log = dir.path().join(format!("s{run}.atclog"));
        std::fs::write(&sc, serialize_scenario(&scenario)).unwrap();
        std::fs::write(&ps, &script).unwrap();
        let h = Command::new(bin)
            .args(["headless", "--scenario", p(&sc), "--pilot-script", p(&ps), "--log", p(&log)])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(h.status.success(), "run {run}: headless failed: {}", String::from_utf8_lossy(&h.stderr));
        let rp =
            Command::new(bin).args(["replay", p(&log), "--scenario", p(&sc), "--verify-digests"]).output().map_err(|e| e.to_string())?;
        let out = String::from_utf8_lossy(&rp.stdout).into_owned();
        ensure!(rp.status.success(), "run {run}: replay diverged: {out}{}", String::from_utf8_lossy(&rp.stderr));
        let live = String::from_utf8_lossy(&h.stdout).into_owned();
        ensure!(field(&live, "final_digest:") == field(&out, "final_digest:"), "run {run}: final digests differ");
        let n: u64 = field(&out, "verified:").parse().map_err(|_| format!("run {run}: no verified count"))?;
        ensure!(n.to_string() == field(&out, "host_ticks:"), "run {run}: verified {n} of {} ticks", field(&out, "host_ticks:"));
        verified += n;
    }
    Ok(format!("20 runs, {verified} per-tick digests reproduced, 0 divergences"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines().find_map(|l| l.strip_prefix(key)).map(str::trim).unwrap_or("")
}

fn conflict_oracle() -> Outcome {
    let minima = SeparationMinima::default();
    let mut total = 0;
    for w in 0..500u64 {
        let mut r = rng(30_000 + w);
        let n = if w % 50 == 0 { 200 } else { r.gen_range(0..=200) };
        let span = r.gen_range(10.0..80.0);
        let aircraft = random_aircraft(&mut r, n, span, 8000.0);
        let found: BTreeSet<_> = detect_conflicts(&aircraft, &minima, w).into_iter().map(|e| e.pair).collect();
        let oracle = brute_force_pairs(&aircraft, &minima);
        ensure!(found == oracle, "world {w} ({n} aircraft): {} vs {} pairs", found.len(), oracle.len());
        total += oracle.len();
    }
    Ok(format!("500 worlds up to 200 aircraft, {total} conflict pairs, 0 differences"))
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn kinematics() -> Outcome {
    let minima = SeparationMinima::default();
    let mut r = rng(40_000);
    for case in 0..300 {
        let (x, y, hdg, spd) = (r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0), r.gen_range(0.0..360.0), r.gen_range(0.0..600.0));
        let mut w = world_of(vec![AircraftState::new("A1", Position::new(x, y, 10000.0), hdg, spd)], 1.0);
        let per_tick: f64 = spd / 3600.0;
        let (dx, dy) = (per_tick * f64::to_radians(hdg).sin(), per_tick * f64::to_radians(hdg).cos());
        for n in 1..=100 {
            w = step_world(&w, &minima).0;
            let pos = w.aircraft["A1"].position;
            let err = (pos.x_nm - (x + n as f64 * dx)).abs().max((pos.y_nm - (y + n as f64 * dy)).abs());
            ensure!(err <= 1e-9, "case {case} tick {n}: displacement off by {err:e} NM");
        }
    }
    for case in 0..300 {
        let start = r.gen_range(0.0..360.0);
        let target = r.gen_range(0..360) as f64;
        let expected = (angular_distance(start, target) / 3.0).ceil() as u64;
        let mut a = AircraftState::new("A1", Position::new(0.0, 0.0, 5000.0), start, 250.0);
        a.cleared_heading_deg = Some(target);
        let mut w = world_of(vec![a], 1.0);
        let mut reached = if expected == 0 { Some(0) } else { None };
        for t in 1..=(expected + 5) {
            w = step_world(&w, &minima).0;
            if reached.is_none() && w.aircraft["A1"].heading_deg == target {
                reached = Some(t);
            }
        }
        ensure!(reached == Some(expected), "case {case}: {start} -> {target} took {reached:?} ticks, expected {expected}");
    }
    for case in 0..300 {
        let alt = r.gen_range(0.0..40000.0);
        let target = r.gen_range(0.0..40000.0);
        let mut a = AircraftState::new("A1", Position::new(0.0, 0.0, alt), 0.0, 250.0);
        a.cleared_alt_ft = Some(target);
        let mut w = world_of(vec![a], 1.0);
        let mut prev: f64 = alt;
        for _ in 0..1700 {
            w = step_world(&w, &minima).0;
            let now = w.aircraft["A1"].position.alt_ft;
            let ok = if target >= alt { now >= prev && now <= target } else { now <= prev && now >= target };
            ensure!(ok, "case {case}: {alt} -> {target} went through {now}");
            prev = now;
        }
        ensure!(prev == target, "case {case}: never reached {target}");
    }
    Ok("300 cases each: displacement within 1e-9 NM, turns in ceil(delta/3) ticks, no altitude overshoot".into())
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap()
}

async fn start(dir: &Path, tick: Option<Duration>, session: SessionConfig) -> ServerHandle {
    let scenarios = dir.join("scenarios");
    std::fs::create_dir_all(&scenarios).unwrap();
    std::fs::copy(data("terminal_area.json"), scenarios.join("terminal_area.json")).unwrap();
    serve(ServeConfig {
        bind: "127.0.0.1".parse().unwrap(),
        port: 0,
        blocks: 1,
        scenario_dir: Some(scenarios),
        log_dir: dir.join("logs"),
        tick_interval: tick,
        session,
    })
    .await
    .unwrap()
}

fn welcomed(p: &Payload) -> bool {
    matches!(p, Payload::Welcome(_))
}

fn reconnection() -> Outcome {
    runtime().block_on(async {
        let dir = tempfile::tempdir().unwrap();
        // 1 s scenario ticks driven every 20 ms: timeout 5 ticks, grace 30 ticks
        let config = SessionConfig { heartbeat_timeout_s: 5.0, grace_s: 30.0, ..SessionConfig::default() };
        let handle = start(dir.path(), Some(Duration::from_millis(20)), config).await;
        let addr = handle.local_addr();

        // the supervisor stays connected and records its mirrored digest per tick
        let mut sup = WsClient::connect(addr, "B1").await;
        ensure!(welcomed(&sup.join(Role::Supervisor, None, None).await.payload), "supervisor not admitted");
        sup.send(Payload::SupervisorCmd { command: SupervisorCommand::Start }).await;
        let seen: Arc<Mutex<BTreeMap<u64, String>>> = Arc::default();
        let (stop_tx, mut stop_rx) = tokio::sync::watch::channel(false);
        let witness = {
            let seen = seen.clone();
            tokio::spawn(async move {
                loop {
                    let m = tokio::select! {
                        m = sup.recv() => m,
                        _ = stop_rx.wait_for(|s| *s) => None,
                    };
                    let Some(m) = m else { break };
                    if matches!(m.payload, Payload::StateDelta { .. } | Payload::StateSnapshot(_)) {
                        seen.lock().unwrap().insert(sup.last_tick, sup.picture.digest());
                        sup.send(Payload::Heartbeat { resync: false }).await;
                    }
                }
                sup.close().await;
            })
        };

        let mut ctl = WsClient::connect(addr, "B1").await;
        let w = ctl.join(Role::Controller, Some(4), None).await;
        let id = match w.payload {
            Payload::Welcome(w) => w.client_id,
            other => return Err(format!("controller not admitted: {other:?}")),
        };
        for _ in 0..10 {
            ctl.until(|m| m.tag() == "STATE_DELTA").await;
            ctl.send(Payload::Heartbeat { resync: false }).await;
        }
        // killed without a close handshake
        drop(ctl);
        tokio::time::sleep(Duration::from_millis(250)).await;

        let mut back = WsClient::connect(addr, "B1").await;
        let w = back.join(Role::Controller, None, Some(id.clone())).await;
        match &w.payload {
            Payload::Welcome(w) => {
                ensure!(w.client_id == id, "resumed as {} instead of {id}", w.client_id);
                ensure!(w.station == Some(StationId::controller("B1", 4)), "resumed at {:?}", w.station);
            }
            other => return Err(format!("resume within grace refused: {other:?}")),
        }
        let snap = back.until(|m| m.tag() == "STATE_SNAPSHOT").await;
        let Payload::StateSnapshot(snap) = snap.payload else { unreachable!() };
        ensure!(back.picture.digest() == snap.digest, "reconstructed snapshot digest differs from the one sent");
        let deadline = Instant::now() + Duration::from_secs(5);
        let server = loop {
            if let Some(d) = seen.lock().unwrap().get(&snap.tick).cloned() {
                break d;
            }
            ensure!(Instant::now() < deadline, "supervisor never saw tick {}", snap.tick);
            tokio::time::sleep(Duration::from_millis(10)).await;
        };
        ensure!(snap.digest == server, "snapshot digest differs from the host picture at tick {}", snap.tick);
        // continues on deltas after the snapshot
        for _ in 0..5 {
            back.until(|m| m.tag() == "STATE_DELTA").await;
            back.send(Payload::Heartbeat { resync: false }).await;
        }
        drop(back);

        // silent past timeout plus grace: 35 ticks, roughly 0.7 s
        tokio::time::sleep(Duration::from_millis(1500)).await;
        let mut late = WsClient::connect(addr, "B1").await;
        let r = late.join(Role::Controller, None, Some(id.clone())).await;
        let refused = matches!(&r.payload, Payload::Reject(j) if j.reason == RejectReason::GraceExpired);
        ensure!(refused, "late resume not refused with GRACE_EXPIRED: {:?}", r.payload);
        late.close().await;

        let _ = stop_tx.send(true);
        let _ = witness.await;
        handle.shutdown().await;
        Ok(format!("resumed {id} at tick {} with matching digest; late resume got GRACE_EXPIRED", snap.tick))
    })
}

const LOAD_TICKS: u64 = 60;

/// Reads frames until `target` host tick, heartbeating on each; pilots and
/// tutors also send traffic.
async fn drive(mut c: WsClient, role: Role, target: u64, n: u64) -> WsClient {
    let callsigns = ["QFA12", "VOZ841", "JST501", "RXA22"];
    let mut frames = 0u64;
    while c.last_tick < target {
        let m = c.recv().await.expect("connection stayed open");
        if !matches!(m.payload, Payload::StateDelta { .. } | Payload::StateSnapshot(_) | Payload::MirrorFrame { .. }) {
            continue;
        }
        frames += 1;
        c.send(Payload::Heartbeat { resync: false }).await;
        match role {
            Role::PseudoPilot if (frames + n).is_multiple_of(5) => {
                let cs = callsigns[(n as usize + frames as usize) % callsigns.len()];
                c.send(Payload::PilotCmd { command: format!("{cs} FH {}", (frames * 37 + n * 11) % 360) }).await;
            }
            Role::RemoteTutor => {
                let id = c.id.clone().unwrap_or_default();
                let station = c.station.clone().unwrap();
                c.send(Payload::Pointer(PointerOverlay::new(&id, station, frames as f64, n as f64, true))).await;
            }
            _ => {}
        }
    }
    c
}

async fn join_all(addr: std::net::SocketAddr, seats: Vec<(Role, Option<u32>)>) -> Result<Vec<(Role, WsClient)>, String> {
    let tasks: Vec<_> = seats
        .into_iter()
        .map(|(role, station)| {
            tokio::spawn(async move {
                let mut c = WsClient::connect(addr, "B1").await;
                let w = c.join(role, station, None).await;
                (role, c, welcomed(&w.payload), w.payload)
            })
        })
        .collect();
    let mut out = Vec::new();
    for t in tasks {
        let (role, c, ok, payload) = t.await.map_err(|e| e.to_string())?;
        ensure!(ok, "{role:?} not admitted: {payload:?}");
        out.push((role, c));
    }
    Ok(out)
}

fn desk_scale_load() -> Outcome {
    runtime().block_on(async {
        let dir = tempfile::tempdir().unwrap();
        // real time: one scenario second per wall second
        let handle = start(dir.path(), None, SessionConfig::default()).await;
        let addr = handle.local_addr();
        let mut seats: Vec<(Role, Option<u32>)> = vec![(Role::Supervisor, None)];
        seats.extend((1..=10).map(|i| (Role::Controller, Some(i))));
        seats.extend((1..=10).map(|i| (Role::PseudoPilot, Some(i))));
        let mut clients = join_all(addr, seats).await?;
        clients.extend(join_all(addr, (1..=10).map(|i| (Role::RemoteTutor, Some(i))).collect()).await?);
        let health = handle.health();
        ensure!(health.sessions == 1, "expected one session, health {health:?}");

        let sup = clients.iter_mut().find(|(r, _)| *r == Role::Supervisor).map(|(_, c)| c).unwrap();
        sup.send(Payload::SupervisorCmd { command: SupervisorCommand::Start }).await;
        let target = sup.last_tick + LOAD_TICKS;
        let started = Instant::now();
        let tasks: Vec<_> = clients.into_iter().enumerate().map(|(n, (role, c))| tokio::spawn(drive(c, role, target, n as u64))).collect();
        let mut sent = 0;
        for t in tasks {
            sent += t.await.map_err(|e| format!("client failed: {e}"))?.sent;
        }
        let wall = started.elapsed();
        // let the last frames reach the host before stopping
        tokio::time::sleep(Duration::from_millis(1500)).await;
        let session_id = handle.sessions()["B1"].clone();
        let stats = handle.stats();
        handle.shutdown().await;

        let log = read_log_file(dir.path().join("logs").join(format!("{session_id}.atclog"))).map_err(|e| e.to_string())?;
        ensure!(stats.ticks >= LOAD_TICKS, "only {} ticks", stats.ticks);
        ensure!(wall >= Duration::from_secs(LOAD_TICKS - 2), "ran in {wall:?}, not at 1 Hz");
        ensure!(stats.max_tick < Duration::from_secs(1), "slowest tick took {:?}", stats.max_tick);
        ensure!(stats.decode_errors == 0, "{} decode errors", stats.decode_errors);
        ensure!(log.message_count() as u64 == sent, "log holds {} messages, clients sent {sent}", log.message_count());
        Ok(format!(
            "31 clients, {} ticks in {:.1}s, slowest tick {:?}, {sent} messages sent and logged",
            stats.ticks,
            wall.as_secs_f64(),
            stats.max_tick
        ))
    })
}
