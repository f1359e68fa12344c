//! WebSocket service: `/ws` carries framed-JSON protocol messages, `/healthz`
//! reports [`Health`].
//!
//! Each session runs on its own executor task that owns the [`Session`];
//! connection tasks only decode, enqueue, and forward encoded frames.

use std::collections::{BTreeMap, HashMap};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;

use super::{Health, LogTarget, Session, SessionConfig, LOG_EXTENSION};
use crate::exercise::{has_errors, parse_scenario, validate_scenario, Scenario};
use crate::protocol::{decode_message, encode_message, BlockConfig, Message, Payload, Phase, RejectReason};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub blocks: u32,
    pub scenario_dir: Option<PathBuf>,
    pub log_dir: PathBuf,
    /// Wall-clock time between host ticks; defaults to the scenario tick.
    pub tick_interval: Option<Duration>,
    pub session: SessionConfig,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::UNSPECIFIED),
            port: 9100,
            blocks: 1,
            scenario_dir: None,
            log_dir: PathBuf::from("logs"),
            tick_interval: None,
            session: SessionConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("cannot read scenario directory {}: {source}", path.display())]
    ScenarioDir { path: PathBuf, source: std::io::Error },
    #[error("cannot create log directory {}: {source}", path.display())]
    LogDir { path: PathBuf, source: std::io::Error },
    #[error("at least one block is required")]
    NoBlocks,
    #[error("cannot open session: {0}")]
    Session(#[from] super::HostError),
}

/// Counters shared by all executors; monitoring only.
#[derive(Debug, Default)]
struct Counters {
    ticks: AtomicU64,
    max_tick_us: AtomicU64,
    inbound: AtomicU64,
    decode_errors: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerStats {
    pub ticks: u64,
    /// Longest time spent on one tick, including encoding and fan-out.
    pub max_tick: Duration,
    pub inbound: u64,
    pub decode_errors: u64,
}

type ConnTx = mpsc::UnboundedSender<OutFrame>;

#[derive(Debug, Clone)]
struct OutFrame {
    text: Arc<str>,
    /// Set on WELCOME: the connection now speaks as this client.
    bind: Option<String>,
}

struct Inbound {
    message: Message,
    reply: ConnTx,
}

struct SessionSlot {
    session_id: String,
    tx: mpsc::UnboundedSender<Inbound>,
}

struct Shared {
    config: ServeConfig,
    scenario: Scenario,
    started: Instant,
    counters: Counters,
    slots: Mutex<BTreeMap<String, SessionSlot>>,
    log_paths: Mutex<Vec<PathBuf>>,
    serials: Mutex<HashMap<String, u64>>,
    executors: Mutex<Vec<JoinHandle<()>>>,
    /// Set first: connections drain what is already on the wire and close.
    shutdown: watch::Receiver<bool>,
    /// Set once connections are gone: executors run a last tick and stop.
    stop_executors: watch::Receiver<bool>,
    open_connections: watch::Sender<usize>,
}

/// How long a closing connection waits for frames still in flight.
const DRAIN_WAIT: Duration = Duration::from_millis(100);
/// Upper bound on the connection drain during shutdown.
const DRAIN_LIMIT: Duration = Duration::from_secs(5);

pub struct ServerHandle {
    local_addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: watch::Sender<bool>,
    stop_executors: watch::Sender<bool>,
    server: JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn stats(&self) -> ServerStats {
        let c = &self.shared.counters;
        ServerStats {
            ticks: c.ticks.load(Ordering::Relaxed),
            max_tick: Duration::from_micros(c.max_tick_us.load(Ordering::Relaxed)),
            inbound: c.inbound.load(Ordering::Relaxed),
            decode_errors: c.decode_errors.load(Ordering::Relaxed),
        }
    }

    pub fn health(&self) -> Health {
        health(&self.shared)
    }

    /// Active session id per block.
    pub fn sessions(&self) -> BTreeMap<String, String> {
        let slots = self.shared.slots.lock().expect("slots lock");
        slots.iter().map(|(b, s)| (b.clone(), s.session_id.clone())).collect()
    }

    /// Every log file opened so far, in creation order.
    pub fn log_paths(&self) -> Vec<PathBuf> {
        self.shared.log_paths.lock().expect("paths lock").clone()
    }

    /// Stops accepting connections, lets open connections forward frames
    /// already in flight, runs a last tick per session so queued messages are
    /// recorded, and syncs the logs.
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        let mut open = self.shared.open_connections.subscribe();
        let _ = tokio::time::timeout(DRAIN_LIMIT, open.wait_for(|n| *n == 0)).await;
        let _ = self.stop_executors.send(true);
        let executors: Vec<_> = std::mem::take(&mut *self.shared.executors.lock().expect("executors lock"));
        for e in executors {
            let _ = e.await;
        }
        let _ = self.server.await;
    }
}

/// First scenario in `dir` (by file name) that parses and validates cleanly.
pub fn first_valid_scenario(dir: &Path) -> Result<Option<(PathBuf, Scenario)>, std::io::Error> {
    let mut paths: Vec<PathBuf> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
    paths.sort();
    for p in paths {
        let Ok(bytes) = std::fs::read(&p) else { continue };
        match parse_scenario(&bytes) {
            Ok(s) if !has_errors(&validate_scenario(&s)) => return Ok(Some((p, s))),
            _ => tracing::warn!(path = %p.display(), "skipping invalid scenario"),
        }
    }
    Ok(None)
}

pub async fn serve(config: ServeConfig) -> Result<ServerHandle, ServeError> {
    if config.blocks == 0 {
        return Err(ServeError::NoBlocks);
    }
    let scenario = match &config.scenario_dir {
        Some(dir) => match first_valid_scenario(dir) {
            Ok(Some((path, s))) => {
                tracing::info!(path = %path.display(), title = %s.title, "default scenario");
                s
            }
            Ok(None) => Scenario::empty("empty"),
            Err(source) => return Err(ServeError::ScenarioDir { path: dir.clone(), source }),
        },
        None => Scenario::empty("empty"),
    };
    std::fs::create_dir_all(&config.log_dir).map_err(|source| ServeError::LogDir { path: config.log_dir.clone(), source })?;
    let listener =
        tokio::net::TcpListener::bind((config.bind, config.port)).await.map_err(|source| ServeError::Bind { port: config.port, source })?;
    let local_addr = listener.local_addr().map_err(|source| ServeError::Bind { port: config.port, source })?;

    let (shutdown_tx, shutdown_rx) = watch::channel(false);
    let (stop_tx, stop_rx) = watch::channel(false);
    let shared = Arc::new(Shared {
        config,
        scenario,
        started: Instant::now(),
        counters: Counters::default(),
        slots: Mutex::new(BTreeMap::new()),
        log_paths: Mutex::new(Vec::new()),
        serials: Mutex::new(HashMap::new()),
        executors: Mutex::new(Vec::new()),
        shutdown: shutdown_rx.clone(),
        stop_executors: stop_rx,
        open_connections: watch::Sender::new(0),
    });
    for i in 1..=shared.config.blocks {
        start_session(&shared, &format!("B{i}"))?;
    }

    let app = Router::new().route("/ws", get(ws_upgrade)).route("/healthz", get(healthz)).with_state(shared.clone());
    let mut stop = shutdown_rx;
    let server = tokio::spawn(async move {
        let graceful = async move {
            let _ = stop.wait_for(|s| *s).await;
        };
        if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(graceful).await {
            tracing::error!(error = %e, "server error");
        }
    });
    tracing::info!(%local_addr, "listening");
    Ok(ServerHandle { local_addr, shared, shutdown: shutdown_tx, stop_executors: stop_tx, server })
}

fn health(shared: &Shared) -> Health {
    Health {
        sessions: shared.slots.lock().expect("slots lock").len(),
        blocks: shared.config.blocks as usize,
        uptime_s: shared.started.elapsed().as_secs_f64(),
    }
}

async fn healthz(State(shared): State<Arc<Shared>>) -> Json<Health> {
    Json(health(&shared))
}

fn unique_log_path(dir: &Path, session_id: &str) -> PathBuf {
    let mut path = dir.join(format!("{session_id}.{LOG_EXTENSION}"));
    let mut n = 1;
    while path.exists() {
        path = dir.join(format!("{session_id}.{n}.{LOG_EXTENSION}"));
        n += 1;
    }
    path
}

/// Opens a LOBBY session on `block_id` and spawns its executor.
fn start_session(shared: &Arc<Shared>, block_id: &str) -> Result<(), ServeError> {
    let serial = {
        let mut serials = shared.serials.lock().expect("serials lock");
        let n = serials.entry(block_id.to_string()).or_insert(0);
        *n += 1;
        *n
    };
    let session_id = format!("{block_id}-{serial}");
    let log_path = unique_log_path(&shared.config.log_dir, &session_id);
    let session = Session::create(
        &session_id,
        shared.scenario.clone(),
        BlockConfig::new(block_id),
        &shared.config.session,
        LogTarget::File(log_path.clone()),
    )?;
    let interval = shared.config.tick_interval.unwrap_or_else(|| Duration::from_secs_f64(session.scenario().tick_seconds));
    let (tx, rx) = mpsc::unbounded_channel();
    shared.log_paths.lock().expect("paths lock").push(log_path);
    shared.slots.lock().expect("slots lock").insert(block_id.to_string(), SessionSlot { session_id: session_id.clone(), tx });
    let handle = tokio::spawn(run_executor(shared.clone(), session, rx, interval));
    shared.executors.lock().expect("executors lock").push(handle);
    tracing::info!(session = %session_id, "session open");
    Ok(())
}

async fn run_executor(shared: Arc<Shared>, mut session: Session, mut rx: mpsc::UnboundedReceiver<Inbound>, interval: Duration) {
    let mut routes: HashMap<String, ConnTx> = HashMap::new();
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut shutdown = shared.stop_executors.clone();
    let mut stopping = *shutdown.borrow();
    loop {
        if !stopping {
            tokio::select! {
                _ = ticker.tick() => {}
                _ = shutdown.wait_for(|s| *s) => stopping = true,
            }
        }
        let t0 = Instant::now();
        while let Ok(inb) = rx.try_recv() {
            routes.insert(inb.message.sender.clone(), inb.reply);
            session.enqueue(inb.message);
        }
        let report = match session.tick() {
            Ok(r) => r,
            Err(e) => {
                tracing::error!(session = %session.id(), error = %e, "log write failed; closing session");
                break;
            }
        };
        dispatch(report.outbound, &mut routes);
        let us = t0.elapsed().as_micros() as u64;
        shared.counters.ticks.fetch_add(1, Ordering::Relaxed);
        shared.counters.max_tick_us.fetch_max(us, Ordering::Relaxed);
        if stopping || report.phase == Phase::Ended {
            break;
        }
    }
    if let Err(e) = session.log_mut().sync() {
        tracing::error!(session = %session.id(), error = %e, "log sync failed");
    }
    tracing::info!(session = %session.id(), ticks = session.host_tick(), "session closed");
    let block = session.block_id().to_string();
    let mut slots = shared.slots.lock().expect("slots lock");
    if slots.get(&block).is_some_and(|s| s.session_id == session.id()) {
        slots.remove(&block);
    }
    drop(slots);
    if !stopping && !*shared.shutdown.borrow() && !*shared.stop_executors.borrow() {
        if let Err(e) = start_session(&shared, &block) {
            tracing::error!(block = %block, error = %e, "cannot reopen block");
        }
    }
}

fn dispatch(outbound: Vec<super::Outbound>, routes: &mut HashMap<String, ConnTx>) {
    for o in outbound {
        let bind = match &o.message.payload {
            Payload::Welcome(w) => Some(w.client_id.clone()),
            _ => None,
        };
        let Some(tx) = routes.get(&o.to).cloned() else { continue };
        let text: Arc<str> = String::from_utf8(encode_message(&o.message)).expect("JSON is UTF-8").into();
        if tx.send(OutFrame { text, bind: bind.clone() }).is_err() {
            routes.remove(&o.to);
            continue;
        }
        if let Some(id) = bind {
            routes.insert(id, tx);
        }
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    static CONN: AtomicU64 = AtomicU64::new(0);
    let conn = CONN.fetch_add(1, Ordering::Relaxed) + 1;
    ws.on_upgrade(move |socket| connection(socket, shared, conn))
}

/// Transport-side state of one connection.
struct Route {
    session_id: Option<String>,
    tx: Option<mpsc::UnboundedSender<Inbound>>,
}

fn resolve(shared: &Shared, target: &str) -> Option<(String, mpsc::UnboundedSender<Inbound>)> {
    let slots = shared.slots.lock().expect("slots lock");
    slots.iter().find(|(block, s)| s.session_id == target || *block == target).map(|(_, s)| (s.session_id.clone(), s.tx.clone()))
}

struct OpenConnection(Arc<Shared>);

impl OpenConnection {
    fn new(shared: Arc<Shared>) -> Self {
        shared.open_connections.send_modify(|n| *n += 1);
        Self(shared)
    }
}

impl Drop for OpenConnection {
    fn drop(&mut self) {
        self.0.open_connections.send_modify(|n| *n -= 1);
    }
}

async fn connection(socket: WebSocket, shared: Arc<Shared>, conn: u64) {
    let _open = OpenConnection::new(shared.clone());
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<OutFrame>();
    let bound: Arc<Mutex<Option<String>>> = Arc::new(Mutex::new(None));
    let anon = format!("conn-{conn}");

    let writer_bound = bound.clone();
    let writer = tokio::spawn(async move {
        while let Some(frame) = rx.recv().await {
            if let Some(id) = frame.bind {
                *writer_bound.lock().expect("bound lock") = Some(id);
            }
            if sink.send(WsMessage::Text(frame.text.as_ref().into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let mut route = Route { session_id: None, tx: None };
    let mut transport_seq = 0u64;
    let mut reject = |reason: RejectReason, detail: String, session: &str| {
        transport_seq += 1;
        let m = Message::new(transport_seq, 0, session, "transport", Payload::reject(reason, detail));
        let text: Arc<str> = String::from_utf8(encode_message(&m)).expect("JSON is UTF-8").into();
        let _ = tx.send(OutFrame { text, bind: None });
    };
    let mut stop = shared.shutdown.clone();
    let mut draining = false;
    loop {
        let frame = if draining {
            match tokio::time::timeout(DRAIN_WAIT, stream.next()).await {
                Ok(f) => f,
                Err(_) => break,
            }
        } else {
            tokio::select! {
                f = stream.next() => f,
                _ = stop.wait_for(|s| *s) => {
                    draining = true;
                    continue;
                }
            }
        };
        let bytes = match frame {
            Some(Ok(WsMessage::Text(t))) => t.as_bytes().to_vec(),
            Some(Ok(WsMessage::Binary(b))) => b.to_vec(),
            Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => break,
            Some(Ok(_)) => continue,
        };
        let mut message = match decode_message(&bytes) {
            Ok(m) => m,
            Err(e) => {
                shared.counters.decode_errors.fetch_add(1, Ordering::Relaxed);
                reject(e.reject_reason(), e.to_string(), "");
                continue;
            }
        };
        let Some((session_id, session_tx)) = resolve(&shared, &message.session_id) else {
            reject(RejectReason::NoSuchSession, message.session_id.clone(), &message.session_id);
            continue;
        };
        if route.session_id.as_deref() != Some(session_id.as_str()) {
            route = Route { session_id: Some(session_id.clone()), tx: Some(session_tx) };
            *bound.lock().expect("bound lock") = None;
        }
        message.sender = bound.lock().expect("bound lock").clone().unwrap_or_else(|| anon.clone());
        let sent = route.tx.as_ref().is_some_and(|t| t.send(Inbound { message, reply: tx.clone() }).is_ok());
        if sent {
            shared.counters.inbound.fetch_add(1, Ordering::Relaxed);
        } else {
            reject(RejectReason::NoSuchSession, session_id, "");
        }
    }
    // executors may still hold a sender for this connection
    writer.abort();
}
