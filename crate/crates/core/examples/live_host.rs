//! Starts the network host on a loopback port, joins a supervisor and a
//! controller over WebSocket, runs a few ticks and reads `/healthz`.

use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message as Ws;

use atcsim::host::server::{serve, ServeConfig};
use atcsim::protocol::{decode_message, encode_message, Hello, Message, Payload, Role, SupervisorCommand};

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn send(ws: &mut Socket, seq: u64, payload: Payload) {
    let m = Message::new(seq, 0, "B1", "me", payload);
    let text = String::from_utf8(encode_message(&m)).expect("utf-8 json");
    ws.send(Ws::text(text)).await.expect("send");
}

async fn next(ws: &mut Socket) -> Message {
    loop {
        match ws.next().await.expect("open").expect("frame") {
            Ws::Text(t) => return decode_message(t.as_bytes()).expect("host speaks the codec"),
            _ => continue,
        }
    }
}

fn hello(role: Role) -> Payload {
    Payload::Hello(Hello { desired_role: role, desired_station: None, client_name: "example".into(), token: None, resume: None })
}

#[tokio::main]
async fn main() {
    let logs = std::env::temp_dir().join(format!("atcsim-live-{}", std::process::id()));
    let config = ServeConfig {
        bind: "127.0.0.1".parse().expect("ip"),
        port: 0,
        scenario_dir: Some(concat!(env!("CARGO_MANIFEST_DIR"), "/data").into()),
        log_dir: logs.clone(),
        tick_interval: Some(Duration::from_millis(50)),
        ..ServeConfig::default()
    };
    let handle = serve(config).await.expect("serve");
    let addr = handle.local_addr();
    println!("host on {addr}, sessions {:?}", handle.sessions());

    let url = format!("ws://{addr}/ws");
    let (mut sup, _) = tokio_tungstenite::connect_async(&url).await.expect("connect");
    let (mut ctl, _) = tokio_tungstenite::connect_async(&url).await.expect("connect");
    send(&mut sup, 1, hello(Role::Supervisor)).await;
    send(&mut ctl, 1, hello(Role::Controller)).await;
    for ws in [&mut sup, &mut ctl] {
        if let Payload::Welcome(w) = next(ws).await.payload {
            println!("welcomed {} as {:?} at {:?}", w.client_id, w.role, w.station.map(|s| s.to_string()));
        }
    }
    send(&mut sup, 2, Payload::SupervisorCmd { command: SupervisorCommand::Start }).await;

    let mut frames = 0;
    while frames < 20 {
        let m = next(&mut ctl).await;
        match &m.payload {
            Payload::StateSnapshot(s) => println!("snapshot at tick {} with {} tracks", s.tick, s.tracks.len()),
            Payload::StateDelta { tick, frame, .. } if tick % 5 == 0 => println!("delta at tick {tick}: {} ops", frame.ops().len()),
            _ => {}
        }
        if m.tag() == "STATE_DELTA" || m.tag() == "STATE_SNAPSHOT" {
            frames += 1;
            send(&mut ctl, 1 + frames, Payload::Heartbeat { resync: false }).await;
            send(&mut sup, 2 + frames, Payload::Heartbeat { resync: false }).await;
        }
    }

    let mut tcp = tokio::net::TcpStream::connect(addr).await.expect("tcp");
    tcp.write_all(b"GET /healthz HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").await.expect("write");
    let mut body = String::new();
    tcp.read_to_string(&mut body).await.expect("read");
    println!("healthz: {}", body.rsplit("\r\n\r\n").next().unwrap_or(""));

    let stats = handle.stats();
    println!("{} ticks, slowest {:?}, {} inbound messages", stats.ticks, stats.max_tick, stats.inbound);
    handle.shutdown().await;
    let _ = std::fs::remove_dir_all(&logs);
}
