use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message as Frame;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use atcsim::protocol::{decode_message, encode_message, Hello, Message, MirrorFrame, MirrorReceiver, Payload, Role, StationId};

/// A station speaking the wire protocol over a real WebSocket.
pub struct WsClient {
    ws: WebSocketStream<MaybeTlsStream<tokio::net::TcpStream>>,
    pub session: String,
    pub seq: u64,
    pub sent: u64,
    pub id: Option<String>,
    pub station: Option<StationId>,
    pub picture: MirrorReceiver,
    pub last_tick: u64,
}

impl WsClient {
    pub async fn connect(addr: SocketAddr, session: &str) -> Self {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.expect("connect");
        Self {
            ws,
            session: session.to_string(),
            seq: 0,
            sent: 0,
            id: None,
            station: None,
            picture: MirrorReceiver::default(),
            last_tick: 0,
        }
    }

    pub async fn send(&mut self, payload: Payload) {
        self.seq += 1;
        let m = Message::new(self.seq, self.last_tick, &self.session, "client", payload);
        self.send_raw(String::from_utf8(encode_message(&m)).unwrap()).await;
    }

    pub async fn send_raw(&mut self, text: String) {
        self.ws.send(Frame::text(text)).await.expect("send");
        self.sent += 1;
    }

    pub async fn recv(&mut self) -> Option<Message> {
        self.recv_within(Duration::from_secs(10)).await
    }

    pub async fn recv_within(&mut self, limit: Duration) -> Option<Message> {
        loop {
            let f = tokio::time::timeout(limit, self.ws.next()).await.ok()??.ok()?;
            if let Frame::Text(t) = f {
                let m = decode_message(t.as_bytes()).expect("host output decodes");
                self.observe(&m);
                return Some(m);
            }
        }
    }

    /// Tracks the client id and the mirrored picture; panics on a frame that
    /// does not apply.
    fn observe(&mut self, m: &Message) {
        match &m.payload {
            Payload::Welcome(w) => {
                self.id = Some(w.client_id.clone());
                self.station = w.station.clone();
            }
            Payload::StateSnapshot(s) => {
                let st = self.station.clone().unwrap_or_else(|| StationId::supervisor("B1"));
                self.picture.receive(&MirrorFrame::snapshot(st, &s.tracks)).expect("snapshot applies");
                assert_eq!(self.picture.digest(), s.digest);
                self.last_tick = s.tick;
            }
            Payload::StateDelta { tick, frame, .. } | Payload::MirrorFrame { tick, frame, .. } => {
                self.picture.receive(frame).expect("delta applies");
                assert_eq!(self.picture.digest(), frame.digest);
                self.last_tick = *tick;
            }
            _ => {}
        }
    }

    /// Reads until `pred` matches, returning the matching message.
    pub async fn until(&mut self, mut pred: impl FnMut(&Message) -> bool) -> Message {
        loop {
            let m = self.recv().await.expect("connection stayed open");
            if pred(&m) {
                return m;
            }
        }
    }

    pub async fn join(&mut self, role: Role, station: Option<u32>, resume: Option<String>) -> Message {
        let hello = Hello { desired_role: role, desired_station: station, client_name: "test".into(), token: None, resume };
        self.send(Payload::Hello(hello)).await;
        self.until(|m| matches!(m.payload, Payload::Welcome(_) | Payload::Reject(_))).await
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}
