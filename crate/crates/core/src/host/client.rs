use super::session::{Session, TickReport};
use crate::protocol::{ClientId, Hello, Message, Payload, Role};

/// In-process stand-in for a station: numbers its messages and learns its
/// client id from the WELCOME addressed to it.
#[derive(Debug, Clone)]
pub struct ScriptedClient {
    route: String,
    id: Option<ClientId>,
    seq: u64,
}

impl ScriptedClient {
    /// `route` is the address used until the host assigns a client id.
    pub fn new(route: &str) -> Self {
        Self { route: route.to_string(), id: None, seq: 0 }
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// Current address: the client id once welcomed, else the route.
    pub fn address(&self) -> &str {
        self.id.as_deref().unwrap_or(&self.route)
    }

    /// Forgets the assigned id, as a fresh connection would.
    pub fn reconnect(&mut self, route: &str) {
        self.route = route.to_string();
        self.id = None;
    }

    pub fn message(&mut self, session: &Session, payload: Payload) -> Message {
        self.seq += 1;
        Message::new(self.seq, session.world().clock.tick_index, session.id(), self.address(), payload)
    }

    pub fn send(&mut self, session: &mut Session, payload: Payload) {
        let m = self.message(session, payload);
        session.enqueue(m);
    }

    pub fn hello(&mut self, session: &mut Session, role: Role, station: Option<u32>, resume: Option<ClientId>) {
        let name = self.route.clone();
        self.send(session, Payload::Hello(Hello { desired_role: role, desired_station: station, client_name: name, token: None, resume }));
    }

    /// Messages in `report` addressed to this client. A WELCOME among them
    /// sets the client id.
    pub fn receive<'a>(&mut self, report: &'a TickReport) -> Vec<&'a Message> {
        for o in report.outbound.iter().filter(|o| o.to == self.route) {
            if let Payload::Welcome(w) = &o.message.payload {
                self.id = Some(w.client_id.clone());
            }
        }
        let mine = report.outbound.iter().filter(|o| o.to == self.route || Some(&o.to) == self.id.as_ref()).map(|o| &o.message).collect();
        mine
    }
}
