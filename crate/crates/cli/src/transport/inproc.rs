//! In-process backend: one endpoint per thread, connected all-to-all by
//! unbounded channels.

use crossbeam_channel::{unbounded, Sender};

use super::inbox::Inbox;
use super::{Endpoint, Message, PendingReceive, Rank, Tag, TransportError};

pub struct InprocEndpoint {
    rank: Rank,
    world: u32,
    senders: Vec<Option<Sender<Message>>>,
    inbox: Inbox,
    sent: u64,
}

/// Creates `workers + 1` fully connected endpoints; index = rank.
pub fn spawn(workers: u32) -> Result<Vec<InprocEndpoint>, TransportError> {
    if workers == 0 {
        return Err(TransportError::Config(
            "at least one worker is required".into(),
        ));
    }
    let world = workers + 1;
    let n = world as usize;
    // channel[src][dst] carries messages from src to dst.
    let mut tx: Vec<Vec<Option<Sender<Message>>>> = (0..n).map(|_| vec![None; n]).collect();
    let mut rx: Vec<Vec<Option<crossbeam_channel::Receiver<Message>>>> =
        (0..n).map(|_| vec![None; n]).collect();
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let (s, r) = unbounded();
            tx[src][dst] = Some(s);
            rx[src][dst] = Some(r);
        }
    }
    let mut endpoints = Vec::with_capacity(n);
    for rank in 0..n {
        let senders = tx[rank].clone();
        let queues = (0..n).map(|src| rx[src][rank].take()).collect();
        endpoints.push(InprocEndpoint {
            rank: rank as Rank,
            world,
            senders,
            inbox: Inbox::new(queues),
            sent: 0,
        });
    }
    Ok(endpoints)
}

impl Endpoint for InprocEndpoint {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn world_size(&self) -> u32 {
        self.world
    }

    fn send(&mut self, to: Rank, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError> {
        let sender = self
            .senders
            .get(to as usize)
            .and_then(|s| s.as_ref())
            .ok_or(TransportError::PeerClosed(to))?;
        let msg = Message {
            tag,
            source: self.rank,
            payload,
        };
        sender
            .send(msg)
            .map_err(|_| TransportError::PeerClosed(to))?;
        self.sent += 1;
        Ok(())
    }

    fn recv_any(&mut self) -> Result<Message, TransportError> {
        self.inbox.recv_any()
    }

    fn recv_from(&mut self, from: Rank) -> Result<Message, TransportError> {
        self.inbox.recv_from(from)
    }

    fn post_receive(&mut self, from: Rank) -> Result<PendingReceive, TransportError> {
        self.inbox.post(from)
    }

    fn messages_sent(&self) -> u64 {
        self.sent
    }

    fn messages_received(&self) -> u64 {
        self.inbox
            .received_counter()
            .load(std::sync::atomic::Ordering::Relaxed)
    }
}
