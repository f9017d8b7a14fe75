//! Message passing between one master and W workers.
//!
//! Two backends share the same contract: an in-process backend over channels
//! and a TCP backend for multi-process runs. Each endpoint is owned by one
//! thread of control; delivery is reliable and FIFO per sender pair;
//! `recv_any` is served round-robin over ranks with pending messages so no
//! sender is starved. Connectivity is all-to-all: workers can message each
//! other directly (the final reduction tree needs it).

pub mod inproc;
pub mod tcp;

mod inbox;

use std::fmt;
use std::io;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_channel::Receiver;

/// Endpoint identifier: 0 is the master, 1..=W are workers.
pub type Rank = u32;

/// The master's rank.
pub const ROOT: Rank = 0;

/// Message kinds used by the execution schemes.
///
/// `Work` carries an encoded work item, `Add` a batch of serialized
/// polynomials, `Result` one serialized polynomial, `Reconf` a role
/// assignment for a topology change; the request and end tags carry no
/// payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    Req = 1,
    ReqStarved = 2,
    Work = 3,
    Add = 4,
    Result = 5,
    End = 6,
    Reconf = 7,
}

impl Tag {
    pub fn from_u8(b: u8) -> Option<Tag> {
        Some(match b {
            1 => Tag::Req,
            2 => Tag::ReqStarved,
            3 => Tag::Work,
            4 => Tag::Add,
            5 => Tag::Result,
            6 => Tag::End,
            7 => Tag::Reconf,
            _ => return None,
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::Req => "REQ",
            Tag::ReqStarved => "REQ_STARVED",
            Tag::Work => "WORK",
            Tag::Add => "ADD",
            Tag::Result => "RESULT",
            Tag::End => "END",
            Tag::Reconf => "RECONF",
        };
        f.write_str(s)
    }
}

/// A delivered message: tag, sending rank, raw payload.
#[derive(Debug, Clone)]
pub struct Message {
    pub tag: Tag,
    pub source: Rank,
    pub payload: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("peer rank {0} is disconnected")]
    PeerClosed(Rank),
    #[error("all peers terminated")]
    Shutdown,
    #[error("invalid transport configuration: {0}")]
    Config(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("endpoint misuse: {0}")]
    Usage(String),
    #[error("transport io: {0}")]
    Io(#[from] io::Error),
}

/// A posted receive. Complete it with [`PendingReceive::wait`]; consuming
/// `self` makes double completion unrepresentable. While one is outstanding
/// the owning endpoint refuses other receives.
pub struct PendingReceive {
    rx: Receiver<Message>,
    from: Rank,
    received: Arc<AtomicU64>,
    _posted: PostedGuard,
}

struct PostedGuard(Arc<AtomicBool>);

impl Drop for PostedGuard {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

impl PendingReceive {
    /// Blocks until the next message from the posted source arrives.
    pub fn wait(self) -> Result<Message, TransportError> {
        match self.rx.recv() {
            Ok(msg) => {
                self.received.fetch_add(1, Ordering::Relaxed);
                Ok(msg)
            }
            Err(_) => Err(TransportError::PeerClosed(self.from)),
        }
    }
}

/// One rank's view of the world. Single-owner: exactly one thread drives it.
pub trait Endpoint: Send {
    fn rank(&self) -> Rank;

    /// Total number of ranks, master included.
    fn world_size(&self) -> u32;

    /// Reliable FIFO send to a peer.
    fn send(&mut self, to: Rank, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError>;

    /// Next message from any rank, fair round-robin over ready senders.
    fn recv_any(&mut self) -> Result<Message, TransportError>;

    /// Next message from a specific rank.
    fn recv_from(&mut self, from: Rank) -> Result<Message, TransportError>;

    /// Posts a receive that can be completed later, allowing local work to
    /// overlap the wait.
    fn post_receive(&mut self, from: Rank) -> Result<PendingReceive, TransportError>;

    fn messages_sent(&self) -> u64;

    fn messages_received(&self) -> u64;

    fn send_empty(&mut self, to: Rank, tag: Tag) -> Result<(), TransportError> {
        self.send(to, tag, Vec::new())
    }
}
