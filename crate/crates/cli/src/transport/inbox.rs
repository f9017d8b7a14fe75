//! Per-source inbound queues shared by both transport backends.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_channel::{Receiver, Select, TryRecvError};

use super::{Message, PendingReceive, PostedGuard, Rank, TransportError};

/// One receive queue per peer rank, with a rotation cursor so `recv_any`
/// serves ready senders round-robin.
pub(super) struct Inbox {
    queues: Vec<Option<Receiver<Message>>>,
    cursor: usize,
    received: Arc<AtomicU64>,
    posted: Arc<AtomicBool>,
}

impl Inbox {
    /// `queues[r]` holds the receive side for messages from rank `r`; the
    /// entry for the endpoint's own rank is `None`.
    pub(super) fn new(queues: Vec<Option<Receiver<Message>>>) -> Self {
        Inbox {
            queues,
            cursor: 0,
            received: Arc::new(AtomicU64::new(0)),
            posted: Arc::new(AtomicBool::new(false)),
        }
    }

    pub(super) fn received_counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.received)
    }

    fn check_not_posted(&self) -> Result<(), TransportError> {
        if self.posted.load(Ordering::SeqCst) {
            return Err(TransportError::Usage(
                "receive attempted while a posted receive is outstanding".into(),
            ));
        }
        Ok(())
    }

    fn note_received(&self) {
        self.received.fetch_add(1, Ordering::Relaxed);
    }

    pub(super) fn recv_any(&mut self) -> Result<Message, TransportError> {
        self.check_not_posted()?;
        let n = self.queues.len();
        loop {
            // One rotation starting just past the last served rank. A queue
            // that reports disconnected is drained, so it can be retired.
            let mut any_alive = false;
            for step in 1..=n {
                let i = (self.cursor + step) % n;
                let Some(rx) = &self.queues[i] else { continue };
                match rx.try_recv() {
                    Ok(msg) => {
                        self.cursor = i;
                        self.note_received();
                        return Ok(msg);
                    }
                    Err(TryRecvError::Empty) => any_alive = true,
                    Err(TryRecvError::Disconnected) => self.queues[i] = None,
                }
            }
            if !any_alive {
                return Err(TransportError::Shutdown);
            }
            // Nothing ready: block until some queue has traffic (or dies),
            // then rescan in rotation order.
            let mut sel = Select::new();
            for rx in self.queues.iter().flatten() {
                sel.recv(rx);
            }
            let _ = sel.ready();
        }
    }

    pub(super) fn recv_from(&mut self, from: Rank) -> Result<Message, TransportError> {
        self.check_not_posted()?;
        let slot = self
            .queues
            .get(from as usize)
            .ok_or(TransportError::PeerClosed(from))?;
        let Some(rx) = slot else {
            return Err(TransportError::PeerClosed(from));
        };
        match rx.recv() {
            Ok(msg) => {
                self.note_received();
                Ok(msg)
            }
            Err(_) => {
                self.queues[from as usize] = None;
                Err(TransportError::PeerClosed(from))
            }
        }
    }

    pub(super) fn post(&mut self, from: Rank) -> Result<PendingReceive, TransportError> {
        self.check_not_posted()?;
        let slot = self
            .queues
            .get(from as usize)
            .ok_or(TransportError::PeerClosed(from))?;
        let Some(rx) = slot else {
            return Err(TransportError::PeerClosed(from));
        };
        self.posted.store(true, Ordering::SeqCst);
        Ok(PendingReceive {
            rx: rx.clone(),
            from,
            received: self.received_counter(),
            _posted: PostedGuard(Arc::clone(&self.posted)),
        })
    }
}
