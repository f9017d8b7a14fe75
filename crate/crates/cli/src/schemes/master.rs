//! Master-side protocol engines.
//!
//! One engine drives the master-worker, addworker, hierarchical, and
//! combined schemes as three modes of a single state machine; the stateful
//! scheme has its own, much simpler, loop. Requests that cannot be answered
//! yet (drain phases, exhausted queues with results still in flight) are
//! parked and re-served after every state change, so no worker is ever left
//! unanswered.

use std::collections::VecDeque;
use std::thread;
use std::time::Instant;

use sptensor_core::invariant::triple_count;
use sptensor_core::{wire, Polynomial};

use crate::adapt::{
    should_switch_to_addworker, should_switch_to_hier, MasterTimers, Mode, StarvationWindow,
};
use crate::schemes::proto::{encode_add_batch, encode_role, encode_work_item, Role};
use crate::schemes::{
    coarse_factor, generate_work_items, plan_pools, RunConfig, SchemeError, SchemeKind, WorkItem,
};
use crate::stats::SwitchEvent;
use crate::transport::{Endpoint, Message, Rank, Tag};

/// What the master learned from a finished run.
pub struct MasterOutcome {
    pub poly: Polynomial,
    pub timers: MasterTimers,
    pub items_issued: u64,
    pub switches: Vec<SwitchEvent>,
    pub messages_sent: u64,
    pub messages_received: u64,
}

/// Runs the master side of the configured scheme over an endpoint whose
/// workers are already running (threads or remote processes).
pub fn run_master(
    ep: &mut dyn Endpoint,
    cfg: &RunConfig,
) -> Result<MasterOutcome, SchemeError> {
    match cfg.scheme {
        SchemeKind::Seq => Err(SchemeError::Config(
            "the sequential scheme has no master".into(),
        )),
        SchemeKind::Stateful => stateful_master(ep, cfg),
        _ => Engine::new(ep, cfg).run(),
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Work(WorkItem),
    Add,
}

struct Engine<'a> {
    ep: &'a mut dyn Endpoint,
    cfg: &'a RunConfig,
    mode: Mode,
    policy_active: bool,
    /// Fine-grained items not yet distributed (mw/addworker phases).
    fine: VecDeque<WorkItem>,
    /// Coarse items not yet distributed (hierarchy phase).
    coarse: VecDeque<WorkItem>,
    /// Pool assignment per foreman, once the hierarchy exists.
    pools: Vec<Vec<Rank>>,
    /// Whether each rank has been told its role after a hierarchy switch.
    assigned: Vec<bool>,
    /// Hierarchy known to everyone from startup (pure hier scheme).
    preassigned: bool,
    acc: Polynomial,
    /// Serialized results awaiting delegation (addworker mode only).
    buffer: Vec<Vec<u8>>,
    task_of: Vec<Option<Task>>,
    outstanding_work: u32,
    outstanding_adds: u32,
    triples_done: u64,
    total_triples: u64,
    items_issued: u64,
    pending: VecDeque<Rank>,
    ends_sent: u32,
    timers: MasterTimers,
    votes: StarvationWindow,
    switches: Vec<SwitchEvent>,
}

impl<'a> Engine<'a> {
    fn new(ep: &'a mut dyn Endpoint, cfg: &'a RunConfig) -> Self {
        let world = cfg.workers as usize + 1;
        let total = triple_count(cfg.size);
        let (mode, policy_active) = match cfg.scheme {
            SchemeKind::MasterWorker => (Mode::Mw, false),
            SchemeKind::AddWorker => (Mode::AddWorker, false),
            SchemeKind::Hierarchical => (Mode::Hier, false),
            SchemeKind::Combined => (Mode::Mw, true),
            _ => unreachable!("engine only drives request-driven schemes"),
        };
        let mut engine = Engine {
            ep,
            cfg,
            mode,
            policy_active,
            fine: generate_work_items(cfg.size, cfg.granularity).into(),
            coarse: VecDeque::new(),
            pools: Vec::new(),
            assigned: vec![false; world],
            preassigned: false,
            acc: Polynomial::zero(),
            buffer: Vec::new(),
            task_of: vec![None; world],
            outstanding_work: 0,
            outstanding_adds: 0,
            triples_done: 0,
            total_triples: total,
            items_issued: 0,
            pending: VecDeque::new(),
            ends_sent: 0,
            timers: MasterTimers::default(),
            votes: StarvationWindow::new(cfg.policy.window),
            switches: Vec::new(),
        };
        if cfg.scheme == SchemeKind::Hierarchical {
            engine.preassigned = true;
            engine.install_hierarchy(cfg.foremen);
        }
        engine
    }

    /// Replaces the undistributed fine queue by coarse chunks and records the
    /// foreman pools. The remaining fine queue is always one contiguous range
    /// because items are generated in order and popped from the front.
    fn install_hierarchy(&mut self, foremen: u32) {
        self.pools = plan_pools(self.cfg.workers, foremen);
        let factor = coarse_factor(self.cfg.workers, foremen);
        let coarse_granularity = (self.cfg.granularity * factor).min(self.total_triples.max(1));
        let next_start = self.fine.front().map_or(self.total_triples, |i| i.start);
        self.fine.clear();
        let mut start = next_start;
        while start < self.total_triples {
            let count = coarse_granularity.min(self.total_triples - start);
            self.coarse.push_back(WorkItem { start, count });
            start += count;
        }
    }

    fn foreman_count(&self) -> u32 {
        self.pools.len() as u32
    }

    /// How many ranks the master itself must answer with END.
    fn end_targets(&self) -> u32 {
        match self.mode {
            Mode::Hier => self.foreman_count(),
            _ => self.cfg.workers,
        }
    }

    fn computation_done(&self) -> bool {
        self.triples_done == self.total_triples
            && self.outstanding_work == 0
            && self.outstanding_adds == 0
            && (self.mode != Mode::AddWorker || self.buffer.len() <= 1)
    }

    fn recv_timed(&mut self) -> Result<Message, SchemeError> {
        let begin = Instant::now();
        let msg = self.ep.recv_any()?;
        self.timers.t_wait += begin.elapsed();
        self.timers.iterations += 1;
        Ok(msg)
    }

    fn run(mut self) -> Result<MasterOutcome, SchemeError> {
        while !(self.computation_done()
            && self.ends_sent == self.end_targets()
            && self.pending.is_empty())
        {
            let msg = self.recv_timed()?;
            match msg.tag {
                Tag::Req | Tag::ReqStarved => {
                    self.on_request(msg.source, msg.tag == Tag::ReqStarved)?
                }
                Tag::Result => self.on_result(msg.source, msg.payload)?,
                other => {
                    return Err(SchemeError::Protocol(format!(
                        "master received unexpected {other} from rank {}",
                        msg.source
                    )))
                }
            }
            self.serve_pending()?;
        }
        let poly = self.final_poly()?;
        Ok(MasterOutcome {
            poly,
            timers: self.timers,
            items_issued: self.items_issued,
            switches: self.switches,
            messages_sent: self.ep.messages_sent(),
            messages_received: self.ep.messages_received(),
        })
    }

    fn final_poly(&mut self) -> Result<Polynomial, SchemeError> {
        match self.mode {
            Mode::Mw | Mode::Hier => Ok(std::mem::take(&mut self.acc)),
            Mode::AddWorker => match self.buffer.pop() {
                None => Ok(Polynomial::zero()),
                Some(bytes) => {
                    wire::deserialize(&bytes).map_err(|e| SchemeError::Decode(e.to_string()))
                }
            },
        }
    }

    fn on_request(&mut self, src: Rank, starved: bool) -> Result<(), SchemeError> {
        if self.policy_active && self.mode == Mode::AddWorker {
            self.votes.record(starved);
            let forced = self
                .cfg
                .policy
                .force_hier_at_item
                .is_some_and(|k| self.items_issued >= k);
            if forced || should_switch_to_hier(&self.votes, &self.timers, &self.cfg.policy) {
                self.switch_to_hier()?;
            }
        }
        if self.policy_active && self.mode == Mode::Mw {
            let forced = self
                .cfg
                .policy
                .force_addworker_at_item
                .is_some_and(|k| self.items_issued >= k);
            if forced {
                self.switch_to_addworker();
            }
        }
        self.serve(src)
    }

    /// Answers one request now if possible, otherwise parks it.
    fn serve(&mut self, src: Rank) -> Result<(), SchemeError> {
        match self.mode {
            Mode::Mw => {
                if let Some(item) = self.fine.pop_front() {
                    self.send_work(src, item)
                } else {
                    self.send_end(src)
                }
            }
            Mode::AddWorker => {
                let threshold = (self.cfg.policy.maxresult as usize).max(2);
                if self.buffer.len() >= threshold {
                    self.dispatch_add(src)
                } else if let Some(item) = self.fine.pop_front() {
                    self.send_work(src, item)
                } else if self.buffer.len() >= 2 {
                    // Drain: batch whatever is buffered.
                    self.dispatch_add(src)
                } else if self.computation_done() {
                    self.send_end(src)
                } else {
                    self.pending.push_back(src);
                    Ok(())
                }
            }
            Mode::Hier => {
                if !self.preassigned && !self.assigned[src as usize] {
                    return self.send_reconf(src);
                }
                if let Some(item) = self.coarse.pop_front() {
                    self.send_work(src, item)
                } else if self.computation_done() {
                    self.send_end(src)
                } else {
                    self.pending.push_back(src);
                    Ok(())
                }
            }
        }
    }

    fn serve_pending(&mut self) -> Result<(), SchemeError> {
        while let Some(&src) = self.pending.front() {
            let can = match self.mode {
                Mode::Mw => true,
                Mode::AddWorker => {
                    self.buffer.len() >= 2 || !self.fine.is_empty() || self.computation_done()
                }
                Mode::Hier => {
                    (!self.preassigned && !self.assigned[src as usize])
                        || !self.coarse.is_empty()
                        || self.computation_done()
                }
            };
            if !can {
                break;
            }
            self.pending.pop_front();
            self.serve(src)?;
        }
        Ok(())
    }

    fn send_work(&mut self, src: Rank, item: WorkItem) -> Result<(), SchemeError> {
        self.task_of[src as usize] = Some(Task::Work(item));
        self.outstanding_work += 1;
        self.items_issued += 1;
        self.ep.send(src, Tag::Work, encode_work_item(&item))?;
        Ok(())
    }

    fn send_end(&mut self, src: Rank) -> Result<(), SchemeError> {
        self.ends_sent += 1;
        self.ep.send_empty(src, Tag::End)?;
        Ok(())
    }

    fn send_reconf(&mut self, src: Rank) -> Result<(), SchemeError> {
        let role = self.role_of(src);
        self.assigned[src as usize] = true;
        self.ep.send(src, Tag::Reconf, encode_role(&role))?;
        Ok(())
    }

    fn role_of(&self, src: Rank) -> Role {
        let foremen = self.foreman_count();
        if src >= 1 && src <= foremen {
            Role::Foreman {
                fine_granularity: self.cfg.granularity,
                pool: self.pools[(src - 1) as usize].clone(),
            }
        } else {
            // Contiguous ranges: find the pool that contains this rank.
            let foreman = self
                .pools
                .iter()
                .position(|p| p.contains(&src))
                .map(|i| (i + 1) as Rank)
                .unwrap_or(1);
            Role::PoolWorker { foreman }
        }
    }

    fn dispatch_add(&mut self, src: Rank) -> Result<(), SchemeError> {
        let take = (self.cfg.policy.maxresult as usize).min(self.buffer.len());
        debug_assert!(take >= 2);
        let batch: Vec<Vec<u8>> = self.buffer.drain(..take).collect();
        self.task_of[src as usize] = Some(Task::Add);
        self.outstanding_adds += 1;
        let begin = Instant::now();
        if !self.cfg.policy.inject_dispatch_delay.is_zero() {
            thread::sleep(self.cfg.policy.inject_dispatch_delay);
        }
        self.ep.send(src, Tag::Add, encode_add_batch(&batch))?;
        self.timers.t_send_add += begin.elapsed();
        Ok(())
    }

    /// Folds a serialized polynomial into the master accumulator, timed as
    /// addition work (including any injected delay).
    fn fold_into_acc(&mut self, payload: &[u8]) -> Result<(), SchemeError> {
        let poly =
            wire::deserialize(payload).map_err(|e| SchemeError::Decode(e.to_string()))?;
        let begin = Instant::now();
        if !self.cfg.policy.inject_add_delay.is_zero() {
            thread::sleep(self.cfg.policy.inject_add_delay);
        }
        self.acc.add_assign_owned(poly);
        self.timers.t_add += begin.elapsed();
        Ok(())
    }

    fn on_result(&mut self, src: Rank, payload: Vec<u8>) -> Result<(), SchemeError> {
        let task = self.task_of[src as usize].take().ok_or_else(|| {
            SchemeError::Protocol(format!("RESULT from rank {src} with no task outstanding"))
        })?;
        match task {
            Task::Work(item) => {
                self.outstanding_work -= 1;
                self.triples_done += item.count;
                match self.mode {
                    Mode::Mw | Mode::Hier => self.fold_into_acc(&payload)?,
                    Mode::AddWorker => self.buffer.push(payload),
                }
            }
            Task::Add => {
                self.outstanding_adds -= 1;
                match self.mode {
                    Mode::AddWorker => self.buffer.push(payload),
                    // A hierarchy switch can leave addition batches in
                    // flight; their sums fold into the accumulator.
                    Mode::Hier => self.fold_into_acc(&payload)?,
                    Mode::Mw => {
                        return Err(SchemeError::Protocol(
                            "addition result while in master-worker mode".into(),
                        ))
                    }
                }
            }
        }
        if self.policy_active && self.mode == Mode::Mw && !self.fine.is_empty() {
            let forced = self
                .cfg
                .policy
                .force_addworker_at_item
                .is_some_and(|k| self.items_issued >= k);
            if forced || should_switch_to_addworker(&self.timers, &self.cfg.policy) {
                self.switch_to_addworker();
            }
        }
        Ok(())
    }

    fn switch_to_addworker(&mut self) {
        debug_assert_eq!(self.mode, Mode::Mw);
        self.switches.push(SwitchEvent {
            from: Mode::Mw.name(),
            to: Mode::AddWorker.name(),
            item_index: self.items_issued,
        });
        self.mode = Mode::AddWorker;
        if !self.acc.is_zero() {
            let seed = std::mem::take(&mut self.acc);
            self.buffer.push(wire::serialize(&seed));
        }
    }

    fn switch_to_hier(&mut self) -> Result<(), SchemeError> {
        debug_assert_eq!(self.mode, Mode::AddWorker);
        self.switches.push(SwitchEvent {
            from: Mode::AddWorker.name(),
            to: Mode::Hier.name(),
            item_index: self.items_issued,
        });
        self.mode = Mode::Hier;
        // The master adds again from here on; reclaim the buffered results.
        for bytes in std::mem::take(&mut self.buffer) {
            self.fold_into_acc(&bytes)?;
        }
        let foremen = self.cfg.policy.effective_foremen(self.cfg.workers);
        self.assigned = vec![false; self.cfg.workers as usize + 1];
        self.install_hierarchy(foremen);
        Ok(())
    }
}

/// Master side of the stateful scheme: hand out items on request, end
/// everyone, then receive the tree-reduced total from rank 1.
fn stateful_master(
    ep: &mut dyn Endpoint,
    cfg: &RunConfig,
) -> Result<MasterOutcome, SchemeError> {
    let mut timers = MasterTimers::default();
    let mut items: VecDeque<WorkItem> = generate_work_items(cfg.size, cfg.granularity).into();
    let mut items_issued = 0u64;

    let recv = |ep: &mut dyn Endpoint, timers: &mut MasterTimers| {
        let begin = Instant::now();
        let msg = ep.recv_any();
        timers.t_wait += begin.elapsed();
        timers.iterations += 1;
        msg
    };

    while let Some(item) = items.pop_front() {
        let msg = recv(ep, &mut timers)?;
        match msg.tag {
            Tag::Req | Tag::ReqStarved => {
                ep.send(msg.source, Tag::Work, encode_work_item(&item))?;
                items_issued += 1;
            }
            other => {
                return Err(SchemeError::Protocol(format!(
                    "stateful master expected a request, got {other}"
                )))
            }
        }
    }

    let mut ends = 0;
    let mut finale: Option<Vec<u8>> = None;
    while ends < cfg.workers {
        let msg = recv(ep, &mut timers)?;
        match msg.tag {
            Tag::Req | Tag::ReqStarved => {
                ep.send_empty(msg.source, Tag::End)?;
                ends += 1;
            }
            // The reduction can complete while slow ranks still await END.
            Tag::Result if msg.source == 1 => finale = Some(msg.payload),
            other => {
                return Err(SchemeError::Protocol(format!(
                    "stateful master expected a request, got {other} from {}",
                    msg.source
                )))
            }
        }
    }
    let payload = match finale {
        Some(p) => p,
        None => {
            let begin = Instant::now();
            let msg = ep.recv_from(1)?;
            timers.t_wait += begin.elapsed();
            if msg.tag != Tag::Result {
                return Err(SchemeError::Protocol(format!(
                    "expected the reduced RESULT from rank 1, got {}",
                    msg.tag
                )));
            }
            msg.payload
        }
    };
    let poly = wire::deserialize(&payload).map_err(|e| SchemeError::Decode(e.to_string()))?;
    Ok(MasterOutcome {
        poly,
        timers,
        items_issued,
        switches: Vec::new(),
        messages_sent: ep.messages_sent(),
        messages_received: ep.messages_received(),
    })
}
