//! The parallel execution schemes: sequential baseline, master-worker,
//! addition delegation, two-level hierarchy, stateful workers with a final
//! reduction tree, and the adaptive `combined` scheme that switches between
//! them at runtime.
//!
//! Every scheme distributes the same unit of work — a contiguous chunk of
//! outer-loop index triples — and every scheme produces the exact same
//! polynomial; they differ only in who performs the additions and how
//! messages flow.

pub mod proto;

mod master;
mod worker;

use std::collections::VecDeque;
use std::thread;
use std::time::Instant;

use sptensor_core::invariant::{self, triple_count};
use sptensor_core::{wire, Polynomial, TensorSize};

use crate::adapt::{PolicyParams, WorkerTimers};
use crate::stats::RunStats;
use crate::transport::{inproc, Endpoint, Rank, TransportError};

pub use master::run_master;
pub use worker::run_worker;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Seq,
    MasterWorker,
    AddWorker,
    Hierarchical,
    Stateful,
    Combined,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Seq => "seq",
            SchemeKind::MasterWorker => "mw",
            SchemeKind::AddWorker => "addworker",
            SchemeKind::Hierarchical => "hier",
            SchemeKind::Stateful => "stateful",
            SchemeKind::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        Some(match s {
            "seq" => SchemeKind::Seq,
            "mw" => SchemeKind::MasterWorker,
            "addworker" => SchemeKind::AddWorker,
            "hier" => SchemeKind::Hierarchical,
            "stateful" => SchemeKind::Stateful,
            "combined" => SchemeKind::Combined,
            _ => return None,
        })
    }

    pub const ALL_PARALLEL: [SchemeKind; 5] = [
        SchemeKind::MasterWorker,
        SchemeKind::AddWorker,
        SchemeKind::Hierarchical,
        SchemeKind::Stateful,
        SchemeKind::Combined,
    ];
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A contiguous chunk of the lexicographic triple enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkItem {
    pub start: u64,
    pub count: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("result decode failed: {0}")]
    Decode(String),
}

/// Everything a run needs: problem size, scheme, topology, and policy.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub size: TensorSize,
    pub scheme: SchemeKind,
    pub workers: u32,
    pub granularity: u64,
    /// Foreman count for the hierarchical scheme.
    pub foremen: u32,
    pub policy: PolicyParams,
}

impl RunConfig {
    pub fn new(size: TensorSize, scheme: SchemeKind) -> Self {
        RunConfig {
            size,
            scheme,
            workers: 1,
            granularity: 1,
            foremen: 1,
            policy: PolicyParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let total = triple_count(self.size);
        if self.scheme != SchemeKind::Seq {
            if self.workers < 1 {
                return Err(SchemeError::Config("workers must be >= 1".into()));
            }
            if self.granularity < 1 || self.granularity > total {
                return Err(SchemeError::Config(format!(
                    "granularity must be in 1..={total} for size {}",
                    self.size.s()
                )));
            }
            if self.policy.maxresult < 2 {
                return Err(SchemeError::Config(
                    "maxresult must be >= 2 (a batch of one polynomial adds nothing)".into(),
                ));
            }
            if self.policy.window < 1 {
                return Err(SchemeError::Config("window must be >= 1".into()));
            }
            if !(self.policy.starvation_fraction > 0.0 && self.policy.starvation_fraction <= 1.0) {
                return Err(SchemeError::Config(
                    "starvation fraction must be in (0, 1]".into(),
                ));
            }
        }
        if self.scheme == SchemeKind::Hierarchical
            && !(self.foremen >= 1 && self.foremen < self.workers)
        {
            return Err(SchemeError::Config(format!(
                "hierarchical scheme needs 1 <= foremen < workers (got foremen={}, workers={})",
                self.foremen, self.workers
            )));
        }
        Ok(())
    }
}

/// Splits the triple space `[0, N^3)` into chunks of `granularity`, the last
/// chunk possibly shorter.
pub fn generate_work_items(size: TensorSize, granularity: u64) -> Vec<WorkItem> {
    let total = triple_count(size);
    let mut items = Vec::with_capacity(total.div_ceil(granularity) as usize);
    let mut start = 0;
    while start < total {
        let count = granularity.min(total - start);
        items.push(WorkItem { start, count });
        start += count;
    }
    items
}

/// Resolves a work item to its triples.
pub fn item_triples(size: TensorSize, item: &WorkItem) -> Vec<invariant::IndexTriple> {
    invariant::triples_in_range(size, item.start, item.count)
}

/// Collective pairwise sum over `participants` (every participant must call
/// it). The first participant obtains the total in `ceil(log2(n))` message
/// rounds; the others return `None` once their contribution is sent.
pub fn reduction_sum(
    ep: &mut dyn Endpoint,
    participants: &[Rank],
    local: Polynomial,
) -> Result<Option<Polynomial>, SchemeError> {
    let me = participants
        .iter()
        .position(|&r| r == ep.rank())
        .ok_or_else(|| SchemeError::Config("rank is not a reduction participant".into()))?;
    let n = participants.len();
    let mut acc = local;
    let mut step = 1usize;
    while step < n {
        if me % (2 * step) == 0 {
            let partner = me + step;
            if partner < n {
                let msg = ep.recv_from(participants[partner])?;
                if msg.tag != crate::transport::Tag::Result {
                    return Err(SchemeError::Protocol(format!(
                        "expected RESULT in reduction, got {}",
                        msg.tag
                    )));
                }
                let part = wire::deserialize(&msg.payload)
                    .map_err(|e| SchemeError::Decode(e.to_string()))?;
                acc.add_assign_owned(part);
            }
        } else {
            let partner = me - step;
            ep.send(
                participants[partner],
                crate::transport::Tag::Result,
                wire::serialize(&acc),
            )?;
            return Ok(None);
        }
        step *= 2;
    }
    Ok(Some(acc))
}

/// Contiguous split of the non-foreman ranks among the foremen. Foremen are
/// ranks `1..=f`; pool workers are `f+1..=W`.
pub(crate) fn plan_pools(workers: u32, foremen: u32) -> Vec<Vec<Rank>> {
    let pool: Vec<Rank> = (foremen + 1..=workers).collect();
    let f = foremen as usize;
    let base = pool.len() / f;
    let rem = pool.len() % f;
    let mut out = Vec::with_capacity(f);
    let mut at = 0;
    for i in 0..f {
        let take = base + usize::from(i < rem);
        out.push(pool[at..at + take].to_vec());
        at += take;
    }
    out
}

/// Coarse chunk multiplier for the hierarchy: roughly one fine chunk per
/// pool worker of a foreman.
pub(crate) fn coarse_factor(workers: u32, foremen: u32) -> u64 {
    let pool = workers.saturating_sub(foremen) as u64;
    (pool.div_ceil(foremen as u64)).max(1)
}

/// The polynomial a run produced plus its runtime statistics.
pub struct SchemeOutcome {
    pub poly: Polynomial,
    pub stats: RunStats,
}

/// Runs a scheme entirely in this process: workers on threads, the master on
/// the calling thread.
pub fn run(cfg: &RunConfig) -> Result<SchemeOutcome, SchemeError> {
    cfg.validate()?;
    if cfg.scheme == SchemeKind::Seq {
        return run_sequential(cfg);
    }
    let start = Instant::now();
    let mut endpoints: VecDeque<_> = inproc::spawn(cfg.workers)?.into();
    let mut master_ep = endpoints.pop_front().expect("master endpoint");
    let handles: Vec<thread::JoinHandle<Result<WorkerTimers, SchemeError>>> = endpoints
        .into_iter()
        .map(|mut ep| {
            let cfg = cfg.clone();
            thread::Builder::new()
                .name(format!("worker-{}", ep.rank()))
                .spawn(move || run_worker(&mut ep, &cfg).map(|r| r.timers))
                .expect("spawn worker thread")
        })
        .collect();
    let master = run_master(&mut master_ep, cfg);
    let mut worker_timers = Vec::with_capacity(handles.len());
    let mut worker_error = None;
    for h in handles {
        match h.join() {
            Ok(Ok(t)) => worker_timers.push(Some(t)),
            Ok(Err(e)) => {
                worker_timers.push(None);
                worker_error.get_or_insert(e);
            }
            Err(_) => {
                worker_timers.push(None);
                worker_error.get_or_insert(SchemeError::Protocol("worker panicked".into()));
            }
        }
    }
    let outcome = master?;
    if let Some(e) = worker_error {
        return Err(e);
    }
    let stats = RunStats {
        scheme: cfg.scheme,
        wall: start.elapsed(),
        master: outcome.timers,
        workers: worker_timers,
        messages_sent: outcome.messages_sent,
        messages_received: outcome.messages_received,
        items_issued: outcome.items_issued,
        switches: outcome.switches,
    };
    Ok(SchemeOutcome {
        poly: outcome.poly,
        stats,
    })
}

fn run_sequential(cfg: &RunConfig) -> Result<SchemeOutcome, SchemeError> {
    let start = Instant::now();
    let poly = sptensor_core::invariant_optimized(cfg.size);
    let stats = RunStats {
        scheme: SchemeKind::Seq,
        wall: start.elapsed(),
        master: Default::default(),
        workers: Vec::new(),
        messages_sent: 0,
        messages_received: 0,
        items_issued: 0,
        switches: Vec::new(),
    };
    Ok(SchemeOutcome { poly, stats })
}
