//! Worker-side protocol loops: the request-driven worker (master-worker,
//! addworker, combined, and pool duty under a foreman), the foreman, and the
//! stateful worker with its final reduction tree.

use std::collections::VecDeque;
use std::thread;
use std::time::Instant;

use sptensor_core::{inner_block, wire, Polynomial};

use crate::adapt::{worker_starved, WorkerTimers};
use crate::schemes::proto::{
    decode_add_batch, decode_role, decode_work_item, encode_work_item, Role,
};
use crate::schemes::{item_triples, plan_pools, reduction_sum, RunConfig, SchemeError, SchemeKind, WorkItem};
use crate::transport::{Endpoint, Rank, Tag, ROOT};

/// What a worker reports after its END.
#[derive(Debug, Clone, Copy, Default)]
pub struct WorkerReport {
    pub timers: WorkerTimers,
}

/// Runs the worker side of the configured scheme until END.
pub fn run_worker(ep: &mut dyn Endpoint, cfg: &RunConfig) -> Result<WorkerReport, SchemeError> {
    match cfg.scheme {
        SchemeKind::Seq => Err(SchemeError::Config(
            "the sequential scheme has no workers".into(),
        )),
        SchemeKind::Stateful => stateful_worker(ep, cfg),
        SchemeKind::Hierarchical => {
            let rank = ep.rank();
            if rank <= cfg.foremen {
                let pool = plan_pools(cfg.workers, cfg.foremen)[(rank - 1) as usize].clone();
                foreman_loop(ep, cfg, cfg.granularity, pool, WorkerTimers::default())
            } else {
                let boss = foreman_of(cfg, rank);
                request_loop(ep, cfg, boss)
            }
        }
        _ => request_loop(ep, cfg, ROOT),
    }
}

fn foreman_of(cfg: &RunConfig, rank: Rank) -> Rank {
    plan_pools(cfg.workers, cfg.foremen)
        .iter()
        .position(|p| p.contains(&rank))
        .map(|i| (i + 1) as Rank)
        .unwrap_or(1)
}

fn compute_block(
    ep_cfg: &RunConfig,
    item: &WorkItem,
    timers: &mut WorkerTimers,
) -> Polynomial {
    let begin = Instant::now();
    if !ep_cfg.policy.inject_compute_delay.is_zero() {
        thread::sleep(ep_cfg.policy.inject_compute_delay);
    }
    let poly = inner_block(ep_cfg.size, item_triples(ep_cfg.size, item));
    timers.t_compute += begin.elapsed();
    poly
}

fn sum_batch(payload: &[u8], timers: &mut WorkerTimers) -> Result<Polynomial, SchemeError> {
    let parts = decode_add_batch(payload)?;
    let begin = Instant::now();
    let mut acc = Polynomial::zero();
    for bytes in parts {
        let p = wire::deserialize(&bytes).map_err(|e| SchemeError::Decode(e.to_string()))?;
        acc.add_assign_owned(p);
    }
    timers.t_compute += begin.elapsed();
    Ok(acc)
}

/// Ask `boss` for tasks until END. Handles work items, addition batches, and
/// role reassignment (which hands control to the foreman or pool loop).
fn request_loop(
    ep: &mut dyn Endpoint,
    cfg: &RunConfig,
    mut boss: Rank,
) -> Result<WorkerReport, SchemeError> {
    let mut timers = WorkerTimers::default();
    loop {
        let tag = if worker_starved(&timers) {
            Tag::ReqStarved
        } else {
            Tag::Req
        };
        ep.send_empty(boss, tag)?;
        let begin = Instant::now();
        let msg = ep.recv_from(boss)?;
        timers.t_wait_work += begin.elapsed();
        match msg.tag {
            Tag::Work => {
                let item = decode_work_item(&msg.payload)?;
                let poly = compute_block(cfg, &item, &mut timers);
                ep.send(boss, Tag::Result, wire::serialize(&poly))?;
            }
            Tag::Add => {
                let sum = sum_batch(&msg.payload, &mut timers)?;
                ep.send(boss, Tag::Result, wire::serialize(&sum))?;
            }
            Tag::Reconf => match decode_role(&msg.payload)? {
                Role::Foreman {
                    fine_granularity,
                    pool,
                } => return foreman_loop(ep, cfg, fine_granularity, pool, timers),
                Role::PoolWorker { foreman } => boss = foreman,
            },
            Tag::End => return Ok(WorkerReport { timers }),
            other => {
                return Err(SchemeError::Protocol(format!(
                    "worker received unexpected {other}"
                )))
            }
        }
    }
}

/// Foreman: pull coarse items from the master, re-chunk them at the fine
/// granularity, serve the pool, pre-aggregate the pool's results, and return
/// one result per coarse item. A foreman with no pool computes its chunks
/// itself.
fn foreman_loop(
    ep: &mut dyn Endpoint,
    cfg: &RunConfig,
    fine_granularity: u64,
    pool: Vec<Rank>,
    mut timers: WorkerTimers,
) -> Result<WorkerReport, SchemeError> {
    let mut fine: VecDeque<WorkItem> = VecDeque::new();
    let mut acc = Polynomial::zero();
    let mut coarse_active = false;
    let mut chunks_out: u32 = 0;
    let mut pool_pending: VecDeque<Rank> = VecDeque::new();
    let mut pool_ends: usize = 0;
    let mut master_done = false;

    ep.send_empty(ROOT, Tag::Req)?;
    loop {
        if master_done && !coarse_active && pool_ends == pool.len() {
            return Ok(WorkerReport { timers });
        }
        let begin = Instant::now();
        let msg = ep.recv_any()?;
        timers.t_wait_work += begin.elapsed();
        match (msg.tag, msg.source) {
            (Tag::Work, src) if src == ROOT => {
                let coarse = decode_work_item(&msg.payload)?;
                coarse_active = true;
                if pool.is_empty() {
                    // No pool: compute the whole coarse item locally.
                    let poly = compute_block(cfg, &coarse, &mut timers);
                    ep.send(ROOT, Tag::Result, wire::serialize(&poly))?;
                    coarse_active = false;
                    ep.send_empty(ROOT, Tag::Req)?;
                } else {
                    let mut start = coarse.start;
                    let end = coarse.start + coarse.count;
                    while start < end {
                        let count = fine_granularity.min(end - start);
                        fine.push_back(WorkItem { start, count });
                        start += count;
                    }
                    while let Some(worker) = pool_pending.pop_front() {
                        match fine.pop_front() {
                            Some(chunk) => {
                                chunks_out += 1;
                                ep.send(worker, Tag::Work, encode_work_item(&chunk))?;
                            }
                            None => {
                                pool_pending.push_front(worker);
                                break;
                            }
                        }
                    }
                }
            }
            (Tag::End, src) if src == ROOT => {
                master_done = true;
                while let Some(worker) = pool_pending.pop_front() {
                    ep.send_empty(worker, Tag::End)?;
                    pool_ends += 1;
                }
            }
            (Tag::Req | Tag::ReqStarved, worker) => {
                if let Some(chunk) = fine.pop_front() {
                    chunks_out += 1;
                    ep.send(worker, Tag::Work, encode_work_item(&chunk))?;
                } else if master_done && !coarse_active {
                    ep.send_empty(worker, Tag::End)?;
                    pool_ends += 1;
                } else {
                    pool_pending.push_back(worker);
                }
            }
            (Tag::Result, worker) => {
                let part = wire::deserialize(&msg.payload)
                    .map_err(|e| SchemeError::Decode(e.to_string()))?;
                let begin = Instant::now();
                acc.add_assign_owned(part);
                timers.t_compute += begin.elapsed();
                chunks_out -= 1;
                let _ = worker;
                if coarse_active && fine.is_empty() && chunks_out == 0 {
                    let done = std::mem::take(&mut acc);
                    ep.send(ROOT, Tag::Result, wire::serialize(&done))?;
                    coarse_active = false;
                    ep.send_empty(ROOT, Tag::Req)?;
                }
            }
            (other, src) => {
                return Err(SchemeError::Protocol(format!(
                    "foreman received unexpected {other} from rank {src}"
                )))
            }
        }
    }
}

/// Stateful worker: keep a local accumulator, fold the previous block into
/// it while the next request is in flight, and join the final reduction tree
/// after END. The tree root (rank 1) delivers the total to the master.
fn stateful_worker(
    ep: &mut dyn Endpoint,
    cfg: &RunConfig,
) -> Result<WorkerReport, SchemeError> {
    let mut timers = WorkerTimers::default();
    let mut acc = Polynomial::zero();
    let mut last: Option<Polynomial> = None;
    loop {
        ep.send_empty(ROOT, Tag::Req)?;
        let pending = ep.post_receive(ROOT)?;
        if let Some(p) = last.take() {
            let begin = Instant::now();
            acc.add_assign_owned(p);
            timers.t_compute += begin.elapsed();
        }
        let begin = Instant::now();
        let msg = pending.wait()?;
        timers.t_wait_work += begin.elapsed();
        match msg.tag {
            Tag::Work => {
                let item = decode_work_item(&msg.payload)?;
                last = Some(compute_block(cfg, &item, &mut timers));
            }
            Tag::End => break,
            other => {
                return Err(SchemeError::Protocol(format!(
                    "stateful worker received unexpected {other}"
                )))
            }
        }
    }
    let participants: Vec<Rank> = (1..=cfg.workers).collect();
    if let Some(total) = reduction_sum(ep, &participants, acc)? {
        ep.send(ROOT, Tag::Result, wire::serialize(&total))?;
    }
    Ok(WorkerReport { timers })
}
