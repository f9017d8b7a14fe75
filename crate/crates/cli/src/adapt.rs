//! Runtime metrics and the two on-the-fly switching policies.
//!
//! The `combined` scheme starts as a plain master-worker. The first policy
//! watches the master's cumulative timers and, when it spends more time
//! adding polynomials than waiting for results (scaled by `ratio`), delegates
//! additions to the workers. The second policy then watches for master
//! congestion: workers that wait longer than they compute tag their requests
//! as starved, and when more than `starvation_fraction` of a full request
//! window is starved while the master spends more time dispatching addition
//! batches than waiting, the run reshapes into a two-level hierarchy.
//! Switches latch: a mode never regresses.

use std::collections::VecDeque;
use std::time::Duration;

/// Execution mode of the adaptive master. Transitions are monotone:
/// `Mw -> AddWorker -> Hier`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mw,
    AddWorker,
    Hier,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Mw => "mw",
            Mode::AddWorker => "addworker",
            Mode::Hier => "hier",
        }
    }
}

/// Tuning constants and test hooks for the adaptive policies.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    /// Switch to addworker once `t_add > ratio * t_wait`. `inf` disables.
    pub ratio: f64,
    /// Results buffered on the master before they are shipped as one
    /// addition batch. Must be at least 2 (a batch of one adds nothing).
    pub maxresult: u32,
    /// Number of most recent requests over which starvation votes count.
    pub window: u32,
    /// Starved fraction of a full window that triggers the hierarchy switch.
    pub starvation_fraction: f64,
    /// Foremen to install at the hierarchy switch; default is ceil(sqrt(W)).
    pub foremen_on_switch: Option<u32>,
    /// Multiplier on the master-side comparison of the hierarchy trigger:
    /// `t_send_add > hier_ratio * t_wait`.
    pub hier_ratio: f64,
    /// Injected delay per master-side polynomial addition.
    pub inject_add_delay: Duration,
    /// Injected delay per addition-batch dispatch on the master.
    pub inject_dispatch_delay: Duration,
    /// Injected delay per work item computed on a worker.
    pub inject_compute_delay: Duration,
    /// Force the addworker switch once this many items have been issued.
    pub force_addworker_at_item: Option<u64>,
    /// Force the hierarchy switch once this many items have been issued.
    pub force_hier_at_item: Option<u64>,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            ratio: 1.0,
            maxresult: 16,
            window: 32,
            starvation_fraction: 0.5,
            foremen_on_switch: None,
            hier_ratio: 1.0,
            inject_add_delay: Duration::ZERO,
            inject_dispatch_delay: Duration::ZERO,
            inject_compute_delay: Duration::ZERO,
            force_addworker_at_item: None,
            force_hier_at_item: None,
        }
    }
}

impl PolicyParams {
    /// Number of foremen installed when the hierarchy switch fires.
    pub fn effective_foremen(&self, workers: u32) -> u32 {
        let default = (workers as f64).sqrt().ceil() as u32;
        self.foremen_on_switch
            .unwrap_or(default)
            .clamp(1, workers.saturating_sub(1).max(1))
    }
}

/// Cumulative master-side timers.
#[derive(Debug, Clone, Copy, Default)]
pub struct MasterTimers {
    /// Time spent adding polynomials into the master accumulator.
    pub t_add: Duration,
    /// Time spent blocked in receives.
    pub t_wait: Duration,
    /// Time spent dispatching addition batches to workers.
    pub t_send_add: Duration,
    /// Messages processed by the master loop.
    pub iterations: u64,
}

/// Cumulative worker-side timers.
#[derive(Debug, Clone, Copy, Default)]
pub struct WorkerTimers {
    /// Time computing blocks and folding additions.
    pub t_compute: Duration,
    /// Time spent waiting for the next task.
    pub t_wait_work: Duration,
}

/// True once the master has spent more time adding than waiting, scaled by
/// the configured ratio.
pub fn should_switch_to_addworker(t: &MasterTimers, p: &PolicyParams) -> bool {
    t.t_add.as_secs_f64() > p.ratio * t.t_wait.as_secs_f64()
}

/// A worker is starved when it has waited for work longer than it has
/// computed.
pub fn worker_starved(t: &WorkerTimers) -> bool {
    t.t_wait_work > t.t_compute
}

/// Sliding window over the starved/not-starved tags of recent requests.
#[derive(Debug, Clone)]
pub struct StarvationWindow {
    cap: usize,
    votes: VecDeque<bool>,
    starved: usize,
}

impl StarvationWindow {
    pub fn new(window: u32) -> Self {
        StarvationWindow {
            cap: window.max(1) as usize,
            votes: VecDeque::new(),
            starved: 0,
        }
    }

    pub fn record(&mut self, starved: bool) {
        if self.votes.len() == self.cap {
            if self.votes.pop_front() == Some(true) {
                self.starved -= 1;
            }
        }
        self.votes.push_back(starved);
        if starved {
            self.starved += 1;
        }
    }

    /// Votes are only meaningful over a full window.
    pub fn is_full(&self) -> bool {
        self.votes.len() == self.cap
    }

    pub fn starved_fraction(&self) -> f64 {
        if self.votes.is_empty() {
            0.0
        } else {
            self.starved as f64 / self.votes.len() as f64
        }
    }
}

/// True once a full request window is majority-starved (per
/// `starvation_fraction`) and the master spends more time dispatching
/// addition batches than waiting for results. Both conditions are required.
pub fn should_switch_to_hier(
    votes: &StarvationWindow,
    t: &MasterTimers,
    p: &PolicyParams,
) -> bool {
    votes.is_full()
        && votes.starved_fraction() > p.starvation_fraction
        && t.t_send_add.as_secs_f64() > p.hier_ratio * t.t_wait.as_secs_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: f64) -> Duration {
        Duration::from_secs_f64(s)
    }

    #[test]
    fn addworker_trigger_truth_table() {
        let p = PolicyParams::default();
        let t = MasterTimers {
            t_add: Duration::ZERO,
            t_wait: secs(5.0),
            ..Default::default()
        };
        assert!(!should_switch_to_addworker(&t, &p));

        let t = MasterTimers {
            t_add: secs(2.0),
            t_wait: secs(1.0),
            ..Default::default()
        };
        assert!(should_switch_to_addworker(&t, &p));

        let p3 = PolicyParams {
            ratio: 3.0,
            ..PolicyParams::default()
        };
        assert!(!should_switch_to_addworker(&t, &p3));
    }

    #[test]
    fn infinite_ratio_disables_the_switch() {
        let p = PolicyParams {
            ratio: f64::INFINITY,
            ..PolicyParams::default()
        };
        for (add, wait) in [(10.0, 0.0), (10.0, 1.0), (0.0, 0.0)] {
            let t = MasterTimers {
                t_add: secs(add),
                t_wait: secs(wait),
                ..Default::default()
            };
            assert!(!should_switch_to_addworker(&t, &p));
        }
    }

    #[test]
    fn starvation_predicate() {
        assert!(worker_starved(&WorkerTimers {
            t_compute: secs(1.0),
            t_wait_work: secs(2.0),
        }));
        assert!(!worker_starved(&WorkerTimers {
            t_compute: secs(2.0),
            t_wait_work: secs(1.0),
        }));
    }

    #[test]
    fn hier_trigger_requires_both_conditions() {
        let p = PolicyParams {
            window: 32,
            ..PolicyParams::default()
        };
        let mut votes = StarvationWindow::new(32);
        let busy = MasterTimers {
            t_send_add: secs(2.0),
            t_wait: secs(1.0),
            ..Default::default()
        };
        // Empty window: no.
        assert!(!should_switch_to_hier(&votes, &busy, &p));
        // 17 of 32 starved, t_send_add > t_wait: yes.
        for i in 0..32 {
            votes.record(i < 17);
        }
        assert!(should_switch_to_hier(&votes, &busy, &p));
        // Same votes but master mostly waiting: no.
        let idle = MasterTimers {
            t_send_add: secs(1.0),
            t_wait: secs(2.0),
            ..Default::default()
        };
        assert!(!should_switch_to_hier(&votes, &idle, &p));
    }

    #[test]
    fn window_slides() {
        let mut votes = StarvationWindow::new(4);
        for _ in 0..4 {
            votes.record(true);
        }
        assert_eq!(votes.starved_fraction(), 1.0);
        for _ in 0..4 {
            votes.record(false);
        }
        assert_eq!(votes.starved_fraction(), 0.0);
        assert!(votes.is_full());
    }

    #[test]
    fn foremen_default_is_sqrt_clamped() {
        let p = PolicyParams::default();
        assert_eq!(p.effective_foremen(4), 2);
        assert_eq!(p.effective_foremen(9), 3);
        assert_eq!(p.effective_foremen(2), 1);
        // Explicit request clamps below the worker count.
        let p = PolicyParams {
            foremen_on_switch: Some(8),
            ..PolicyParams::default()
        };
        assert_eq!(p.effective_foremen(4), 3);
    }
}
