//! Monte Carlo execution of a schedule over lossy links.
//!
//! Each trial sends one packet per path. A hop's first attempt uses the next
//! occurrence of its primary cell at or after the packet's arrival; after a
//! failure it retries at the earliest later occurrence of any of its cells
//! (primary or backup). Every attempt succeeds independently with the cell's
//! quality. A relay can forward from the slot after it received.
//!
//! Randomness for (trial, path) comes from its own ChaCha stream, so results
//! do not depend on how trials are spread across threads.

pub mod generator;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::allocator::{verify_structure, Schedule, ScheduleViolation};
use crate::linkquality::QualityMap;
use crate::model::Instance;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("schedule does not verify: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Unverifiable(Vec<ScheduleViolation>),
    #[error("quality map does not cover the instance's (link, channel, slot) grid")]
    QualityMapMismatch,
    #[error("trials must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    pub trials: u64,
    pub master_seed: u64,
    /// Discard a packet once its next attempt would fall after the deadline.
    /// When off, packets keep trying until the instance horizon.
    pub drop_at_deadline: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            trials: 10_000,
            master_seed: 0,
            drop_at_deadline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    pub path: String,
    /// Trials in which the sink received the packet by the deadline.
    pub on_time: u64,
    pub transmissions: u64,
    pub retransmissions: u64,
    pub trials: u64,
}

impl PathStats {
    /// Packet delivery ratio before the deadline.
    pub fn pdr(&self) -> f64 {
        self.on_time as f64 / self.trials as f64
    }

    pub fn miss_fraction(&self) -> f64 {
        (self.trials - self.on_time) as f64 / self.trials as f64
    }

    pub fn mean_transmissions(&self) -> f64 {
        self.transmissions as f64 / self.trials as f64
    }

    pub fn mean_retransmissions(&self) -> f64 {
        self.retransmissions as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// One row per path, ordered by path id.
    pub paths: Vec<PathStats>,
    /// Summed over every path and trial.
    pub total_transmissions: u64,
    pub total_retransmissions: u64,
    pub utilization: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SimReport {
    pub fn mean_pdr(&self) -> f64 {
        if self.paths.is_empty() {
            return 0.0;
        }
        self.paths.iter().map(PathStats::pdr).sum::<f64>() / self.paths.len() as f64
    }
}

/// Fraction of the W x C grid holding at least one entry.
pub fn resource_utilization(schedule: &Schedule, instance: &Instance) -> f64 {
    let cells: BTreeSet<(u32, u32)> = schedule
        .entries()
        .iter()
        .map(|e| (e.slot, e.channel))
        .collect();
    cells.len() as f64 / f64::from(instance.duty_cycle() * instance.channels())
}

/// A hop's cells with their qualities.
#[derive(Debug, Clone, PartialEq)]
pub struct HopCells {
    pub primary: (u32, f64),
    pub backups: Vec<(u32, f64)>,
}

/// Everything needed to run one path's packet.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    pub gen_slot: u32,
    pub deadline_slot: u32,
    pub hops: Vec<HopCells>,
}

impl PathPlan {
    /// Plan for `path`. The schedule must have passed [`verify_structure`].
    pub fn new(instance: &Instance, schedule: &Schedule, quality: &QualityMap, path: usize) -> Self {
        let spec = &instance.paths()[path];
        let hops = (0..spec.len())
            .map(|hop| {
                let p = schedule.primary(path, hop).expect("verified schedule has primaries");
                HopCells {
                    primary: (p.slot, quality.get(p.link, p.channel, p.slot)),
                    backups: schedule
                        .backups(path, hop)
                        .map(|b| (b.slot, quality.get(b.link, b.channel, b.slot)))
                        .collect(),
                }
            })
            .collect();
        Self {
            gen_slot: spec.gen_slot,
            deadline_slot: spec.deadline_slot(),
            hops,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathOutcome {
    pub on_time: bool,
    /// Slot at which the sink received the packet, if it did.
    pub delivered_at: Option<u32>,
    pub transmissions: u32,
    pub retransmissions: u32,
}

/// Earliest absolute slot `>= from` whose in-cycle position is `slot`.
fn next_occurrence(from: u32, slot: u32, w: u32) -> u32 {
    from + (slot + w - from % w) % w
}

/// Runs one packet along `plan`. `coin(q)` decides each attempt.
pub fn run_path(
    plan: &PathPlan,
    duty_cycle: u32,
    horizon: u32,
    drop_at_deadline: bool,
    mut coin: impl FnMut(f64) -> bool,
) -> PathOutcome {
    let w = duty_cycle;
    let mut out = PathOutcome::default();
    let mut ready = plan.gen_slot;
    let expired = |t: u32| {
        if drop_at_deadline {
            t > plan.deadline_slot
        } else {
            t >= horizon
        }
    };

    for hop in &plan.hops {
        let mut t = next_occurrence(ready, hop.primary.0, w);
        let mut q = hop.primary.1;
        let mut first = true;
        loop {
            if expired(t) {
                return out;
            }
            out.transmissions += 1;
            if !first {
                out.retransmissions += 1;
            }
            if coin(q) {
                ready = t + 1;
                break;
            }
            first = false;
            let (nt, nq) = std::iter::once(hop.primary)
                .chain(hop.backups.iter().copied())
                .map(|(s, q)| (next_occurrence(t + 1, s, w), q))
                .min_by_key(|&(nt, _)| nt)
                .expect("primary always present");
            t = nt;
            q = nq;
        }
    }
    let at = ready - 1;
    out.delivered_at = Some(at);
    out.on_time = at <= plan.deadline_slot;
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    on_time: u64,
    tx: u64,
    retx: u64,
}

/// Runs `params.trials` independent trials of every path.
pub fn simulate(
    instance: &Instance,
    schedule: &Schedule,
    quality: &QualityMap,
    params: &SimParams,
) -> Result<SimReport, SimError> {
    if params.trials < 1 {
        return Err(SimError::NoTrials);
    }
    if !quality.matches(instance) {
        return Err(SimError::QualityMapMismatch);
    }
    let violations = verify_structure(schedule, instance);
    if !violations.is_empty() {
        return Err(SimError::Unverifiable(violations));
    }

    let n = instance.paths().len();
    let plans: Vec<PathPlan> = (0..n)
        .map(|p| PathPlan::new(instance, schedule, quality, p))
        .collect();
    let base = ChaCha8Rng::seed_from_u64(params.master_seed);
    let (w, horizon) = (instance.duty_cycle(), instance.horizon());

    let tallies = (0..params.trials)
        .into_par_iter()
        .fold(
            || vec![Tally::default(); n],
            |mut acc, trial| {
                for (p, plan) in plans.iter().enumerate() {
                    let mut rng = base.clone();
                    rng.set_stream(trial * n as u64 + p as u64);
                    let o = run_path(plan, w, horizon, params.drop_at_deadline, |q| {
                        rng.random::<f64>() < q
                    });
                    acc[p].on_time += u64::from(o.on_time);
                    acc[p].tx += u64::from(o.transmissions);
                    acc[p].retx += u64::from(o.retransmissions);
                }
                acc
            },
        )
        .reduce(
            || vec![Tally::default(); n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.on_time += y.on_time;
                    x.tx += y.tx;
                    x.retx += y.retx;
                }
                a
            },
        );

    let mut paths: Vec<PathStats> = instance
        .paths()
        .iter()
        .zip(&tallies)
        .map(|(spec, t)| PathStats {
            path: spec.id.clone(),
            on_time: t.on_time,
            transmissions: t.tx,
            retransmissions: t.retx,
            trials: params.trials,
        })
        .collect();
    paths.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(SimReport {
        total_transmissions: tallies.iter().map(|t| t.tx).sum(),
        total_retransmissions: tallies.iter().map(|t| t.retx).sum(),
        utilization: resource_utilization(schedule, instance),
        trials: params.trials,
        seed: params.master_seed,
        paths,
    })
}
