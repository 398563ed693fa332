//! Exact engines for small instances, kept independent from the simulator
//! and the allocators they check.
//!
//! [`exact_path_pdr`] runs a forward dynamic program over
//! `(hop, slot the packet becomes available)`. For each hop it lists, by
//! scanning the delivery window slot by slot, every absolute time at which
//! one of the hop's cells recurs. [`exhaustive_feasible`] backtracks over
//! every conflict-free, in-window, precedence-respecting primary assignment.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::allocator::{verify_structure, AllocParams, Entry, EntryKind, Schedule, ScheduleViolation};
use crate::linkquality::QualityMap;
use crate::model::{build_conflict_graph, ConflictGraph, Instance, ModelError};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("schedule does not verify ({} violations)", .0.len())]
    Unverifiable(Vec<ScheduleViolation>),
    #[error("quality map does not match the instance")]
    QualityMapMismatch,
    #[error("unknown path index {0}")]
    UnknownPath(usize),
    #[error("search exceeded {0} states")]
    BoundExceeded(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPdrResult {
    pub path: String,
    pub probability: f64,
    /// DP states (hop, availability slot) expanded.
    pub states: usize,
}

/// One transmission opportunity of a hop inside the delivery window.
#[derive(Debug, Clone, Copy)]
struct Opportunity {
    time: u32,
    quality: f64,
    primary: bool,
}

/// Exact probability that the packet of `path` reaches the sink no later than
/// its deadline under the simulator's retry rules.
pub fn exact_path_pdr(
    instance: &Instance,
    schedule: &Schedule,
    quality: &QualityMap,
    path: usize,
) -> Result<ExactPdrResult, OracleError> {
    let spec = instance.paths().get(path).ok_or(OracleError::UnknownPath(path))?;
    if !quality.matches(instance) {
        return Err(OracleError::QualityMapMismatch);
    }
    let v = verify_structure(schedule, instance);
    if !v.is_empty() {
        return Err(OracleError::Unverifiable(v));
    }
    let w = instance.duty_cycle();
    let (start, end) = (spec.gen_slot, spec.deadline_slot());

    // Opportunities per hop, by scanning every slot of the window.
    let hops: Vec<Vec<Opportunity>> = (0..spec.len())
        .map(|hop| {
            let cells: Vec<(&Entry, bool)> = schedule
                .entries()
                .iter()
                .filter(|e| e.path == path && e.hop == hop)
                .map(|e| (e, e.kind == EntryKind::Primary))
                .collect();
            (start..=end)
                .filter_map(|t| {
                    cells.iter().find(|(e, _)| e.slot == t % w).map(|&(e, primary)| Opportunity {
                        time: t,
                        quality: quality.get(e.link, e.channel, e.slot),
                        primary,
                    })
                })
                .collect()
        })
        .collect();

    let mut frontier: BTreeMap<u32, f64> = BTreeMap::from([(start, 1.0)]);
    let mut states = 0;
    for opps in &hops {
        let mut next: BTreeMap<u32, f64> = BTreeMap::new();
        for (&ready, &mass) in &frontier {
            states += 1;
            // First attempt must be on the primary; afterwards any cell.
            let Some(first) = opps.iter().position(|o| o.primary && o.time >= ready) else {
                continue;
            };
            let mut still_failing = mass;
            for o in &opps[first..] {
                *next.entry(o.time + 1).or_insert(0.0) += still_failing * o.quality;
                still_failing *= 1.0 - o.quality;
            }
        }
        frontier = next;
    }
    let probability: f64 = frontier
        .iter()
        .filter(|(&ready, _)| ready - 1 <= end)
        .map(|(_, &m)| m)
        .sum();
    Ok(ExactPdrResult {
        path: spec.id.clone(),
        probability: probability.clamp(0.0, 1.0),
        states,
    })
}

pub const DEFAULT_SEARCH_BOUND: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Schedule>,
    /// Search nodes visited.
    pub states: u64,
}

struct Search<'a> {
    instance: &'a Instance,
    graph: ConflictGraph,
    /// (path, hop) pairs in visiting order: each path sink hop first.
    order: Vec<(usize, usize)>,
    /// Chosen absolute time per (path, hop).
    time: Vec<Vec<u32>>,
    channel: Vec<Vec<u32>>,
    /// Per cell: links currently placed there.
    grid: Vec<Vec<usize>>,
    states: u64,
    bound: u64,
}

impl Search<'_> {
    fn cell(&self, t: u32, ch: u32) -> usize {
        ((t % self.instance.duty_cycle()) * self.instance.channels() + ch) as usize
    }

    fn go(&mut self, k: usize) -> Result<bool, OracleError> {
        self.states += 1;
        if self.states > self.bound {
            return Err(OracleError::BoundExceeded(self.bound));
        }
        if k == self.order.len() {
            return Ok(true);
        }
        let (p, hop) = self.order[k];
        let spec = &self.instance.paths()[p];
        let link = self.instance.path_links(p)[hop];
        let lo = spec.gen_slot + hop as u32;
        let hi = if hop + 1 == spec.len() {
            spec.deadline_slot()
        } else {
            match self.time[p][hop + 1].checked_sub(1) {
                Some(h) => h,
                None => return Ok(false),
            }
        };
        for t in lo..=hi {
            for ch in 0..self.instance.channels() {
                let c = self.cell(t, ch);
                if self.grid[c]
                    .iter()
                    .any(|&o| o == link || self.graph.conflicts(o, link))
                {
                    continue;
                }
                self.grid[c].push(link);
                self.time[p][hop] = t;
                self.channel[p][hop] = ch;
                if self.go(k + 1)? {
                    return Ok(true);
                }
                self.grid[c].pop();
            }
        }
        Ok(false)
    }
}

/// Whether any complete primary assignment exists, with one witness.
pub fn exhaustive_feasible(
    instance: &Instance,
    params: &AllocParams,
    bound: u64,
) -> Result<Feasibility, OracleError> {
    let graph = build_conflict_graph(instance, params.conflict_rule)?;
    let paths = instance.paths();
    if paths.iter().any(|p| p.deadline < p.len() as u32) {
        return Ok(Feasibility { feasible: false, witness: None, states: 0 });
    }
    let order = paths
        .iter()
        .enumerate()
        .flat_map(|(p, spec)| (0..spec.len()).rev().map(move |h| (p, h)))
        .collect();
    let cells = (instance.duty_cycle() * instance.channels()) as usize;
    let mut s = Search {
        instance,
        graph,
        order,
        time: paths.iter().map(|p| vec![0; p.len()]).collect(),
        channel: paths.iter().map(|p| vec![0; p.len()]).collect(),
        grid: vec![Vec::new(); cells],
        states: 0,
        bound,
    };
    let feasible = s.go(0)?;
    let witness = feasible.then(|| {
        let w = instance.duty_cycle();
        let entries = s
            .order
            .iter()
            .map(|&(p, hop)| Entry {
                path: p,
                hop,
                link: instance.path_links(p)[hop],
                slot: s.time[p][hop] % w,
                channel: s.channel[p][hop],
                kind: EntryKind::Primary,
            })
            .collect();
        Schedule::new(entries, instance)
    });
    Ok(Feasibility { feasible, witness, states: s.states })
}
