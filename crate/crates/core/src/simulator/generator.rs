//! Random grid instances and the insufficient-slot-rate experiment.
//!
//! Nodes sit on a `rows x cols` grid with 4-neighbour links. Every non-sink
//! node routes to the sink along a shortest-path tree; when several
//! neighbours are one hop closer, the lexicographically smallest id wins.
//! All packets are generated at slot 0 with deadline `pl + slack`, capped at
//! `W - 1`. Cell qualities are a two-band mixture: with probability `p_hi`
//! uniform over the high band, otherwise uniform over the low band.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{AllocError, AllocParams, AllocatorKind};
use crate::linkquality::QualityMap;
use crate::model::{validate_instance, Instance, LinkSpec, ModelError, PathSpec, RawInstance};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub rows: u32,
    pub cols: u32,
    pub sink_row: u32,
    pub sink_col: u32,
    /// Inclusive range of extra slots added to each path's hop count.
    pub slack_min: u32,
    pub slack_max: u32,
    pub p_hi: f64,
    pub hi_min: f64,
    pub hi_max: f64,
    pub lo_min: f64,
    pub lo_max: f64,
    pub duty_cycle: u32,
    pub channels: u32,
    pub seed: u64,
    /// Allocation weight used by sweeps.
    pub alpha: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 5,
            sink_row: 0,
            sink_col: 0,
            slack_min: 0,
            slack_max: 3,
            p_hi: 0.8,
            hi_min: 0.61,
            hi_max: 0.99,
            lo_min: 0.2,
            lo_max: 0.61,
            duty_cycle: 20,
            channels: 4,
            seed: 0,
            alpha: 0.5,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidConfig(m));
        if self.rows * self.cols < 2 {
            return bad("grid needs at least two nodes".into());
        }
        if self.sink_row >= self.rows || self.sink_col >= self.cols {
            return bad("sink must lie on the grid".into());
        }
        if self.slack_min > self.slack_max {
            return bad("slack_min exceeds slack_max".into());
        }
        if !(0.0..=1.0).contains(&self.p_hi) {
            return bad(format!("p_hi {} outside [0, 1]", self.p_hi));
        }
        for (name, lo, hi) in [("hi", self.hi_min, self.hi_max), ("lo", self.lo_min, self.lo_max)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return bad(format!("{name} quality range [{lo}, {hi}] invalid"));
            }
        }
        if self.duty_cycle < 2 {
            // Deadlines are at least one slot and must stay below W.
            return bad("duty_cycle must be at least 2".into());
        }
        if self.channels < 1 {
            return bad("channels must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        Ok(())
    }

    pub fn alloc_params(&self) -> AllocParams {
        AllocParams {
            alpha: self.alpha,
            ..AllocParams::default()
        }
    }
}

fn node_id(r: u32, c: u32) -> String {
    format!("r{r:02}c{c:02}")
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Builds a grid instance and its quality map. Same config, same output.
pub fn generate_instance(config: &GeneratorConfig) -> Result<(Instance, QualityMap), GenError> {
    config.validate()?;
    let (rows, cols) = (config.rows as usize, config.cols as usize);
    let at = |r: usize, c: usize| r * cols + c;
    let sink = at(config.sink_row as usize, config.sink_col as usize);
    let ids: Vec<String> = (0..rows * cols)
        .map(|i| node_id((i / cols) as u32, (i % cols) as u32))
        .collect();

    let neighbours = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        let mut v = Vec::with_capacity(4);
        if r > 0 {
            v.push(at(r - 1, c));
        }
        if r + 1 < rows {
            v.push(at(r + 1, c));
        }
        if c > 0 {
            v.push(at(r, c - 1));
        }
        if c + 1 < cols {
            v.push(at(r, c + 1));
        }
        v
    };

    let mut dist = vec![usize::MAX; rows * cols];
    dist[sink] = 0;
    let mut queue = VecDeque::from([sink]);
    while let Some(u) = queue.pop_front() {
        for v in neighbours(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    // Node ids sort in (row, col) order, so the smallest index is the smallest id.
    let parent: Vec<Option<usize>> = (0..rows * cols)
        .map(|i| {
            (i != sink).then(|| {
                neighbours(i)
                    .into_iter()
                    .filter(|&v| dist[v] + 1 == dist[i])
                    .min()
                    .expect("grid is connected")
            })
        })
        .collect();

    let link_id = |i: usize| format!("{}-{}", ids[i], ids[parent[i].unwrap()]);
    let mut links = Vec::new();
    for i in (0..rows * cols).filter(|&i| i != sink) {
        links.push(LinkSpec {
            id: link_id(i),
            src: ids[i].clone(),
            dst: ids[parent[i].unwrap()].clone(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cap = config.duty_cycle - 1;
    let mut paths = Vec::new();
    for i in (0..rows * cols).filter(|&i| i != sink) {
        let mut hops = Vec::new();
        let mut u = i;
        while let Some(p) = parent[u] {
            hops.push(link_id(u));
            u = p;
        }
        let slack = rng.random_range(config.slack_min..=config.slack_max);
        paths.push(PathSpec {
            id: format!("p{}", ids[i]),
            source: ids[i].clone(),
            gen_slot: 0,
            deadline: (hops.len() as u32 + slack).min(cap),
            links: hops,
        });
    }

    let instance = validate_instance(RawInstance {
        nodes: ids,
        links,
        paths,
        sink: Some(node_id(config.sink_row, config.sink_col)),
        duty_cycle: config.duty_cycle,
        channels: config.channels,
        extra_conflicts: Vec::new(),
        horizon: None,
    })?;

    let mut quality = QualityMap::for_instance(&instance, 1.0)
        .map_err(|e| GenError::InvalidConfig(e.to_string()))?;
    for l in 0..instance.links().len() {
        for ch in 0..config.channels {
            for s in 0..config.duty_cycle {
                let q = if rng.random::<f64>() < config.p_hi {
                    uniform(&mut rng, config.hi_min, config.hi_max)
                } else {
                    uniform(&mut rng, config.lo_min, config.lo_max)
                };
                quality
                    .set(l, ch, s, q)
                    .map_err(|e| GenError::InvalidConfig(e.to_string()))?;
            }
        }
    }
    Ok((instance, quality))
}

/// Seed for run `run` of an experiment seeded with `master`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(run);
    rng.next_u64()
}

/// Fraction of `runs` generated instances on which the allocator reports
/// insufficient slots.
pub fn insufficient_slot_rate(
    config: &GeneratorConfig,
    allocator: AllocatorKind,
    params: &AllocParams,
    runs: u64,
    seed: u64,
) -> Result<f64, GenError> {
    if runs < 1 {
        return Err(GenError::InvalidConfig("runs must be at least 1".into()));
    }
    config.validate()?;
    let failures = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = GeneratorConfig {
                seed: run_seed(seed, r),
                ..config.clone()
            };
            let (inst, q) = generate_instance(&cfg)?;
            match allocator.allocate(&inst, &q, params) {
                Ok(_) => Ok(0u64),
                Err(AllocError::Infeasible(_)) => Ok(1),
                Err(e) => Err(GenError::Alloc(e)),
            }
        })
        .collect::<Result<Vec<_>, GenError>>()?
        .into_iter()
        .sum::<u64>();
    Ok(failures as f64 / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rows: u32, cols: u32) -> GeneratorConfig {
        GeneratorConfig {
            rows,
            cols,
            duty_cycle: 8,
            channels: 2,
            ..Default::default()
        }
    }

    #[test]
    fn ten_by_five_has_49_paths() {
        let (inst, q) = generate_instance(&GeneratorConfig::default()).unwrap();
        assert_eq!(inst.nodes().len(), 50);
        assert_eq!(inst.paths().len(), 49);
        assert_eq!(inst.sink(), "r00c00");
        assert!(q.matches(&inst));
        // Corner sink: the far corner is 9 + 4 hops away.
        let far = inst.path_index("pr09c04").unwrap();
        assert_eq!(inst.paths()[far].len(), 13);
    }

    #[test]
    fn minimal_grid_single_path() {
        let (inst, _) = generate_instance(&small(1, 2)).unwrap();
        assert_eq!(inst.paths().len(), 1);
        assert_eq!(inst.paths()[0].len(), 1);
        assert_eq!(inst.paths()[0].links, vec!["r00c01-r00c00"]);
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = GeneratorConfig { seed: 77, ..small(4, 4) };
        assert_eq!(generate_instance(&cfg).unwrap(), generate_instance(&cfg).unwrap());
        let other = GeneratorConfig { seed: 78, ..cfg.clone() };
        assert_ne!(generate_instance(&cfg).unwrap().1, generate_instance(&other).unwrap().1);
    }

    #[test]
    fn shortest_path_ties_go_to_smallest_id() {
        // From r01c01 both r00c01 and r01c00 are one hop closer to r00c00.
        let (inst, _) = generate_instance(&small(2, 2)).unwrap();
        let p = inst.path_index("pr01c01").unwrap();
        assert_eq!(inst.paths()[p].links, vec!["r01c01-r00c01", "r00c01-r00c00"]);
    }

    #[test]
    fn deadlines_and_quality_bands() {
        let cfg = GeneratorConfig { duty_cycle: 6, slack_min: 1, slack_max: 4, ..small(4, 4) };
        let (inst, q) = generate_instance(&cfg).unwrap();
        for p in inst.paths() {
            assert!(p.deadline <= 5);
            assert!(p.deadline == 5 || (p.len() as u32 + 1..=p.len() as u32 + 4).contains(&p.deadline));
        }
        let cells: Vec<f64> = q.iter().map(|c| c.3).collect();
        assert!(cells.iter().all(|&x| (0.2..0.99).contains(&x)));
        let hi = cells.iter().filter(|&&x| x >= 0.61).count() as f64 / cells.len() as f64;
        assert!((hi - 0.8).abs() < 0.1, "high-band share {hi}");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate_instance(&small(1, 1)).is_err());
        assert!(generate_instance(&GeneratorConfig { sink_row: 5, ..small(2, 2) }).is_err());
        assert!(generate_instance(&GeneratorConfig { duty_cycle: 1, ..small(2, 2) }).is_err());
        assert!(generate_instance(&GeneratorConfig { p_hi: 1.2, ..small(2, 2) }).is_err());
        assert!(generate_instance(&GeneratorConfig { lo_min: 0.7, ..small(2, 2) }).is_err());
    }

    #[test]
    fn structurally_infeasible_rate_is_one() {
        // W=2 caps deadlines at 1, but the 2-hop path needs two slots.
        let cfg = GeneratorConfig { rows: 1, cols: 3, duty_cycle: 2, channels: 1, ..Default::default() };
        for kind in [AllocatorKind::Laca, AllocatorKind::UrgentFirst] {
            let r = insufficient_slot_rate(&cfg, kind, &cfg.alloc_params(), 10, 3).unwrap();
            assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn rate_is_deterministic() {
        let cfg = GeneratorConfig { channels: 1, duty_cycle: 6, ..small(3, 3) };
        let a = insufficient_slot_rate(&cfg, AllocatorKind::Laca, &cfg.alloc_params(), 20, 5).unwrap();
        let b = insufficient_slot_rate(&cfg, AllocatorKind::Laca, &cfg.alloc_params(), 20, 5).unwrap();
        assert_eq!(a, b);
        assert!(insufficient_slot_rate(&cfg, AllocatorKind::Laca, &cfg.alloc_params(), 0, 5).is_err());
    }
}
