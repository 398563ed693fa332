//! Channel/slot allocation.
//!
//! Both allocators walk paths in a priority order and place each path's hops
//! from the sink back to the source. The sink-adjacent hop must land inside
//! `[g + pl - 1, g + dl]`; every upstream hop must land strictly before its
//! downstream hop and no earlier than `g + hop_index`. A grid cell
//! `(t mod W, channel)` is feasible for a link when no entry already placed
//! there clashes with it.
//!
//! - [`allocate_laca`] orders paths by the urgency/conflict metric, takes the
//!   highest-quality feasible cell per hop, then runs [`assign_backups`].
//! - [`allocate_urgent_first`] orders by urgency alone and takes the lowest
//!   feasible cell, with no backups.

use std::fmt;

use thiserror::Error;

use crate::linkquality::QualityMap;
use crate::model::{
    build_conflict_graph, priority_order, urgency, ConflictGraph, ConflictRule, Instance,
    ModelError,
};

/// Backup-cell quality threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Mean quality over the whole map.
    Auto,
}

impl Threshold {
    pub fn resolve(self, quality: &QualityMap) -> f64 {
        match self {
            Threshold::Fixed(t) => t,
            Threshold::Auto => quality.mean(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocParams {
    pub alpha: f64,
    pub t_q: Threshold,
    pub max_backups_per_link: usize,
    pub conflict_rule: ConflictRule,
}

impl Default for AllocParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            t_q: Threshold::Auto,
            max_backups_per_link: 1,
            conflict_rule: ConflictRule::SharedEndpoint,
        }
    }
}

impl AllocParams {
    pub fn validate(&self) -> Result<(), AllocError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(AllocError::InvalidParams(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if let Threshold::Fixed(t) = self.t_q {
            if !(0.0..=1.0).contains(&t) {
                return Err(AllocError::InvalidParams(format!("t_q {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntryKind {
    Primary,
    Backup,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Primary => "primary",
            EntryKind::Backup => "backup",
        }
    }
}

/// One scheduled transmission opportunity for hop `hop` (0 = source hop) of
/// path `path`, on cell `(slot, channel)` of every cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub path: usize,
    pub hop: usize,
    pub link: usize,
    pub slot: u32,
    pub channel: u32,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    entries: Vec<Entry>,
}

impl Schedule {
    /// Wraps entries in canonical order: path id, hop, kind, then
    /// in-window time and channel.
    pub fn new(mut entries: Vec<Entry>, instance: &Instance) -> Self {
        let paths = instance.paths();
        entries.sort_by(|a, b| {
            let id = |e: &Entry| paths.get(e.path).map(|p| p.id.as_str());
            let time = |e: &Entry| {
                if e.path < paths.len() {
                    instance.absolute_slot(e.path, e.slot).unwrap_or(u32::MAX)
                } else {
                    u32::MAX
                }
            };
            id(a)
                .cmp(&id(b))
                .then(a.hop.cmp(&b.hop))
                .then(a.kind.cmp(&b.kind))
                .then(time(a).cmp(&time(b)))
                .then(a.slot.cmp(&b.slot))
                .then(a.channel.cmp(&b.channel))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn primary(&self, path: usize, hop: usize) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.path == path && e.hop == hop && e.kind == EntryKind::Primary)
    }

    pub fn backups(&self, path: usize, hop: usize) -> impl Iterator<Item = &Entry> {
        self.entries
            .iter()
            .filter(move |e| e.path == path && e.hop == hop && e.kind == EntryKind::Backup)
    }

    pub fn backup_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == EntryKind::Backup)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    NegativeUrgency,
    NoFeasibleCell,
}

impl InfeasibleReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InfeasibleReason::NegativeUrgency => "negative-urgency",
            InfeasibleReason::NoFeasibleCell => "no-feasible-cell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibleHop {
    pub path: String,
    /// `None` when the whole path was rejected before placement.
    pub hop: Option<usize>,
    pub link: Option<String>,
    pub reason: InfeasibleReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InfeasibilityReport {
    pub hops: Vec<InfeasibleHop>,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .hops
            .iter()
            .map(|h| match (&h.hop, &h.link) {
                (Some(k), Some(l)) => format!("path {} hop {k} ({l}): {}", h.path, h.reason.as_str()),
                _ => format!("path {}: {}", h.path, h.reason.as_str()),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("insufficient slots: {0}")]
    Infeasible(InfeasibilityReport),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("quality map does not match the instance dimensions")]
    QualityMapMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One primary placement, with the window it was chosen from.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub path: usize,
    pub hop: usize,
    pub link: usize,
    pub lower: u32,
    pub upper: u32,
    /// Absolute slot chosen.
    pub time: u32,
    pub channel: u32,
}

/// Links placed per grid cell.
#[derive(Debug, Clone)]
struct Occupancy {
    channels: u32,
    cells: Vec<Vec<usize>>,
}

impl Occupancy {
    fn new(slots: u32, channels: u32) -> Self {
        Self {
            channels,
            cells: vec![Vec::new(); (slots * channels) as usize],
        }
    }

    fn idx(&self, slot: u32, channel: u32) -> usize {
        (slot * self.channels + channel) as usize
    }

    fn is_free(&self, graph: &ConflictGraph, link: usize, slot: u32, channel: u32) -> bool {
        self.cells[self.idx(slot, channel)]
            .iter()
            .all(|&o| !graph.clash(o, link))
    }

    fn add(&mut self, link: usize, slot: u32, channel: u32) {
        let i = self.idx(slot, channel);
        self.cells[i].push(link);
    }

    fn remove(&mut self, link: usize, slot: u32, channel: u32) {
        let i = self.idx(slot, channel);
        let cell = &mut self.cells[i];
        if let Some(k) = cell.iter().rposition(|&l| l == link) {
            cell.remove(k);
        }
    }

    fn from_entries(entries: &[Entry], slots: u32, channels: u32) -> Self {
        let mut occ = Self::new(slots, channels);
        for e in entries {
            occ.add(e.link, e.slot, e.channel);
        }
        occ
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellChoice {
    BestQuality,
    Lowest,
}

struct Engine<'a> {
    instance: &'a Instance,
    graph: ConflictGraph,
    quality: &'a QualityMap,
    occupancy: Occupancy,
}

impl Engine<'_> {
    /// Places one path sink-to-source. On failure nothing stays placed and
    /// the failing hop index is returned.
    fn place_path(
        &mut self,
        path: usize,
        choice: CellChoice,
        log: &mut Vec<Decision>,
    ) -> Result<Vec<Entry>, usize> {
        let inst = self.instance;
        let w = inst.duty_cycle();
        let spec = &inst.paths()[path];
        let links = inst.path_links(path);
        // Signed so that a hop placed at slot 0 leaves an empty range upstream.
        let mut upper = i64::from(spec.deadline_slot());
        let mut placed: Vec<Entry> = Vec::with_capacity(links.len());

        for hop in (0..links.len()).rev() {
            let link = links[hop];
            let lower = spec.gen_slot + hop as u32;
            let mut best: Option<(u32, u32, f64)> = None;
            'scan: for t in i64::from(lower)..=upper {
                let t = t as u32;
                for ch in 0..inst.channels() {
                    if !self.occupancy.is_free(&self.graph, link, t % w, ch) {
                        continue;
                    }
                    let q = self.quality.get(link, ch, t % w);
                    match choice {
                        CellChoice::Lowest => {
                            best = Some((t, ch, q));
                            break 'scan;
                        }
                        CellChoice::BestQuality => {
                            if best.is_none_or(|(_, _, bq)| q > bq) {
                                best = Some((t, ch, q));
                            }
                        }
                    }
                }
            }
            let Some((t, ch, _)) = best else {
                for e in &placed {
                    self.occupancy.remove(e.link, e.slot, e.channel);
                }
                log.truncate(log.len() - placed.len());
                return Err(hop);
            };
            self.occupancy.add(link, t % w, ch);
            log.push(Decision {
                path,
                hop,
                link,
                lower,
                upper: upper as u32,
                time: t,
                channel: ch,
            });
            placed.push(Entry {
                path,
                hop,
                link,
                slot: t % w,
                channel: ch,
                kind: EntryKind::Primary,
            });
            upper = i64::from(t) - 1;
        }
        placed.reverse();
        Ok(placed)
    }
}

fn check_inputs(instance: &Instance, quality: &QualityMap, params: &AllocParams) -> Result<(), AllocError> {
    params.validate()?;
    if !quality.matches(instance) {
        return Err(AllocError::QualityMapMismatch);
    }
    Ok(())
}

fn reject_negative_urgency(instance: &Instance) -> (Vec<usize>, Vec<InfeasibleHop>) {
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for (i, p) in instance.paths().iter().enumerate() {
        if urgency(p) < 0 {
            rejected.push(InfeasibleHop {
                path: p.id.clone(),
                hop: None,
                link: None,
                reason: InfeasibleReason::NegativeUrgency,
            });
        } else {
            ok.push(i);
        }
    }
    (ok, rejected)
}

fn run_order(
    instance: &Instance,
    quality: &QualityMap,
    graph: ConflictGraph,
    order: &[usize],
    choice: CellChoice,
    mut failures: Vec<InfeasibleHop>,
    log: &mut Vec<Decision>,
) -> Result<Schedule, AllocError> {
    let mut engine = Engine {
        instance,
        graph,
        quality,
        occupancy: Occupancy::new(instance.duty_cycle(), instance.channels()),
    };
    let mut entries = Vec::new();
    for &p in order {
        match engine.place_path(p, choice, log) {
            Ok(placed) => entries.extend(placed),
            Err(hop) => {
                let link = instance.path_links(p)[hop];
                failures.push(InfeasibleHop {
                    path: instance.paths()[p].id.clone(),
                    hop: Some(hop),
                    link: Some(instance.links()[link].id.clone()),
                    reason: InfeasibleReason::NoFeasibleCell,
                });
            }
        }
    }
    if !failures.is_empty() {
        return Err(AllocError::Infeasible(InfeasibilityReport { hops: failures }));
    }
    Ok(Schedule::new(entries, instance))
}

/// Link-quality-aware allocation followed by the backup pass.
pub fn allocate_laca(
    instance: &Instance,
    quality: &QualityMap,
    params: &AllocParams,
) -> Result<Schedule, AllocError> {
    allocate_laca_logged(instance, quality, params, &mut Vec::new())
}

/// [`allocate_laca`], recording every primary placement in `log`.
pub fn allocate_laca_logged(
    instance: &Instance,
    quality: &QualityMap,
    params: &AllocParams,
    log: &mut Vec<Decision>,
) -> Result<Schedule, AllocError> {
    check_inputs(instance, quality, params)?;
    let graph = build_conflict_graph(instance, params.conflict_rule)?;
    let (candidates, rejected) = reject_negative_urgency(instance);
    let subset: Vec<_> = candidates
        .iter()
        .map(|&i| instance.paths()[i].clone())
        .collect();
    let order: Vec<usize> = priority_order(&subset, &graph, params.alpha)?
        .into_iter()
        .map(|p| candidates[p.index])
        .collect();
    let primaries = run_order(
        instance,
        quality,
        graph,
        &order,
        CellChoice::BestQuality,
        rejected,
        log,
    )?;
    assign_backups(&primaries, instance, quality, params)
}

/// Urgent-first baseline: ascending urgency, lowest feasible cell, no backups.
pub fn allocate_urgent_first(
    instance: &Instance,
    quality: &QualityMap,
    params: &AllocParams,
) -> Result<Schedule, AllocError> {
    check_inputs(instance, quality, params)?;
    let graph = build_conflict_graph(instance, params.conflict_rule)?;
    let (mut order, rejected) = reject_negative_urgency(instance);
    let paths = instance.paths();
    order.sort_by(|&a, &b| {
        urgency(&paths[a])
            .cmp(&urgency(&paths[b]))
            .then_with(|| paths[a].id.cmp(&paths[b].id))
    });
    run_order(
        instance,
        quality,
        graph,
        &order,
        CellChoice::Lowest,
        rejected,
        &mut Vec::new(),
    )
}

/// Which allocator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocatorKind {
    Laca,
    UrgentFirst,
}

impl AllocatorKind {
    pub fn allocate(
        self,
        instance: &Instance,
        quality: &QualityMap,
        params: &AllocParams,
    ) -> Result<Schedule, AllocError> {
        match self {
            AllocatorKind::Laca => allocate_laca(instance, quality, params),
            AllocatorKind::UrgentFirst => allocate_urgent_first(instance, quality, params),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AllocatorKind::Laca => "laca",
            AllocatorKind::UrgentFirst => "urgent",
        }
    }
}

impl std::str::FromStr for AllocatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "laca" => Ok(AllocatorKind::Laca),
            "urgent" => Ok(AllocatorKind::UrgentFirst),
            other => Err(format!("unknown allocator `{other}` (expected laca or urgent)")),
        }
    }
}

/// Adds retransmission cells between each hop's primary slot and its
/// downstream hop's primary slot (or the deadline, for the sink hop).
///
/// Hops are served worst primary quality first. Candidate cells must not
/// clash with anything already placed and must reach the quality threshold;
/// the best one wins, ties to the earliest slot and then the lowest channel.
pub fn assign_backups(
    schedule: &Schedule,
    instance: &Instance,
    quality: &QualityMap,
    params: &AllocParams,
) -> Result<Schedule, AllocError> {
    check_inputs(instance, quality, params)?;
    let graph = build_conflict_graph(instance, params.conflict_rule)?;
    let threshold = params.t_q.resolve(quality);
    let w = instance.duty_cycle();
    let mut entries = schedule.entries().to_vec();
    let mut occ = Occupancy::from_entries(&entries, w, instance.channels());

    let mut hops: Vec<(f64, usize, usize)> = entries
        .iter()
        .filter(|e| e.kind == EntryKind::Primary)
        .map(|e| (quality.get(e.link, e.channel, e.slot), e.path, e.hop))
        .collect();
    let paths = instance.paths();
    hops.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| paths[a.1].id.cmp(&paths[b.1].id))
            .then(a.2.cmp(&b.2))
    });

    for (_, path, hop) in hops {
        let Some(prim) = schedule.primary(path, hop).copied() else {
            continue;
        };
        let Some(t_i) = instance.absolute_slot(path, prim.slot) else {
            continue;
        };
        let upper = if hop + 1 < instance.path_links(path).len() {
            match schedule
                .primary(path, hop + 1)
                .and_then(|n| instance.absolute_slot(path, n.slot))
            {
                Some(t_j) => t_j.saturating_sub(1),
                None => continue,
            }
        } else {
            paths[path].deadline_slot()
        };
        let mut have = schedule.backups(path, hop).count();
        while have < params.max_backups_per_link {
            let mut best: Option<(u32, u32, f64)> = None;
            for t in (t_i + 1)..=upper {
                for ch in 0..instance.channels() {
                    let q = quality.get(prim.link, ch, t % w);
                    if q < threshold || !occ.is_free(&graph, prim.link, t % w, ch) {
                        continue;
                    }
                    if best.is_none_or(|(_, _, bq)| q > bq) {
                        best = Some((t, ch, q));
                    }
                }
            }
            let Some((t, ch, _)) = best else { break };
            occ.add(prim.link, t % w, ch);
            entries.push(Entry {
                slot: t % w,
                channel: ch,
                kind: EntryKind::Backup,
                ..prim
            });
            have += 1;
        }
    }
    Ok(Schedule::new(entries, instance))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    CellOutOfGrid { entry: usize },
    UnknownHop { entry: usize },
    LinkMismatch { path: String, hop: usize },
    MissingPrimary { path: String, hop: usize },
    DuplicatePrimary { path: String, hop: usize },
    BackupWithoutPrimary { path: String, hop: usize },
    OutsideWindow { path: String, hop: usize },
    Precedence { path: String, hop: usize },
    BackupOutsideWindow { path: String, hop: usize, slot: u32 },
    TooManyBackups { path: String, hop: usize, count: usize },
    BackupBelowThreshold { path: String, hop: usize, slot: u32, channel: u32, quality: f64, threshold: f64 },
    Conflict { a: String, b: String, slot: u32, channel: u32 },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScheduleViolation::*;
        match self {
            CellOutOfGrid { entry } => write!(f, "entry {entry}: cell outside the W x C grid"),
            UnknownHop { entry } => write!(f, "entry {entry}: unknown path or hop"),
            LinkMismatch { path, hop } => write!(f, "path {path} hop {hop}: link does not match the path"),
            MissingPrimary { path, hop } => write!(f, "path {path} hop {hop}: no primary entry"),
            DuplicatePrimary { path, hop } => write!(f, "path {path} hop {hop}: more than one primary entry"),
            BackupWithoutPrimary { path, hop } => write!(f, "path {path} hop {hop}: backup without a primary"),
            OutsideWindow { path, hop } => write!(f, "path {path} hop {hop}: primary outside the delivery window"),
            Precedence { path, hop } => write!(f, "path {path} hop {hop}: not strictly before the next hop"),
            BackupOutsideWindow { path, hop, slot } => {
                write!(f, "path {path} hop {hop}: backup slot {slot} outside its retransmission window")
            }
            TooManyBackups { path, hop, count } => write!(f, "path {path} hop {hop}: {count} backups exceed the limit"),
            BackupBelowThreshold { path, hop, slot, channel, quality, threshold } => write!(
                f,
                "path {path} hop {hop}: backup ({slot}, {channel}) quality {quality} below {threshold}"
            ),
            Conflict { a, b, slot, channel } => write!(f, "links {a} and {b} clash on cell ({slot}, {channel})"),
        }
    }
}

/// Per-path checks that need no conflict model: one primary per hop, each
/// primary inside the window, strictly increasing hop times, and backups
/// strictly between their hop's primary and the next hop's primary.
pub fn verify_structure(schedule: &Schedule, instance: &Instance) -> Vec<ScheduleViolation> {
    use ScheduleViolation::*;
    let mut out = Vec::new();
    let paths = instance.paths();
    let (w, c) = (instance.duty_cycle(), instance.channels());

    let mut ok_entries = Vec::new();
    for (i, e) in schedule.entries().iter().enumerate() {
        if e.slot >= w || e.channel >= c {
            out.push(CellOutOfGrid { entry: i });
        } else if e.path >= paths.len() || e.hop >= instance.path_links(e.path).len() {
            out.push(UnknownHop { entry: i });
        } else {
            ok_entries.push(e);
        }
    }

    for (p, spec) in paths.iter().enumerate() {
        let links = instance.path_links(p);
        let mut times: Vec<Option<u32>> = Vec::with_capacity(links.len());
        for (hop, &link) in links.iter().enumerate() {
            let here = || ok_entries.iter().filter(move |e| e.path == p && e.hop == hop);
            if here().any(|e| e.link != link) {
                out.push(LinkMismatch { path: spec.id.clone(), hop });
            }
            let prims: Vec<_> = here().filter(|e| e.kind == EntryKind::Primary).collect();
            let has_backup = here().any(|e| e.kind == EntryKind::Backup);
            match prims.len() {
                0 => {
                    out.push(MissingPrimary { path: spec.id.clone(), hop });
                    if has_backup {
                        out.push(BackupWithoutPrimary { path: spec.id.clone(), hop });
                    }
                    times.push(None);
                }
                1 => {
                    let t = instance.absolute_slot(p, prims[0].slot);
                    if t.is_none() {
                        out.push(OutsideWindow { path: spec.id.clone(), hop });
                    }
                    times.push(t);
                }
                _ => {
                    out.push(DuplicatePrimary { path: spec.id.clone(), hop });
                    times.push(None);
                }
            }
        }
        for hop in 0..times.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (times[hop], times[hop + 1]) {
                if a >= b {
                    out.push(Precedence { path: spec.id.clone(), hop });
                }
            }
        }
        for (hop, t) in times.iter().enumerate() {
            let Some(t_i) = *t else { continue };
            let upper = if hop + 1 < times.len() {
                match times[hop + 1] {
                    Some(t_j) => t_j.saturating_sub(1),
                    None => continue,
                }
            } else {
                spec.deadline_slot()
            };
            for e in ok_entries
                .iter()
                .filter(|e| e.path == p && e.hop == hop && e.kind == EntryKind::Backup)
            {
                let inside = instance
                    .absolute_slot(p, e.slot)
                    .is_some_and(|b| b > t_i && b <= upper);
                if !inside {
                    out.push(BackupOutsideWindow { path: spec.id.clone(), hop, slot: e.slot });
                }
            }
        }
    }
    out
}

/// Full check: [`verify_structure`], conflict-freedom under the parameters'
/// conflict rule, the per-hop backup limit, and (when a quality map is
/// given) the backup quality threshold. Empty means valid.
pub fn verify_schedule(
    schedule: &Schedule,
    instance: &Instance,
    params: &AllocParams,
    quality: Option<&QualityMap>,
) -> Vec<ScheduleViolation> {
    use ScheduleViolation::*;
    let mut out = verify_structure(schedule, instance);
    let graph = match build_conflict_graph(instance, params.conflict_rule) {
        Ok(g) => g,
        Err(_) => return out,
    };
    let (w, c) = (instance.duty_cycle(), instance.channels());
    let links = instance.links();
    let entries: Vec<&Entry> = schedule
        .entries()
        .iter()
        .filter(|e| e.slot < w && e.channel < c && e.link < links.len())
        .collect();

    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            if a.slot == b.slot && a.channel == b.channel && graph.clash(a.link, b.link) {
                out.push(Conflict {
                    a: links[a.link].id.clone(),
                    b: links[b.link].id.clone(),
                    slot: a.slot,
                    channel: a.channel,
                });
            }
        }
    }

    let paths = instance.paths();
    for (p, spec) in paths.iter().enumerate() {
        for hop in 0..instance.path_links(p).len() {
            let count = schedule.backups(p, hop).count();
            if count > params.max_backups_per_link {
                out.push(TooManyBackups { path: spec.id.clone(), hop, count });
            }
        }
    }

    if let Some(q) = quality.filter(|q| q.matches(instance)) {
        let threshold = params.t_q.resolve(q);
        for e in entries.iter().filter(|e| e.kind == EntryKind::Backup && e.path < paths.len()) {
            let v = q.get(e.link, e.channel, e.slot);
            if v < threshold {
                out.push(BackupBelowThreshold {
                    path: paths[e.path].id.clone(),
                    hop: e.hop,
                    slot: e.slot,
                    channel: e.channel,
                    quality: v,
                    threshold,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{link, path};
    use crate::model::{validate_instance, RawInstance};

    fn one_hop(w: u32, c: u32, dl: u32) -> Instance {
        validate_instance(RawInstance {
            nodes: vec!["A".into(), "S".into()],
            links: vec![link("A-S", "A", "S")],
            paths: vec![path("p", "A", &["A-S"], 0, dl)],
            sink: Some("S".into()),
            duty_cycle: w,
            channels: c,
            ..Default::default()
        })
        .unwrap()
    }

    fn chain(w: u32, c: u32, gen: u32, dl: u32) -> Instance {
        validate_instance(RawInstance {
            nodes: ["A", "B", "S"].map(String::from).to_vec(),
            links: vec![link("A-B", "A", "B"), link("B-S", "B", "S")],
            paths: vec![path("p", "A", &["A-B", "B-S"], gen, dl)],
            sink: Some("S".into()),
            duty_cycle: w,
            channels: c,
            ..Default::default()
        })
        .unwrap()
    }

    fn unit(inst: &Instance) -> QualityMap {
        QualityMap::for_instance(inst, 1.0).unwrap()
    }

    fn cells(s: &Schedule) -> Vec<(usize, EntryKind, u32, u32)> {
        s.entries().iter().map(|e| (e.hop, e.kind, e.slot, e.channel)).collect()
    }

    #[test]
    fn single_link_takes_first_cell() {
        let inst = one_hop(2, 1, 1);
        let s = allocate_laca(&inst, &unit(&inst), &AllocParams::default()).unwrap();
        assert_eq!(s.primary(0, 0).map(|e| (e.slot, e.channel)), Some((0, 0)));
        assert!(verify_schedule(&s, &inst, &AllocParams::default(), Some(&unit(&inst))).is_empty());
    }

    #[test]
    fn two_hop_path_respects_precedence() {
        let inst = chain(3, 1, 0, 2);
        let q = unit(&inst);
        let s = allocate_laca(&inst, &q, &AllocParams::default()).unwrap();
        let t0 = s.primary(0, 0).unwrap().slot;
        let t1 = s.primary(0, 1).unwrap().slot;
        assert!(t0 < t1 && t1 <= 2);
        assert!(verify_schedule(&s, &inst, &AllocParams::default(), Some(&q)).is_empty());
    }

    #[test]
    fn laca_prefers_quality_and_urgent_prefers_lowest() {
        let inst = one_hop(4, 2, 3);
        let mut q = QualityMap::for_instance(&inst, 0.5).unwrap();
        q.set(0, 1, 2, 0.9).unwrap();
        let params = AllocParams { t_q: Threshold::Fixed(0.95), ..Default::default() };
        let laca = allocate_laca(&inst, &q, &params).unwrap();
        assert_eq!(cells(&laca), vec![(0, EntryKind::Primary, 2, 1)]);
        let urgent = allocate_urgent_first(&inst, &q, &params).unwrap();
        assert_eq!(cells(&urgent), vec![(0, EntryKind::Primary, 0, 0)]);
    }

    #[test]
    fn same_primaries_on_single_channel_uniform_quality() {
        let inst = chain(6, 1, 1, 4);
        let q = QualityMap::for_instance(&inst, 0.7).unwrap();
        let params = AllocParams { t_q: Threshold::Fixed(0.8), ..Default::default() };
        let a = allocate_laca(&inst, &q, &params).unwrap();
        let b = allocate_urgent_first(&inst, &q, &params).unwrap();
        assert_eq!(a, b);
    }

    fn two_conflicting(w: u32, c: u32) -> Instance {
        validate_instance(RawInstance {
            nodes: ["A", "B", "S"].map(String::from).to_vec(),
            links: vec![link("A-S", "A", "S"), link("B-S", "B", "S")],
            paths: vec![path("p1", "A", &["A-S"], 0, 1), path("p2", "B", &["B-S"], 0, 1)],
            sink: Some("S".into()),
            duty_cycle: w,
            channels: c,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn third_claimant_on_two_cells_is_reported() {
        // Three 1-hop paths into S all clash; W=2, C=1 offers two cells.
        let inst = validate_instance(RawInstance {
            nodes: ["A", "B", "C", "S"].map(String::from).to_vec(),
            links: vec![link("A-S", "A", "S"), link("B-S", "B", "S"), link("C-S", "C", "S")],
            paths: vec![
                path("p1", "A", &["A-S"], 0, 1),
                path("p2", "B", &["B-S"], 0, 1),
                path("p3", "C", &["C-S"], 0, 1),
            ],
            sink: Some("S".into()),
            duty_cycle: 2,
            channels: 1,
            ..Default::default()
        })
        .unwrap();
        let q = unit(&inst);
        for r in [
            allocate_laca(&inst, &q, &AllocParams::default()),
            allocate_urgent_first(&inst, &q, &AllocParams::default()),
        ] {
            let Err(AllocError::Infeasible(rep)) = r else { panic!("{r:?}") };
            assert_eq!(rep.hops.len(), 1);
            assert_eq!(rep.hops[0].path, "p3");
            assert_eq!(rep.hops[0].hop, Some(0));
            assert_eq!(rep.hops[0].link.as_deref(), Some("C-S"));
            assert_eq!(rep.hops[0].reason, InfeasibleReason::NoFeasibleCell);
        }
    }

    #[test]
    fn negative_urgency_fails_fast() {
        let mut raw = chain(3, 1, 0, 1).to_raw();
        raw.paths[0].deadline = 1;
        let inst = validate_instance(raw).unwrap();
        let r = allocate_laca(&inst, &unit(&inst), &AllocParams::default());
        let Err(AllocError::Infeasible(rep)) = r else { panic!() };
        assert_eq!(rep.hops[0].reason, InfeasibleReason::NegativeUrgency);
        assert_eq!(rep.hops[0].hop, None);
    }

    #[test]
    fn rejects_bad_params_and_maps() {
        let inst = one_hop(2, 1, 1);
        let q = unit(&inst);
        let bad = AllocParams { alpha: 1.5, ..Default::default() };
        assert!(matches!(allocate_laca(&inst, &q, &bad), Err(AllocError::InvalidParams(_))));
        let bad = AllocParams { t_q: Threshold::Fixed(-0.1), ..Default::default() };
        assert!(matches!(allocate_urgent_first(&inst, &q, &bad), Err(AllocError::InvalidParams(_))));
        let wrong = QualityMap::new(1, 2, 2, 1.0).unwrap();
        assert_eq!(
            allocate_laca(&inst, &wrong, &AllocParams::default()),
            Err(AllocError::QualityMapMismatch)
        );
    }

    fn primaries(inst: &Instance, cells: &[(usize, usize, u32, u32)]) -> Schedule {
        Schedule::new(
            cells
                .iter()
                .map(|&(p, h, s, c)| Entry {
                    path: p,
                    hop: h,
                    link: inst.path_links(p)[h],
                    slot: s,
                    channel: c,
                    kind: EntryKind::Primary,
                })
                .collect(),
            inst,
        )
    }

    #[test]
    fn backup_lands_inside_window() {
        // Hop 0 at t=1, hop 1 at t=4; slot 2 channel 0 is the only good cell.
        let inst = chain(6, 2, 0, 5);
        let mut q = QualityMap::for_instance(&inst, 0.3).unwrap();
        q.set(0, 0, 2, 0.9).unwrap();
        let s = primaries(&inst, &[(0, 0, 1, 0), (0, 1, 4, 0)]);
        let params = AllocParams { t_q: Threshold::Fixed(0.5), ..Default::default() };
        let b = assign_backups(&s, &inst, &q, &params).unwrap();
        let got: Vec<_> = b.backups(0, 0).map(|e| (e.slot, e.channel)).collect();
        assert_eq!(got, vec![(2, 0)]);
        assert_eq!(b.backups(0, 1).count(), 0);
        assert!(verify_schedule(&b, &inst, &params, Some(&q)).is_empty());
    }

    #[test]
    fn empty_window_gets_no_backup() {
        let inst = chain(6, 2, 0, 2);
        let s = primaries(&inst, &[(0, 0, 1, 0), (0, 1, 2, 0)]);
        let b = assign_backups(&s, &inst, &unit(&inst), &AllocParams::default()).unwrap();
        assert_eq!(b.backups(0, 0).count(), 0);
        assert_eq!(b.backup_count(), 0);
    }

    #[test]
    fn backup_skips_cell_held_by_conflicting_link() {
        // A-F and B-F share F. B-F holds (1, 2); A-F's best candidate would
        // be that cell, so it falls back to the next best.
        let inst = validate_instance(RawInstance {
            nodes: ["A", "B", "F", "G"].map(String::from).to_vec(),
            links: vec![link("A-F", "A", "F"), link("F-G", "F", "G"), link("B-F", "B", "F")],
            paths: vec![
                path("a", "A", &["A-F", "F-G"], 0, 3),
                path("b", "B", &["B-F", "F-G"], 1, 2),
            ],
            sink: Some("G".into()),
            duty_cycle: 5,
            channels: 3,
            ..Default::default()
        })
        .unwrap();
        let mut q = QualityMap::for_instance(&inst, 0.4).unwrap();
        q.set(0, 2, 1, 0.95).unwrap();
        q.set(0, 2, 2, 0.9).unwrap();
        q.set(0, 0, 1, 0.6).unwrap();
        let s = primaries(&inst, &[(0, 0, 0, 0), (0, 1, 3, 0), (1, 0, 1, 2), (1, 1, 2, 1)]);
        let params = AllocParams { t_q: Threshold::Fixed(0.5), ..Default::default() };
        assert!(verify_schedule(&s, &inst, &params, Some(&q)).is_empty());
        let b = assign_backups(&s, &inst, &q, &params).unwrap();
        let got: Vec<_> = b.backups(0, 0).map(|e| (e.slot, e.channel)).collect();
        assert_eq!(got, vec![(2, 2)]);
        assert!(verify_schedule(&b, &inst, &params, Some(&q)).is_empty());
    }

    #[test]
    fn multiple_backups_per_hop() {
        let inst = one_hop(6, 1, 5);
        let q = unit(&inst);
        let s = primaries(&inst, &[(0, 0, 0, 0)]);
        let params = AllocParams { max_backups_per_link: 3, ..Default::default() };
        let b = assign_backups(&s, &inst, &q, &params).unwrap();
        let got: Vec<_> = b.backups(0, 0).map(|e| e.slot).collect();
        assert_eq!(got, vec![1, 2, 3]);
        assert!(verify_schedule(&b, &inst, &params, Some(&q)).is_empty());
        let tight = AllocParams { max_backups_per_link: 2, ..params };
        assert!(verify_schedule(&b, &inst, &tight, Some(&q))
            .iter()
            .any(|v| matches!(v, ScheduleViolation::TooManyBackups { count: 3, .. })));
    }

    #[test]
    fn verifier_flags_conflict() {
        let inst = two_conflicting(3, 1);
        let s = primaries(&inst, &[(0, 0, 0, 0), (1, 0, 0, 0)]);
        let v = verify_schedule(&s, &inst, &AllocParams::default(), None);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], ScheduleViolation::Conflict { .. }));
        // Not a conflict when only explicit pairs count.
        let explicit = AllocParams { conflict_rule: ConflictRule::ExplicitOnly, ..Default::default() };
        assert!(verify_schedule(&s, &inst, &explicit, None).is_empty());
    }

    #[test]
    fn verifier_flags_precedence_and_window() {
        let inst = chain(5, 1, 0, 3);
        let s = primaries(&inst, &[(0, 0, 2, 0), (0, 1, 1, 0)]);
        let v = verify_schedule(&s, &inst, &AllocParams::default(), None);
        assert!(v.iter().any(|x| matches!(x, ScheduleViolation::Precedence { hop: 0, .. })));
        let s = primaries(&inst, &[(0, 0, 0, 0), (0, 1, 4, 0)]);
        let v = verify_schedule(&s, &inst, &AllocParams::default(), None);
        assert!(v.iter().any(|x| matches!(x, ScheduleViolation::OutsideWindow { hop: 1, .. })));
        let s = primaries(&inst, &[(0, 0, 0, 0)]);
        let v = verify_schedule(&s, &inst, &AllocParams::default(), None);
        assert!(v.iter().any(|x| matches!(x, ScheduleViolation::MissingPrimary { hop: 1, .. })));
    }

    #[test]
    fn verifier_flags_backup_threshold() {
        let inst = chain(6, 1, 0, 5);
        let mut q = QualityMap::for_instance(&inst, 0.9).unwrap();
        q.set(0, 0, 2, 0.2).unwrap();
        let mut s = primaries(&inst, &[(0, 0, 1, 0), (0, 1, 4, 0)]).entries().to_vec();
        s.push(Entry { slot: 2, kind: EntryKind::Backup, ..s[0] });
        let s = Schedule::new(s, &inst);
        let params = AllocParams { t_q: Threshold::Fixed(0.5), ..Default::default() };
        let v = verify_schedule(&s, &inst, &params, Some(&q));
        assert!(matches!(v.as_slice(), [ScheduleViolation::BackupBelowThreshold { .. }]));
    }
}
