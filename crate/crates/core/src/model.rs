//! Network instances, the link conflict graph, and path prioritization.
//!
//! An [`Instance`] is built from a [`RawInstance`] through
//! [`validate_instance`], which collects every rule violation instead of
//! stopping at the first one. Links and paths keep their declaration order;
//! everything downstream addresses them by index into that order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// A single broken rule, naming the entity that broke it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl Violation {
    pub fn new(entity: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid instance: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown link id `{0}`")]
    UnknownLink(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpec {
    pub id: String,
    pub source: String,
    /// Link ids ordered from the source towards the sink.
    pub links: Vec<String>,
    /// Absolute slot at which the packet is generated.
    pub gen_slot: u32,
    /// Slot budget relative to `gen_slot`; delivery is on time up to and
    /// including `gen_slot + deadline`.
    pub deadline: u32,
}

impl PathSpec {
    /// Hop count.
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Last absolute slot at which the sink may still receive the packet.
    pub fn deadline_slot(&self) -> u32 {
        self.gen_slot + self.deadline
    }
}

/// Which link pairs interfere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictRule {
    /// Links sharing at least one endpoint conflict, plus the explicit pairs.
    #[default]
    SharedEndpoint,
    /// Only the explicitly listed pairs conflict.
    ExplicitOnly,
}

impl ConflictRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictRule::SharedEndpoint => "shared-endpoint",
            ConflictRule::ExplicitOnly => "explicit-only",
        }
    }
}

impl std::str::FromStr for ConflictRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared-endpoint" => Ok(ConflictRule::SharedEndpoint),
            "explicit-only" => Ok(ConflictRule::ExplicitOnly),
            other => Err(format!(
                "unknown conflict rule `{other}` (expected shared-endpoint or explicit-only)"
            )),
        }
    }
}

/// Unvalidated instance fields, as produced by a parser or generator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawInstance {
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    pub paths: Vec<PathSpec>,
    pub sink: Option<String>,
    pub duty_cycle: u32,
    pub channels: u32,
    pub extra_conflicts: Vec<(String, String)>,
    pub horizon: Option<u32>,
}

/// A validated network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    nodes: Vec<String>,
    links: Vec<LinkSpec>,
    paths: Vec<PathSpec>,
    sink: String,
    duty_cycle: u32,
    channels: u32,
    extra_conflicts: Vec<(String, String)>,
    horizon: u32,
    horizon_explicit: bool,
    link_index: HashMap<String, usize>,
    path_links: Vec<Vec<usize>>,
}

impl Instance {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn sink(&self) -> &str {
        &self.sink
    }

    /// Slots per cycle (W).
    pub fn duty_cycle(&self) -> u32 {
        self.duty_cycle
    }

    /// Channel count (C).
    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn extra_conflicts(&self) -> &[(String, String)] {
        &self.extra_conflicts
    }

    /// First absolute slot past every path's deadline.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Whether the horizon was given explicitly rather than defaulted.
    pub fn horizon_is_explicit(&self) -> bool {
        self.horizon_explicit
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.link_index.get(id).copied()
    }

    pub fn path_index(&self, id: &str) -> Option<usize> {
        self.paths.iter().position(|p| p.id == id)
    }

    /// Link indices of a path, source to sink.
    pub fn path_links(&self, path: usize) -> &[usize] {
        &self.path_links[path]
    }

    /// Maps an in-cycle slot to the unique absolute slot inside the path's
    /// delivery window `[g, g + dl]`, if any.
    pub fn absolute_slot(&self, path: usize, slot: u32) -> Option<u32> {
        let p = &self.paths[path];
        let w = self.duty_cycle;
        if slot >= w {
            return None;
        }
        let offset = (slot + w - p.gen_slot % w) % w;
        let t = p.gen_slot + offset;
        (t <= p.deadline_slot()).then_some(t)
    }

    /// Raw fields, suitable for re-validation after edits.
    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            paths: self.paths.clone(),
            sink: Some(self.sink.clone()),
            duty_cycle: self.duty_cycle,
            channels: self.channels,
            extra_conflicts: self.extra_conflicts.clone(),
            horizon: self.horizon_explicit.then_some(self.horizon),
        }
    }
}

fn default_horizon(paths: &[PathSpec]) -> u32 {
    paths.iter().map(|p| p.deadline_slot() + 1).max().unwrap_or(1)
}

/// Checks every structural rule and returns a validated [`Instance`], or all
/// violations found.
pub fn validate_instance(raw: RawInstance) -> Result<Instance, ModelError> {
    let mut v = Vec::new();

    if raw.duty_cycle < 1 {
        v.push(Violation::new("duty_cycle", "W must be at least 1"));
    }
    if raw.channels < 1 {
        v.push(Violation::new("channels", "C must be at least 1"));
    }

    let mut node_set = HashSet::new();
    for n in &raw.nodes {
        if !node_set.insert(n.as_str()) {
            v.push(Violation::new(format!("node {n}"), "node ids must be unique"));
        }
    }

    let sink = match &raw.sink {
        Some(s) => {
            if !node_set.contains(s.as_str()) {
                v.push(Violation::new(format!("sink {s}"), "sink must be a declared node"));
            }
            s.clone()
        }
        None => {
            v.push(Violation::new("sink", "sink must be declared"));
            String::new()
        }
    };

    let mut link_index = HashMap::new();
    for (i, l) in raw.links.iter().enumerate() {
        let entity = format!("link {}", l.id);
        if link_index.insert(l.id.clone(), i).is_some() {
            v.push(Violation::new(&entity, "link ids must be unique"));
        }
        if l.src == l.dst {
            v.push(Violation::new(&entity, "link source and destination must differ"));
        }
        for end in [&l.src, &l.dst] {
            if !node_set.contains(end.as_str()) {
                v.push(Violation::new(&entity, format!("endpoint {end} is not a declared node")));
            }
        }
    }

    let mut path_ids = HashSet::new();
    let mut path_links = Vec::with_capacity(raw.paths.len());
    for p in &raw.paths {
        let entity = format!("path {}", p.id);
        if !path_ids.insert(p.id.as_str()) {
            v.push(Violation::new(&entity, "path ids must be unique"));
        }
        if p.deadline < 1 {
            v.push(Violation::new(&entity, "deadline must be positive"));
        }
        if raw.duty_cycle >= 1 && p.deadline >= raw.duty_cycle {
            v.push(Violation::new(
                &entity,
                "deadline must be smaller than the duty cycle (window must fit in one cycle)",
            ));
        }
        if p.links.is_empty() {
            v.push(Violation::new(&entity, "path must contain at least one link"));
            path_links.push(Vec::new());
            continue;
        }
        let mut idx = Vec::with_capacity(p.links.len());
        for lid in &p.links {
            match link_index.get(lid) {
                Some(&i) => idx.push(i),
                None => v.push(Violation::new(&entity, format!("unknown link {lid}"))),
            }
        }
        if idx.len() == p.links.len() {
            let ls: Vec<&LinkSpec> = idx.iter().map(|&i| &raw.links[i]).collect();
            if ls[0].src != p.source {
                v.push(Violation::new(&entity, "path must start at its source node"));
            }
            if ls.windows(2).any(|w| w[0].dst != w[1].src) {
                v.push(Violation::new(&entity, "path links must be connected"));
            }
            if ls[ls.len() - 1].dst != sink {
                v.push(Violation::new(&entity, "path must terminate at sink"));
            }
        }
        path_links.push(idx);
    }

    for (a, b) in &raw.extra_conflicts {
        let entity = format!("conflict {a} {b}");
        for id in [a, b] {
            if !link_index.contains_key(id) {
                v.push(Violation::new(&entity, format!("unknown link {id}")));
            }
        }
        if a == b {
            v.push(Violation::new(&entity, "a link cannot conflict with itself"));
        }
    }

    let min_horizon = default_horizon(&raw.paths);
    if let Some(h) = raw.horizon {
        if h < min_horizon {
            v.push(Violation::new(
                "horizon",
                format!("horizon must be at least {min_horizon} (one past the latest deadline)"),
            ));
        }
    }

    if !v.is_empty() {
        return Err(ModelError::Invalid(v));
    }

    Ok(Instance {
        horizon: raw.horizon.unwrap_or(min_horizon),
        horizon_explicit: raw.horizon.is_some(),
        nodes: raw.nodes,
        links: raw.links,
        paths: raw.paths,
        sink,
        duty_cycle: raw.duty_cycle,
        channels: raw.channels,
        extra_conflicts: raw.extra_conflicts,
        link_index,
        path_links,
    })
}

/// Symmetric, irreflexive interference relation over links.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    ids: Vec<String>,
    adjacency: Vec<BTreeSet<usize>>,
    matrix: Vec<bool>,
}

impl ConflictGraph {
    /// Graph over `ids` with the given undirected edges (self-pairs dropped).
    pub fn from_edges(ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = ids.len();
        let mut adjacency = vec![BTreeSet::new(); n];
        let mut matrix = vec![false; n * n];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
            matrix[a * n + b] = true;
            matrix[b * n + a] = true;
        }
        Self {
            ids,
            adjacency,
            matrix,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn neighbors(&self, link: usize) -> &BTreeSet<usize> {
        &self.adjacency[link]
    }

    pub fn degree(&self, link: usize) -> usize {
        self.adjacency[link].len()
    }

    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        self.matrix[a * self.ids.len() + b]
    }

    /// Whether two entries on these links may not share a grid cell. A link
    /// also clashes with itself: one radio cannot carry two packets at once.
    pub fn clash(&self, a: usize, b: usize) -> bool {
        a == b || self.conflicts(a, b)
    }
}

pub fn build_conflict_graph(
    instance: &Instance,
    rule: ConflictRule,
) -> Result<ConflictGraph, ModelError> {
    let links = instance.links();
    let mut edges = Vec::new();
    if rule == ConflictRule::SharedEndpoint {
        for (i, a) in links.iter().enumerate() {
            for (j, b) in links.iter().enumerate().skip(i + 1) {
                let shared = a.src == b.src || a.src == b.dst || a.dst == b.src || a.dst == b.dst;
                if shared {
                    edges.push((i, j));
                }
            }
        }
    }
    for (a, b) in instance.extra_conflicts() {
        let ia = instance
            .link_index(a)
            .ok_or_else(|| ModelError::UnknownLink(a.clone()))?;
        let ib = instance
            .link_index(b)
            .ok_or_else(|| ModelError::UnknownLink(b.clone()))?;
        edges.push((ia, ib));
    }
    let ids = links.iter().map(|l| l.id.clone()).collect();
    Ok(ConflictGraph::from_edges(ids, edges))
}

/// Urgency `dl - pl`: slack left once every hop has taken one slot.
/// Negative values mean the path can never meet its deadline.
pub fn urgency(path: &PathSpec) -> i64 {
    path.deadline as i64 - path.len() as i64
}

/// Sum over the path's links of each link's number of conflicting links.
pub fn conflict_count(path: &PathSpec, graph: &ConflictGraph) -> Result<usize, ModelError> {
    path.links.iter().try_fold(0, |acc, id| {
        let i = graph
            .index_of(id)
            .ok_or_else(|| ModelError::UnknownLink(id.clone()))?;
        Ok(acc + graph.degree(i))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPriority {
    /// Index into the path slice handed to [`priority_order`].
    pub index: usize,
    pub path_id: String,
    pub urgency: i64,
    pub conflicts: usize,
    pub metric: f64,
}

/// Min-max normalization onto [0, 1]; a constant series maps to 0.
fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// Orders paths for allocation, most pressing first.
///
/// The metric is `alpha * norm(urgency) - (1 - alpha) * norm(conflicts)`, so
/// a small urgency and a large conflict count both pull a path forward.
/// Ties go to the lexicographically smaller path id.
pub fn priority_order(
    paths: &[PathSpec],
    graph: &ConflictGraph,
    alpha: f64,
) -> Result<Vec<PathPriority>, ModelError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ModelError::AlphaOutOfRange(alpha));
    }
    let urg: Vec<i64> = paths.iter().map(urgency).collect();
    let conf = paths
        .iter()
        .map(|p| conflict_count(p, graph))
        .collect::<Result<Vec<_>, _>>()?;
    let nu = normalize(&urg.iter().map(|&d| d as f64).collect::<Vec<_>>());
    let nc = normalize(&conf.iter().map(|&c| c as f64).collect::<Vec<_>>());

    let mut out: Vec<PathPriority> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| PathPriority {
            index: i,
            path_id: p.id.clone(),
            urgency: urg[i],
            conflicts: conf[i],
            metric: alpha * nu[i] - (1.0 - alpha) * nc[i],
        })
        .collect();
    out.sort_by(|a, b| {
        a.metric
            .total_cmp(&b.metric)
            .then_with(|| a.path_id.cmp(&b.path_id))
    });
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn link(id: &str, src: &str, dst: &str) -> LinkSpec {
        LinkSpec {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub(crate) fn path(id: &str, source: &str, links: &[&str], gen: u32, dl: u32) -> PathSpec {
        PathSpec {
            id: id.into(),
            source: source.into(),
            links: links.iter().map(|s| s.to_string()).collect(),
            gen_slot: gen,
            deadline: dl,
        }
    }

    fn minimal() -> RawInstance {
        RawInstance {
            nodes: vec!["A".into(), "S".into()],
            links: vec![link("A-S", "A", "S")],
            paths: vec![path("p", "A", &["A-S"], 0, 1)],
            sink: Some("S".into()),
            duty_cycle: 2,
            channels: 1,
            ..Default::default()
        }
    }

    fn rules(err: ModelError) -> Vec<String> {
        match err {
            ModelError::Invalid(v) => v.into_iter().map(|v| v.rule).collect(),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = validate_instance(minimal()).unwrap();
        assert_eq!(inst.horizon(), 2);
        assert_eq!(inst.path_links(0), &[0]);
    }

    #[test]
    fn path_not_ending_at_sink() {
        let mut raw = minimal();
        raw.nodes.push("B".into());
        raw.links.push(link("A-B", "A", "B"));
        raw.paths[0].links = vec!["A-B".into()];
        let r = rules(validate_instance(raw).unwrap_err());
        assert_eq!(r, vec!["path must terminate at sink"]);
    }

    #[test]
    fn collects_every_violation() {
        let mut raw = minimal();
        raw.duty_cycle = 0;
        raw.channels = 0;
        raw.links.push(link("A-S", "A", "X"));
        raw.paths.push(path("p", "A", &["A-S"], 0, 1));
        let r = rules(validate_instance(raw).unwrap_err());
        assert!(r.contains(&"W must be at least 1".to_string()));
        assert!(r.contains(&"C must be at least 1".to_string()));
        assert!(r.contains(&"link ids must be unique".to_string()));
        assert!(r.contains(&"path ids must be unique".to_string()));
        assert!(r.iter().any(|s| s.contains("endpoint X")));
    }

    #[test]
    fn disconnected_path_rejected() {
        let mut raw = minimal();
        raw.nodes.extend(["B".into(), "C".into()]);
        raw.links.push(link("B-C", "B", "C"));
        raw.links.push(link("C-S", "C", "S"));
        raw.paths[0] = path("p", "A", &["A-S", "C-S"], 0, 1);
        let r = rules(validate_instance(raw).unwrap_err());
        assert!(r.contains(&"path links must be connected".to_string()));
    }

    #[test]
    fn deadline_must_fit_in_cycle() {
        let mut raw = minimal();
        raw.paths[0].deadline = 2;
        let r = rules(validate_instance(raw).unwrap_err());
        assert_eq!(r.len(), 1);
        assert!(r[0].contains("duty cycle"));
    }

    #[test]
    fn absolute_slot_maps_into_window() {
        let mut raw = minimal();
        raw.duty_cycle = 5;
        raw.paths[0] = path("p", "A", &["A-S"], 3, 3);
        let inst = validate_instance(raw).unwrap();
        assert_eq!(inst.absolute_slot(0, 3), Some(3));
        assert_eq!(inst.absolute_slot(0, 4), Some(4));
        assert_eq!(inst.absolute_slot(0, 0), Some(5));
        assert_eq!(inst.absolute_slot(0, 1), Some(6));
        assert_eq!(inst.absolute_slot(0, 2), None);
        assert_eq!(inst.absolute_slot(0, 7), None);
    }

    fn star_b() -> Instance {
        validate_instance(RawInstance {
            nodes: ["A", "B", "C", "D"].map(String::from).to_vec(),
            links: vec![link("L1", "A", "B"), link("L2", "B", "C"), link("L3", "B", "D")],
            paths: vec![path("p", "A", &["L1", "L2"], 0, 2)],
            sink: Some("C".into()),
            duty_cycle: 3,
            channels: 1,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn shared_receiver_conflicts() {
        let inst = validate_instance(RawInstance {
            nodes: ["A", "B", "F"].map(String::from).to_vec(),
            links: vec![link("A-F", "A", "F"), link("B-F", "B", "F")],
            paths: vec![path("p", "A", &["A-F"], 0, 1)],
            sink: Some("F".into()),
            duty_cycle: 2,
            channels: 1,
            ..Default::default()
        })
        .unwrap();
        let g = build_conflict_graph(&inst, ConflictRule::SharedEndpoint).unwrap();
        assert!(g.conflicts(0, 1) && g.conflicts(1, 0));
        let g = build_conflict_graph(&inst, ConflictRule::ExplicitOnly).unwrap();
        assert!(!g.conflicts(0, 1));
    }

    #[test]
    fn disjoint_links_do_not_conflict() {
        let inst = validate_instance(RawInstance {
            nodes: ["A", "B", "C", "D"].map(String::from).to_vec(),
            links: vec![link("A-B", "A", "B"), link("C-D", "C", "D")],
            paths: vec![path("p", "A", &["A-B"], 0, 1)],
            sink: Some("B".into()),
            duty_cycle: 2,
            channels: 1,
            ..Default::default()
        })
        .unwrap();
        let g = build_conflict_graph(&inst, ConflictRule::SharedEndpoint).unwrap();
        assert!(!g.conflicts(0, 1));
        assert_eq!(g.degree(0), 0);
    }

    #[test]
    fn triangle_and_conflict_counts() {
        let inst = star_b();
        let g = build_conflict_graph(&inst, ConflictRule::SharedEndpoint).unwrap();
        for a in 0..3 {
            assert!(!g.conflicts(a, a));
            for b in 0..3 {
                assert_eq!(g.conflicts(a, b), a != b);
            }
        }
        assert_eq!(conflict_count(&inst.paths()[0], &g).unwrap(), 4);
        let all = path("q", "A", &["L1", "L2", "L3"], 0, 3);
        assert_eq!(conflict_count(&all, &g).unwrap(), 6);
        let bad = path("q", "A", &["nope"], 0, 3);
        assert_eq!(
            conflict_count(&bad, &g),
            Err(ModelError::UnknownLink("nope".into()))
        );
    }

    #[test]
    fn isolated_link_has_no_conflicts() {
        let inst = validate_instance(minimal()).unwrap();
        let g = build_conflict_graph(&inst, ConflictRule::SharedEndpoint).unwrap();
        assert_eq!(conflict_count(&inst.paths()[0], &g).unwrap(), 0);
    }

    #[test]
    fn urgency_examples() {
        assert_eq!(urgency(&path("D", "D", &["a", "b"], 0, 2)), 0);
        assert_eq!(urgency(&path("x", "x", &["a"], 0, 5)), 4);
        assert_eq!(urgency(&path("x", "x", &["a", "b", "c", "d"], 0, 3)), -1);
    }

    #[test]
    fn alpha_extremes() {
        // P1: urgency 0, one conflict. P2: urgency 2, five conflicts.
        let ids: Vec<String> = (0..7).map(|i| format!("l{i}")).collect();
        let mut edges = vec![(0, 1)];
        edges.extend([(2, 3), (2, 4), (2, 5), (2, 6), (2, 1)]);
        let g = ConflictGraph::from_edges(ids, edges);
        let p1 = path("P1", "x", &["l0"], 0, 1);
        let p2 = path("P2", "x", &["l2"], 0, 3);
        assert_eq!(conflict_count(&p1, &g).unwrap(), 1);
        assert_eq!(conflict_count(&p2, &g).unwrap(), 5);
        let paths = vec![p1, p2];
        let order = |a| {
            priority_order(&paths, &g, a)
                .unwrap()
                .into_iter()
                .map(|p| p.path_id)
                .collect::<Vec<_>>()
        };
        assert_eq!(order(1.0), ["P1", "P2"]);
        assert_eq!(order(0.0), ["P2", "P1"]);
    }

    #[test]
    fn priority_rejects_bad_alpha_and_handles_empty() {
        let g = ConflictGraph::from_edges(vec![], []);
        assert_eq!(
            priority_order(&[], &g, 1.5),
            Err(ModelError::AlphaOutOfRange(1.5))
        );
        assert!(priority_order(&[], &g, 0.3).unwrap().is_empty());
    }
}
