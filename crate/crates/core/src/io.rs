//! Text formats: the instance document, schedule and report CSVs, RSSI
//! traces, BER curves and quality lines.
//!
//! The instance document is line oriented. `#` starts a comment that runs to
//! the end of the line, and fields are separated by whitespace:
//!
//! ```text
//! duty_cycle 5
//! channels 2
//! alpha 0.5
//! t_q auto
//! max_backups 1
//! conflict_rule shared-endpoint
//! sink S
//! node A
//! link A-S A S
//! path p1 source A links A-S gen 0 deadline 3
//! quality_default 0.9
//! quality A-S 0 2 0.75
//! ```
//!
//! `horizon H` optionally fixes the simulation horizon.

use std::fmt::Write as _;

use thiserror::Error;

use crate::allocator::{AllocParams, Entry, EntryKind, InfeasibilityReport, Schedule, Threshold};
use crate::linkquality::{BerCurve, LinkQualityError, QualityMap, RssiTrace};
use crate::model::{validate_instance, ConflictRule, Instance, LinkSpec, ModelError, PathSpec, RawInstance};
use crate::simulator::SimReport;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required `{0}` line")]
    Missing(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quality(#[from] LinkQualityError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

/// Meaningful lines with their 1-based numbers, comments stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T, ParseError> {
    s.parse().map_err(|_| syntax(line, format!("invalid {what} `{s}`")))
}

fn unit(line: usize, what: &str, s: &str) -> Result<f64, ParseError> {
    let x: f64 = num(line, what, s)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(syntax(line, format!("{what} {x} outside [0, 1]")));
    }
    Ok(x)
}

/// An instance with its quality map and allocation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDocument {
    pub instance: Instance,
    pub quality: QualityMap,
    pub params: AllocParams,
}

pub fn parse_instance(text: &str) -> Result<InstanceDocument, ParseError> {
    let mut raw = RawInstance::default();
    let mut params = AllocParams::default();
    let mut duty_cycle = None;
    let mut channels = None;
    let mut default_q = 1.0;
    let mut cells: Vec<(usize, String, u32, u32, f64)> = Vec::new();
    let mut seen: Vec<String> = Vec::new();

    for (n, line) in lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let key = f[0];
        let arity = |k: usize| {
            if f.len() == k + 1 {
                Ok(())
            } else {
                Err(syntax(n, format!("`{key}` takes {k} field(s), got {}", f.len() - 1)))
            }
        };
        match key {
            "duty_cycle" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                duty_cycle = Some(num::<u32>(n, "duty_cycle", f[1])?);
            }
            "channels" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                channels = Some(num::<u32>(n, "channels", f[1])?);
            }
            "alpha" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                params.alpha = unit(n, "alpha", f[1])?;
            }
            "t_q" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                params.t_q = match f[1] {
                    "auto" => Threshold::Auto,
                    s => Threshold::Fixed(unit(n, "t_q", s)?),
                };
            }
            "max_backups" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                params.max_backups_per_link = num(n, "max_backups", f[1])?;
            }
            "conflict_rule" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                params.conflict_rule = f[1].parse::<ConflictRule>().map_err(|m| syntax(n, m))?;
            }
            "horizon" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                raw.horizon = Some(num(n, "horizon", f[1])?);
            }
            "quality_default" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                default_q = unit(n, "quality_default", f[1])?;
            }
            "sink" => {
                arity(1)?;
                once(&mut seen, key, n)?;
                raw.sink = Some(f[1].to_string());
                if !raw.nodes.iter().any(|x| x == f[1]) {
                    raw.nodes.push(f[1].to_string());
                }
            }
            "node" => {
                arity(1)?;
                // A node already declared through `sink` is not repeated.
                if raw.sink.as_deref() != Some(f[1]) || !raw.nodes.iter().any(|x| x == f[1]) {
                    raw.nodes.push(f[1].to_string());
                }
            }
            "link" => {
                arity(3)?;
                raw.links.push(LinkSpec { id: f[1].into(), src: f[2].into(), dst: f[3].into() });
            }
            "conflict" => {
                arity(2)?;
                raw.extra_conflicts.push((f[1].into(), f[2].into()));
            }
            "path" => raw.paths.push(parse_path(n, &f)?),
            "quality" => {
                arity(4)?;
                cells.push((
                    n,
                    f[1].to_string(),
                    num(n, "channel", f[2])?,
                    num(n, "slot", f[3])?,
                    unit(n, "quality", f[4])?,
                ));
            }
            other => return Err(syntax(n, format!("unknown keyword `{other}`"))),
        }
    }

    raw.duty_cycle = duty_cycle.ok_or(ParseError::Missing("duty_cycle"))?;
    raw.channels = channels.ok_or(ParseError::Missing("channels"))?;
    let instance = validate_instance(raw)?;
    let mut quality = QualityMap::for_instance(&instance, default_q)?;
    for (n, link, ch, slot, q) in cells {
        let l = instance
            .link_index(&link)
            .ok_or_else(|| syntax(n, format!("unknown link `{link}`")))?;
        if ch >= instance.channels() {
            return Err(syntax(n, format!("channel {ch} out of range")));
        }
        if slot >= instance.duty_cycle() {
            return Err(syntax(n, format!("slot {slot} out of range")));
        }
        quality.set(l, ch, slot, q)?;
    }
    Ok(InstanceDocument { instance, quality, params })
}

fn once(seen: &mut Vec<String>, key: &str, line: usize) -> Result<(), ParseError> {
    if seen.iter().any(|k| k == key) {
        return Err(syntax(line, format!("duplicate `{key}`")));
    }
    seen.push(key.to_string());
    Ok(())
}

fn parse_path(n: usize, f: &[&str]) -> Result<PathSpec, ParseError> {
    const USAGE: &str = "expected `path ID source NODE links L1,L2,... gen G deadline DL`";
    if f.len() != 10 || f[2] != "source" || f[4] != "links" || f[6] != "gen" || f[8] != "deadline" {
        return Err(syntax(n, USAGE));
    }
    let links: Vec<String> = f[5].split(',').map(str::to_string).collect();
    if links.iter().any(String::is_empty) {
        return Err(syntax(n, "empty link id in path"));
    }
    Ok(PathSpec {
        id: f[1].into(),
        source: f[3].into(),
        links,
        gen_slot: num(n, "gen", f[7])?,
        deadline: num(n, "deadline", f[9])?,
    })
}

/// Canonical text form. Only cells that differ from the fill value get a
/// `quality` line.
pub fn serialize_instance(doc: &InstanceDocument) -> String {
    let (inst, p) = (&doc.instance, &doc.params);
    let mut s = String::new();
    let _ = writeln!(s, "duty_cycle {}", inst.duty_cycle());
    let _ = writeln!(s, "channels {}", inst.channels());
    let _ = writeln!(s, "alpha {}", p.alpha);
    match p.t_q {
        Threshold::Auto => s.push_str("t_q auto\n"),
        Threshold::Fixed(t) => {
            let _ = writeln!(s, "t_q {t}");
        }
    }
    let _ = writeln!(s, "max_backups {}", p.max_backups_per_link);
    let _ = writeln!(s, "conflict_rule {}", p.conflict_rule.as_str());
    if inst.horizon_is_explicit() {
        let _ = writeln!(s, "horizon {}", inst.horizon());
    }
    for node in inst.nodes() {
        let _ = writeln!(s, "node {node}");
    }
    let _ = writeln!(s, "sink {}", inst.sink());
    for l in inst.links() {
        let _ = writeln!(s, "link {} {} {}", l.id, l.src, l.dst);
    }
    for (a, b) in inst.extra_conflicts() {
        let _ = writeln!(s, "conflict {a} {b}");
    }
    for path in inst.paths() {
        let _ = writeln!(
            s,
            "path {} source {} links {} gen {} deadline {}",
            path.id,
            path.source,
            path.links.join(","),
            path.gen_slot,
            path.deadline
        );
    }
    let fill = doc.quality.default_fill();
    let _ = writeln!(s, "quality_default {fill}");
    s.push_str(&quality_lines(inst, doc.quality.iter().filter(|c| c.3 != fill)));
    s
}

/// `quality LINK CH SLOT Q` lines for the given cells.
pub fn quality_lines(instance: &Instance, cells: impl IntoIterator<Item = (usize, u32, u32, f64)>) -> String {
    let mut s = String::new();
    for (l, ch, slot, q) in cells {
        let _ = writeln!(s, "quality {} {ch} {slot} {q}", instance.links()[l].id);
    }
    s
}

pub const SCHEDULE_HEADER: &str = "link,slot,channel,kind,path,hop";

pub fn write_schedule_csv(schedule: &Schedule, instance: &Instance) -> String {
    let mut s = format!("{SCHEDULE_HEADER}\n");
    for e in schedule.entries() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            instance.links()[e.link].id,
            e.slot,
            e.channel,
            e.kind.as_str(),
            instance.paths()[e.path].id,
            e.hop
        );
    }
    s
}

pub fn parse_schedule_csv(text: &str, instance: &Instance) -> Result<Schedule, ParseError> {
    let mut rows = lines(text);
    match rows.next() {
        Some((_, h)) if h == SCHEDULE_HEADER => {}
        Some((n, _)) => return Err(syntax(n, format!("expected header `{SCHEDULE_HEADER}`"))),
        None => return Err(ParseError::Missing(SCHEDULE_HEADER)),
    }
    let mut entries = Vec::new();
    for (n, row) in rows {
        let f: Vec<&str> = row.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(syntax(n, format!("expected 6 fields, got {}", f.len())));
        }
        let link = instance
            .link_index(f[0])
            .ok_or_else(|| syntax(n, format!("unknown link `{}`", f[0])))?;
        let kind = match f[3] {
            "primary" => EntryKind::Primary,
            "backup" => EntryKind::Backup,
            k => return Err(syntax(n, format!("unknown kind `{k}`"))),
        };
        let path = instance
            .path_index(f[4])
            .ok_or_else(|| syntax(n, format!("unknown path `{}`", f[4])))?;
        entries.push(Entry {
            path,
            hop: num(n, "hop", f[5])?,
            link,
            slot: num(n, "slot", f[1])?,
            channel: num(n, "channel", f[2])?,
            kind,
        });
    }
    Ok(Schedule::new(entries, instance))
}

pub fn write_infeasibility_csv(report: &InfeasibilityReport) -> String {
    let mut s = String::from("path,hop,link,reason\n");
    for h in &report.hops {
        let hop = h.hop.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{hop},{},{}",
            h.path,
            h.link.as_deref().unwrap_or(""),
            h.reason.as_str()
        );
    }
    s
}

pub fn write_report_csv(report: &SimReport) -> String {
    let mut s = String::from("path,pdr,mean_tx,mean_retx,miss_frac\n");
    for p in &report.paths {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{:.6}",
            p.path,
            p.pdr(),
            p.mean_transmissions(),
            p.mean_retransmissions(),
            p.miss_fraction()
        );
    }
    let _ = writeln!(
        s,
        "TOTAL,{:.6},{},{},{}",
        report.utilization, report.total_transmissions, report.total_retransmissions, report.trials
    );
    s
}

pub fn write_sweep_csv(rows: &[(u32, f64)]) -> String {
    let mut s = String::from("channels,insufficient_rate\n");
    for (c, r) in rows {
        let _ = writeln!(s, "{c},{r:.6}");
    }
    s
}

/// One trace per line: `link,channel,slot,r0;r1;...`.
pub fn parse_traces(text: &str) -> Result<Vec<RssiTrace>, ParseError> {
    let mut out = Vec::new();
    for (n, row) in lines(text) {
        let f: Vec<&str> = row.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(syntax(n, format!("expected 4 fields, got {}", f.len())));
        }
        let rssi = f[3]
            .split(';')
            .map(|r| num::<i32>(n, "rssi", r.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let trace = RssiTrace {
            packet: out.len(),
            link: f[0].to_string(),
            channel: num(n, "channel", f[1])?,
            slot: num(n, "slot", f[2])?,
            rssi,
        };
        trace.validate().map_err(|e| syntax(n, e.to_string()))?;
        out.push(trace);
    }
    Ok(out)
}

/// One point per line: `distance_dBm error_rate`.
pub fn parse_curve(text: &str) -> Result<BerCurve, ParseError> {
    let mut points = Vec::new();
    for (n, row) in lines(text) {
        let f: Vec<&str> = row.split_whitespace().collect();
        if f.len() != 2 {
            return Err(syntax(n, format!("expected 2 fields, got {}", f.len())));
        }
        points.push((num(n, "distance", f[0])?, num(n, "error rate", f[1])?));
    }
    Ok(BerCurve::new(points)?)
}
