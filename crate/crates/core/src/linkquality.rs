//! Link quality estimation from in-packet, byte-level RSSI traces.
//!
//! The weakest byte of a packet sets the RSSI base. Every byte's distance
//! above that base is turned into a byte error rate through a [`BerCurve`],
//! and the packet success probability is the product of the per-byte
//! survival probabilities.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::Instance;

#[derive(Debug, Error, PartialEq)]
pub enum LinkQualityError {
    #[error("RSSI trace is empty")]
    EmptyTrace,
    #[error("RSSI value {0} dBm outside [-127, 0]")]
    RssiOutOfRange(i32),
    #[error("negative RSSI distance {0}")]
    NegativeDistance(i32),
    #[error("invalid BER curve: {0}")]
    InvalidCurve(String),
    #[error("byte error rate {0} outside [0, 1]")]
    InvalidErrorRate(f64),
    #[error("quality {0} outside [0, 1]")]
    InvalidQuality(f64),
    #[error("trace {packet}: unknown link `{link}`")]
    UnknownLink { packet: usize, link: String },
    #[error("trace {packet}: channel {channel} out of range")]
    ChannelOutOfRange { packet: usize, channel: u32 },
    #[error("trace {packet}: slot {slot} out of range")]
    SlotOutOfRange { packet: usize, slot: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RssiTrace {
    pub packet: usize,
    pub link: String,
    pub channel: u32,
    pub slot: u32,
    /// Per-byte RSSI in dBm.
    pub rssi: Vec<i32>,
}

impl RssiTrace {
    pub fn validate(&self) -> Result<(), LinkQualityError> {
        if self.rssi.is_empty() {
            return Err(LinkQualityError::EmptyTrace);
        }
        if let Some(&r) = self.rssi.iter().find(|r| !(-127..=0).contains(*r)) {
            return Err(LinkQualityError::RssiOutOfRange(r));
        }
        Ok(())
    }
}

/// Byte error rate as a function of RSSI distance from the packet's base.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    points: Vec<(u32, f64)>,
}

/// RSSI distance (dBm) from which the byte error rate must stay at or above
/// [`HIGH_ERROR_FLOOR`].
pub const HIGH_ERROR_DISTANCE: u32 = 5;
pub const HIGH_ERROR_FLOOR: f64 = 0.9;

impl BerCurve {
    pub fn new(points: Vec<(u32, f64)>) -> Result<Self, LinkQualityError> {
        if points.is_empty() {
            return Err(LinkQualityError::InvalidCurve("no breakpoints".into()));
        }
        for &(d, r) in &points {
            if !(0.0..=1.0).contains(&r) {
                return Err(LinkQualityError::InvalidCurve(format!(
                    "rate {r} at {d} dBm outside [0, 1]"
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(LinkQualityError::InvalidCurve(
                    "distances must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(LinkQualityError::InvalidCurve(
                    "error rate must be non-decreasing in distance".into(),
                ));
            }
        }
        let curve = Self { points };
        // Monotone, so checking the threshold distance covers everything beyond.
        if curve.rate_at(HIGH_ERROR_DISTANCE) < HIGH_ERROR_FLOOR {
            return Err(LinkQualityError::InvalidCurve(format!(
                "rate at {HIGH_ERROR_DISTANCE} dBm and beyond must be at least {HIGH_ERROR_FLOOR}"
            )));
        }
        Ok(curve)
    }

    /// Shipped placeholder curve. Rises steeply towards 5 dBm and saturates.
    pub fn default_curve() -> Self {
        Self::new(vec![
            (0, 0.0),
            (1, 0.02),
            (2, 0.08),
            (3, 0.25),
            (4, 0.6),
            (5, 0.9),
            (8, 0.97),
            (12, 1.0),
        ])
        .expect("default curve is valid")
    }

    pub fn points(&self) -> &[(u32, f64)] {
        &self.points
    }

    fn rate_at(&self, d: u32) -> f64 {
        let p = &self.points;
        if d <= p[0].0 {
            return p[0].1;
        }
        let last = p[p.len() - 1];
        if d >= last.0 {
            return last.1;
        }
        let k = p.partition_point(|&(x, _)| x <= d);
        let (x0, y0) = p[k - 1];
        let (x1, y1) = p[k];
        y0 + (y1 - y0) * f64::from(d - x0) / f64::from(x1 - x0)
    }
}

/// The weakest byte's RSSI.
pub fn rssi_base(trace: &RssiTrace) -> Result<i32, LinkQualityError> {
    trace
        .rssi
        .iter()
        .copied()
        .min()
        .ok_or(LinkQualityError::EmptyTrace)
}

/// Piecewise-linear lookup, clamped to the end breakpoints.
pub fn byte_error_rate(rssi_distance: i32, curve: &BerCurve) -> Result<f64, LinkQualityError> {
    if rssi_distance < 0 {
        return Err(LinkQualityError::NegativeDistance(rssi_distance));
    }
    Ok(curve.rate_at(rssi_distance as u32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ByteErrorProfile(Vec<f64>);

impl ByteErrorProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self, LinkQualityError> {
        if let Some(&b) = rates.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(LinkQualityError::InvalidErrorRate(b));
        }
        Ok(Self(rates))
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }
}

/// Probability that every byte survives.
pub fn packet_success_probability(profile: &ByteErrorProfile) -> f64 {
    profile.0.iter().map(|b| 1.0 - b).product()
}

/// Per-byte error profile of a single packet.
pub fn byte_error_profile(
    trace: &RssiTrace,
    curve: &BerCurve,
) -> Result<ByteErrorProfile, LinkQualityError> {
    trace.validate()?;
    let base = rssi_base(trace)?;
    let rates = trace
        .rssi
        .iter()
        .map(|&r| byte_error_rate(r - base, curve))
        .collect::<Result<Vec<_>, _>>()?;
    ByteErrorProfile::new(rates)
}

/// Dense success-probability table indexed by (link, channel, slot-in-cycle).
#[derive(Debug, Clone, PartialEq)]
pub struct QualityMap {
    links: usize,
    channels: u32,
    slots: u32,
    default: f64,
    cells: Vec<f64>,
}

impl QualityMap {
    pub fn new(links: usize, channels: u32, slots: u32, default: f64) -> Result<Self, LinkQualityError> {
        if !(0.0..=1.0).contains(&default) {
            return Err(LinkQualityError::InvalidQuality(default));
        }
        Ok(Self {
            links,
            channels,
            slots,
            default,
            cells: vec![default; links * channels as usize * slots as usize],
        })
    }

    /// Map sized for `instance`, filled with `default`.
    pub fn for_instance(instance: &Instance, default: f64) -> Result<Self, LinkQualityError> {
        Self::new(
            instance.links().len(),
            instance.channels(),
            instance.duty_cycle(),
            default,
        )
    }

    pub fn dims(&self) -> (usize, u32, u32) {
        (self.links, self.channels, self.slots)
    }

    pub fn default_fill(&self) -> f64 {
        self.default
    }

    /// Whether the map covers exactly the instance's (links, C, W) grid.
    pub fn matches(&self, instance: &Instance) -> bool {
        self.dims() == (instance.links().len(), instance.channels(), instance.duty_cycle())
    }

    fn offset(&self, link: usize, channel: u32, slot: u32) -> usize {
        assert!(
            link < self.links && channel < self.channels && slot < self.slots,
            "quality cell ({link}, {channel}, {slot}) outside {:?}",
            self.dims()
        );
        (link * self.channels as usize + channel as usize) * self.slots as usize + slot as usize
    }

    pub fn get(&self, link: usize, channel: u32, slot: u32) -> f64 {
        self.cells[self.offset(link, channel, slot)]
    }

    pub fn set(&mut self, link: usize, channel: u32, slot: u32, q: f64) -> Result<(), LinkQualityError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(LinkQualityError::InvalidQuality(q));
        }
        let o = self.offset(link, channel, slot);
        self.cells[o] = q;
        Ok(())
    }

    /// Arithmetic mean over every cell.
    pub fn mean(&self) -> f64 {
        if self.cells.is_empty() {
            return self.default;
        }
        self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }

    /// Cells, as `(link, channel, slot, q)`, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, u32, f64)> + '_ {
        let (c, w) = (self.channels as usize, self.slots as usize);
        self.cells.iter().enumerate().map(move |(i, &q)| {
            let slot = (i % w) as u32;
            let channel = ((i / w) % c) as u32;
            (i / (w * c), channel, slot, q)
        })
    }
}

/// `(link, channel, slot)`.
pub type Cell = (usize, u32, u32);

/// Builds a quality map from traces. Cells observed several times take the
/// mean packet success probability; unobserved cells keep `default_fill`.
/// Also returns which cells were observed.
pub fn estimate_quality_map(
    traces: &[RssiTrace],
    curve: &BerCurve,
    instance: &Instance,
    default_fill: f64,
) -> Result<(QualityMap, Vec<Cell>), LinkQualityError> {
    let mut map = QualityMap::for_instance(instance, default_fill)?;
    // Sum and count per cell; both commute, so trace order does not matter
    // beyond floating point rounding.
    let mut acc: BTreeMap<(usize, u32, u32), (f64, usize)> = BTreeMap::new();
    for t in traces {
        let link = instance
            .link_index(&t.link)
            .ok_or_else(|| LinkQualityError::UnknownLink {
                packet: t.packet,
                link: t.link.clone(),
            })?;
        if t.channel >= instance.channels() {
            return Err(LinkQualityError::ChannelOutOfRange {
                packet: t.packet,
                channel: t.channel,
            });
        }
        if t.slot >= instance.duty_cycle() {
            return Err(LinkQualityError::SlotOutOfRange {
                packet: t.packet,
                slot: t.slot,
            });
        }
        let q = packet_success_probability(&byte_error_profile(t, curve)?);
        let e = acc.entry((link, t.channel, t.slot)).or_insert((0.0, 0));
        e.0 += q;
        e.1 += 1;
    }
    let mut observed = Vec::with_capacity(acc.len());
    for (&(l, c, s), &(sum, n)) in &acc {
        map.set(l, c, s, (sum / n as f64).clamp(0.0, 1.0))?;
        observed.push((l, c, s));
    }
    Ok((map, observed))
}
