//! # laca-core
//!
//! Deadline-driven multichannel TDMA scheduling for body-sensor-style
//! networks with lossy links.
//!
//! This crate provides:
//! - Network instances, conflict graphs and path prioritization ([`model`])
//! - RSSI-trace based link quality estimation ([`linkquality`])
//! - The link-quality-aware allocator with backup slots, the urgent-first
//!   baseline and a schedule verifier ([`allocator`])
//! - Monte Carlo execution of schedules over lossy links, plus a random
//!   instance generator ([`simulator`])
//! - Exact ground-truth engines for small instances ([`oracle`])
//! - File formats and the command line front end ([`io`], [`cli`])

pub mod allocator;
pub mod cli;
pub mod io;
pub mod linkquality;
pub mod model;
pub mod oracle;
pub mod simulator;

pub use allocator::{
    allocate_laca, allocate_urgent_first, assign_backups, verify_schedule, AllocParams, Entry,
    EntryKind, InfeasibilityReport, Schedule, Threshold,
};
pub use linkquality::{BerCurve, QualityMap, RssiTrace};
pub use model::{ConflictGraph, ConflictRule, Instance, LinkSpec, PathPriority, PathSpec};
pub use simulator::{simulate, SimParams, SimReport};
