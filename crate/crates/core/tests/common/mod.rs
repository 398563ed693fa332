#![allow(dead_code)]

use std::path::PathBuf;

use laca_core::allocator::{EntryKind, Schedule};
use laca_core::io::{parse_instance, InstanceDocument};
use laca_core::linkquality::QualityMap;
use laca_core::model::Instance;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load_fixture(name: &str) -> InstanceDocument {
    parse_instance(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Result of walking every success/failure branch of one path.
pub struct Enumeration {
    pub on_time: f64,
    /// Most attempts made along any branch.
    pub max_attempts: usize,
    pub leaves: usize,
}

/// Probability of on-time delivery, by expanding every outcome sequence.
///
/// A hop's first attempt waits for its primary cell. After a loss the
/// packet takes whichever of the hop's cells comes up next. An attempt
/// later than the deadline is never made.
pub fn enumerate_outcomes(
    instance: &Instance,
    schedule: &Schedule,
    quality: &QualityMap,
    path: usize,
) -> Enumeration {
    let spec = &instance.paths()[path];
    let w = instance.duty_cycle();
    let hops: Vec<Vec<(u32, f64, bool)>> = (0..spec.len())
        .map(|h| {
            schedule
                .entries()
                .iter()
                .filter(|e| e.path == path && e.hop == h)
                .map(|e| (e.slot, quality.get(e.link, e.channel, e.slot), e.kind == EntryKind::Primary))
                .collect()
        })
        .collect();

    fn next(cells: &[(u32, f64, bool)], w: u32, from: u32, primary_only: bool) -> Option<(u32, f64)> {
        cells
            .iter()
            .filter(|c| !primary_only || c.2)
            .map(|&(slot, q, _)| {
                let wait = (slot + w - from % w) % w;
                (from + wait, q)
            })
            .min_by_key(|&(t, _)| t)
    }

    struct Walk<'a> {
        hops: &'a [Vec<(u32, f64, bool)>],
        w: u32,
        deadline: u32,
        out: Enumeration,
    }

    impl Walk<'_> {
        fn go(&mut self, hop: usize, ready: u32, retry: bool, mass: f64, attempts: usize) {
            if hop == self.hops.len() {
                self.out.on_time += mass;
                self.out.leaves += 1;
                self.out.max_attempts = self.out.max_attempts.max(attempts);
                return;
            }
            let Some((t, q)) = next(&self.hops[hop], self.w, ready, !retry) else {
                self.out.leaves += 1;
                return;
            };
            if t > self.deadline {
                self.out.leaves += 1;
                self.out.max_attempts = self.out.max_attempts.max(attempts);
                return;
            }
            if q > 0.0 {
                self.go(hop + 1, t + 1, false, mass * q, attempts + 1);
            }
            if q < 1.0 {
                self.go(hop, t + 1, true, mass * (1.0 - q), attempts + 1);
            }
        }
    }

    let mut walk = Walk {
        hops: &hops,
        w,
        deadline: spec.deadline_slot(),
        out: Enumeration { on_time: 0.0, max_attempts: 0, leaves: 0 },
    };
    walk.go(0, spec.gen_slot, false, 1.0, 0);
    walk.out
}
