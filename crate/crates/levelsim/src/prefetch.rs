//! Tagged next-line prefetchers for L1/L2 and a delta-correlating prefetcher
//! for L3, with MSHR-reservation and accuracy-epoch throttling.

use crate::mem::{BlockAddr, Hierarchy, MemLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefetcherId {
    L1Next,
    L2Next,
    L3Dcpt,
}

impl PrefetcherId {
    pub const ALL: [PrefetcherId; 3] =
        [PrefetcherId::L1Next, PrefetcherId::L2Next, PrefetcherId::L3Dcpt];

    pub fn idx(self) -> usize {
        match self {
            PrefetcherId::L1Next => 0,
            PrefetcherId::L2Next => 1,
            PrefetcherId::L3Dcpt => 2,
        }
    }

    pub fn level(self) -> MemLevel {
        match self {
            PrefetcherId::L1Next => MemLevel::L1,
            PrefetcherId::L2Next => MemLevel::L2,
            PrefetcherId::L3Dcpt => MemLevel::L3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Miss,
    TaggedFirstHit,
}

/// Tagged next-line prefetcher: proposes block+1 .. block+degree on a miss or
/// on the first demand touch of a previously prefetched line.
#[derive(Debug, Clone)]
pub struct NextLinePrefetcher {
    pub level: MemLevel,
    pub degree: u32,
}

impl NextLinePrefetcher {
    pub fn new(level: MemLevel, degree: u32) -> Self {
        NextLinePrefetcher { level, degree }
    }

    pub fn propose(&self, hier: &Hierarchy, block: BlockAddr, _trigger: Trigger) -> Vec<BlockAddr> {
        let idx = self.level.cache_idx();
        (1..=self.degree as i64)
            .filter_map(|d| block.offset(d))
            .filter(|&b| !hier.cache(self.level).contains(b) && !hier.mshr[idx].has(b))
            .collect()
    }
}

const DELTA_BUFFER: usize = 16;

#[derive(Debug, Clone)]
struct DcptEntry {
    pc: u64,
    last_addr: BlockAddr,
    deltas: Vec<i64>,
    last_prefetch: BlockAddr,
}

/// Delta-correlating prediction-table prefetcher (L3). Each PC keeps a buffer
/// of recent block-granular deltas; a repeat of the last delta pair replays
/// the deltas that followed its earlier occurrence.
#[derive(Debug, Clone)]
pub struct DcptPrefetcher {
    entries: Vec<Option<DcptEntry>>,
    pub degree: u32,
}

impl DcptPrefetcher {
    pub fn new(table_entries: usize, degree: u32) -> Self {
        DcptPrefetcher {
            entries: vec![None; table_entries],
            degree,
        }
    }

    /// Records the access and returns prefetch candidates. Events without a
    /// pc never reach this point.
    pub fn observe(&mut self, pc: u64, block: BlockAddr) -> Vec<BlockAddr> {
        let slot = (pc % self.entries.len() as u64) as usize;
        let entry = match &mut self.entries[slot] {
            Some(e) if e.pc == pc => e,
            e => {
                *e = Some(DcptEntry {
                    pc,
                    last_addr: block,
                    deltas: Vec::new(),
                    last_prefetch: block,
                });
                return Vec::new();
            }
        };
        let delta = block.0 as i64 - entry.last_addr.0 as i64;
        entry.last_addr = block;
        entry.deltas.push(delta);
        if entry.deltas.len() > DELTA_BUFFER {
            entry.deltas.remove(0);
        }
        let n = entry.deltas.len();
        if n < 3 {
            return Vec::new();
        }
        let pair = (entry.deltas[n - 2], entry.deltas[n - 1]);
        // Most recent earlier occurrence of the final delta pair.
        let mut matched = None;
        for j in (1..n - 1).rev() {
            if (entry.deltas[j - 1], entry.deltas[j]) == pair {
                matched = Some(j);
                break;
            }
        }
        let Some(j) = matched else {
            return Vec::new();
        };
        // Replay the deltas that followed the match, cycling if the pattern
        // is shorter than the prefetch degree.
        let replay: Vec<i64> = entry.deltas[j + 1..].to_vec();
        let mut out = Vec::new();
        let mut addr = block;
        let mut k = 0usize;
        while out.len() < self.degree as usize && !replay.is_empty() {
            let Some(next) = addr.offset(replay[k % replay.len()]) else {
                break;
            };
            addr = next;
            if addr > entry.last_prefetch {
                out.push(addr);
            }
            k += 1;
            if k > 4 * self.degree as usize {
                break; // degenerate zero/negative patterns
            }
        }
        if let Some(&max) = out.iter().max() {
            entry.last_prefetch = max;
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct PrefetcherCounters {
    pub issued: u64,
    pub useful: u64,
    pub enabled: bool,
    evaluated_this_epoch: bool,
}

/// Accuracy-epoch throttling: prefetchers run and are measured for the first
/// `sample_len` accesses of each epoch; at the sample boundary a prefetcher
/// stays enabled only while its measured accuracy is at or above the
/// threshold. Counters reset at epoch boundaries.
#[derive(Debug, Clone)]
pub struct ThrottleState {
    pub epoch_len: u64,
    pub sample_len: u64,
    threshold_ppm: u64,
    counters: [PrefetcherCounters; 3],
    current_epoch: u64,
}

impl ThrottleState {
    pub fn new(epoch_len: u64, sample_len: u64, accuracy_threshold: f64) -> Self {
        let mut counters: [PrefetcherCounters; 3] = Default::default();
        for c in &mut counters {
            c.enabled = true;
        }
        ThrottleState {
            epoch_len,
            sample_len,
            threshold_ppm: (accuracy_threshold * 1_000_000.0).round() as u64,
            counters,
            current_epoch: 0,
        }
    }

    fn roll(&mut self, global_access_count: u64) {
        let epoch = global_access_count / self.epoch_len;
        if epoch != self.current_epoch {
            self.current_epoch = epoch;
            for c in &mut self.counters {
                c.issued = 0;
                c.useful = 0;
                c.evaluated_this_epoch = false;
            }
        }
        let pos = global_access_count % self.epoch_len;
        if pos >= self.sample_len {
            for c in &mut self.counters {
                if !c.evaluated_this_epoch {
                    c.evaluated_this_epoch = true;
                    // issued = 0 keeps the prefetcher enabled; ties (exactly
                    // at threshold) stay enabled.
                    c.enabled = c.issued == 0
                        || c.useful as u128 * 1_000_000 >= self.threshold_ppm as u128 * c.issued as u128;
                }
            }
        }
    }

    pub fn gate(&mut self, id: PrefetcherId, global_access_count: u64) -> bool {
        self.roll(global_access_count);
        let pos = global_access_count % self.epoch_len;
        if pos < self.sample_len {
            true
        } else {
            self.counters[id.idx()].enabled
        }
    }

    pub fn record_issued(&mut self, id: PrefetcherId) {
        self.counters[id.idx()].issued += 1;
    }

    pub fn record_useful(&mut self, id: PrefetcherId) {
        self.counters[id.idx()].useful += 1;
    }

    pub fn counters(&self, id: PrefetcherId) -> &PrefetcherCounters {
        &self.counters[id.idx()]
    }
}
