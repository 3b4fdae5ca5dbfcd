//! Cache-level predictor: the LocMap flat table in simulated reserved memory,
//! a small per-core metadata cache over it, and the Popular Levels Detector
//! used as the fallback on metadata misses.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::mem::{BlockAddr, CacheConfig, MemLevel, SetAssocCache, BLOCK_BYTES};
use crate::metrics::EnergyCounters;

/// Levels a prediction may name. L1 is never a target: the predictor only
/// runs on L1 misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PredictTarget {
    L2,
    L3,
    Mem,
}

impl PredictTarget {
    pub const ALL: [PredictTarget; 3] = [PredictTarget::L2, PredictTarget::L3, PredictTarget::Mem];

    pub fn to_level(self) -> MemLevel {
        match self {
            PredictTarget::L2 => MemLevel::L2,
            PredictTarget::L3 => MemLevel::L3,
            PredictTarget::Mem => MemLevel::Mem,
        }
    }

    pub fn from_level(level: MemLevel) -> Option<PredictTarget> {
        match level {
            MemLevel::L1 => None,
            MemLevel::L2 => Some(PredictTarget::L2),
            MemLevel::L3 => Some(PredictTarget::L3),
            MemLevel::Mem => Some(PredictTarget::Mem),
        }
    }

    fn idx(self) -> usize {
        match self {
            PredictTarget::L2 => 0,
            PredictTarget::L3 => 1,
            PredictTarget::Mem => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionSource {
    LocMap,
    Pld,
    Tage,
    Oracle,
}

/// What the predictor said: a non-empty, shallow-first ordered set of targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub targets: Vec<PredictTarget>,
    pub source: PredictionSource,
}

impl Prediction {
    pub fn single(target: PredictTarget, source: PredictionSource) -> Self {
        Prediction {
            targets: vec![target],
            source,
        }
    }

    pub fn is_multiway(&self) -> bool {
        self.targets.len() > 1
    }

    pub fn contains(&self, target: PredictTarget) -> bool {
        self.targets.contains(&target)
    }

    pub fn sequential(&self) -> bool {
        self.targets == [PredictTarget::L2]
    }
}

/// Threshold fractions are compared in integer arithmetic (parts per million)
/// so that scaling all counters by a common factor never flips a decision.
fn threshold_ppm(fraction: f64) -> u64 {
    (fraction * 1_000_000.0).round() as u64
}

/// Popular-levels selection shared by the PLD and the TAGE comparator.
/// Sorts the three per-level counts and widens the target set until the
/// covered mass passes the thresholds; ties break toward the shallower level.
pub fn popular_levels(counts: [u64; 3], theta_single: f64, theta_double: f64) -> Vec<PredictTarget> {
    let sum: u64 = counts.iter().sum();
    if sum == 0 {
        return vec![PredictTarget::L2];
    }
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let c1 = counts[order[0]];
    let c2 = counts[order[1]];
    let single = threshold_ppm(theta_single);
    let double = threshold_ppm(theta_double);
    if (c1 as u128) * 1_000_000 >= (single as u128) * (sum as u128) {
        vec![PredictTarget::ALL[order[0]]]
    } else if ((c1 + c2) as u128) * 1_000_000 >= (double as u128) * (sum as u128) {
        let mut t = vec![PredictTarget::ALL[order[0]], PredictTarget::ALL[order[1]]];
        t.sort();
        t
    } else {
        vec![PredictTarget::L2, PredictTarget::L3, PredictTarget::Mem]
    }
}

/// Three saturating counters tracking which level recently served accesses.
#[derive(Debug, Clone)]
pub struct PldCounters {
    counts: [u32; 3],
    pub theta_single: f64,
    pub theta_double: f64,
}

impl PldCounters {
    pub fn new(theta_single: f64, theta_double: f64) -> Self {
        PldCounters {
            counts: [0; 3],
            theta_single,
            theta_double,
        }
    }

    pub fn counts(&self) -> [u32; 3] {
        self.counts
    }

    /// Saturating +1 on the resolved level, floored -1 on the other two.
    pub fn update(&mut self, resolved: PredictTarget) {
        for t in PredictTarget::ALL {
            let c = &mut self.counts[t.idx()];
            if t == resolved {
                *c = c.saturating_add(1);
            } else {
                *c = c.saturating_sub(1);
            }
        }
    }

    pub fn predict(&self) -> Vec<PredictTarget> {
        popular_levels(
            self.counts.map(|c| c as u64),
            self.theta_single,
            self.theta_double,
        )
    }
}

/// 2-bit level codes: 0 -> MEM, 1 -> L2, 2 -> L3, 3 reserved (decodes MEM).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelCode(pub u8);

impl LevelCode {
    pub fn encode(target: PredictTarget) -> LevelCode {
        match target {
            PredictTarget::Mem => LevelCode(0),
            PredictTarget::L2 => LevelCode(1),
            PredictTarget::L3 => LevelCode(2),
        }
    }

    pub fn decode(self) -> PredictTarget {
        match self.0 & 0b11 {
            1 => PredictTarget::L2,
            2 => PredictTarget::L3,
            _ => PredictTarget::Mem,
        }
    }
}

/// Bytes of LocMap line covering 256 data blocks (16 KiB of address space).
pub const LOCMAP_LINE_BYTES: usize = 64;
/// Data blocks described by one LocMap line.
pub const BLOCKS_PER_LINE: u64 = 256;

/// Flat table of 2-bit codes, one per 64-byte block of simulated physical
/// memory, living in system-reserved memory at `base_index` (in line units).
#[derive(Debug, Clone)]
pub struct LocMapTable {
    base_index: u64,
    blocks: u64,
    codes: Vec<u8>, // packed, 4 codes per byte
}

impl LocMapTable {
    pub fn new(phys_bytes: u64, base_index: u64) -> Self {
        let blocks = phys_bytes / BLOCK_BYTES;
        let bytes = (blocks as usize + 3) / 4;
        // Pad to a whole number of 64-byte lines.
        let bytes = (bytes + LOCMAP_LINE_BYTES - 1) / LOCMAP_LINE_BYTES * LOCMAP_LINE_BYTES;
        LocMapTable {
            base_index,
            blocks,
            codes: vec![0; bytes.max(LOCMAP_LINE_BYTES)],
        }
    }

    pub fn blocks(&self) -> u64 {
        self.blocks
    }

    /// Total metadata bits: exactly 2 per block.
    pub fn storage_bits(&self) -> u64 {
        2 * self.blocks
    }

    /// Metadata overhead relative to the covered physical memory: 2/512.
    pub fn overhead_ratio(&self) -> f64 {
        self.storage_bits() as f64 / (self.blocks as f64 * BLOCK_BYTES as f64 * 8.0)
    }

    /// LocMap address arithmetic: the covering table line is the block's
    /// physical address shifted by 14 (16 KiB of data per 64B metadata line),
    /// and the bit offset is 2 bits per block within the line.
    pub fn locmap_index(&self, block: BlockAddr) -> (u64, u64) {
        let table_block = self.base_index + (block.base_addr() >> 14);
        let bit_offset = 2 * (block.0 % BLOCKS_PER_LINE);
        (table_block, bit_offset)
    }

    pub fn covers(&self, block: BlockAddr) -> bool {
        block.0 < self.blocks
    }

    pub fn code_of(&self, block: BlockAddr) -> LevelCode {
        let idx = (block.0 / 4) as usize;
        let shift = (block.0 % 4) * 2;
        LevelCode((self.codes[idx] >> shift) & 0b11)
    }

    pub fn set_code(&mut self, block: BlockAddr, code: LevelCode) {
        let idx = (block.0 / 4) as usize;
        let shift = (block.0 % 4) * 2;
        self.codes[idx] = (self.codes[idx] & !(0b11 << shift)) | ((code.0 & 0b11) << shift);
    }

    fn line_range(&self, table_block: u64) -> std::ops::Range<usize> {
        let start = ((table_block - self.base_index) as usize) * LOCMAP_LINE_BYTES;
        start..start + LOCMAP_LINE_BYTES
    }

    pub fn read_line(&self, table_block: u64) -> [u8; LOCMAP_LINE_BYTES] {
        let mut out = [0u8; LOCMAP_LINE_BYTES];
        out.copy_from_slice(&self.codes[self.line_range(table_block)]);
        out
    }

    pub fn write_line(&mut self, table_block: u64, data: &[u8; LOCMAP_LINE_BYTES]) {
        let range = self.line_range(table_block);
        self.codes[range].copy_from_slice(data);
    }
}

/// Reads or writes one 2-bit code inside a cached LocMap line.
fn line_code(data: &[u8; LOCMAP_LINE_BYTES], bit_offset: u64) -> LevelCode {
    let byte = (bit_offset / 8) as usize;
    let shift = bit_offset % 8;
    LevelCode((data[byte] >> shift) & 0b11)
}

fn set_line_code(data: &mut [u8; LOCMAP_LINE_BYTES], bit_offset: u64, code: LevelCode) {
    let byte = (bit_offset / 8) as usize;
    let shift = bit_offset % 8;
    data[byte] = (data[byte] & !(0b11 << shift)) | ((code.0 & 0b11) << shift);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotifyEvent {
    DemandFill,
    DirtyEviction,
    PrefetchFill,
}

#[derive(Debug, Clone)]
pub struct PredictorConfig {
    pub meta_capacity_bytes: u64,
    pub meta_assoc: u32,
    pub theta_single: f64,
    pub theta_double: f64,
    /// Cycles before a background LocMap line fetch lands in the metadata
    /// cache; 0 makes fills visible to the immediately following access.
    pub metadata_fill_latency: u64,
    /// Force prefetch-fill notifications to update the backing table even on
    /// metadata misses (staleness sensitivity knob; off matches the design).
    pub always_notify_prefetch_fills: bool,
}

#[derive(Debug, Clone)]
struct PendingFill {
    table_block: u64,
    ready: u64,
}

#[derive(Debug, Clone, Default)]
pub struct PredictorStats {
    pub predicts: u64,
    pub meta_hits: u64,
    pub pld_predicts: u64,
    pub dropped_prefetch_notifies: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictOutput {
    pub meta_hit: bool,
    /// Predictor pipeline latency in cycles.
    pub latency: u64,
}

/// The full level predictor owned by one simulated core.
#[derive(Debug, Clone)]
pub struct LevelPredictor {
    cfg: PredictorConfig,
    locmap: LocMapTable,
    meta: SetAssocCache<[u8; LOCMAP_LINE_BYTES]>,
    pub pld: PldCounters,
    pending: VecDeque<PendingFill>,
    pub stats: PredictorStats,
}

impl LevelPredictor {
    pub fn new(phys_bytes: u64, locmap_base: u64, cfg: PredictorConfig) -> Self {
        let meta_cfg = CacheConfig {
            capacity_bytes: cfg.meta_capacity_bytes,
            associativity: cfg.meta_assoc,
            block_bytes: LOCMAP_LINE_BYTES as u64,
            tag_latency: 1,
            data_latency: 1,
            sequential_tag_data: false,
            ports: 1,
            mshr_entries: 1,
            inclusive_of_upper: false,
        };
        LevelPredictor {
            pld: PldCounters::new(cfg.theta_single, cfg.theta_double),
            meta: SetAssocCache::new(&meta_cfg),
            locmap: LocMapTable::new(phys_bytes, locmap_base),
            pending: VecDeque::new(),
            stats: PredictorStats::default(),
            cfg,
        }
    }

    pub fn locmap(&self) -> &LocMapTable {
        &self.locmap
    }

    /// Installs background line fetches whose latency has elapsed.
    fn drain_pending(&mut self, now: u64, energy: &mut EnergyCounters) {
        while let Some(front) = self.pending.front() {
            if front.ready > now {
                break;
            }
            let fill = self.pending.pop_front().unwrap();
            let data = self.locmap.read_line(fill.table_block);
            energy.locmap_fills += 1;
            if let Some(victim) = self.meta.fill(BlockAddr(fill.table_block), false, false, data) {
                if victim.dirty {
                    // Write-back of a modified metadata line into the table.
                    self.locmap.write_line(victim.block.0, &victim.payload);
                    energy.locmap_fills += 1;
                }
            }
        }
    }

    /// Level prediction for an L1 miss. A metadata hit returns the decoded
    /// LocMap code; a miss falls back to the PLD and starts a background
    /// fetch of the covering LocMap line.
    pub fn predict(
        &mut self,
        block: BlockAddr,
        now: u64,
        energy: &mut EnergyCounters,
    ) -> (Prediction, PredictOutput) {
        self.drain_pending(now, energy);
        self.stats.predicts += 1;
        energy.meta_accesses += 1;
        let (table_block, bit_offset) = self.locmap.locmap_index(block);
        let res = self.meta.lookup(BlockAddr(table_block), true);
        if res.hit {
            self.stats.meta_hits += 1;
            let code = line_code(
                self.meta
                    .payload(BlockAddr(table_block))
                    .expect("hit line present"),
                bit_offset,
            );
            (
                Prediction::single(code.decode(), PredictionSource::LocMap),
                PredictOutput {
                    meta_hit: true,
                    latency: 1,
                },
            )
        } else {
            self.stats.pld_predicts += 1;
            energy.pld_accesses += 1;
            if !self.pending.iter().any(|p| p.table_block == table_block) {
                self.pending.push_back(PendingFill {
                    table_block,
                    ready: now + self.cfg.metadata_fill_latency,
                });
            }
            (
                Prediction {
                    targets: self.pld.predict(),
                    source: PredictionSource::Pld,
                },
                PredictOutput {
                    meta_hit: false,
                    latency: 1,
                },
            )
        }
    }

    /// Cache-event notification. Demand fills and dirty evictions always land
    /// in the LocMap; prefetch fills land only when the covering line is a
    /// metadata cache hit (misses are dropped, so codes may go stale).
    pub fn notify(
        &mut self,
        event: NotifyEvent,
        level: MemLevel,
        block: BlockAddr,
        now: u64,
        energy: &mut EnergyCounters,
    ) {
        if !self.locmap.covers(block) {
            return;
        }
        self.drain_pending(now, energy);
        let target = PredictTarget::from_level(level).expect("L1 is not a LocMap level");
        let code = LevelCode::encode(target);
        let (table_block, bit_offset) = self.locmap.locmap_index(block);
        energy.meta_accesses += 1;
        if let Some(data) = self.meta.payload_mut(BlockAddr(table_block)) {
            set_line_code(data, bit_offset, code);
            return;
        }
        match event {
            NotifyEvent::DemandFill | NotifyEvent::DirtyEviction => {
                self.locmap.set_code(block, code);
                energy.locmap_fills += 1;
            }
            NotifyEvent::PrefetchFill => {
                if self.cfg.always_notify_prefetch_fills {
                    self.locmap.set_code(block, code);
                    energy.locmap_fills += 1;
                } else {
                    self.stats.dropped_prefetch_notifies += 1;
                }
            }
        }
    }

    /// Resolved-level feedback for the PLD, applied on every predicted access.
    pub fn pld_update(&mut self, resolved: PredictTarget) {
        self.pld.update(resolved);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn predictor() -> LevelPredictor {
        LevelPredictor::new(
            1 << 26, // 64 MiB
            0,
            PredictorConfig {
                meta_capacity_bytes: 2048,
                meta_assoc: 2,
                theta_single: 0.8,
                theta_double: 0.95,
                metadata_fill_latency: 0,
                always_notify_prefetch_fills: false,
            },
        )
    }

    #[test]
    fn locmap_index_formula() {
        let t = LocMapTable::new(1 << 26, 0);
        assert_eq!(t.locmap_index(BlockAddr::from_phys(0x0000)), (0, 0));
        // 16 KiB boundary: 0x4000 >> 14 = 1
        assert_eq!(t.locmap_index(BlockAddr::from_phys(0x4000)), (1, 0));
        // Second block in the line.
        assert_eq!(t.locmap_index(BlockAddr::from_phys(0x40)), (0, 2));
    }

    #[test]
    fn locmap_index_with_base() {
        let t = LocMapTable::new(1 << 26, 100);
        assert_eq!(t.locmap_index(BlockAddr::from_phys(0x4000)), (101, 0));
    }

    #[test]
    fn storage_identity() {
        let phys = 1u64 << 26;
        let t = LocMapTable::new(phys, 0);
        assert_eq!(t.storage_bits(), 2 * (phys / 64));
        assert_eq!(t.overhead_ratio(), 2.0 / 512.0);
    }

    #[test]
    fn code_roundtrip() {
        let mut t = LocMapTable::new(1 << 20, 0);
        t.set_code(BlockAddr(5), LevelCode::encode(PredictTarget::L3));
        assert_eq!(t.code_of(BlockAddr(5)).decode(), PredictTarget::L3);
        assert_eq!(t.code_of(BlockAddr(4)).decode(), PredictTarget::Mem);
        // Reserved encoding decodes to MEM.
        assert_eq!(LevelCode(3).decode(), PredictTarget::Mem);
    }

    #[test]
    fn pld_update_examples() {
        let mut p = PldCounters::new(0.8, 0.95);
        p.update(PredictTarget::Mem);
        assert_eq!(p.counts(), [0, 0, 1]);

        let mut p = PldCounters {
            counts: [5, 5, 5],
            ..PldCounters::new(0.8, 0.95)
        };
        p.update(PredictTarget::L2);
        assert_eq!(p.counts(), [6, 4, 4]);

        let mut p = PldCounters::new(0.8, 0.95);
        for _ in 0..10 {
            p.update(PredictTarget::L3);
        }
        assert_eq!(p.counts(), [0, 10, 0]);
    }

    #[test]
    fn pld_selection_examples() {
        // Cold start falls back to sequential.
        assert_eq!(popular_levels([0, 0, 0], 0.8, 0.95), vec![PredictTarget::L2]);
        // Strong bias -> single-way.
        assert_eq!(
            popular_levels([0, 0, 100], 0.8, 0.95),
            vec![PredictTarget::Mem]
        );
        // 40/35/25: 0.40 < 0.8 and 0.75 < 0.95 -> all three targets.
        assert_eq!(
            popular_levels([40, 35, 25], 0.8, 0.95),
            vec![PredictTarget::L2, PredictTarget::L3, PredictTarget::Mem]
        );
        // Two-way case, shallow-first ordering.
        assert_eq!(
            popular_levels([50, 5, 45], 0.8, 0.95),
            vec![PredictTarget::L2, PredictTarget::Mem]
        );
        // Tie breaks toward the shallower level.
        assert_eq!(
            popular_levels([10, 10, 0], 0.8, 0.95),
            vec![PredictTarget::L2, PredictTarget::L3]
        );
    }

    #[test]
    fn theta_extremes() {
        // theta_single = 0 -> always single-way once counters are non-zero.
        assert_eq!(popular_levels([1, 2, 3], 0.0, 1.0).len(), 1);
        // theta 1.0/1.0 with non-uniform counters covering the whole sum in
        // two entries -> at most two-way.
        assert_eq!(popular_levels([6, 4, 0], 1.0, 1.0).len(), 2);
    }

    #[test]
    fn cold_predict_uses_pld_then_locmap_after_fill() {
        let mut p = predictor();
        let mut e = EnergyCounters::default();
        let (pred, out) = p.predict(BlockAddr(0), 0, &mut e);
        assert_eq!(pred.source, PredictionSource::Pld);
        assert!(!out.meta_hit);
        // Same 16 KiB region, fill latency 0: installed for the next access.
        let (pred, out) = p.predict(BlockAddr(1), 0, &mut e);
        assert_eq!(pred.source, PredictionSource::LocMap);
        assert!(out.meta_hit);
        assert_eq!(pred.targets, vec![PredictTarget::Mem]);
    }

    #[test]
    fn metadata_fill_latency_delays_install() {
        let mut p = LevelPredictor::new(
            1 << 26,
            0,
            PredictorConfig {
                metadata_fill_latency: 100,
                ..predictor().cfg
            },
        );
        let mut e = EnergyCounters::default();
        let (_, out) = p.predict(BlockAddr(0), 0, &mut e);
        assert!(!out.meta_hit);
        let (_, out) = p.predict(BlockAddr(1), 50, &mut e);
        assert!(!out.meta_hit);
        let (_, out) = p.predict(BlockAddr(2), 100, &mut e);
        assert!(out.meta_hit);
    }

    #[test]
    fn read_your_write_on_demand_fill() {
        let mut p = predictor();
        let mut e = EnergyCounters::default();
        let b = BlockAddr(17);
        // Warm the metadata line.
        p.predict(b, 0, &mut e);
        p.notify(NotifyEvent::DemandFill, MemLevel::L2, b, 1, &mut e);
        let (pred, out) = p.predict(b, 2, &mut e);
        assert!(out.meta_hit);
        assert_eq!(pred.targets, vec![PredictTarget::L2]);
    }

    #[test]
    fn prefetch_fill_on_meta_miss_is_dropped() {
        let mut p = predictor();
        let mut e = EnergyCounters::default();
        let b = BlockAddr(123_456);
        p.notify(NotifyEvent::PrefetchFill, MemLevel::L3, b, 0, &mut e);
        assert_eq!(p.locmap.code_of(b).decode(), PredictTarget::Mem);
        assert_eq!(p.stats.dropped_prefetch_notifies, 1);
    }

    #[test]
    fn prefetch_fill_forced_on_updates_backing() {
        let mut p = LevelPredictor::new(
            1 << 26,
            0,
            PredictorConfig {
                always_notify_prefetch_fills: true,
                ..predictor().cfg
            },
        );
        let mut e = EnergyCounters::default();
        let b = BlockAddr(123_456);
        p.notify(NotifyEvent::PrefetchFill, MemLevel::L3, b, 0, &mut e);
        assert_eq!(p.locmap.code_of(b).decode(), PredictTarget::L3);
    }

    #[test]
    fn demand_fill_on_meta_miss_writes_backing_without_fetch() {
        let mut p = predictor();
        let mut e = EnergyCounters::default();
        let b = BlockAddr(99_999);
        p.notify(NotifyEvent::DemandFill, MemLevel::L3, b, 0, &mut e);
        assert_eq!(p.locmap.code_of(b).decode(), PredictTarget::L3);
        // No predict-path fetch was started.
        assert!(p.pending.is_empty());
    }
}
