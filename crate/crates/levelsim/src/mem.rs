//! Storage hierarchy: set-associative caches with LRU and write-back,
//! MSHR files with coalescing, and a precise block-location directory
//! collocated with the LLC tags.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Cache block size used throughout the hierarchy.
pub const BLOCK_BYTES: u64 = 64;

/// Hierarchy levels ordered from closest to the core outward.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum MemLevel {
    L1,
    L2,
    L3,
    Mem,
}

impl MemLevel {
    pub const CACHES: [MemLevel; 3] = [MemLevel::L1, MemLevel::L2, MemLevel::L3];

    /// Index into per-cache arrays; panics on `Mem`.
    pub fn cache_idx(self) -> usize {
        match self {
            MemLevel::L1 => 0,
            MemLevel::L2 => 1,
            MemLevel::L3 => 2,
            MemLevel::Mem => panic!("Mem has no cache index"),
        }
    }

    pub fn deeper_than(self, other: MemLevel) -> bool {
        self > other
    }
}

impl std::fmt::Display for MemLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MemLevel::L1 => "L1",
            MemLevel::L2 => "L2",
            MemLevel::L3 => "L3",
            MemLevel::Mem => "MEM",
        };
        f.write_str(s)
    }
}

/// A physical address right-shifted by the 64-byte block offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockAddr(pub u64);

impl BlockAddr {
    pub fn from_phys(addr: u64) -> Self {
        BlockAddr(addr / BLOCK_BYTES)
    }

    /// Base physical address of the block.
    pub fn base_addr(self) -> u64 {
        self.0 * BLOCK_BYTES
    }

    pub fn offset(self, delta: i64) -> Option<BlockAddr> {
        let v = self.0 as i64 + delta;
        if v < 0 {
            None
        } else {
            Some(BlockAddr(v as u64))
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheConfigError {
    #[error("capacity {capacity} not divisible by associativity {assoc} x block {block}")]
    BadCapacity { capacity: u64, assoc: u32, block: u64 },
    #[error("set count {0} is not a power of two")]
    SetCountNotPow2(u64),
    #[error("associativity must be > 0")]
    ZeroAssoc,
}

/// Geometry and timing of one cache level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    pub capacity_bytes: u64,
    pub associativity: u32,
    #[serde(default = "default_block_bytes")]
    pub block_bytes: u64,
    pub tag_latency: u64,
    pub data_latency: u64,
    /// Sequential caches pay tag + data on a hit; parallel caches pay data only.
    pub sequential_tag_data: bool,
    /// Recorded but not modeled as a bandwidth constraint.
    pub ports: u32,
    pub mshr_entries: u32,
    /// True when this cache back-invalidates the level above it on eviction.
    pub inclusive_of_upper: bool,
}

fn default_block_bytes() -> u64 {
    BLOCK_BYTES
}

impl CacheConfig {
    pub fn set_count(&self) -> u64 {
        self.capacity_bytes / (self.associativity as u64 * self.block_bytes)
    }

    pub fn validate(&self) -> Result<(), CacheConfigError> {
        if self.associativity == 0 {
            return Err(CacheConfigError::ZeroAssoc);
        }
        if self.capacity_bytes % (self.associativity as u64 * self.block_bytes) != 0 {
            return Err(CacheConfigError::BadCapacity {
                capacity: self.capacity_bytes,
                assoc: self.associativity,
                block: self.block_bytes,
            });
        }
        let sets = self.set_count();
        if !sets.is_power_of_two() {
            return Err(CacheConfigError::SetCountNotPow2(sets));
        }
        Ok(())
    }

    /// Effective hit latency per the sequential/parallel tag-data rule.
    pub fn hit_latency(&self) -> u64 {
        if self.sequential_tag_data {
            self.tag_latency + self.data_latency
        } else {
            self.data_latency
        }
    }
}

#[derive(Debug, Clone)]
pub struct CacheLine<T> {
    pub block: BlockAddr,
    pub dirty: bool,
    pub prefetched: bool,
    pub lru_stamp: u64,
    pub payload: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupResult {
    pub hit: bool,
    pub dirty: bool,
    /// First demand touch of a prefetched line; feeds prefetch accuracy.
    pub prefetched_first_touch: bool,
}

impl LookupResult {
    pub const MISS: LookupResult = LookupResult {
        hit: false,
        dirty: false,
        prefetched_first_touch: false,
    };
}

/// Set-associative LRU cache. Only valid lines are stored; the payload carries
/// per-line data (unit for the data caches, a LocMap line for the metadata cache).
#[derive(Debug, Clone)]
pub struct SetAssocCache<T> {
    sets: Vec<Vec<CacheLine<T>>>,
    assoc: usize,
    set_mask: u64,
    stamp: u64,
}

impl<T> SetAssocCache<T> {
    pub fn new(cfg: &CacheConfig) -> Self {
        let sets = cfg.set_count() as usize;
        SetAssocCache {
            sets: (0..sets).map(|_| Vec::new()).collect(),
            assoc: cfg.associativity as usize,
            set_mask: sets as u64 - 1,
            stamp: 0,
        }
    }

    fn set_of(&self, block: BlockAddr) -> usize {
        (block.0 & self.set_mask) as usize
    }

    /// Presence check with no side effects.
    pub fn contains(&self, block: BlockAddr) -> bool {
        self.sets[self.set_of(block)].iter().any(|l| l.block == block)
    }

    pub fn lookup(&mut self, block: BlockAddr, touch_lru: bool) -> LookupResult {
        let set = self.set_of(block);
        self.stamp += 1;
        let stamp = self.stamp;
        match self.sets[set].iter_mut().find(|l| l.block == block) {
            Some(line) => {
                let first_touch = line.prefetched;
                if touch_lru {
                    line.lru_stamp = stamp;
                    line.prefetched = false;
                }
                LookupResult {
                    hit: true,
                    dirty: line.dirty,
                    prefetched_first_touch: touch_lru && first_touch,
                }
            }
            None => LookupResult::MISS,
        }
    }

    /// Installs a block, evicting the LRU victim when the set is full.
    pub fn fill(
        &mut self,
        block: BlockAddr,
        dirty: bool,
        prefetched: bool,
        payload: T,
    ) -> Option<CacheLine<T>> {
        let set = self.set_of(block);
        self.stamp += 1;
        let stamp = self.stamp;
        let lines = &mut self.sets[set];
        if let Some(line) = lines.iter_mut().find(|l| l.block == block) {
            // Refill of a resident block updates in place.
            line.dirty |= dirty;
            line.lru_stamp = stamp;
            line.payload = payload;
            return None;
        }
        let victim = if lines.len() == self.assoc {
            let (idx, _) = lines
                .iter()
                .enumerate()
                .min_by_key(|(_, l)| l.lru_stamp)
                .expect("non-empty set");
            Some(lines.swap_remove(idx))
        } else {
            None
        };
        lines.push(CacheLine {
            block,
            dirty,
            prefetched,
            lru_stamp: stamp,
            payload,
        });
        victim
    }

    pub fn invalidate(&mut self, block: BlockAddr) -> Option<CacheLine<T>> {
        let set = self.set_of(block);
        let lines = &mut self.sets[set];
        let idx = lines.iter().position(|l| l.block == block)?;
        Some(lines.swap_remove(idx))
    }

    pub fn set_dirty(&mut self, block: BlockAddr) -> bool {
        let set = self.set_of(block);
        match self.sets[set].iter_mut().find(|l| l.block == block) {
            Some(line) => {
                line.dirty = true;
                true
            }
            None => false,
        }
    }

    pub fn payload_mut(&mut self, block: BlockAddr) -> Option<&mut T> {
        let set = self.set_of(block);
        self.sets[set]
            .iter_mut()
            .find(|l| l.block == block)
            .map(|l| {
                l.dirty = true;
                &mut l.payload
            })
    }

    pub fn payload(&self, block: BlockAddr) -> Option<&T> {
        self.sets[self.set_of(block)]
            .iter()
            .find(|l| l.block == block)
            .map(|l| &l.payload)
    }

    pub fn blocks(&self) -> impl Iterator<Item = BlockAddr> + '_ {
        self.sets.iter().flat_map(|s| s.iter().map(|l| l.block))
    }

    pub fn dirty_blocks(&self) -> impl Iterator<Item = BlockAddr> + '_ {
        self.sets
            .iter()
            .flat_map(|s| s.iter().filter(|l| l.dirty).map(|l| l.block))
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MshrOutcome {
    Allocated,
    Coalesced,
    Rejected,
}

#[derive(Debug, Clone)]
pub struct MshrEntry {
    pub block: BlockAddr,
    pub demand: bool,
    /// Requestors coalesced onto this entry beyond the allocator.
    pub extra_targets: u32,
    pub issued_at: u64,
}

/// Miss status holding registers for one cache. A slice of entries is reserved
/// for demand accesses; prefetch allocations are rejected once free entries
/// drop to that floor.
#[derive(Debug, Clone)]
pub struct MshrFile {
    entries: HashMap<BlockAddr, MshrEntry>,
    capacity: usize,
    reserve: usize,
    pub allocs: u64,
    pub deallocs: u64,
    pub coalesces: u64,
    pub prefetch_rejects: u64,
}

impl MshrFile {
    pub fn new(capacity: u32) -> Self {
        let capacity = capacity as usize;
        MshrFile {
            entries: HashMap::new(),
            capacity,
            // ceil(0.25 * entries) reserved for demand accesses.
            reserve: (capacity + 3) / 4,
            allocs: 0,
            deallocs: 0,
            coalesces: 0,
            prefetch_rejects: 0,
        }
    }

    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }

    pub fn free(&self) -> usize {
        self.capacity - self.entries.len()
    }

    pub fn reserve_floor(&self) -> usize {
        self.reserve
    }

    pub fn has(&self, block: BlockAddr) -> bool {
        self.entries.contains_key(&block)
    }

    pub fn allocate(&mut self, block: BlockAddr, demand: bool, now: u64) -> MshrOutcome {
        if let Some(e) = self.entries.get_mut(&block) {
            e.extra_targets += 1;
            self.coalesces += 1;
            return MshrOutcome::Coalesced;
        }
        let free = self.free();
        if demand {
            if free == 0 {
                return MshrOutcome::Rejected;
            }
        } else if free <= self.reserve {
            self.prefetch_rejects += 1;
            return MshrOutcome::Rejected;
        }
        self.entries.insert(
            block,
            MshrEntry {
                block,
                demand,
                extra_targets: 0,
                issued_at: now,
            },
        );
        self.allocs += 1;
        MshrOutcome::Allocated
    }

    /// Removes the entry for `block`. Panics if absent: every allocation must
    /// be paired with exactly one deallocation.
    pub fn deallocate(&mut self, block: BlockAddr) {
        self.entries
            .remove(&block)
            .expect("deallocate of unallocated MSHR entry");
        self.deallocs += 1;
    }

    /// Drops one coalesced target without freeing the entry.
    pub fn release_target(&mut self, block: BlockAddr) {
        let e = self
            .entries
            .get_mut(&block)
            .expect("release_target of unallocated MSHR entry");
        debug_assert!(e.extra_targets > 0);
        e.extra_targets -= 1;
    }

    /// Oldest non-demand entry, used to drain prefetches under back-pressure.
    pub fn oldest_prefetch(&self) -> Option<BlockAddr> {
        self.entries
            .values()
            .filter(|e| !e.demand)
            .min_by_key(|e| (e.issued_at, e.block.0))
            .map(|e| e.block)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct DirEntry {
    /// Bit i set when the block is valid in `MemLevel::CACHES[i]`.
    mask: u8,
    dirty_owner: Option<MemLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryView {
    pub levels: Vec<MemLevel>,
    pub on_chip: bool,
    pub dirty_owner: Option<MemLevel>,
}

/// Precise block-location authority, collocated with the LLC tags. Updated
/// only through fill/evict/writeback notifications from the caches.
#[derive(Debug, Clone, Default)]
pub struct Directory {
    presence: HashMap<BlockAddr, DirEntry>,
}

impl Directory {
    pub fn on_fill(&mut self, level: MemLevel, block: BlockAddr, dirty: bool) {
        let e = self.presence.entry(block).or_default();
        e.mask |= 1 << level.cache_idx();
        if dirty {
            e.dirty_owner = Some(level);
        }
    }

    pub fn on_evict(&mut self, level: MemLevel, block: BlockAddr) {
        if let Some(e) = self.presence.get_mut(&block) {
            e.mask &= !(1 << level.cache_idx());
            if e.dirty_owner == Some(level) {
                e.dirty_owner = None;
            }
            if e.mask == 0 {
                self.presence.remove(&block);
            }
        }
    }

    pub fn set_dirty(&mut self, level: MemLevel, block: BlockAddr) {
        if let Some(e) = self.presence.get_mut(&block) {
            e.dirty_owner = Some(level);
        }
    }

    pub fn query(&self, block: BlockAddr) -> DirectoryView {
        match self.presence.get(&block) {
            Some(e) => {
                let levels = MemLevel::CACHES
                    .iter()
                    .copied()
                    .filter(|l| e.mask & (1 << l.cache_idx()) != 0)
                    .collect::<Vec<_>>();
                DirectoryView {
                    on_chip: !levels.is_empty(),
                    levels,
                    dirty_owner: e.dirty_owner,
                }
            }
            None => DirectoryView {
                levels: Vec::new(),
                on_chip: false,
                dirty_owner: None,
            },
        }
    }

    /// Shallowest on-chip level able to serve an L1 miss.
    pub fn serving_level(&self, block: BlockAddr) -> MemLevel {
        let v = self.query(block);
        v.levels
            .into_iter()
            .filter(|&l| l != MemLevel::L1)
            .min()
            .unwrap_or(MemLevel::Mem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Victim {
    pub block: BlockAddr,
    pub dirty: bool,
}

/// The three data caches plus their MSHR files and the directory.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    caches: [SetAssocCache<()>; 3],
    configs: [CacheConfig; 3],
    pub mshr: [MshrFile; 3],
    pub dir: Directory,
}

impl Hierarchy {
    pub fn new(l1: CacheConfig, l2: CacheConfig, l3: CacheConfig) -> Self {
        let mshr = [
            MshrFile::new(l1.mshr_entries),
            MshrFile::new(l2.mshr_entries),
            MshrFile::new(l3.mshr_entries),
        ];
        Hierarchy {
            caches: [
                SetAssocCache::new(&l1),
                SetAssocCache::new(&l2),
                SetAssocCache::new(&l3),
            ],
            configs: [l1, l2, l3],
            mshr,
            dir: Directory::default(),
        }
    }

    pub fn config(&self, level: MemLevel) -> &CacheConfig {
        &self.configs[level.cache_idx()]
    }

    pub fn cache(&self, level: MemLevel) -> &SetAssocCache<()> {
        &self.caches[level.cache_idx()]
    }

    pub fn mshr(&mut self, level: MemLevel) -> &mut MshrFile {
        &mut self.mshr[level.cache_idx()]
    }

    pub fn lookup(&mut self, level: MemLevel, block: BlockAddr, touch_lru: bool) -> LookupResult {
        self.caches[level.cache_idx()].lookup(block, touch_lru)
    }

    pub fn contains(&self, level: MemLevel, block: BlockAddr) -> bool {
        self.caches[level.cache_idx()].contains(block)
    }

    pub fn set_dirty(&mut self, level: MemLevel, block: BlockAddr) {
        if self.caches[level.cache_idx()].set_dirty(block) {
            self.dir.set_dirty(level, block);
        }
    }

    /// Installs `block` at `level`, returning the evicted victim if any.
    /// An eviction from an upper-inclusive cache back-invalidates the level
    /// above; a dirty back-invalidated copy folds into the victim's dirty bit.
    pub fn fill(
        &mut self,
        level: MemLevel,
        block: BlockAddr,
        dirty: bool,
        prefetched: bool,
    ) -> Option<Victim> {
        let idx = level.cache_idx();
        let victim = self.caches[idx].fill(block, dirty, prefetched, ());
        self.dir.on_fill(level, block, dirty);
        let mut out = victim.map(|v| Victim {
            block: v.block,
            dirty: v.dirty,
        });
        if let Some(v) = out.as_mut() {
            self.dir.on_evict(level, v.block);
            if self.configs[idx].inclusive_of_upper && level == MemLevel::L2 {
                if let Some(upper) = self.caches[MemLevel::L1.cache_idx()].invalidate(v.block) {
                    self.dir.on_evict(MemLevel::L1, v.block);
                    v.dirty |= upper.dirty;
                }
            }
        }
        out
    }

    pub fn invalidate(&mut self, level: MemLevel, block: BlockAddr) -> Option<Victim> {
        let line = self.caches[level.cache_idx()].invalidate(block)?;
        self.dir.on_evict(level, block);
        Some(Victim {
            block: line.block,
            dirty: line.dirty,
        })
    }

    /// Full-scan audit: the directory must match the caches exactly.
    pub fn audit(&self) -> Result<(), String> {
        let mut touched: Vec<BlockAddr> = Vec::new();
        for level in MemLevel::CACHES {
            touched.extend(self.caches[level.cache_idx()].blocks());
        }
        touched.sort();
        touched.dedup();
        for block in touched {
            let view = self.dir.query(block);
            for level in MemLevel::CACHES {
                let in_cache = self.caches[level.cache_idx()].contains(block);
                let in_dir = view.levels.contains(&level);
                if in_cache != in_dir {
                    return Err(format!(
                        "directory mismatch for block {:#x} at {level}: cache={in_cache} dir={in_dir}",
                        block.0
                    ));
                }
            }
        }
        // Directory may not claim blocks no cache holds.
        for (&block, _) in self.dir.presence.iter() {
            if !MemLevel::CACHES
                .iter()
                .any(|&l| self.caches[l.cache_idx()].contains(block))
            {
                return Err(format!("directory holds absent block {:#x}", block.0));
            }
        }
        Ok(())
    }

    /// Inclusion check: every L1-valid block must be L2-valid.
    pub fn check_inclusion(&self) -> Result<(), String> {
        if !self.configs[MemLevel::L2.cache_idx()].inclusive_of_upper {
            return Ok(());
        }
        for block in self.caches[MemLevel::L1.cache_idx()].blocks() {
            if !self.caches[MemLevel::L2.cache_idx()].contains(block) {
                return Err(format!("block {:#x} in L1 but not in L2", block.0));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(capacity: u64, assoc: u32) -> CacheConfig {
        CacheConfig {
            capacity_bytes: capacity,
            associativity: assoc,
            block_bytes: 64,
            tag_latency: 1,
            data_latency: 2,
            sequential_tag_data: false,
            ports: 1,
            mshr_entries: 16,
            inclusive_of_upper: false,
        }
    }

    #[test]
    fn empty_cache_misses() {
        let mut c: SetAssocCache<()> = SetAssocCache::new(&small_cfg(1024, 4));
        assert!(!c.lookup(BlockAddr(7), true).hit);
    }

    #[test]
    fn fill_then_lookup_hits() {
        let mut c = SetAssocCache::new(&small_cfg(1024, 4));
        assert!(c.fill(BlockAddr(3), false, false, ()).is_none());
        assert!(c.lookup(BlockAddr(3), true).hit);
    }

    #[test]
    fn lru_evicts_first_filled_in_full_set() {
        // 4-way, 4 sets; blocks 0, 4, 8, 12, 16 all map to set 0.
        let mut c = SetAssocCache::new(&small_cfg(1024, 4));
        for i in 0..5u64 {
            c.fill(BlockAddr(i * 4), false, false, ());
        }
        assert!(!c.lookup(BlockAddr(0), false).hit);
        for i in 1..5u64 {
            assert!(c.lookup(BlockAddr(i * 4), false).hit);
        }
    }

    #[test]
    fn fifth_fill_returns_lru_victim() {
        let mut c = SetAssocCache::new(&small_cfg(1024, 4));
        for i in 0..4u64 {
            assert!(c.fill(BlockAddr(i * 4), false, false, ()).is_none());
        }
        // Touch block 0 so block 4 becomes LRU.
        c.lookup(BlockAddr(0), true);
        let v = c.fill(BlockAddr(16), false, false, ()).unwrap();
        assert_eq!(v.block, BlockAddr(4));
    }

    #[test]
    fn prefetched_bit_clears_on_first_demand_touch() {
        let mut c = SetAssocCache::new(&small_cfg(1024, 4));
        c.fill(BlockAddr(9), false, true, ());
        let first = c.lookup(BlockAddr(9), true);
        assert!(first.hit && first.prefetched_first_touch);
        let second = c.lookup(BlockAddr(9), true);
        assert!(second.hit && !second.prefetched_first_touch);
    }

    #[test]
    fn mshr_coalesces_same_block() {
        let mut m = MshrFile::new(16);
        assert_eq!(m.allocate(BlockAddr(1), true, 0), MshrOutcome::Allocated);
        assert_eq!(m.allocate(BlockAddr(1), true, 1), MshrOutcome::Coalesced);
        assert_eq!(m.occupancy(), 1);
    }

    #[test]
    fn mshr_prefetch_rejected_at_reserve_floor() {
        let mut m = MshrFile::new(16);
        for i in 0..12u64 {
            assert_eq!(m.allocate(BlockAddr(i), true, 0), MshrOutcome::Allocated);
        }
        // free = 4 <= ceil(0.25 * 16) = 4
        assert_eq!(m.allocate(BlockAddr(100), false, 0), MshrOutcome::Rejected);
        assert_eq!(m.allocate(BlockAddr(100), true, 0), MshrOutcome::Allocated);
    }

    #[test]
    fn mshr_demand_rejected_only_when_full() {
        let mut m = MshrFile::new(16);
        for i in 0..16u64 {
            assert_eq!(m.allocate(BlockAddr(i), true, 0), MshrOutcome::Allocated);
        }
        assert_eq!(m.allocate(BlockAddr(99), true, 0), MshrOutcome::Rejected);
        m.deallocate(BlockAddr(0));
        assert_eq!(m.allocate(BlockAddr(99), true, 0), MshrOutcome::Allocated);
    }

    fn test_hierarchy() -> Hierarchy {
        let l1 = CacheConfig {
            inclusive_of_upper: false,
            ..small_cfg(512, 2)
        };
        let l2 = CacheConfig {
            inclusive_of_upper: true,
            ..small_cfg(1024, 2)
        };
        let l3 = CacheConfig {
            inclusive_of_upper: false,
            ..small_cfg(4096, 4)
        };
        Hierarchy::new(l1, l2, l3)
    }

    #[test]
    fn directory_tracks_fills_and_evicts() {
        let mut h = test_hierarchy();
        let b = BlockAddr(42);
        assert!(!h.dir.query(b).on_chip);
        h.fill(MemLevel::L3, b, false, false);
        h.fill(MemLevel::L2, b, false, false);
        h.fill(MemLevel::L1, b, false, false);
        assert_eq!(
            h.dir.query(b).levels,
            vec![MemLevel::L1, MemLevel::L2, MemLevel::L3]
        );
        h.invalidate(MemLevel::L3, b);
        assert_eq!(h.dir.query(b).levels, vec![MemLevel::L1, MemLevel::L2]);
        h.audit().unwrap();
    }

    #[test]
    fn l2_eviction_back_invalidates_l1() {
        let mut h = test_hierarchy();
        // L2: 1024B / 2-way / 64B = 8 sets. Blocks 0 and 8 share set 0.
        let a = BlockAddr(0);
        let b = BlockAddr(8);
        let c = BlockAddr(16);
        h.fill(MemLevel::L2, a, false, false);
        h.fill(MemLevel::L1, a, true, false); // dirty copy in L1
        h.fill(MemLevel::L2, b, false, false);
        let v = h.fill(MemLevel::L2, c, false, false).unwrap();
        assert_eq!(v.block, a);
        // Dirty L1 copy folded into the victim.
        assert!(v.dirty);
        assert!(!h.contains(MemLevel::L1, a));
        assert!(!h.dir.query(a).on_chip);
        h.audit().unwrap();
        h.check_inclusion().unwrap();
    }

    #[test]
    fn dirty_l2_victim_writeback_chain() {
        let mut h = test_hierarchy();
        let a = BlockAddr(0);
        let b = BlockAddr(8);
        let c = BlockAddr(16);
        h.fill(MemLevel::L2, a, true, false);
        h.fill(MemLevel::L2, b, false, false);
        let v = h.fill(MemLevel::L2, c, false, false).unwrap();
        assert!(v.dirty && v.block == a);
        // The engine writes dirty L2 victims back into L3.
        h.fill(MemLevel::L3, v.block, true, false);
        assert_eq!(h.dir.query(a).levels, vec![MemLevel::L3]);
        h.audit().unwrap();
    }

    #[test]
    fn config_validation() {
        assert!(small_cfg(1024, 4).validate().is_ok());
        assert!(small_cfg(1000, 4).validate().is_err());
        let three_sets = small_cfg(64 * 3 * 2, 2);
        assert!(three_sets.validate().is_err());
    }
}
