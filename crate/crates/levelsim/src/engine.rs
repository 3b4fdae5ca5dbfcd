//! Simulation engine: drives one trace through the hierarchy under a lookup
//! mode, composing per-access latency, energy, prediction-outcome and
//! prefetch statistics into a run report.
//!
//! Cache state transitions depend only on the accessed block and the level
//! that actually serves it, never on the prediction, so every mode replays
//! the identical hit/miss/eviction sequence; modes differ only in latency,
//! energy, and prediction accounting.

use std::collections::VecDeque;

use crate::config::{EngineMode, RunConfig};
use crate::mem::{BlockAddr, Hierarchy, MemLevel, MshrOutcome};
use crate::metrics::{
    classify, effectiveness, CategoryCounts, EnergyCounters, LevelHitMiss, MshrReport,
    MultiwayDistribution, PredictionCategory, PrefetcherReport, RunReport, WindowStats,
};
use crate::predictor::{
    LevelPredictor, NotifyEvent, PredictTarget, Prediction, PredictionSource, PredictorConfig,
};
use crate::prefetch::{DcptPrefetcher, NextLinePrefetcher, PrefetcherId, ThrottleState, Trigger};
use crate::tage::TagePredictor;
use crate::trace::{Op, TraceEvent};

/// Cycle constants the latency composition works from.
#[derive(Debug, Clone, Copy)]
struct LatencyParams {
    l1_hit: u64,
    l2_hit: u64,
    l3_tag: u64,
    l3_data: u64,
    mem_fixed: u64,
    bus: u64,
    predictor_cycle: u64,
    parallel_mem_launch: bool,
}

/// Latency of one access served at `serving`, for a baseline lookup
/// (`targets == None`) or a predicted target set. Probed levels are charged
/// tag/data energy; skipped levels cost nothing. The directory, collocated
/// with the LLC tags, validates every MEM prediction and resolves recovery.
fn compose_latency(
    p: &LatencyParams,
    targets: Option<&[PredictTarget]>,
    serving: MemLevel,
    energy: &mut EnergyCounters,
) -> u64 {
    debug_assert!(serving != MemLevel::L1);
    let sequential = |energy: &mut EnergyCounters, base: u64| {
        let mut t = base;
        t += p.bus + p.l2_hit;
        energy.tag(MemLevel::L2);
        energy.data(MemLevel::L2);
        if serving == MemLevel::L2 {
            return t;
        }
        t += p.bus;
        energy.tag(MemLevel::L3);
        if serving == MemLevel::L3 {
            energy.data(MemLevel::L3);
            return t + p.l3_tag + p.l3_data;
        }
        t + p.l3_tag + p.bus + p.mem_fixed
    };
    let targets = match targets {
        None => return sequential(energy, p.l1_hit),
        Some(t) => t,
    };
    if targets == [PredictTarget::L2] {
        return sequential(energy, p.l1_hit + p.predictor_cycle);
    }
    let mut t = p.l1_hit + p.predictor_cycle;
    let single = targets.len() == 1;
    let mut l3_tag_probed = false;
    for &target in targets {
        match target {
            PredictTarget::L2 => {
                t += p.bus + p.l2_hit;
                energy.tag(MemLevel::L2);
                energy.data(MemLevel::L2);
                if serving == MemLevel::L2 {
                    return t;
                }
            }
            PredictTarget::L3 => {
                t += p.bus;
                energy.tag(MemLevel::L3);
                if serving == MemLevel::L3 {
                    energy.data(MemLevel::L3);
                    return t + p.l3_tag + p.l3_data;
                }
                t += p.l3_tag;
                l3_tag_probed = true;
            }
            PredictTarget::Mem => {
                // The directory confirms off-chip status during the LLC tag
                // check it shares a pipeline with.
                energy.dir_accesses += 1;
                if single && p.parallel_mem_launch {
                    t += p.bus;
                    energy.tag(MemLevel::L3);
                    match serving {
                        // Memory launched alongside the tag/directory check.
                        MemLevel::Mem => return t + p.l3_tag.max(p.mem_fixed),
                        MemLevel::L3 => {
                            energy.data(MemLevel::L3);
                            return t + p.l3_tag + p.l3_data;
                        }
                        _ => {
                            t += p.l3_tag;
                            l3_tag_probed = true;
                        }
                    }
                } else {
                    if !l3_tag_probed {
                        t += p.bus + p.l3_tag;
                        energy.tag(MemLevel::L3);
                        l3_tag_probed = true;
                        if serving == MemLevel::L3 {
                            // LLC tag hit discovered during validation; the
                            // tag cycles are already on the clock.
                            energy.data(MemLevel::L3);
                            return t + p.l3_data;
                        }
                    }
                    if serving == MemLevel::Mem {
                        // A lone serial MEM request still pays the hop; a
                        // multiway request launches as the tag check retires.
                        return if single { t + p.bus + p.mem_fixed } else { t + p.mem_fixed };
                    }
                }
            }
        }
    }
    // Every target missed: safe fall-through to memory, or directory-driven
    // recovery to the on-chip level the prediction bypassed.
    debug_assert!(l3_tag_probed, "non-sequential target sets always probe LLC tags");
    match serving {
        MemLevel::Mem => t + p.bus + p.mem_fixed,
        MemLevel::L2 => {
            energy.dir_accesses += 1;
            energy.tag(MemLevel::L2);
            energy.data(MemLevel::L2);
            t + p.bus + p.l2_hit
        }
        MemLevel::L3 => {
            // L3 not in targets and MEM not in targets cannot reach here:
            // the only such set is the sequential [L2].
            unreachable!("L3 recovery is resolved inside the MEM leg")
        }
        MemLevel::L1 => unreachable!(),
    }
}

#[derive(Debug, Clone)]
struct InflightPrefetch {
    id: PrefetcherId,
    block: BlockAddr,
    remaining: u64,
}

#[derive(Debug, Clone, Default)]
struct Stats {
    accesses: u64,
    reads: u64,
    writes: u64,
    level: [LevelHitMiss; 3],
    mem_accesses: u64,
    total_latency: u64,
    categories: CategoryCounts,
    predicted: u64,
    multiway: MultiwayDistribution,
    meta_lookups: u64,
    meta_hits: u64,
    pld_predictions: u64,
    pld_correct: u64,
    recoveries: u64,
    energy: EnergyCounters,
    prefetch: [PrefetcherReport; 3],
    demand_stalls: u64,
    recovery_deallocs: u64,
}

pub struct Engine {
    cfg: RunConfig,
    mode: EngineMode,
    lat: LatencyParams,
    hier: Hierarchy,
    predictor: Option<LevelPredictor>,
    tage: Option<TagePredictor>,
    l1_next: NextLinePrefetcher,
    l2_next: NextLinePrefetcher,
    dcpt: DcptPrefetcher,
    throttle: ThrottleState,
    inflight: VecDeque<InflightPrefetch>,
    stats: Stats,
    windows: Vec<WindowStats>,
    window: WindowStats,
    /// Total simulated cycles; monotonic across warmup.
    now: u64,
    /// Demand events seen, including warmup.
    seen_events: u64,
}

impl Engine {
    pub fn new(cfg: &RunConfig, mode: EngineMode) -> Engine {
        let lat = LatencyParams {
            l1_hit: cfg.l1.hit_latency(),
            l2_hit: cfg.l2.hit_latency(),
            l3_tag: cfg.l3.tag_latency,
            l3_data: cfg.l3.data_latency,
            mem_fixed: cfg.latency.mem_fixed,
            bus: cfg.latency.bus_hop,
            predictor_cycle: cfg.latency.predictor_cycle,
            parallel_mem_launch: cfg.latency.parallel_mem_launch,
        };
        let predictor = (mode == EngineMode::Locmap).then(|| {
            LevelPredictor::new(
                cfg.phys_mem_bytes,
                // The LocMap lives in reserved memory just past the covered
                // physical range.
                cfg.phys_mem_bytes >> 14,
                PredictorConfig {
                    meta_capacity_bytes: cfg.predictor.meta_capacity_bytes,
                    meta_assoc: cfg.predictor.meta_assoc,
                    theta_single: cfg.predictor.theta_single,
                    theta_double: cfg.predictor.theta_double,
                    metadata_fill_latency: cfg.predictor.metadata_fill_latency,
                    always_notify_prefetch_fills: cfg.predictor.always_notify_prefetch_fills,
                },
            )
        });
        let tage = mode.tage_budget().map(|budget| {
            TagePredictor::new(budget, cfg.predictor.theta_single, cfg.predictor.theta_double)
        });
        Engine {
            lat,
            hier: Hierarchy::new(cfg.l1.clone(), cfg.l2.clone(), cfg.l3.clone()),
            predictor,
            tage,
            l1_next: NextLinePrefetcher::new(MemLevel::L1, cfg.prefetch.l1_degree),
            l2_next: NextLinePrefetcher::new(MemLevel::L2, cfg.prefetch.l2_degree),
            dcpt: DcptPrefetcher::new(cfg.prefetch.dcpt_entries, cfg.prefetch.dcpt_degree),
            throttle: ThrottleState::new(
                cfg.prefetch.epoch_len,
                cfg.prefetch.sample_len,
                cfg.prefetch.accuracy_threshold,
            ),
            inflight: VecDeque::new(),
            stats: Stats::default(),
            windows: Vec::new(),
            window: WindowStats::default(),
            now: 0,
            seen_events: 0,
            mode,
            cfg: cfg.clone(),
        }
    }

    pub fn mode(&self) -> EngineMode {
        self.mode
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hier
    }

    /// Order-independent digest of cache contents (block, dirty, prefetched,
    /// per level); equal fingerprints mean equal functional state.
    pub fn fingerprint(&self) -> u64 {
        let mut acc = 0xcbf2_9ce4_8422_2325u64;
        for level in MemLevel::CACHES {
            let cache = self.hier.cache(level);
            let mut lines: Vec<u64> = cache
                .blocks()
                .map(|b| {
                    let dirty = cache.dirty_blocks().any(|d| d == b);
                    (b.0 << 3) | ((level.cache_idx() as u64) << 1) | dirty as u64
                })
                .collect();
            lines.sort_unstable();
            for line in lines {
                // FNV-1a over the sorted line descriptors.
                for byte in line.to_le_bytes() {
                    acc ^= byte as u64;
                    acc = acc.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        acc
    }

    fn notify(&mut self, event: NotifyEvent, level: MemLevel, block: BlockAddr) {
        if let Some(p) = self.predictor.as_mut() {
            p.notify(event, level, block, self.now, &mut self.stats.energy);
        }
    }

    /// Installs `block` at `level` and walks the eviction/writeback chain.
    fn fill_chain(&mut self, level: MemLevel, block: BlockAddr, dirty: bool, prefetched: bool) {
        self.stats.energy.data(level);
        let Some(v) = self.hier.fill(level, block, dirty, prefetched) else {
            return;
        };
        match level {
            MemLevel::L1 => {
                if v.dirty {
                    // Dirty L1 victims write through to their L2 copy.
                    self.hier.set_dirty(MemLevel::L2, v.block);
                    self.notify(NotifyEvent::DirtyEviction, MemLevel::L2, v.block);
                }
            }
            MemLevel::L2 => {
                if v.dirty {
                    self.fill_chain(MemLevel::L3, v.block, true, false);
                    self.notify(NotifyEvent::DirtyEviction, MemLevel::L3, v.block);
                }
            }
            MemLevel::L3 => {
                if v.dirty {
                    self.stats.energy.mem_accesses += 1;
                    self.notify(NotifyEvent::DirtyEviction, MemLevel::Mem, v.block);
                }
            }
            MemLevel::Mem => unreachable!(),
        }
    }

    /// Shared state-transition path: touch the serving level, fill the levels
    /// above it, and mark the L1 copy dirty on a write. Returns whether the
    /// serving-level line was a previously untouched prefetch.
    fn apply_serve(&mut self, block: BlockAddr, serving: MemLevel, is_write: bool) -> bool {
        let mut first_touch = false;
        if serving == MemLevel::Mem {
            self.stats.energy.mem_accesses += 1;
        } else {
            let res = self.hier.lookup(serving, block, true);
            debug_assert!(res.hit, "directory said {serving} holds the block");
            first_touch = res.prefetched_first_touch;
        }
        if serving > MemLevel::L3 {
            self.fill_chain(MemLevel::L3, block, false, false);
        }
        if serving > MemLevel::L2 {
            self.fill_chain(MemLevel::L2, block, false, false);
        }
        self.fill_chain(MemLevel::L1, block, false, false);
        if is_write {
            self.hier.set_dirty(MemLevel::L1, block);
        }
        first_touch
    }

    fn credit_useful(&mut self, level: MemLevel) {
        let id = match level {
            MemLevel::L1 => PrefetcherId::L1Next,
            MemLevel::L2 => PrefetcherId::L2Next,
            MemLevel::L3 => PrefetcherId::L3Dcpt,
            MemLevel::Mem => return,
        };
        self.throttle.record_useful(id);
        self.stats.prefetch[id.idx()].useful += 1;
    }

    fn prefetcher_enabled(&self, id: PrefetcherId) -> bool {
        match id {
            PrefetcherId::L1Next => self.cfg.prefetch.l1_enabled,
            PrefetcherId::L2Next => self.cfg.prefetch.l2_enabled,
            PrefetcherId::L3Dcpt => self.cfg.prefetch.l3_enabled,
        }
    }

    fn issue_prefetches(&mut self, id: PrefetcherId, candidates: Vec<BlockAddr>, event_idx: u64) {
        for block in candidates {
            if !self.throttle.gate(id, event_idx) {
                continue;
            }
            let level = id.level();
            if self.hier.cache(level).contains(block) || self.hier.mshr(level).has(block) {
                continue;
            }
            // Timestamped by event index so drain order is identical in
            // every mode regardless of cycle counts.
            match self.hier.mshr(level).allocate(block, false, self.seen_events) {
                MshrOutcome::Allocated => {
                    self.throttle.record_issued(id);
                    self.stats.prefetch[id.idx()].issued += 1;
                    self.inflight.push_back(InflightPrefetch {
                        id,
                        block,
                        remaining: self.cfg.prefetch.inflight_events,
                    });
                }
                MshrOutcome::Rejected => {
                    self.stats.prefetch[id.idx()].mshr_rejected += 1;
                }
                MshrOutcome::Coalesced => unreachable!("pending blocks are filtered"),
            }
        }
    }

    /// Lands prefetches whose in-flight window (counted in demand events)
    /// has elapsed.
    fn complete_prefetches(&mut self) {
        for p in self.inflight.iter_mut() {
            p.remaining -= 1;
        }
        while matches!(self.inflight.front(), Some(p) if p.remaining == 0) {
            let p = self.inflight.pop_front().unwrap();
            self.hier.mshr(p.id.level()).deallocate(p.block);
            match p.id {
                PrefetcherId::L1Next => {
                    // Keep L2 inclusive of the L1 prefetch.
                    self.fill_chain(MemLevel::L2, p.block, false, true);
                    self.fill_chain(MemLevel::L1, p.block, false, true);
                    self.notify(NotifyEvent::PrefetchFill, MemLevel::L2, p.block);
                }
                PrefetcherId::L2Next => {
                    self.fill_chain(MemLevel::L2, p.block, false, true);
                    self.notify(NotifyEvent::PrefetchFill, MemLevel::L2, p.block);
                }
                PrefetcherId::L3Dcpt => {
                    self.fill_chain(MemLevel::L3, p.block, false, true);
                    self.notify(NotifyEvent::PrefetchFill, MemLevel::L3, p.block);
                }
            }
        }
    }

    /// Allocates a demand MSHR entry, draining the oldest in-flight prefetch
    /// when the file is saturated. Returns whether the entry is owned (true)
    /// or coalesced onto an in-flight prefetch (false).
    fn demand_mshr(&mut self, level: MemLevel, block: BlockAddr) -> bool {
        loop {
            match self.hier.mshr(level).allocate(block, true, self.seen_events) {
                MshrOutcome::Allocated => return true,
                MshrOutcome::Coalesced => return false,
                MshrOutcome::Rejected => {
                    let victim = self
                        .hier
                        .mshr(level)
                        .oldest_prefetch()
                        .expect("saturated MSHR holds only transient demand entries");
                    self.hier.mshr(level).deallocate(victim);
                    self.inflight
                        .retain(|p| !(p.id.level() == level && p.block == victim));
                    self.stats.demand_stalls += 1;
                    self.stats.recovery_deallocs += 1;
                }
            }
        }
    }

    pub fn step(&mut self, ev: &TraceEvent) {
        self.complete_prefetches();
        let event_idx = self.seen_events;
        self.seen_events += 1;
        let block = BlockAddr::from_phys(ev.addr);
        let is_write = ev.op == Op::W;
        self.stats.accesses += 1;
        if is_write {
            self.stats.writes += 1;
        } else {
            self.stats.reads += 1;
        }

        self.stats.energy.tag(MemLevel::L1);
        self.stats.energy.data(MemLevel::L1);
        let l1 = self.hier.lookup(MemLevel::L1, block, true);
        if l1.hit {
            self.now += self.lat.l1_hit;
            self.stats.total_latency += self.lat.l1_hit;
            self.stats.level[0].hits += 1;
            if is_write {
                self.hier.set_dirty(MemLevel::L1, block);
            }
            if l1.prefetched_first_touch {
                self.credit_useful(MemLevel::L1);
                if self.prefetcher_enabled(PrefetcherId::L1Next) {
                    let c = self.l1_next.propose(&self.hier, block, Trigger::TaggedFirstHit);
                    self.issue_prefetches(PrefetcherId::L1Next, c, event_idx);
                }
            }
            self.account_window(event_idx, MemLevel::L1);
            self.maybe_end_warmup();
            return;
        }

        let serving = self.hier.dir.serving_level(block);
        let l1_owned = self.demand_mshr(MemLevel::L1, block);
        let l2_owned = (serving > MemLevel::L2).then(|| self.demand_mshr(MemLevel::L2, block));
        let l3_owned = (serving == MemLevel::Mem).then(|| self.demand_mshr(MemLevel::L3, block));

        let prediction: Option<Prediction> = match self.mode {
            EngineMode::Baseline => None,
            EngineMode::Locmap => {
                let p = self.predictor.as_mut().unwrap();
                let (pred, out) = p.predict(block, self.now, &mut self.stats.energy);
                self.stats.meta_lookups += 1;
                if out.meta_hit {
                    self.stats.meta_hits += 1;
                }
                Some(pred)
            }
            EngineMode::Tage2k | EngineMode::Tage8k => Some(
                self.tage
                    .as_mut()
                    .unwrap()
                    .predict(block, &mut self.stats.energy),
            ),
            EngineMode::Oracle => Some(Prediction::single(
                PredictTarget::from_level(serving).unwrap(),
                PredictionSource::Oracle,
            )),
        };

        let latency = compose_latency(
            &self.lat,
            prediction.as_ref().map(|p| p.targets.as_slice()),
            serving,
            &mut self.stats.energy,
        );
        self.now += latency;
        self.stats.total_latency += latency;

        let first_touch = self.apply_serve(block, serving, is_write);

        // Truth-level statistics, identical across modes.
        self.stats.level[0].misses += 1;
        match serving {
            MemLevel::L2 => self.stats.level[1].hits += 1,
            MemLevel::L3 => {
                self.stats.level[1].misses += 1;
                self.stats.level[2].hits += 1;
            }
            MemLevel::Mem => {
                self.stats.level[1].misses += 1;
                self.stats.level[2].misses += 1;
                self.stats.mem_accesses += 1;
            }
            MemLevel::L1 => unreachable!(),
        }
        if serving != MemLevel::Mem && first_touch {
            self.credit_useful(serving);
        }

        let resolved = PredictTarget::from_level(serving).unwrap();
        if let Some(pred) = &prediction {
            let cat = classify(pred, serving);
            self.stats.categories.record(cat);
            if cat == PredictionCategory::Harmful {
                self.stats.recoveries += 1;
            }
            self.stats.predicted += 1;
            match pred.targets.len() {
                1 => self.stats.multiway.single += 1,
                2 => self.stats.multiway.two_way += 1,
                _ => self.stats.multiway.three_way += 1,
            }
            if pred.source == PredictionSource::Pld {
                self.stats.pld_predictions += 1;
                if pred.contains(resolved) {
                    self.stats.pld_correct += 1;
                }
            }
        }
        match self.mode {
            EngineMode::Locmap => {
                let p = self.predictor.as_mut().unwrap();
                p.pld_update(resolved);
                // The access leaves the block resident in L1/L2.
                p.notify(
                    NotifyEvent::DemandFill,
                    MemLevel::L2,
                    block,
                    self.now,
                    &mut self.stats.energy,
                );
            }
            EngineMode::Tage2k | EngineMode::Tage8k => {
                self.tage
                    .as_mut()
                    .unwrap()
                    .update(block, resolved, &mut self.stats.energy);
            }
            _ => {}
        }

        // Prefetch triggers, all functions of truth state only.
        if self.prefetcher_enabled(PrefetcherId::L1Next) {
            let c = self.l1_next.propose(&self.hier, block, Trigger::Miss);
            self.issue_prefetches(PrefetcherId::L1Next, c, event_idx);
        }
        if self.prefetcher_enabled(PrefetcherId::L2Next) {
            let trigger = if serving > MemLevel::L2 {
                Some(Trigger::Miss)
            } else if first_touch {
                Some(Trigger::TaggedFirstHit)
            } else {
                None
            };
            if let Some(trigger) = trigger {
                let c = self.l2_next.propose(&self.hier, block, trigger);
                self.issue_prefetches(PrefetcherId::L2Next, c, event_idx);
            }
        }
        if self.prefetcher_enabled(PrefetcherId::L3Dcpt) && serving > MemLevel::L2 {
            if let Some(pc) = ev.pc {
                let c = self.dcpt.observe(pc, block);
                let c = c
                    .into_iter()
                    .filter(|&b| b.base_addr() < self.cfg.phys_mem_bytes)
                    .collect();
                self.issue_prefetches(PrefetcherId::L3Dcpt, c, event_idx);
            }
        }

        // Demand completes within the step; only prefetches stay in flight.
        if l1_owned {
            self.hier.mshr(MemLevel::L1).deallocate(block);
        } else {
            self.hier.mshr(MemLevel::L1).release_target(block);
        }
        for (level, owned) in [(MemLevel::L2, l2_owned), (MemLevel::L3, l3_owned)] {
            match owned {
                Some(true) => self.hier.mshr(level).deallocate(block),
                Some(false) => self.hier.mshr(level).release_target(block),
                None => {}
            }
        }

        self.account_window(event_idx, serving);
        self.maybe_end_warmup();
    }

    fn account_window(&mut self, event_idx: u64, serving: MemLevel) {
        self.window.accesses += 1;
        if serving > MemLevel::L1 {
            self.window.l1_misses += 1;
        }
        if serving > MemLevel::L2 {
            self.window.l2_misses += 1;
        }
        if serving > MemLevel::L3 {
            self.window.l3_misses += 1;
        }
        if (event_idx + 1) % self.cfg.engine.window_len == 0 {
            let index = self.window.index;
            self.windows.push(self.window);
            self.window = WindowStats {
                index: index + 1,
                ..WindowStats::default()
            };
        }
    }

    /// Zeroes every statistics counter at the warmup boundary; functional
    /// state (caches, predictor tables, throttle epochs) is untouched.
    fn maybe_end_warmup(&mut self) {
        if self.cfg.engine.warmup_events == 0 || self.seen_events != self.cfg.engine.warmup_events {
            return;
        }
        self.stats = Stats::default();
        if let Some(p) = self.predictor.as_mut() {
            p.stats = Default::default();
        }
        for level in MemLevel::CACHES {
            let m = self.hier.mshr(level);
            m.allocs = 0;
            m.deallocs = 0;
            m.coalesces = 0;
            m.prefetch_rejects = 0;
        }
    }

    pub fn report(&self) -> RunReport {
        let s = &self.stats;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let mut windows = self.windows.clone();
        if self.window.accesses > 0 {
            windows.push(self.window);
        }
        let mut mshr = MshrReport {
            demand_stalls: s.demand_stalls,
            recovery_deallocs: s.recovery_deallocs,
            ..MshrReport::default()
        };
        for level in MemLevel::CACHES {
            let m = &self.hier.mshr[level.cache_idx()];
            mshr.allocs += m.allocs;
            mshr.deallocs += m.deallocs;
            mshr.coalesces += m.coalesces;
            mshr.prefetch_rejects += m.prefetch_rejects;
        }
        let mut config = self.cfg.to_toml_value();
        if let Some(t) = config.as_table_mut() {
            t.insert("mode".into(), toml::Value::String(self.mode.name().into()));
        }
        RunReport {
            mode: self.mode.name().to_string(),
            accesses: s.accesses,
            reads: s.reads,
            writes: s.writes,
            l1: s.level[0],
            l2: s.level[1],
            l3: s.level[2],
            mem_accesses: s.mem_accesses,
            total_latency: s.total_latency,
            amat: ratio(s.total_latency, s.accesses),
            categories: s.categories,
            predicted_accesses: s.predicted,
            multiway: s.multiway,
            meta_lookups: s.meta_lookups,
            meta_hits: s.meta_hits,
            meta_hit_ratio: ratio(s.meta_hits, s.meta_lookups),
            pld_predictions: s.pld_predictions,
            pld_correct: s.pld_correct,
            pld_accuracy_on_meta_misses: ratio(s.pld_correct, s.pld_predictions),
            recoveries: s.recoveries,
            locmap_overhead_ratio: self
                .predictor
                .as_ref()
                .map_or(0.0, |p| p.locmap().overhead_ratio()),
            energy_counters: s.energy,
            energy_total: s
                .energy
                .total(&self.cfg.energy, self.mode == EngineMode::Tage8k),
            prefetchers: s.prefetch,
            mshr,
            effectiveness: effectiveness(
                s.level[0].misses,
                s.level[1].misses,
                s.level[2].misses,
                &self.cfg.effectiveness,
            ),
            windows,
            config,
        }
    }

    pub fn run(cfg: &RunConfig, mode: EngineMode, events: &[TraceEvent]) -> RunReport {
        let mut engine = Engine::new(cfg, mode);
        for ev in events {
            engine.step(ev);
        }
        engine.report()
    }
}
