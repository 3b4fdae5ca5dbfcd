//! Randomized invariants over the core structures.

use proptest::prelude::*;

use levelsim::config::{EngineMode, RunConfig};
use levelsim::engine::Engine;
use levelsim::mem::{BlockAddr, MemLevel, MshrFile, MshrOutcome};
use levelsim::metrics::{classify, PredictionCategory, RunReport};
use levelsim::predictor::{popular_levels, LocMapTable, PredictTarget, Prediction, PredictionSource};
use levelsim::trace::{self, Op, SynthKind, SyntheticSpec, TraceEvent};

fn small_trace(addrs: Vec<(u32, bool)>) -> Vec<TraceEvent> {
    addrs
        .into_iter()
        .map(|(a, w)| TraceEvent {
            op: if w { Op::W } else { Op::R },
            // Confine to a 1 MiB footprint so sets collide often.
            addr: (a as u64 % (1 << 20)) & !63,
            pc: Some(0x400000 + (a as u64 % 7) * 8),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// After any access sequence the directory mirrors the caches exactly
    /// and L2 still includes L1, in every mode.
    #[test]
    fn directory_and_inclusion_hold(addrs in prop::collection::vec((any::<u32>(), any::<bool>()), 1..400)) {
        let events = small_trace(addrs);
        let cfg = RunConfig::default();
        for mode in EngineMode::ALL {
            let mut e = Engine::new(&cfg, mode);
            for ev in &events {
                e.step(ev);
            }
            prop_assert!(e.hierarchy().audit().is_ok());
            prop_assert!(e.hierarchy().check_inclusion().is_ok());
        }
    }

    /// Baseline and predicted modes replay the identical functional state.
    #[test]
    fn modes_share_state(addrs in prop::collection::vec((any::<u32>(), any::<bool>()), 1..300)) {
        let events = small_trace(addrs);
        let cfg = RunConfig::default();
        let runs: Vec<u64> = EngineMode::ALL
            .iter()
            .map(|&m| {
                let mut e = Engine::new(&cfg, m);
                for ev in &events {
                    e.step(ev);
                }
                e.fingerprint()
            })
            .collect();
        for fp in &runs[1..] {
            prop_assert_eq!(*fp, runs[0]);
        }
    }

    /// MSHR occupancy never exceeds capacity, demand is only rejected when
    /// completely full, and prefetches are rejected at the reserve floor.
    #[test]
    fn mshr_occupancy_bounds(ops in prop::collection::vec((0u64..64, any::<bool>()), 1..500)) {
        let mut m = MshrFile::new(16);
        let mut live: Vec<BlockAddr> = Vec::new();
        for (block, demand) in ops {
            let block = BlockAddr(block);
            match m.allocate(block, demand, 0) {
                MshrOutcome::Allocated => live.push(block),
                MshrOutcome::Rejected => {
                    if demand {
                        prop_assert_eq!(m.free(), 0);
                    } else {
                        prop_assert!(m.free() <= m.reserve_floor());
                    }
                    // Free one entry so the sequence keeps exercising both sides.
                    if let Some(b) = live.pop() {
                        m.deallocate(b);
                    }
                }
                MshrOutcome::Coalesced => {
                    m.release_target(block);
                }
            }
            prop_assert!(m.occupancy() <= 16);
        }
    }

    /// Selection depends only on counter ratios.
    #[test]
    fn popular_levels_scale_invariant(
        a in 0u64..10_000, b in 0u64..10_000, c in 0u64..10_000, k in 1u64..100_000
    ) {
        let base = popular_levels([a, b, c], 0.8, 0.95);
        prop_assert_eq!(&base, &popular_levels([a * k, b * k, c * k], 0.8, 0.95));
        prop_assert!(!base.is_empty());
        let mut sorted = base.clone();
        sorted.sort();
        prop_assert_eq!(sorted, base); // shallow-first ordering
    }

    /// Distinct blocks always map to distinct (line, bit-offset) slots.
    #[test]
    fn locmap_index_injective(blocks in prop::collection::hash_set(0u64..(1 << 24), 2..100)) {
        let table = LocMapTable::new(1 << 30, 77);
        let mut seen = std::collections::HashSet::new();
        for b in blocks {
            prop_assert!(seen.insert(table.locmap_index(BlockAddr(b))));
        }
    }

    /// Classification is total and consistent with its definition.
    #[test]
    fn classification_is_consistent(
        mask in 1u8..8, actual_idx in 0usize..3
    ) {
        use PredictTarget as T;
        let targets: Vec<T> = [T::L2, T::L3, T::Mem]
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| t)
            .collect();
        let actual = [MemLevel::L2, MemLevel::L3, MemLevel::Mem][actual_idx];
        let pred = Prediction { targets: targets.clone(), source: PredictionSource::LocMap };
        let cat = classify(&pred, actual);
        match cat {
            PredictionCategory::Harmful => {
                prop_assert!(actual != MemLevel::Mem);
                prop_assert!(!targets.contains(&T::from_level(actual).unwrap()));
            }
            PredictionCategory::OpportunityLoss => {
                prop_assert_eq!(&targets, &vec![T::L2]);
                prop_assert!(actual != MemLevel::L2);
            }
            PredictionCategory::UsefulSkip => {
                prop_assert!([T::L2, T::L3].iter().any(|t| t.to_level() < actual && !targets.contains(t)));
            }
            PredictionCategory::SequentialCorrect => {}
        }
    }

    /// Synthetic traces stay inside their declared footprint and are
    /// reproducible from the seed.
    #[test]
    fn synthetic_traces_bounded(seed in any::<u64>(), kind_idx in 0usize..4, count in 1u64..400) {
        let kind = match kind_idx {
            0 => SynthKind::Stream,
            1 => SynthKind::RandomUniform,
            2 => SynthKind::PointerChase,
            _ => SynthKind::Strided { delta_blocks: 5 },
        };
        let spec = SyntheticSpec::single(kind, 64 * 128, count, seed);
        let events = trace::generate(&spec).unwrap();
        prop_assert_eq!(events.len() as u64, count);
        prop_assert!(events.iter().all(|e| e.addr < 64 * 128 && e.addr % 64 == 0));
        prop_assert_eq!(&events, &trace::generate(&spec).unwrap());
    }

    /// Report JSON round-trips exactly.
    #[test]
    fn report_roundtrip(seed in any::<u64>()) {
        let cfg = RunConfig::default();
        let spec = SyntheticSpec::single(SynthKind::RandomUniform, 1 << 18, 300, seed);
        let events = trace::generate(&spec).unwrap();
        let r = Engine::run(&cfg, EngineMode::Locmap, &events);
        prop_assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
    }
}
