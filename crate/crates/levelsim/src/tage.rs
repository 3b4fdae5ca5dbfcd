//! TAGE-style comparison predictor: tagged tables indexed by block address
//! and a shift register of recently resolved levels, with three per-level
//! counters per entry feeding the popular-levels selection heuristic.

use crate::mem::BlockAddr;
use crate::metrics::EnergyCounters;
use crate::predictor::{popular_levels, PredictTarget, Prediction, PredictionSource};

const HISTORY_LENGTHS: [usize; 4] = [0, 4, 8, 16];
const MAX_HISTORY: usize = 16;
/// tag (8) + 3 x 6-bit counters + 2-bit useful = 28 bits per entry.
const ENTRY_BITS: u64 = 28;
const COUNTER_MAX: u8 = 63;
const USEFUL_MAX: u8 = 3;

#[derive(Debug, Clone, Copy)]
struct TageEntry {
    tag: u8,
    counters: [u8; 3],
    useful: u8,
}

#[derive(Debug, Clone)]
struct TageTable {
    hist_len: usize,
    entries: Vec<Option<TageEntry>>,
}

#[derive(Debug, Clone)]
pub struct TagePredictor {
    tables: Vec<TageTable>,
    /// Most recent resolved level first.
    history: Vec<u8>,
    theta_single: f64,
    theta_double: f64,
    budget_bytes: u64,
}

fn mix(block: BlockAddr, history: &[u8], hist_len: usize) -> u64 {
    let mut h = block.0 ^ 0x517c_c1b7_2722_0a95;
    for i in 0..hist_len.min(history.len()) {
        h = h.rotate_left(7) ^ (history[i] as u64 + 1);
    }
    h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^ (h >> 29)
}

impl TagePredictor {
    pub fn new(budget_bytes: u64, theta_single: f64, theta_double: f64) -> Self {
        // Largest power-of-two entry count per table that fits the budget.
        let per_table_bits = budget_bytes * 8 / HISTORY_LENGTHS.len() as u64;
        let mut entries = 1u64;
        while entries * 2 * ENTRY_BITS <= per_table_bits {
            entries *= 2;
        }
        let tables = HISTORY_LENGTHS
            .iter()
            .map(|&hist_len| TageTable {
                hist_len,
                entries: vec![None; entries as usize],
            })
            .collect();
        TagePredictor {
            tables,
            history: Vec::new(),
            theta_single,
            theta_double,
            budget_bytes,
        }
    }

    pub fn storage_bytes(&self) -> u64 {
        let entries: u64 = self.tables.iter().map(|t| t.entries.len() as u64).sum();
        (entries * ENTRY_BITS + 7) / 8
    }

    pub fn budget_bytes(&self) -> u64 {
        self.budget_bytes
    }

    fn slot(&self, table: usize, block: BlockAddr) -> (usize, u8) {
        let t = &self.tables[table];
        let h = mix(block, &self.history, t.hist_len);
        let idx = (h % t.entries.len() as u64) as usize;
        let tag = ((h >> 32) & 0xff) as u8;
        (idx, tag)
    }

    /// Longest-history tagged match wins; no match falls back to sequential.
    pub fn predict(&mut self, block: BlockAddr, energy: &mut EnergyCounters) -> Prediction {
        energy.tage_accesses += 1;
        for table in (0..self.tables.len()).rev() {
            let (idx, tag) = self.slot(table, block);
            if let Some(e) = &self.tables[table].entries[idx] {
                if e.tag == tag {
                    return Prediction {
                        targets: popular_levels(
                            e.counters.map(|c| c as u64),
                            self.theta_single,
                            self.theta_double,
                        ),
                        source: PredictionSource::Tage,
                    };
                }
            }
        }
        Prediction::single(PredictTarget::L2, PredictionSource::Tage)
    }

    pub fn update(&mut self, block: BlockAddr, resolved: PredictTarget, energy: &mut EnergyCounters) {
        energy.tage_accesses += 1;
        let resolved_idx = match resolved {
            PredictTarget::L2 => 0,
            PredictTarget::L3 => 1,
            PredictTarget::Mem => 2,
        };
        let mut matched = None;
        for table in (0..self.tables.len()).rev() {
            let (idx, tag) = self.slot(table, block);
            if let Some(e) = &self.tables[table].entries[idx] {
                if e.tag == tag {
                    matched = Some((table, idx));
                    break;
                }
            }
        }
        match matched {
            Some((table, idx)) => {
                let e = self.tables[table].entries[idx].as_mut().unwrap();
                let top = e
                    .counters
                    .iter()
                    .enumerate()
                    .max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i)))
                    .map(|(i, _)| i)
                    .unwrap();
                if top == resolved_idx {
                    e.useful = (e.useful + 1).min(USEFUL_MAX);
                } else {
                    e.useful = e.useful.saturating_sub(1);
                }
                for (i, c) in e.counters.iter_mut().enumerate() {
                    if i == resolved_idx {
                        *c = (*c + 1).min(COUNTER_MAX);
                    } else {
                        *c = c.saturating_sub(1);
                    }
                }
            }
            None => {
                // Allocate into the first table whose slot is free or no
                // longer useful; otherwise age the candidates.
                let mut allocated = false;
                for table in 0..self.tables.len() {
                    let (idx, tag) = self.slot(table, block);
                    let slot = &mut self.tables[table].entries[idx];
                    let replaceable = match slot {
                        None => true,
                        Some(e) => e.useful == 0,
                    };
                    if replaceable {
                        let mut counters = [0u8; 3];
                        counters[resolved_idx] = 1;
                        *slot = Some(TageEntry {
                            tag,
                            counters,
                            useful: 0,
                        });
                        allocated = true;
                        break;
                    }
                }
                if !allocated {
                    for table in 0..self.tables.len() {
                        let (idx, _) = self.slot(table, block);
                        if let Some(e) = self.tables[table].entries[idx].as_mut() {
                            e.useful = e.useful.saturating_sub(1);
                        }
                    }
                }
            }
        }
        self.history.insert(0, resolved_idx as u8);
        self.history.truncate(MAX_HISTORY);
    }
}
