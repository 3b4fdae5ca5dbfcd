//! Prediction-outcome classification, AMAT and energy accounting, and the
//! workload-effectiveness analysis.

use serde::{Deserialize, Serialize};

use crate::mem::MemLevel;
use crate::predictor::{PredictTarget, Prediction};

/// Outcome of one predicted L1 miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionCategory {
    /// Predicted sequential and the block was in L2.
    SequentialCorrect,
    /// Correctly skipped at least one level shallower than the serving level.
    UsefulSkip,
    /// Predicted sequential for an access that could have skipped levels.
    OpportunityLoss,
    /// Bypassed an on-chip level holding the block; directory-driven recovery.
    Harmful,
}

/// Maps a prediction and the level that actually served the access to its
/// accuracy category. Every predicted access lands in exactly one category.
pub fn classify(prediction: &Prediction, actual: MemLevel) -> PredictionCategory {
    debug_assert!(actual != MemLevel::L1, "L1 hits are never classified");
    let actual_target = PredictTarget::from_level(actual).expect("actual is not L1");
    if prediction.sequential() {
        return if actual == MemLevel::L2 {
            PredictionCategory::SequentialCorrect
        } else {
            PredictionCategory::OpportunityLoss
        };
    }
    if actual != MemLevel::Mem && !prediction.contains(actual_target) {
        return PredictionCategory::Harmful;
    }
    // Accurate (or safe fall-through to memory): useful iff some level
    // shallower than the serving level was skipped.
    let skipped_shallower = [PredictTarget::L2, PredictTarget::L3]
        .into_iter()
        .any(|t| t.to_level() < actual && !prediction.contains(t));
    if skipped_shallower {
        PredictionCategory::UsefulSkip
    } else {
        PredictionCategory::SequentialCorrect
    }
}

/// Per-event energy constants in relative units. These are configuration
/// inputs ordered by structure size, not derived from a circuit model;
/// results should be compared as ratios against the baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    pub tag_l1: f64,
    pub tag_l2: f64,
    pub tag_l3: f64,
    pub data_l1: f64,
    pub data_l2: f64,
    pub data_l3: f64,
    pub dir: f64,
    pub meta_access: f64,
    pub pld: f64,
    pub locmap_fill: f64,
    pub mem_access: f64,
    pub tage_2k: f64,
    pub tage_8k: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tag_l1: 1.0,
            tag_l2: 2.0,
            tag_l3: 8.0,
            data_l1: 2.0,
            data_l2: 4.0,
            data_l3: 20.0,
            dir: 2.0,
            meta_access: 0.5,
            pld: 0.01,
            locmap_fill: 30.0,
            mem_access: 200.0,
            tage_2k: 0.5,
            tage_8k: 2.0,
        }
    }
}

/// Event counters the energy total is a dot product over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyCounters {
    pub tag_accesses: [u64; 3],
    pub data_accesses: [u64; 3],
    pub dir_accesses: u64,
    pub meta_accesses: u64,
    pub pld_accesses: u64,
    pub locmap_fills: u64,
    pub mem_accesses: u64,
    pub tage_accesses: u64,
}

impl EnergyCounters {
    pub fn tag(&mut self, level: MemLevel) {
        self.tag_accesses[level.cache_idx()] += 1;
    }

    pub fn data(&mut self, level: MemLevel) {
        self.data_accesses[level.cache_idx()] += 1;
    }

    /// Exact accounting identity: total = sum(count x constant).
    pub fn total(&self, model: &EnergyModel, tage_is_8k: bool) -> f64 {
        let tag = [model.tag_l1, model.tag_l2, model.tag_l3];
        let data = [model.data_l1, model.data_l2, model.data_l3];
        let mut sum = 0.0;
        for i in 0..3 {
            sum += self.tag_accesses[i] as f64 * tag[i];
            sum += self.data_accesses[i] as f64 * data[i];
        }
        sum += self.dir_accesses as f64 * model.dir;
        sum += self.meta_accesses as f64 * model.meta_access;
        sum += self.pld_accesses as f64 * model.pld;
        sum += self.locmap_fills as f64 * model.locmap_fill;
        sum += self.mem_accesses as f64 * model.mem_access;
        let tage = if tage_is_8k { model.tage_8k } else { model.tage_2k };
        sum += self.tage_accesses as f64 * tage;
        sum
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub sequential_correct: u64,
    pub useful_skip: u64,
    pub opportunity_loss: u64,
    pub harmful: u64,
}

impl CategoryCounts {
    pub fn record(&mut self, cat: PredictionCategory) {
        match cat {
            PredictionCategory::SequentialCorrect => self.sequential_correct += 1,
            PredictionCategory::UsefulSkip => self.useful_skip += 1,
            PredictionCategory::OpportunityLoss => self.opportunity_loss += 1,
            PredictionCategory::Harmful => self.harmful += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.sequential_correct + self.useful_skip + self.opportunity_loss + self.harmful
    }

    /// Fraction of predictions that did not require recovery or lose
    /// opportunity.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 1.0;
        }
        (self.sequential_correct + self.useful_skip) as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowStats {
    pub index: u64,
    pub accesses: u64,
    pub l1_misses: u64,
    pub l2_misses: u64,
    pub l3_misses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectivenessClass {
    SequentialFriendly,
    SkipFriendly,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessThresholds {
    pub skip_x: f64,
    pub skip_y: f64,
    pub seq_x: f64,
    pub seq_y: f64,
}

impl Default for EffectivenessThresholds {
    fn default() -> Self {
        EffectivenessThresholds {
            skip_x: 1.5,
            skip_y: 1.5,
            seq_x: 3.0,
            seq_y: 2.0,
        }
    }
}

/// Miss-filtering ratios: x = L1 misses per L2 miss (L2 effectiveness),
/// y = L2 misses per L3 miss. A zero denominator reports `None` (infinite
/// filtering).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effectiveness {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub class: EffectivenessClass,
}

pub fn effectiveness(
    l1_misses: u64,
    l2_misses: u64,
    l3_misses: u64,
    thresholds: &EffectivenessThresholds,
) -> Effectiveness {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let x = ratio(l1_misses, l2_misses);
    let y = ratio(l2_misses, l3_misses);
    let xv = x.unwrap_or(f64::INFINITY);
    let yv = y.unwrap_or(f64::INFINITY);
    let class = if xv < thresholds.skip_x && yv < thresholds.skip_y {
        EffectivenessClass::SkipFriendly
    } else if xv > thresholds.seq_x && yv > thresholds.seq_y {
        EffectivenessClass::SequentialFriendly
    } else {
        EffectivenessClass::Mixed
    };
    Effectiveness { x, y, class }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelHitMiss {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefetcherReport {
    pub issued: u64,
    pub useful: u64,
    pub mshr_rejected: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiwayDistribution {
    pub single: u64,
    pub two_way: u64,
    pub three_way: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MshrReport {
    pub allocs: u64,
    pub deallocs: u64,
    pub coalesces: u64,
    pub prefetch_rejects: u64,
    pub demand_stalls: u64,
    pub recovery_deallocs: u64,
}

/// Aggregate output of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub accesses: u64,
    pub reads: u64,
    pub writes: u64,
    pub l1: LevelHitMiss,
    pub l2: LevelHitMiss,
    pub l3: LevelHitMiss,
    pub mem_accesses: u64,
    pub total_latency: u64,
    pub amat: f64,
    pub categories: CategoryCounts,
    pub predicted_accesses: u64,
    pub multiway: MultiwayDistribution,
    pub meta_lookups: u64,
    pub meta_hits: u64,
    pub meta_hit_ratio: f64,
    pub pld_predictions: u64,
    pub pld_correct: u64,
    pub pld_accuracy_on_meta_misses: f64,
    pub recoveries: u64,
    /// Metadata overhead of the LocMap relative to physical memory (2/512).
    pub locmap_overhead_ratio: f64,
    pub energy_counters: EnergyCounters,
    pub energy_total: f64,
    pub prefetchers: [PrefetcherReport; 3],
    pub mshr: MshrReport,
    pub effectiveness: Effectiveness,
    pub windows: Vec<WindowStats>,
    /// Fully-resolved configuration, echoed so runs are self-describing.
    pub config: toml::Value,
}

impl RunReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<RunReport, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// One metric per row; the per-window series goes to a companion file.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
        push("mode", self.mode.clone());
        push("accesses", self.accesses.to_string());
        push("reads", self.reads.to_string());
        push("writes", self.writes.to_string());
        push("l1_hits", self.l1.hits.to_string());
        push("l1_misses", self.l1.misses.to_string());
        push("l2_hits", self.l2.hits.to_string());
        push("l2_misses", self.l2.misses.to_string());
        push("l3_hits", self.l3.hits.to_string());
        push("l3_misses", self.l3.misses.to_string());
        push("mem_accesses", self.mem_accesses.to_string());
        push("total_latency", self.total_latency.to_string());
        push("amat", format!("{}", self.amat));
        push("sequential_correct", self.categories.sequential_correct.to_string());
        push("useful_skip", self.categories.useful_skip.to_string());
        push("opportunity_loss", self.categories.opportunity_loss.to_string());
        push("harmful", self.categories.harmful.to_string());
        push("predicted_accesses", self.predicted_accesses.to_string());
        push("multiway_single", self.multiway.single.to_string());
        push("multiway_two_way", self.multiway.two_way.to_string());
        push("multiway_three_way", self.multiway.three_way.to_string());
        push("meta_hit_ratio", format!("{}", self.meta_hit_ratio));
        push("pld_accuracy_on_meta_misses", format!("{}", self.pld_accuracy_on_meta_misses));
        push("recoveries", self.recoveries.to_string());
        push("locmap_overhead_ratio", format!("{}", self.locmap_overhead_ratio));
        push("energy_total", format!("{}", self.energy_total));
        push(
            "effectiveness_x",
            self.effectiveness.x.map_or("inf".into(), |v| v.to_string()),
        );
        push(
            "effectiveness_y",
            self.effectiveness.y.map_or("inf".into(), |v| v.to_string()),
        );
        push(
            "effectiveness_class",
            format!("{:?}", self.effectiveness.class),
        );
        let mut out = String::from("metric,value\n");
        for (k, v) in rows {
            out.push_str(&k);
            out.push(',');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    pub fn windows_csv(&self) -> String {
        let mut out = String::from("window,accesses,l1_misses,l2_misses,l3_misses\n");
        for w in &self.windows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                w.index, w.accesses, w.l1_misses, w.l2_misses, w.l3_misses
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::PredictionSource;

    fn pred(targets: Vec<PredictTarget>) -> Prediction {
        Prediction {
            targets,
            source: PredictionSource::LocMap,
        }
    }

    #[test]
    fn classify_spec_examples() {
        use PredictTarget::*;
        assert_eq!(
            classify(&pred(vec![L3]), MemLevel::L3),
            PredictionCategory::UsefulSkip
        );
        assert_eq!(
            classify(&pred(vec![L2]), MemLevel::Mem),
            PredictionCategory::OpportunityLoss
        );
        assert_eq!(
            classify(&pred(vec![L3]), MemLevel::L2),
            PredictionCategory::Harmful
        );
    }

    #[test]
    fn classify_multiway_rules() {
        use PredictTarget::*;
        // Contains the actual level but skipped nothing shallower.
        assert_eq!(
            classify(&pred(vec![L2, L3]), MemLevel::L3),
            PredictionCategory::SequentialCorrect
        );
        // Contains the actual level and skipped L2.
        assert_eq!(
            classify(&pred(vec![L3, Mem]), MemLevel::L3),
            PredictionCategory::UsefulSkip
        );
        // Safe fall-through to memory after skipping L2.
        assert_eq!(
            classify(&pred(vec![L3]), MemLevel::Mem),
            PredictionCategory::UsefulSkip
        );
        // All three levels in parallel is never a skip.
        assert_eq!(
            classify(&pred(vec![L2, L3, Mem]), MemLevel::Mem),
            PredictionCategory::SequentialCorrect
        );
        // On-chip block missed by every target.
        assert_eq!(
            classify(&pred(vec![L3, Mem]), MemLevel::L2),
            PredictionCategory::Harmful
        );
        assert_eq!(
            classify(&pred(vec![L2, Mem]), MemLevel::L3),
            PredictionCategory::Harmful
        );
    }

    #[test]
    fn classify_sequential_correct() {
        assert_eq!(
            classify(&pred(vec![PredictTarget::L2]), MemLevel::L2),
            PredictionCategory::SequentialCorrect
        );
    }

    #[test]
    fn effectiveness_examples() {
        let t = EffectivenessThresholds::default();
        let e = effectiveness(300, 100, 50, &t);
        assert_eq!(e.x, Some(3.0));
        assert_eq!(e.y, Some(2.0));
        let e = effectiveness(100, 98, 95, &t);
        assert_eq!(e.class, EffectivenessClass::SkipFriendly);
        let e = effectiveness(300, 90, 0, &t);
        assert_eq!(e.y, None);
        assert_eq!(e.class, EffectivenessClass::SequentialFriendly);
    }

    #[test]
    fn energy_total_is_dot_product() {
        let model = EnergyModel::default();
        let c = EnergyCounters {
            tag_accesses: [10, 5, 2],
            data_accesses: [10, 5, 1],
            dir_accesses: 2,
            meta_accesses: 4,
            pld_accesses: 3,
            locmap_fills: 1,
            mem_accesses: 2,
            tage_accesses: 0,
        };
        let expect = 10.0 * 1.0
            + 5.0 * 2.0
            + 2.0 * 8.0
            + 10.0 * 2.0
            + 5.0 * 4.0
            + 1.0 * 20.0
            + 2.0 * 2.0
            + 4.0 * 0.5
            + 3.0 * 0.01
            + 1.0 * 30.0
            + 2.0 * 200.0;
        assert_eq!(c.total(&model, false), expect);
    }
}
