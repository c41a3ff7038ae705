//! Strategy-usage analytics over a transcript.

use serde::{Deserialize, Serialize};

use super::{EventBody, InteractionEvent};
use crate::model::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyUsageStats {
    pub distinct_strategies: usize,
    pub total_uses: usize,
    /// Shannon entropy in bits of the completion distribution.
    pub entropy_bits: f64,
}

pub fn usage_from_counts(counts: &[usize]) -> StrategyUsageStats {
    let total: usize = counts.iter().sum();
    let distinct = counts.iter().filter(|c| **c > 0).count();
    let entropy_bits = if total == 0 {
        0.0
    } else {
        counts
            .iter()
            .filter(|c| **c > 0)
            .map(|&c| {
                let p = c as f64 / total as f64;
                -p * p.log2()
            })
            .sum::<f64>()
            .max(0.0)
    };
    StrategyUsageStats { distinct_strategies: distinct, total_uses: total, entropy_bits }
}

/// Counts `StrategyCompleted` events per strategy, cached re-emissions
/// included.
pub fn strategy_usage_stats(events: &[InteractionEvent]) -> StrategyUsageStats {
    let mut counts = [0usize; 4];
    for ev in events {
        if let EventBody::StrategyCompleted { strategy, .. } = &ev.body {
            counts[strategy_slot(*strategy)] += 1;
        }
    }
    usage_from_counts(&counts)
}

fn strategy_slot(kind: StrategyKind) -> usize {
    StrategyKind::ALL.iter().position(|k| *k == kind).expect("every kind is listed")
}
