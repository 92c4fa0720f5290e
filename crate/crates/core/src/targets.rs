//! Reference values for the three-scenario study and the tolerance bands used
//! when comparing a run against them.

use serde::Serialize;

use crate::pipeline::{Method, RepetitionReport, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub scenario: u8,
    pub table: Table,
    pub method: Method,
    /// 1-based class; `None` for overall or macro values.
    pub class: Option<usize>,
    pub statistic: &'static str,
    pub reference: f64,
    pub lower: f64,
    pub upper: f64,
}

#[allow(clippy::too_many_arguments)]
const fn band(
    scenario: u8,
    table: Table,
    method: Method,
    class: Option<usize>,
    statistic: &'static str,
    reference: f64,
    lower: f64,
    upper: f64,
) -> Target {
    Target {
        scenario,
        table,
        method,
        class,
        statistic,
        reference,
        lower,
        upper,
    }
}

use Method::{Naive, WeightedBoot};
use Table::{Ambiguity, Coverage, Metrics, Thresholds};

pub const TARGETS: &[Target] = &[
    band(1, Coverage, WeightedBoot, Some(1), "coverage", 0.90, 0.88, 0.92),
    band(1, Coverage, WeightedBoot, Some(2), "coverage", 0.90, 0.88, 0.92),
    band(1, Coverage, WeightedBoot, Some(3), "coverage", 0.90, 0.88, 0.92),
    band(2, Coverage, WeightedBoot, Some(1), "coverage", 0.90, 0.88, 0.92),
    band(2, Coverage, WeightedBoot, Some(2), "coverage", 0.90, 0.88, 0.92),
    band(2, Coverage, WeightedBoot, Some(3), "coverage", 0.90, 0.88, 0.92),
    band(3, Coverage, WeightedBoot, Some(1), "coverage", 0.90, 0.88, 0.92),
    band(3, Coverage, WeightedBoot, Some(2), "coverage", 0.90, 0.88, 0.92),
    band(3, Coverage, WeightedBoot, Some(3), "coverage", 0.90, 0.88, 0.92),
    band(3, Coverage, Naive, Some(1), "coverage", 0.54, 0.49, 0.59),
    band(3, Coverage, Naive, Some(2), "coverage", 0.62, 0.57, 0.67),
    band(3, Coverage, Naive, Some(3), "coverage", 0.00, 0.00, 0.02),
    band(1, Thresholds, WeightedBoot, Some(1), "threshold", 0.659, 0.609, 0.709),
    band(1, Thresholds, WeightedBoot, Some(2), "threshold", 0.393, 0.343, 0.443),
    band(1, Thresholds, WeightedBoot, Some(3), "threshold", 0.112, 0.062, 0.162),
    band(1, Metrics, Naive, None, "accuracy", 0.89, 0.87, 0.91),
    band(1, Metrics, WeightedBoot, None, "accuracy", 0.86, 0.84, 0.88),
    band(3, Metrics, Naive, Some(3), "sensitivity", 0.00, 0.00, 0.02),
    band(3, Metrics, WeightedBoot, Some(3), "sensitivity", 0.36, 0.31, 0.41),
    band(1, Ambiguity, WeightedBoot, None, "size_1", 0.75, 0.70, 0.80),
    band(1, Ambiguity, WeightedBoot, Some(1), "size_1", 0.90, 0.90, 1.00),
    band(1, Ambiguity, WeightedBoot, Some(2), "size_1", 0.67, 0.62, 0.72),
    band(1, Ambiguity, WeightedBoot, Some(3), "size_1", 0.41, 0.36, 0.46),
];

/// Class shares of the simulated population.
pub const CLASS_SHARES: [f64; 3] = [0.37, 0.49, 0.13];
pub const CLASS_SHARE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub target: Target,
    pub observed: Option<f64>,
    pub within: bool,
}

pub fn compare(target: &Target, report: &RepetitionReport) -> Comparison {
    let observed = report.mean(target.table, target.method, target.class, target.statistic);
    Comparison {
        target: *target,
        observed,
        within: observed.is_some_and(|v| v >= target.lower - 1e-12 && v <= target.upper + 1e-12),
    }
}

/// Comparisons for every target of `report`'s scenario.
pub fn compare_report(report: &RepetitionReport) -> Vec<Comparison> {
    TARGETS
        .iter()
        .filter(|t| t.scenario == report.config.scenario.id())
        .map(|t| compare(t, report))
        .collect()
}
