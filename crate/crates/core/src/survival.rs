//! Kaplan-Meier estimation under right censoring, stratified by class label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SurvivalData;

pub const DEFAULT_HORIZONS: [f64; 2] = [90.0, 365.0];

/// Multiplier of the repetition sd in the single-iteration interval rule.
pub const NARROW_MULTIPLIER: f64 = 0.95;
pub const NORMAL_MULTIPLIER: f64 = 1.96;

/// Slack for the `S(t) <= 0.5` median test so products such as `3/4 * 2/3` count as one half.
const MEDIAN_SLACK: f64 = 1e-12;

/// Right-continuous step function: `survival[j]` holds on `[times[j], times[j+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
    /// Largest observed time, event or censored.
    pub last_time: f64,
}

pub fn kaplan_meier(sd: &SurvivalData) -> Result<KMCurve> {
    if sd.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut order: Vec<usize> = (0..sd.len()).collect();
    order.sort_by(|&a, &b| sd.time()[a].total_cmp(&sd.time()[b]));

    let mut curve = KMCurve {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
        last_time: sd.time()[order[order.len() - 1]],
    };
    let mut remaining = sd.len();
    let mut s = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = sd.time()[order[i]];
        let mut j = i;
        let mut deaths = 0;
        while j < order.len() && sd.time()[order[j]] == t {
            deaths += usize::from(sd.event()[order[j]]);
            j += 1;
        }
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / remaining as f64;
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(remaining);
            curve.events.push(deaths);
        }
        remaining -= j - i;
        i = j;
    }
    Ok(curve)
}

/// `S(t)`, or `None` past the last follow-up while the risk set is unresolved.
pub fn survival_at(curve: &KMCurve, t: f64) -> Option<f64> {
    if t.is_nan() || t < 0.0 {
        return None;
    }
    let last = curve.survival.last().copied().unwrap_or(1.0);
    if t > curve.last_time && last > 0.0 {
        return None;
    }
    let idx = curve.times.partition_point(|&e| e <= t);
    Some(if idx == 0 { 1.0 } else { curve.survival[idx - 1] })
}

/// Smallest event time with `S(t) <= 0.5`; `None` if never reached.
pub fn median_survival(curve: &KMCurve) -> Option<f64> {
    curve
        .times
        .iter()
        .zip(&curve.survival)
        .find(|(_, &s)| s <= 0.5 + MEDIAN_SLACK)
        .map(|(&t, _)| t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    pub n: usize,
    /// `S(h)` for each requested horizon.
    pub at_horizon: Vec<Option<f64>>,
    pub median: Option<f64>,
}

pub fn estimate(sd: &SurvivalData, horizons: &[f64]) -> Result<StratumEstimate> {
    let curve = kaplan_meier(sd)?;
    Ok(StratumEstimate {
        n: sd.len(),
        at_horizon: horizons.iter().map(|&h| survival_at(&curve, h)).collect(),
        median: median_survival(&curve),
    })
}

/// Kaplan-Meier summaries within each class stratum; empty strata yield `EmptyStratum`.
pub fn stratified_estimates(
    sd: &SurvivalData,
    labels: &[usize],
    k: usize,
    horizons: &[f64],
) -> Result<Vec<Result<StratumEstimate>>> {
    if labels.len() != sd.len() {
        return Err(Error::DimensionMismatch {
            expected: sd.len(),
            got: labels.len(),
        });
    }
    Ok((0..k)
        .map(|class| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if idx.is_empty() {
                Err(Error::EmptyStratum { class: class + 1 })
            } else {
                estimate(&sd.select(&idx), horizons)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCell {
    pub at_horizon: Vec<Option<f64>>,
    pub median: Option<f64>,
}

/// Predicted-stratum minus observed-stratum estimates, per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalBias {
    pub per_class: Vec<BiasCell>,
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

pub fn survival_bias(pred: &[Result<StratumEstimate>], obs: &[Result<StratumEstimate>]) -> Result<SurvivalBias> {
    if pred.len() != obs.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            got: pred.len(),
        });
    }
    let per_class = pred
        .iter()
        .zip(obs)
        .map(|(p, o)| match (p, o) {
            (Ok(p), Ok(o)) => BiasCell {
                at_horizon: p
                    .at_horizon
                    .iter()
                    .zip(&o.at_horizon)
                    .map(|(&a, &b)| diff(a, b))
                    .collect(),
                median: diff(p.median, o.median),
            },
            _ => {
                let h = p.as_ref().or(o.as_ref()).map_or(0, |e| e.at_horizon.len());
                BiasCell {
                    at_horizon: vec![None; h],
                    median: None,
                }
            }
        })
        .collect();
    Ok(SurvivalBias { per_class })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionInterval {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    /// `mean -/+ 0.95 sd`, the rule as printed for single-iteration estimates.
    pub narrow: (f64, f64),
    /// `mean -/+ 1.96 sd`.
    pub normal: (f64, f64),
}

pub fn repetition_interval(estimates: &[f64]) -> Result<RepetitionInterval> {
    let n = estimates.len();
    if n < 2 {
        return Err(Error::TooFewSamples { have: n, need: 2 });
    }
    let mean = estimates.iter().sum::<f64>() / n as f64;
    let sd = (estimates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    Ok(RepetitionInterval {
        n,
        mean,
        sd,
        narrow: (mean - NARROW_MULTIPLIER * sd, mean + NARROW_MULTIPLIER * sd),
        normal: (mean - NORMAL_MULTIPLIER * sd, mean + NORMAL_MULTIPLIER * sd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(time: &[f64], event: &[bool]) -> SurvivalData {
        SurvivalData::new(time.to_vec(), event.to_vec()).unwrap()
    }

    #[test]
    fn all_censored_stays_at_one() {
        let c = kaplan_meier(&sd(&[5.0, 8.0, 9.0], &[false; 3])).unwrap();
        assert!(c.times.is_empty());
        assert_eq!(survival_at(&c, 7.0), Some(1.0));
        assert_eq!(median_survival(&c), None);
    }

    #[test]
    fn hand_product_limit() {
        let c = kaplan_meier(&sd(&[10.0, 15.0, 20.0, 30.0], &[true, false, true, false])).unwrap();
        assert_eq!(survival_at(&c, 10.0), Some(0.75));
        assert_eq!(survival_at(&c, 12.0), Some(0.75));
        assert_eq!(survival_at(&c, 20.0), Some(0.375));
        assert_eq!(survival_at(&c, 0.0), Some(1.0));
        assert_eq!(survival_at(&c, 30.0), Some(0.375));
        assert_eq!(survival_at(&c, 31.0), None);
        assert_eq!(c.at_risk, vec![4, 2]);
    }

    #[test]
    fn curve_reaching_zero_is_defined_beyond_last_time() {
        let c = kaplan_meier(&sd(&[1.0, 2.0], &[true, true])).unwrap();
        assert_eq!(survival_at(&c, 100.0), Some(0.0));
    }

    #[test]
    fn median_at_first_crossing() {
        // 5 subjects, 3 die at t = 33 -> S = 0.4
        let c = kaplan_meier(&sd(&[33.0, 33.0, 33.0, 50.0, 60.0], &[true, true, true, false, false])).unwrap();
        assert_eq!(median_survival(&c), Some(33.0));
    }

    #[test]
    fn median_at_plateau_start() {
        // S = 0.5 on [20, 40), then drops
        let c = kaplan_meier(&sd(&[20.0, 20.0, 40.0, 50.0], &[true, true, true, false])).unwrap();
        assert_eq!(survival_at(&c, 30.0), Some(0.5));
        assert_eq!(median_survival(&c), Some(20.0));
    }

    #[test]
    fn empty_data_and_strata() {
        assert!(matches!(kaplan_meier(&sd(&[], &[])), Err(Error::EmptyData)));
        let data = sd(&[1.0, 2.0], &[true, false]);
        let est = stratified_estimates(&data, &[0, 0], 2, &DEFAULT_HORIZONS).unwrap();
        assert!(est[0].is_ok());
        assert!(matches!(est[1], Err(Error::EmptyStratum { class: 2 })));
    }

    #[test]
    fn bias_subtracts_and_propagates_undefined() {
        let p = vec![Ok(StratumEstimate {
            n: 1,
            at_horizon: vec![Some(0.40), None],
            median: Some(30.0),
        })];
        let o = vec![Ok(StratumEstimate {
            n: 1,
            at_horizon: vec![Some(0.35), Some(0.1)],
            median: None,
        })];
        let b = survival_bias(&p, &o).unwrap();
        assert!((b.per_class[0].at_horizon[0].unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(b.per_class[0].at_horizon[1], None);
        assert_eq!(b.per_class[0].median, None);
        let same = survival_bias(&o, &o).unwrap();
        assert_eq!(same.per_class[0].at_horizon[0], Some(0.0));
    }

    #[test]
    fn repetition_interval_examples() {
        let r = repetition_interval(&[0.4, 0.6]).unwrap();
        assert!((r.mean - 0.5).abs() < 1e-15);
        assert!((r.sd - 0.02_f64.sqrt()).abs() < 1e-12);
        assert!((r.narrow.0 - 0.365_649).abs() < 1e-6);
        assert!((r.narrow.1 - 0.634_351).abs() < 1e-6);
        let c = repetition_interval(&[2.0; 5]).unwrap();
        assert_eq!(c.narrow, (2.0, 2.0));
        assert!(matches!(repetition_interval(&[1.0]), Err(Error::TooFewSamples { .. })));
    }
}
