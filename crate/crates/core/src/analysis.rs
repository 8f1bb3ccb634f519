//! Metric series and summaries over a sequence of estimated gain snapshots.

use crate::channel::{
    capacity, db_to_amplitude, gain_ratios, normalized_capacity, rss_dbm, siso_capacity_sum,
    GainRatioVector, GainVector, Rss, Snr,
};
use crate::error::{Error, Result};

/// Estimated gains of one snapshot with its position in the run.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSnapshot {
    pub interval: u32,
    pub snapshot: u32,
    pub time_ms: f64,
    pub gains: GainVector,
}

/// How gains are turned into capacities.
///
/// With a `reference_dbm`, capacity is evaluated on gains rescaled so that
/// `|h|² = 1` corresponds to that received level; `rho` is then the SNR of an
/// element receiving exactly the reference level. Without one, the gains are
/// used as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    pub rho: Snr,
    pub tx_power_dbm: f64,
    pub reference_dbm: Option<f64>,
}

impl AnalysisParams {
    pub fn capacity_scale(&self) -> f64 {
        match self.reference_dbm {
            Some(reference) => db_to_amplitude(self.tx_power_dbm - reference),
            None => 1.0,
        }
    }

    pub fn capacity_gains(&self, h: &GainVector) -> Result<GainVector> {
        match self.reference_dbm {
            Some(_) => h.scaled(self.capacity_scale()),
            None => Ok(h.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub interval: u32,
    pub snapshot: u32,
    pub time_ms: f64,
    pub rss: Vec<Rss>,
    /// `None` when the reference element is dead.
    pub k: Option<GainRatioVector>,
    pub capacity: f64,
    /// `None` for an all-zero channel.
    pub normalized_capacity: Option<f64>,
    /// Mean of the single-element capacities.
    pub mean_siso_capacity: f64,
}

/// Labels that travel with a series into its report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesMeta {
    pub geometry: String,
    pub geometry_detail: Vec<(String, String)>,
    pub config_echo: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub params: AnalysisParams,
    pub elements: usize,
    pub meta: SeriesMeta,
    pub records: Vec<MetricRecord>,
}

pub fn compute_metrics(snapshots: &[GainSnapshot], params: AnalysisParams) -> Result<MetricSeries> {
    let first = snapshots.first().ok_or(Error::EmptyInput)?;
    if params.rho.linear() <= 0.0 {
        return Err(Error::InvalidInput("analysis SNR must be positive".into()));
    }
    if !params.tx_power_dbm.is_finite() || params.reference_dbm.is_some_and(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("power levels must be finite".into()));
    }
    let elements = first.gains.len();
    let records = snapshots
        .iter()
        .map(|s| {
            if s.gains.len() != elements {
                return Err(Error::InvalidInput(format!(
                    "snapshot {}/{} has {} elements, expected {elements}",
                    s.interval,
                    s.snapshot,
                    s.gains.len()
                )));
            }
            let rss = s
                .gains
                .iter()
                .map(|&h| rss_dbm(h, params.tx_power_dbm))
                .collect::<Result<Vec<_>>>()?;
            let k = match gain_ratios(&s.gains) {
                Ok(k) => Some(k),
                Err(Error::ReferenceZero) => None,
                Err(e) => return Err(e),
            };
            let h = params.capacity_gains(&s.gains)?;
            let normalized = match normalized_capacity(&h, params.rho) {
                Ok(v) => Some(v),
                Err(Error::UndefinedRatio(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(MetricRecord {
                interval: s.interval,
                snapshot: s.snapshot,
                time_ms: s.time_ms,
                rss,
                k,
                capacity: capacity(&h, params.rho)?.bps_per_hz(),
                normalized_capacity: normalized,
                mean_siso_capacity: siso_capacity_sum(&h, params.rho) / elements as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricSeries {
        params,
        elements,
        meta: SeriesMeta {
            geometry: "unknown".into(),
            ..SeriesMeta::default()
        },
        records,
    })
}

/// Order-free descriptive statistics. Values are sorted before summation so
/// the result does not depend on input order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        let mean = if min == max {
            min
        } else {
            (sorted.iter().sum::<f64>() / n).clamp(min, max)
        };
        let mut deviations: Vec<f64> = sorted.iter().map(|v| (v - mean).powi(2)).collect();
        deviations.sort_by(f64::total_cmp);
        let std = (deviations.iter().sum::<f64>() / n).sqrt();
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Some(Stats {
            count: sorted.len(),
            mean,
            std,
            median,
            min,
            max,
        })
    }

    pub fn peak_to_peak(&self) -> f64 {
        self.max - self.min
    }
}

fn ordered_mean(values: &[f64]) -> Option<f64> {
    Stats::from_values(values).map(|s| s.mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSummary {
    pub mean_rss_dbm: Option<f64>,
    pub p2p_rss_db: Option<f64>,
    pub below_floor: usize,
    pub mean_k_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSummary {
    pub interval: u32,
    pub snapshots: usize,
    pub mean_capacity: f64,
    pub mean_normalized_capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub geometry: String,
    pub snr_db: f64,
    pub rho_linear: f64,
    pub reference_dbm: Option<f64>,
    pub tx_power_dbm: f64,
    pub snapshots: usize,
    pub elements: usize,
    pub intervals: Vec<u32>,
    pub capacity: Stats,
    pub normalized_capacity: Option<Stats>,
    /// mean(C) / mean(mean SISO capacity): the ratio-of-means reading of C_n.
    pub normalized_capacity_ratio_of_means: Option<f64>,
    pub normalized_undefined: usize,
    pub per_element: Vec<ElementSummary>,
    pub k_undefined: usize,
    pub per_interval: Vec<IntervalSummary>,
    pub geometry_detail: Vec<(String, String)>,
    pub config_echo: Vec<(String, String)>,
}

pub fn summarize(series: &MetricSeries) -> Result<SummaryReport> {
    let records = &series.records;
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let capacities: Vec<f64> = records.iter().map(|r| r.capacity).collect();
    let normalized: Vec<f64> = records.iter().filter_map(|r| r.normalized_capacity).collect();
    let defined_siso: Vec<f64> = records
        .iter()
        .filter(|r| r.normalized_capacity.is_some())
        .map(|r| r.mean_siso_capacity)
        .collect();
    let defined_capacity: Vec<f64> = records
        .iter()
        .filter(|r| r.normalized_capacity.is_some())
        .map(|r| r.capacity)
        .collect();
    let ratio_of_means = match (ordered_mean(&defined_capacity), ordered_mean(&defined_siso)) {
        (Some(c), Some(s)) if s > 0.0 => Some(c / s),
        _ => None,
    };

    let per_element = (0..series.elements)
        .map(|i| {
            let levels: Vec<f64> = records.iter().filter_map(|r| r.rss[i].dbm()).collect();
            let rss = Stats::from_values(&levels);
            let k_db: Vec<f64> = records
                .iter()
                .filter_map(|r| r.k.as_ref())
                .map(|k| 20.0 * k.linear()[i].log10())
                .filter(|v| v.is_finite())
                .collect();
            ElementSummary {
                mean_rss_dbm: rss.map(|s| s.mean),
                p2p_rss_db: rss.map(|s| s.peak_to_peak()),
                below_floor: records.len() - levels.len(),
                mean_k_db: ordered_mean(&k_db),
            }
        })
        .collect();

    let mut intervals: Vec<u32> = records.iter().map(|r| r.interval).collect();
    intervals.sort_unstable();
    intervals.dedup();
    let per_interval = intervals
        .iter()
        .map(|&id| {
            let subset: Vec<&MetricRecord> = records.iter().filter(|r| r.interval == id).collect();
            let c: Vec<f64> = subset.iter().map(|r| r.capacity).collect();
            let cn: Vec<f64> = subset.iter().filter_map(|r| r.normalized_capacity).collect();
            IntervalSummary {
                interval: id,
                snapshots: subset.len(),
                mean_capacity: ordered_mean(&c).expect("interval has records"),
                mean_normalized_capacity: ordered_mean(&cn),
            }
        })
        .collect();

    Ok(SummaryReport {
        geometry: series.meta.geometry.clone(),
        snr_db: series.params.rho.db(),
        rho_linear: series.params.rho.linear(),
        reference_dbm: series.params.reference_dbm,
        tx_power_dbm: series.params.tx_power_dbm,
        snapshots: records.len(),
        elements: series.elements,
        intervals,
        capacity: Stats::from_values(&capacities).expect("non-empty"),
        normalized_capacity: Stats::from_values(&normalized),
        normalized_capacity_ratio_of_means: ratio_of_means,
        normalized_undefined: records.len() - normalized.len(),
        per_element,
        k_undefined: records.iter().filter(|r| r.k.is_none()).count(),
        per_interval,
        geometry_detail: series.meta.geometry_detail.clone(),
        config_echo: series.meta.config_echo.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

impl Winner {
    fn of(a: f64, b: f64) -> Winner {
        if a > b {
            Winner::A
        } else if b > a {
            Winner::B
        } else {
            Winner::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub value_a: Option<f64>,
    pub value_b: Option<f64>,
    /// `value_a - value_b`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub rho_linear: f64,
    pub rows: Vec<ComparisonRow>,
    pub higher_capacity: Winner,
    pub higher_normalized_capacity: Winner,
}

const RHO_MATCH_TOLERANCE: f64 = 1e-9;

pub fn compare(a: &SummaryReport, b: &SummaryReport) -> Result<Comparison> {
    let scale = a.rho_linear.abs().max(b.rho_linear.abs()).max(1.0);
    if (a.rho_linear - b.rho_linear).abs() > RHO_MATCH_TOLERANCE * scale {
        return Err(Error::IncomparableReports(format!(
            "rho {} vs {}",
            a.rho_linear, b.rho_linear
        )));
    }
    if a.elements != b.elements {
        return Err(Error::IncomparableReports(format!(
            "{} vs {} elements",
            a.elements, b.elements
        )));
    }
    let row = |metric: String, va: Option<f64>, vb: Option<f64>| ComparisonRow {
        metric,
        value_a: va,
        value_b: vb,
        delta: va.zip(vb).map(|(x, y)| x - y),
    };
    let cn_a = a.normalized_capacity.map(|s| s.mean);
    let cn_b = b.normalized_capacity.map(|s| s.mean);
    let mut rows = vec![
        row("mean_capacity_bps_hz".into(), Some(a.capacity.mean), Some(b.capacity.mean)),
        row("mean_normalized_capacity".into(), cn_a, cn_b),
        row(
            "normalized_capacity_ratio_of_means".into(),
            a.normalized_capacity_ratio_of_means,
            b.normalized_capacity_ratio_of_means,
        ),
    ];
    for (i, (ea, eb)) in a.per_element.iter().zip(&b.per_element).enumerate() {
        rows.push(row(format!("rss_p2p_db_e{}", i + 1), ea.p2p_rss_db, eb.p2p_rss_db));
    }
    Ok(Comparison {
        label_a: a.geometry.clone(),
        label_b: b.geometry.clone(),
        rho_linear: a.rho_linear,
        rows,
        higher_capacity: Winner::of(a.capacity.mean, b.capacity.mean),
        higher_normalized_capacity: match (cn_a, cn_b) {
            (Some(x), Some(y)) => Winner::of(x, y),
            (Some(_), None) => Winner::A,
            (None, Some(_)) => Winner::B,
            (None, None) => Winner::Tie,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn snap(k: u32, gains: &[f64]) -> GainSnapshot {
        GainSnapshot {
            interval: 1,
            snapshot: k,
            time_ms: 4.0 * k as f64,
            gains: GainVector::new(gains.iter().map(|&g| Complex64::new(g, 0.0)).collect()).unwrap(),
        }
    }

    fn params(rho: f64) -> AnalysisParams {
        AnalysisParams {
            rho: Snr::from_linear(rho).unwrap(),
            tx_power_dbm: -8.0,
            reference_dbm: None,
        }
    }

    #[test]
    fn single_snapshot_example() {
        let series = compute_metrics(&[snap(0, &[1.0, 0.0, 0.0, 0.0])], params(100.0)).unwrap();
        let r = &series.records[0];
        assert!((r.capacity - 6.658211482751795).abs() < 1e-12);
        assert_eq!(r.normalized_capacity, Some(4.0));
        assert_eq!(r.k.as_ref().unwrap().linear(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.rss[1], Rss::BelowFloor);
    }

    #[test]
    fn constant_series_has_zero_spread() {
        let snaps: Vec<_> = (0..100).map(|k| snap(k, &[0.7, 0.2, 0.4, 0.9])).collect();
        let series = compute_metrics(&snaps, params(1995.26)).unwrap();
        let report = summarize(&series).unwrap();
        assert_eq!(report.capacity.std, 0.0);
        assert_eq!(report.normalized_capacity.unwrap().std, 0.0);
        for e in &report.per_element {
            assert_eq!(e.p2p_rss_db, Some(0.0));
        }
    }

    #[test]
    fn two_snapshot_rss_arithmetic() {
        // -60 and -58 dBm at tx = -8 dBm.
        let a = db_to_amplitude(-52.0);
        let b = db_to_amplitude(-50.0);
        let series =
            compute_metrics(&[snap(0, &[a, a]), snap(1, &[b, b])], params(10.0)).unwrap();
        let report = summarize(&series).unwrap();
        let e = &report.per_element[0];
        assert!((e.p2p_rss_db.unwrap() - 2.0).abs() < 1e-12);
        assert!((e.mean_rss_dbm.unwrap() - -59.0).abs() < 1e-12);
    }

    #[test]
    fn dead_reference_excludes_k_only() {
        let series = compute_metrics(
            &[snap(0, &[0.0, 1.0, 1.0, 1.0]), snap(1, &[1.0, 1.0, 1.0, 1.0])],
            params(10.0),
        )
        .unwrap();
        assert!(series.records[0].k.is_none());
        let report = summarize(&series).unwrap();
        assert_eq!(report.k_undefined, 1);
        assert_eq!(report.capacity.count, 2);
        assert_eq!(report.per_element[0].below_floor, 1);
    }

    #[test]
    fn all_zero_snapshot_marks_normalized_capacity() {
        let series = compute_metrics(
            &[snap(0, &[0.0, 0.0]), snap(1, &[1.0, 0.5])],
            params(10.0),
        )
        .unwrap();
        assert_eq!(series.records[0].normalized_capacity, None);
        assert_eq!(series.records[0].capacity, 0.0);
        let report = summarize(&series).unwrap();
        assert_eq!(report.normalized_undefined, 1);
        assert_eq!(report.normalized_capacity.unwrap().count, 1);
    }

    #[test]
    fn reference_level_rescales_capacity_only() {
        let snaps = [snap(0, &[2.2e-3, 1e-3])];
        let plain = compute_metrics(&snaps, params(1995.26)).unwrap();
        let referenced = compute_metrics(
            &snaps,
            AnalysisParams {
                reference_dbm: Some(-62.5),
                ..params(1995.26)
            },
        )
        .unwrap();
        assert_eq!(plain.records[0].rss, referenced.records[0].rss);
        assert!(referenced.records[0].capacity > plain.records[0].capacity);
        let scale = db_to_amplitude(-8.0 + 62.5);
        let h = snaps[0].gains.scaled(scale).unwrap();
        let direct = capacity(&h, Snr::from_linear(1995.26).unwrap()).unwrap().bps_per_hz();
        assert_eq!(referenced.records[0].capacity, direct);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(compute_metrics(&[], params(1.0)), Err(Error::EmptyInput)));
        let series = MetricSeries {
            params: params(1.0),
            elements: 4,
            meta: SeriesMeta::default(),
            records: vec![],
        };
        assert!(matches!(summarize(&series), Err(Error::EmptyInput)));
    }

    #[test]
    fn stats_median_and_spread() {
        let s = Stats::from_values(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.peak_to_peak(), 9.0);
        assert_eq!(s.mean, 4.0);
        assert!((s.std - (((1.0f64 + 9.0 + 4.0 + 36.0) / 4.0).sqrt())).abs() < 1e-12);
        assert!(Stats::from_values(&[]).is_none());
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let snaps: Vec<_> = (0..5).map(|k| snap(k, &[0.9, 0.1 * (k + 1) as f64])).collect();
        let report = summarize(&compute_metrics(&snaps, params(100.0)).unwrap()).unwrap();
        let cmp = compare(&report, &report).unwrap();
        assert!(cmp.rows.iter().all(|r| r.delta == Some(0.0)));
        assert_eq!(cmp.higher_capacity, Winner::Tie);

        let other = summarize(&compute_metrics(&snaps, params(101.0)).unwrap()).unwrap();
        assert!(matches!(
            compare(&report, &other),
            Err(Error::IncomparableReports(_))
        ));
    }
}
