#![allow(dead_code)]

use simo_sounder::analysis::{compute_metrics, summarize, AnalysisParams, GainSnapshot, SummaryReport};
use simo_sounder::channel::Snr;
use simo_sounder::io::config::{Geometry, RunConfig};
use simo_sounder::sounder::{simulate, SnapshotRecord};

pub const SNR_DB: f64 = 33.0;
pub const REFERENCE_DBM: f64 = -62.5;

pub fn config(geometry: Geometry, seed: u64, intervals: u32) -> RunConfig {
    let mut cfg = RunConfig::defaults(geometry);
    cfg.snapshots.seed = seed;
    cfg.snapshots.intervals = intervals;
    cfg
}

pub fn run(cfg: &RunConfig) -> Vec<SnapshotRecord> {
    let s = cfg.build().expect("default config builds");
    simulate(&s.scenario, &s.layout, &s.fading, &s.chain, &s.snapshots).expect("simulation runs")
}

pub fn estimated(records: &[SnapshotRecord]) -> Vec<GainSnapshot> {
    records
        .iter()
        .map(|r| GainSnapshot {
            interval: r.interval_id,
            snapshot: r.snapshot_idx,
            time_ms: r.time_ms,
            gains: r.estimated_gains.clone(),
        })
        .collect()
}

pub fn params(tx_power_dbm: f64) -> AnalysisParams {
    AnalysisParams {
        rho: Snr::from_db(SNR_DB).unwrap(),
        tx_power_dbm,
        reference_dbm: Some(REFERENCE_DBM),
    }
}

/// One 100-snapshot measurement interval of the default scenario, summarized.
pub fn calibrated_summary(geometry: Geometry, seed: u64) -> SummaryReport {
    let cfg = config(geometry, seed, 1);
    let records = run(&cfg);
    let series = compute_metrics(&estimated(&records), params(cfg.snapshots.tx_power_dbm)).unwrap();
    summarize(&series).unwrap()
}

pub fn seeds() -> impl Iterator<Item = u64> {
    1..=20
}
