//! Gain snapshot CSV and IQ dumps.
//!
//! ```text
//! interval,snapshot,t_ms,element,h_re,h_im,rss_dbm
//! 1,0,0.00000000e0,1,1.23456789e-3,-4.56789012e-4,-6.02519811e1
//! ```
//!
//! Rows are sorted by (interval, snapshot, element) and every snapshot lists
//! elements `1..=N`. A zero gain has `below_floor` in the RSS column.

use num_complex::Complex64;

use super::{fmt_sig9, parse_sig9, BELOW_FLOOR};
use crate::analysis::GainSnapshot;
use crate::channel::{amplitude_to_db, rss_dbm, GainVector, Rss};
use crate::error::{Error, Result};
use crate::sounder::SnapshotRecord;

pub const HEADER: &str = "interval,snapshot,t_ms,element,h_re,h_im,rss_dbm";
pub const IQ_HEADER: &str = "interval,snapshot,element,sample,i,q";

/// One row as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub interval: u32,
    pub snapshot: u32,
    pub t_ms: f64,
    pub element: usize,
    pub h: Complex64,
    pub rss: Rss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSnapshotFile {
    pub elements: usize,
    pub rows: Vec<GainRow>,
}

impl GainSnapshotFile {
    pub fn from_snapshots(snapshots: &[GainSnapshot], tx_power_dbm: f64) -> Result<Self> {
        let first = snapshots.first().ok_or(Error::EmptyInput)?;
        let elements = first.gains.len();
        let mut rows = Vec::with_capacity(snapshots.len() * elements);
        for s in snapshots {
            if s.gains.len() != elements {
                return Err(Error::InvalidInput("snapshots differ in element count".into()));
            }
            for (i, &h) in s.gains.iter().enumerate() {
                rows.push(GainRow {
                    interval: s.interval,
                    snapshot: s.snapshot,
                    t_ms: s.time_ms,
                    element: i + 1,
                    h,
                    rss: rss_dbm(h, tx_power_dbm)?,
                });
            }
        }
        let file = GainSnapshotFile { elements, rows };
        file.check_order()?;
        Ok(file)
    }

    /// Uses the estimated gains of each record.
    pub fn from_records(records: &[SnapshotRecord], tx_power_dbm: f64) -> Result<Self> {
        let snaps: Vec<GainSnapshot> = records
            .iter()
            .map(|r| GainSnapshot {
                interval: r.interval_id,
                snapshot: r.snapshot_idx,
                time_ms: r.time_ms,
                gains: r.estimated_gains.clone(),
            })
            .collect();
        Self::from_snapshots(&snaps, tx_power_dbm)
    }

    pub fn to_gain_snapshots(&self) -> Result<Vec<GainSnapshot>> {
        self.rows
            .chunks(self.elements)
            .map(|chunk| {
                Ok(GainSnapshot {
                    interval: chunk[0].interval,
                    snapshot: chunk[0].snapshot,
                    time_ms: chunk[0].t_ms,
                    gains: GainVector::new(chunk.iter().map(|r| r.h).collect())?,
                })
            })
            .collect()
    }

    pub fn snapshot_count(&self) -> usize {
        self.rows.len() / self.elements
    }

    fn check_order(&self) -> Result<()> {
        let n = self.elements;
        if n == 0 || !self.rows.len().is_multiple_of(n) {
            return Err(Error::InvalidInput("row count is not a multiple of the element count".into()));
        }
        let mut prev: Option<(u32, u32)> = None;
        for chunk in self.rows.chunks(n) {
            let key = (chunk[0].interval, chunk[0].snapshot);
            if prev.is_some_and(|p| p >= key) {
                return Err(Error::InvalidInput(format!(
                    "snapshot {}/{} is out of order",
                    key.0, key.1
                )));
            }
            prev = Some(key);
        }
        Ok(())
    }

    /// Transmit power implied by the RSS column: `rss − 20·log10|h|`,
    /// averaged over rows with a non-zero gain and rounded to 1e-6 dB (the
    /// column carries nine significant digits).
    pub fn infer_tx_power(&self) -> Result<f64> {
        let estimates: Vec<(usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.rss.dbm().map(|p| (i, p - amplitude_to_db(r.h.norm()))))
            .collect();
        if estimates.is_empty() {
            return Err(Error::InvalidInput(
                "every gain is zero, transmit power cannot be inferred".into(),
            ));
        }
        let mut sorted: Vec<f64> = estimates.iter().map(|&(_, v)| v).collect();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        if let Some(&(i, v)) = estimates.iter().find(|&&(_, v)| (v - mean).abs() > TX_CONSISTENCY_DB) {
            return Err(Error::InvalidInput(format!(
                "row {} implies transmit power {v} dBm, inconsistent with {mean} dBm",
                i + 1
            )));
        }
        Ok((mean * 1e6).round() / 1e6)
    }

    pub fn format(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            let rss = match r.rss {
                Rss::Dbm(p) => fmt_sig9(p),
                Rss::BelowFloor => BELOW_FLOOR.to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.interval,
                r.snapshot,
                fmt_sig9(r.t_ms),
                r.element,
                fmt_sig9(r.h.re),
                fmt_sig9(r.h.im),
                rss
            ));
        }
        out
    }

    /// Strict parser; `path` only labels errors.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            Some((n, h)) => return Err(err(n, format!("expected header `{HEADER}`, got `{h}`"))),
            None => return Err(err(1, "missing header".into())),
        }

        let mut rows: Vec<GainRow> = Vec::new();
        let mut elements: Option<usize> = None;
        let mut last_line = 1;
        for (n, line) in lines {
            last_line = n;
            let row = parse_row(line).map_err(|m| err(n, m))?;
            let expected_element = match rows.last() {
                Some(prev) if (prev.interval, prev.snapshot) == (row.interval, row.snapshot) => {
                    if prev.t_ms != row.t_ms {
                        return Err(err(n, "t_ms changes within a snapshot".into()));
                    }
                    prev.element + 1
                }
                Some(prev) => {
                    if (row.interval, row.snapshot) < (prev.interval, prev.snapshot) {
                        return Err(err(
                            n,
                            format!(
                                "snapshot {}/{} follows {}/{}; rows must be sorted",
                                row.interval, row.snapshot, prev.interval, prev.snapshot
                            ),
                        ));
                    }
                    let count = elements.get_or_insert(prev.element);
                    if prev.element != *count {
                        return Err(err(
                            n - 1,
                            format!("snapshot ends after element {} of {count}", prev.element),
                        ));
                    }
                    1
                }
                None => 1,
            };
            if row.element != expected_element {
                return Err(err(
                    n,
                    format!("expected element {expected_element}, got {}", row.element),
                ));
            }
            if elements.is_some_and(|count| row.element > count) {
                return Err(err(n, format!("element {} exceeds the array size", row.element)));
            }
            rows.push(row);
        }
        let last = rows.last().ok_or_else(|| err(2, "no data rows".into()))?;
        let count = elements.unwrap_or(last.element);
        if last.element != count {
            return Err(err(
                last_line,
                format!(
                    "truncated: last snapshot ends after element {} of {count}",
                    last.element
                ),
            ));
        }
        if count < 2 {
            return Err(err(2, "at least two elements per snapshot are required".into()));
        }
        Ok(GainSnapshotFile {
            elements: count,
            rows,
        })
    }
}

const TX_CONSISTENCY_DB: f64 = 1e-6;

fn parse_row(line: &str) -> std::result::Result<GainRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    let [interval, snapshot, t_ms, element, re, im, rss] = fields[..] else {
        return Err(format!("expected 7 fields, got {}", fields.len()));
    };
    let int = |s: &str, what: &str| -> std::result::Result<u64, String> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
            return Err(format!("{what} `{s}` is not a canonical integer"));
        }
        s.parse().map_err(|_| format!("{what} `{s}` is out of range"))
    };
    let real = |s: &str, what: &str| {
        parse_sig9(s).ok_or_else(|| format!("{what} `{s}` is not in 9-significant-digit form"))
    };
    let interval = u32::try_from(int(interval, "interval")?).map_err(|_| "interval out of range")?;
    if interval == 0 {
        return Err("interval ids start at 1".into());
    }
    let snapshot = u32::try_from(int(snapshot, "snapshot")?).map_err(|_| "snapshot out of range")?;
    let element = usize::try_from(int(element, "element")?).map_err(|_| "element out of range")?;
    let h = Complex64::new(real(re, "h_re")?, real(im, "h_im")?);
    let rss = if rss == BELOW_FLOOR {
        Rss::BelowFloor
    } else {
        Rss::Dbm(real(rss, "rss_dbm")?)
    };
    if (h == Complex64::new(0.0, 0.0)) != (rss == Rss::BelowFloor) {
        return Err("rss_dbm must be below_floor exactly when the gain is zero".into());
    }
    Ok(GainRow {
        interval,
        snapshot,
        t_ms: real(t_ms, "t_ms")?,
        element,
        h,
        rss,
    })
}

/// IQ samples of every record that retained them.
pub fn format_iq(records: &[SnapshotRecord]) -> String {
    let mut out = String::from(IQ_HEADER);
    out.push('\n');
    for r in records {
        let Some(iq) = &r.iq else { continue };
        for (e, samples) in iq.iter().enumerate() {
            for (n, s) in samples.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.interval_id,
                    r.snapshot_idx,
                    e + 1,
                    n,
                    fmt_sig9(s.re),
                    fmt_sig9(s.im)
                ));
            }
        }
    }
    out
}
