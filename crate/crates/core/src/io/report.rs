//! Summary reports, comparison tables and per-metric series files.
//!
//! Reports are `[section]` / `key = value` text with a fixed key order.
//! Reals are written in shortest round-trip form, so parsing a report gives
//! back exactly the values that were formatted. Missing values are `none`.

use std::collections::BTreeMap;
use std::fmt::Display;

use super::kv::{self, Entry, Writer};
use super::{fmt_sig9, BELOW_FLOOR, UNDEFINED};
use crate::analysis::{
    Comparison, ElementSummary, IntervalSummary, MetricSeries, Stats, SummaryReport, Winner,
};
use crate::channel::Rss;
use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "simo-sounder";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const NONE: &str = "none";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    /// File name of the analyzed snapshot file.
    pub input: String,
    /// When set, a chain-referenced RSS view (antenna-port level plus this
    /// gain) is written alongside the antenna-port one.
    pub chain_gain_db: Option<f64>,
    pub summary: SummaryReport,
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| NONE.to_string(), |x| x.to_string())
}

fn list<T: Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_stats(w: &mut Writer, s: Option<&Stats>) {
    w.kv("count", s.map_or(0, |s| s.count));
    w.kv("mean", opt(s.map(|s| s.mean)));
    w.kv("std", opt(s.map(|s| s.std)));
    w.kv("median", opt(s.map(|s| s.median)));
    w.kv("min", opt(s.map(|s| s.min)));
    w.kv("max", opt(s.map(|s| s.max)));
}

impl ReportFile {
    pub fn format(&self) -> String {
        let s = &self.summary;
        let mut w = Writer::new();
        w.section("tool").kv("name", TOOL_NAME).kv("version", TOOL_VERSION);

        w.section("analysis")
            .kv("input", &self.input)
            .kv("geometry", &s.geometry)
            .kv("snr_db", s.snr_db)
            .kv("rho_linear", s.rho_linear)
            .kv("reference_dbm", opt(s.reference_dbm))
            .kv("tx_power_dbm", s.tx_power_dbm)
            .kv("snapshots", s.snapshots)
            .kv("elements", s.elements)
            .kv("intervals", list(&s.intervals));

        w.section("geometry");
        for (k, v) in &s.geometry_detail {
            w.kv(k, v);
        }

        w.section("capacity");
        write_stats(&mut w, Some(&s.capacity));

        w.section("normalized_capacity");
        write_stats(&mut w, s.normalized_capacity.as_ref());
        w.kv("ratio_of_means", opt(s.normalized_capacity_ratio_of_means))
            .kv("undefined", s.normalized_undefined);

        w.section("rss");
        for (i, e) in s.per_element.iter().enumerate() {
            let n = i + 1;
            w.kv(&format!("e{n}_mean_dbm"), opt(e.mean_rss_dbm))
                .kv(&format!("e{n}_p2p_db"), opt(e.p2p_rss_db))
                .kv(&format!("e{n}_below_floor"), e.below_floor);
        }

        if let Some(g) = self.chain_gain_db {
            w.section("rss_chain_referenced").kv("chain_gain_db", g);
            for (i, e) in s.per_element.iter().enumerate() {
                w.kv(&format!("e{}_mean_dbm", i + 1), opt(e.mean_rss_dbm.map(|p| p + g)));
            }
        }

        w.section("k_ratio").kv("undefined", s.k_undefined);
        for (i, e) in s.per_element.iter().enumerate() {
            w.kv(&format!("e{}_mean_db", i + 1), opt(e.mean_k_db));
        }

        for iv in &s.per_interval {
            w.section(&format!("interval.{}", iv.interval))
                .kv("snapshots", iv.snapshots)
                .kv("mean_capacity", iv.mean_capacity)
                .kv("mean_normalized_capacity", opt(iv.mean_normalized_capacity));
        }

        w.section("config");
        for (k, v) in &s.config_echo {
            w.kv(k, v);
        }
        w.finish()
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let entries = kv::parse(text, true).map_err(|e| match e {
            Error::Config { line, message } => Error::Parse {
                path: path.to_string(),
                line,
                message,
            },
            other => other,
        })?;
        let mut doc = Doc::new(entries, path, text.lines().count().max(1));

        let name = doc.take("tool", "name")?;
        if name.value != TOOL_NAME {
            return Err(doc.err(name.line, format!("not a {TOOL_NAME} report")));
        }
        doc.take("tool", "version")?;

        let input = doc.take("analysis", "input")?.value;
        let geometry = doc.take("analysis", "geometry")?.value;
        let snr_db = doc.real("analysis", "snr_db")?;
        let rho_linear = doc.real("analysis", "rho_linear")?;
        let reference_dbm = doc.opt_real("analysis", "reference_dbm")?;
        let tx_power_dbm = doc.real("analysis", "tx_power_dbm")?;
        let snapshots = doc.count("analysis", "snapshots")?;
        let elements = doc.count("analysis", "elements")?;
        let intervals_entry = doc.take("analysis", "intervals")?;
        let intervals = intervals_entry
            .value
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| doc.err(intervals_entry.line, "malformed interval list".into()))?;

        let geometry_detail = doc.take_section("geometry");

        let capacity = doc
            .stats("capacity")?
            .ok_or_else(|| doc.err(doc.end_line, "capacity statistics are missing".into()))?;
        let normalized_capacity = doc.stats("normalized_capacity")?;
        let ratio = doc.opt_real("normalized_capacity", "ratio_of_means")?;
        let normalized_undefined = doc.count("normalized_capacity", "undefined")?;

        let mut per_element = Vec::with_capacity(elements);
        for n in 1..=elements {
            per_element.push(ElementSummary {
                mean_rss_dbm: doc.opt_real("rss", &format!("e{n}_mean_dbm"))?,
                p2p_rss_db: doc.opt_real("rss", &format!("e{n}_p2p_db"))?,
                below_floor: doc.count("rss", &format!("e{n}_below_floor"))?,
                mean_k_db: None,
            });
        }
        let k_undefined = doc.count("k_ratio", "undefined")?;
        for (i, e) in per_element.iter_mut().enumerate() {
            e.mean_k_db = doc.opt_real("k_ratio", &format!("e{}_mean_db", i + 1))?;
        }

        let chain_gain_db = if doc.has_section("rss_chain_referenced") {
            let g = doc.real("rss_chain_referenced", "chain_gain_db")?;
            doc.take_section("rss_chain_referenced");
            Some(g)
        } else {
            None
        };

        let mut per_interval = Vec::with_capacity(intervals.len());
        for &id in &intervals {
            let sec = format!("interval.{id}");
            per_interval.push(IntervalSummary {
                interval: id,
                snapshots: doc.count(&sec, "snapshots")?,
                mean_capacity: doc.real(&sec, "mean_capacity")?,
                mean_normalized_capacity: doc.opt_real(&sec, "mean_normalized_capacity")?,
            });
        }
        let config_echo = doc.take_section("config");
        doc.finish()?;

        Ok(ReportFile {
            input,
            chain_gain_db,
            summary: SummaryReport {
                geometry,
                snr_db,
                rho_linear,
                reference_dbm,
                tx_power_dbm,
                snapshots,
                elements,
                intervals,
                capacity,
                normalized_capacity,
                normalized_capacity_ratio_of_means: ratio,
                normalized_undefined,
                per_element,
                k_undefined,
                per_interval,
                geometry_detail,
                config_echo,
            },
        })
    }
}

/// Entries grouped by section, consumed key by key so leftovers can be
/// reported as unknown.
struct Doc<'a> {
    path: &'a str,
    order: Vec<String>,
    /// Line reported for missing keys.
    end_line: usize,
    sections: BTreeMap<String, Vec<Entry>>,
}

impl<'a> Doc<'a> {
    fn new(entries: Vec<Entry>, path: &'a str, end_line: usize) -> Self {
        let mut order = Vec::new();
        let mut sections: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
        for e in entries {
            let sec = e.section.clone().unwrap_or_default();
            if !sections.contains_key(&sec) {
                order.push(sec.clone());
            }
            sections.entry(sec).or_default().push(e);
        }
        Doc {
            path,
            order,
            end_line,
            sections,
        }
    }

    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            message,
        }
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn take(&mut self, section: &str, key: &str) -> Result<Entry> {
        let entries = self.sections.get_mut(section);
        let found = entries.and_then(|es| {
            let idx = es.iter().position(|e| e.key == key)?;
            Some(es.remove(idx))
        });
        found.ok_or_else(|| self.err(self.end_line, format!("missing `{key}` in [{section}]")))
    }

    fn take_section(&mut self, section: &str) -> Vec<(String, String)> {
        self.sections
            .get_mut(section)
            .map(|es| es.drain(..).map(|e| (e.key, e.value)).collect())
            .unwrap_or_default()
    }

    fn real(&mut self, section: &str, key: &str) -> Result<f64> {
        let e = self.take(section, key)?;
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(e.line, format!("`{key}` = `{}` is not a finite number", e.value))),
        }
    }

    fn opt_real(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        let e = self.take(section, key)?;
        if e.value == NONE {
            return Ok(None);
        }
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.err(e.line, format!("`{key}` = `{}` is not a finite number", e.value))),
        }
    }

    fn count(&mut self, section: &str, key: &str) -> Result<usize> {
        let e = self.take(section, key)?;
        e.value
            .parse()
            .map_err(|_| self.err(e.line, format!("`{key}` = `{}` is not a count", e.value)))
    }

    fn stats(&mut self, section: &str) -> Result<Option<Stats>> {
        let count = self.count(section, "count")?;
        let fields = ["mean", "std", "median", "min", "max"]
            .into_iter()
            .map(|k| self.opt_real(section, k))
            .collect::<Result<Vec<_>>>()?;
        match (count, fields.iter().all(Option::is_some), fields.iter().all(Option::is_none)) {
            (0, _, true) => Ok(None),
            (n, true, _) if n > 0 => Ok(Some(Stats {
                count: n,
                mean: fields[0].unwrap(),
                std: fields[1].unwrap(),
                median: fields[2].unwrap(),
                min: fields[3].unwrap(),
                max: fields[4].unwrap(),
            })),
            _ => Err(self.err(self.end_line, format!("inconsistent statistics in [{section}]"))),
        }
    }

    fn finish(self) -> Result<()> {
        for sec in &self.order {
            if let Some(e) = self.sections[sec].first() {
                let where_ = if sec.is_empty() { "top level".to_string() } else { format!("[{sec}]") };
                return Err(self.err(e.line, format!("unexpected key `{}` in {where_}", e.key)));
            }
        }
        Ok(())
    }
}

fn winner(w: Winner) -> &'static str {
    match w {
        Winner::A => "a",
        Winner::B => "b",
        Winner::Tie => "tie",
    }
}

pub fn format_comparison(c: &Comparison) -> String {
    let mut w = Writer::new();
    w.section("reports")
        .kv("a", &c.label_a)
        .kv("b", &c.label_b)
        .kv("rho_linear", c.rho_linear);
    w.section("table").comment("metric = a, b, a - b");
    for r in &c.rows {
        w.kv(
            &r.metric,
            format!("{}, {}, {}", opt(r.value_a), opt(r.value_b), opt(r.delta)),
        );
    }
    w.section("winners")
        .kv("capacity", winner(c.higher_capacity))
        .kv("normalized_capacity", winner(c.higher_normalized_capacity));
    w.finish()
}

/// Series files written by `analyze`, as `(file name, contents)`.
pub fn format_series(series: &MetricSeries) -> Vec<(&'static str, String)> {
    let n = series.elements;
    let cols = |prefix: &str| -> String {
        (1..=n).map(|i| format!(",{prefix}_e{i}")).collect()
    };
    let lead = |r: &crate::analysis::MetricRecord| {
        format!("{},{},{}", r.interval, r.snapshot, fmt_sig9(r.time_ms))
    };

    let mut rss = format!("interval,snapshot,t_ms{}\n", cols("rss_dbm"));
    let mut k = format!("interval,snapshot,t_ms{}{}\n", cols("k_linear"), cols("k_db"));
    let mut cap = String::from("interval,snapshot,t_ms,capacity_bps_hz\n");
    let mut cn = String::from("interval,snapshot,t_ms,normalized_capacity\n");
    for r in &series.records {
        let lead = lead(r);
        rss.push_str(&lead);
        for p in &r.rss {
            rss.push(',');
            rss.push_str(&match p {
                Rss::Dbm(v) => fmt_sig9(*v),
                Rss::BelowFloor => BELOW_FLOOR.to_string(),
            });
        }
        rss.push('\n');

        k.push_str(&lead);
        match &r.k {
            Some(ratios) => {
                for v in ratios.linear() {
                    k.push(',');
                    k.push_str(&fmt_sig9(*v));
                }
                for v in ratios.db() {
                    k.push(',');
                    k.push_str(&if v.is_finite() { fmt_sig9(v) } else { BELOW_FLOOR.to_string() });
                }
            }
            None => {
                for _ in 0..2 * n {
                    k.push(',');
                    k.push_str(UNDEFINED);
                }
            }
        }
        k.push('\n');

        cap.push_str(&format!("{lead},{}\n", fmt_sig9(r.capacity)));
        cn.push_str(&format!(
            "{lead},{}\n",
            r.normalized_capacity.map_or_else(|| UNDEFINED.to_string(), fmt_sig9)
        ));
    }
    vec![
        ("rss.csv", rss),
        ("k_ratios.csv", k),
        ("capacity.csv", cap),
        ("normalized_capacity.csv", cn),
    ]
}
