//! `simo-sounder simulate | analyze | compare`.
//!
//! Exit codes: 0 success, 1 bad arguments, unreadable/unwritable paths or
//! incomparable reports, 2 malformed config or input file, 3 numeric failure
//! during simulation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{compare, compute_metrics, summarize, AnalysisParams};
use crate::channel::Snr;
use crate::error::Error;
use crate::io::config::{Geometry, RunConfig};
use crate::io::report::{format_comparison, format_series, ReportFile};
use crate::io::snapshots::{format_iq, GainSnapshotFile};
use crate::io::write_atomic;
use crate::sounder::simulate;

#[derive(Debug, Parser)]
#[command(name = "simo-sounder", version, about = "1xN SIMO channel-sounder simulator and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a measurement campaign and write estimated gains as CSV.
    Simulate(SimulateArgs),
    /// Compute metric series and a summary report from a gain CSV.
    Analyze(AnalyzeArgs),
    /// Tabulate two reports side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Array geometry; selects the defaults for keys the config omits.
    #[arg(long, value_parser = parse_geometry)]
    geometry: Option<Geometry>,
    /// `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Gain CSV to write. The effective configuration goes to `<out>.conf`.
    #[arg(long)]
    out: PathBuf,
    /// Also dump the raw IQ samples of every snapshot.
    #[arg(long)]
    iq_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Gain CSV written by `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// SNR used for the capacity metrics.
    #[arg(long, default_value_t = 33.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long)]
    report: PathBuf,
    /// Directory for rss.csv, k_ratios.csv, capacity.csv and normalized_capacity.csv.
    #[arg(long)]
    series_dir: Option<PathBuf>,
    /// Received level at which the SNR applies.
    #[arg(long, default_value_t = -62.5, allow_negative_numbers = true, conflicts_with = "no_reference")]
    reference_dbm: f64,
    /// Evaluate capacity on the gains exactly as stored.
    #[arg(long)]
    no_reference: bool,
    /// Run configuration to echo into the report. Defaults to `<in>.conf` when it exists.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit power used for RSS. Defaults to the value implied by the file.
    #[arg(long, allow_negative_numbers = true)]
    tx_power_dbm: Option<f64>,
    /// Add a chain-referenced RSS view with this receiver gain.
    #[arg(long, allow_negative_numbers = true)]
    chain_gain_db: Option<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    report_a: PathBuf,
    #[arg(long)]
    report_b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_geometry(s: &str) -> Result<Geometry, String> {
    s.parse()
}

/// A failed command: message for stderr plus exit code.
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, e: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: e.to_string(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path, code: i32) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(code, Error::io(path, e)))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents.as_bytes()).map_err(|e| fail(1, e))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".conf");
    PathBuf::from(s)
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

fn run_simulate(a: SimulateArgs) -> Result<String, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = read(path, 2)?;
            let cfg = RunConfig::parse(&text, a.geometry.unwrap_or(Geometry::Ula))
                .map_err(|e| fail(2, format!("{}: {e}", label(path))))?;
            if let Some(g) = a.geometry {
                if cfg.geometry != g {
                    return Err(fail(
                        1,
                        format!("--geometry {g} conflicts with `geometry = {}` in the config", cfg.geometry),
                    ));
                }
            }
            cfg
        }
        None => RunConfig::defaults(a.geometry.unwrap_or(Geometry::Ula)),
    };
    if let Some(seed) = a.seed {
        cfg.snapshots.seed = seed;
    }
    let mut setup = cfg.build().map_err(|e| match e {
        Error::NonFinite(_) => fail(3, e),
        other => fail(2, other),
    })?;
    setup.snapshots.retain_iq = a.iq_out.is_some();

    let records = simulate(
        &setup.scenario,
        &setup.layout,
        &setup.fading,
        &setup.chain,
        &setup.snapshots,
    )
    .map_err(|e| fail(3, e))?;
    let file = GainSnapshotFile::from_records(&records, setup.snapshots.tx_power_dbm)
        .map_err(|e| fail(3, e))?;

    write(&a.out, &file.format())?;
    write(&sidecar(&a.out), &cfg.format())?;
    if let Some(iq) = &a.iq_out {
        write(iq, &format_iq(&records))?;
    }
    Ok(format!(
        "wrote {} rows ({} snapshots x {} elements) to {}",
        file.rows.len(),
        file.snapshot_count(),
        file.elements,
        label(&a.out)
    ))
}

fn run_analyze(a: AnalyzeArgs) -> Result<String, Failure> {
    let in_label = label(&a.input);
    let text = read(&a.input, 2)?;
    let file = GainSnapshotFile::parse(&text, &in_label).map_err(|e| fail(2, e))?;

    let config_path = a.config.clone().or_else(|| {
        let p = sidecar(&a.input);
        p.exists().then_some(p)
    });
    let cfg = match &config_path {
        Some(path) => {
            let text = read(path, 2)?;
            Some(
                RunConfig::parse(&text, Geometry::Ula)
                    .map_err(|e| fail(2, format!("{}: {e}", label(path))))?,
            )
        }
        None => None,
    };

    let tx_power_dbm = match a.tx_power_dbm {
        Some(p) => p,
        None => file.infer_tx_power().map_err(|e| fail(2, format!("{in_label}: {e}")))?,
    };
    let rho = Snr::from_db(a.snr_db).map_err(|e| fail(1, e))?;
    let params = AnalysisParams {
        rho,
        tx_power_dbm,
        reference_dbm: (!a.no_reference).then_some(a.reference_dbm),
    };
    let snapshots = file.to_gain_snapshots().map_err(|e| fail(2, e))?;
    let mut series = compute_metrics(&snapshots, params).map_err(|e| fail(2, e))?;
    if let Some(cfg) = &cfg {
        series.meta.geometry = cfg.geometry.to_string();
        series.meta.geometry_detail = cfg.geometry_detail();
        series.meta.config_echo = cfg.echo();
    }
    let summary = summarize(&series).map_err(|e| fail(2, e))?;

    let input = a
        .input
        .file_name()
        .map_or_else(|| in_label.clone(), |n| n.to_string_lossy().into_owned());
    let report = ReportFile {
        input,
        chain_gain_db: a.chain_gain_db,
        summary,
    };
    write(&a.report, &report.format())?;
    if let Some(dir) = &a.series_dir {
        fs::create_dir_all(dir).map_err(|e| fail(1, Error::io(dir, e)))?;
        for (name, contents) in format_series(&series) {
            write(&dir.join(name), &contents)?;
        }
    }
    let s = &report.summary;
    Ok(format!(
        "{} snapshots: mean C {:.3} bps/Hz, mean C_n {}",
        s.snapshots,
        s.capacity.mean,
        s.normalized_capacity
            .map_or_else(|| "undefined".to_string(), |c| format!("{:.3}", c.mean))
    ))
}

fn run_compare(a: CompareArgs) -> Result<String, Failure> {
    let load = |path: &Path| -> Result<ReportFile, Failure> {
        let text = read(path, 2)?;
        ReportFile::parse(&text, &label(path)).map_err(|e| fail(2, e))
    };
    let ra = load(&a.report_a)?;
    let rb = load(&a.report_b)?;
    let table = compare(&ra.summary, &rb.summary).map_err(|e| fail(1, e))?;
    write(&a.out, &format_comparison(&table))?;
    Ok(format!("wrote comparison to {}", label(&a.out)))
}
