//! File formats and the run configuration.
//!
//! All text is written with `.` as decimal separator and `\n` line endings,
//! independent of the process locale.

pub mod config;
pub mod kv;
pub mod report;
pub mod snapshots;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const BELOW_FLOOR: &str = "below_floor";
pub const UNDEFINED: &str = "undefined";

/// Nine significant digits in scientific notation, e.g. `-6.11162583e1`.
/// Negative zero is written as zero.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// Parses a value written by [`fmt_sig9`], rejecting any other spelling.
pub fn parse_sig9(token: &str) -> Option<f64> {
    let v: f64 = token.parse().ok()?;
    (v.is_finite() && fmt_sig9(v) == token).then_some(v)
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(
        ".{}.tmp.{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
