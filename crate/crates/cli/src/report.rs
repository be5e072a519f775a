//! Deterministic report output: CSV files with a fixed 17-significant-digit
//! numeric format, and a JSON summary on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use optexec_core::Region;

/// One number, 17 significant digits, locale-free: reruns with the same
/// seed produce byte-identical files.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one CSV file: a header row, then rows of preformatted fields.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let mut text = String::new();
    writeln!(text, "{}", header.join(",")).unwrap();
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(text, "{}", row.join(",")).unwrap();
    }
    let path = dir.join(name);
    std::fs::write(&path, text)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Prints the summary object as pretty JSON on stdout.
pub fn print_summary(summary: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(summary).expect("summary serialises"));
}

/// Stable lowercase region labels for CSV and JSON.
pub fn region_label(region: Region) -> &'static str {
    match region {
        Region::Exhausted => "exhausted",
        Region::Waiting => "waiting",
        Region::Intermediate => "intermediate",
        Region::FullLiquidation => "full-liquidation",
    }
}
