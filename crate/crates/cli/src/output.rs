//! Atomic file output, CSV formatting and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serialises");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// `fit.csv` -> `fit.manifest.json` in the same directory.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    primary.with_file_name(format!("{stem}.manifest.json"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    config_hash: String,
    versions: Value,
    threads: usize,
    notes: &'a [String],
    wall_time_s: f64,
    timestamp: u64,
}

pub fn versions() -> Value {
    serde_json::json!({
        "teig": env!("CARGO_PKG_VERSION"),
        "manifest_format": 1,
    })
}

pub fn write_manifest(
    primary: &Path,
    config: &ExperimentConfig,
    notes: &[String],
    started: Instant,
) -> Result<(), CliError> {
    let manifest = Manifest {
        config,
        config_hash: config.hash(),
        versions: versions(),
        threads: rayon::current_num_threads(),
        notes,
        wall_time_s: started.elapsed().as_secs_f64(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&manifest_path(primary), &manifest)
}

/// Shortest decimal with at most 12 significant digits.
pub fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (11 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_trims_rounding_noise() {
        assert_eq!(short(1.2500000000000002), "1.25");
        assert_eq!(short(0.75), "0.75");
        assert_eq!(short(12187.0), "12187");
        assert_eq!(short(-3.3e-5), "-0.000033");
    }

    #[test]
    fn csv_numbers_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn manifest_sits_beside_primary_output() {
        assert_eq!(manifest_path(Path::new("out/fit.csv")), PathBuf::from("out/fit.manifest.json"));
    }
}
