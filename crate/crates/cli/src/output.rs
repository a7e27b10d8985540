//! CSV emission and the run manifest.
//!
//! Numeric CSV cells carry 12 significant digits. Every produced file is
//! digested into `<prefix>_manifest.json`, written last; on failure all
//! partial outputs are removed so reruns start clean.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// 12 significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

/// Compact parameter rendering for file names (10.0 -> "10").
pub fn fmt_param(v: f64) -> String {
    format!("{v}")
}

/// Buffers file contents until the run succeeds, then writes everything and
/// the manifest in one pass.
pub struct OutputSet {
    prefix: String,
    files: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    files: Vec<ManifestEntry>,
}

impl OutputSet {
    pub fn new(prefix: &str) -> Self {
        Self {
            prefix: prefix.to_string(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, suffix: &str, content: String) {
        self.files
            .push((format!("{}_{suffix}", self.prefix), content));
    }

    /// Write all buffered files plus the manifest (which also embeds the
    /// effective scenario, so a run is reproducible from its outputs).
    /// Cleans up everything it managed to write when any step fails.
    pub fn commit(self, command: &str, config_json: &str) -> Result<Vec<PathBuf>, CliError> {
        let config: serde_json::Value = serde_json::from_str(config_json)
            .map_err(|e| CliError::Config(format!("config echo: {e}")))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let mut write_all = || -> Result<Vec<PathBuf>, CliError> {
            let mut entries = Vec::new();
            for (path, content) in &self.files {
                let path = PathBuf::from(path);
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent).map_err(|e| {
                            CliError::Numeric(format!("cannot create {}: {e}", parent.display()))
                        })?;
                    }
                }
                fs::write(&path, content).map_err(|e| {
                    CliError::Numeric(format!("cannot write {}: {e}", path.display()))
                })?;
                written.push(path.clone());
                entries.push(ManifestEntry {
                    path: path.display().to_string(),
                    sha256: hex_digest(content.as_bytes()),
                });
            }
            entries.sort_by(|a, b| a.path.cmp(&b.path));
            let manifest = Manifest {
                command,
                config: config.clone(),
                files: entries,
            };
            let manifest_path = PathBuf::from(format!("{}_manifest.json", self.prefix));
            let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(&manifest_path, body).map_err(|e| {
                CliError::Numeric(format!("cannot write {}: {e}", manifest_path.display()))
            })?;
            written.push(manifest_path);
            Ok(written.clone())
        };
        match write_all() {
            Ok(paths) => Ok(paths),
            Err(e) => {
                remove_files(&written);
                Err(e)
            }
        }
    }
}

pub fn remove_files(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Render a time series as `t,P0,p0,p1,...`; unavailable populations leave
/// their cells empty.
pub fn series_csv(series: &subspace_sim::TimeSeries, dim: usize) -> String {
    let mut out = String::from("t,P0");
    for level in 0..dim {
        out.push_str(&format!(",p{level}"));
    }
    out.push('\n');
    for (row, t) in series.times.iter().enumerate() {
        out.push_str(&fmt_sig(*t));
        out.push(',');
        out.push_str(&fmt_sig(series.p_cs[row]));
        for level in 0..dim {
            out.push(',');
            if let Some(p) = series.population(row, level) {
                out.push_str(&fmt_sig(p));
            }
        }
        out.push('\n');
    }
    out
}

/// File-name suffix for one sweep point.
pub fn sweep_suffix(omega: f64, gamma: f64) -> String {
    format!("omega{}_gamma{}", fmt_param(omega), fmt_param(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(0.5), "5.00000000000e-1");
        assert_eq!(fmt_param(10.0), "10");
        assert_eq!(fmt_param(2.5), "2.5");
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            hex_digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn suffix_naming() {
        assert_eq!(sweep_suffix(10.0, 0.0), "omega10_gamma0");
        assert_eq!(sweep_suffix(2.5, 7.0), "omega2.5_gamma7");
    }
}
