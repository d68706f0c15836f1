//! Report files: JSON documents and CSV tables whose names carry a hash of
//! the configuration that produced them.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// First 12 hex digits of the SHA-256 of the canonical JSON of `config`.
pub fn content_hash(config: &serde_json::Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    hex::encode(&digest[..6])
}

pub fn report_path(dir: &Path, name: &str, config: &serde_json::Value, ext: &str) -> PathBuf {
    dir.join(format!("{name}-{}.{ext}", content_hash(config)))
}

/// `{"config": ..., "report": ...}`, config first.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, config: &serde_json::Value, report: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = report_path(dir, name, config, "json");
    let mut out = fs::File::create(&path)?;
    writeln!(out, "{{\"config\":{},", config)?;
    writeln!(out, "\"report\":{}}}", serde_json::to_string_pretty(report)?)?;
    Ok(path)
}

/// CSV with a leading `# config: <json>` line.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, config: &serde_json::Value, rows: &[T]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = report_path(dir, name, config, "csv");
    let mut out = fs::File::create(&path)?;
    writeln!(out, "# config: {config}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        l: usize,
        value: f64,
    }

    #[test]
    fn names_depend_on_config_only() {
        let a = serde_json::json!({"L": 3, "seed": 1});
        let b = serde_json::json!({"L": 3, "seed": 2});
        assert_eq!(content_hash(&a), content_hash(&a.clone()));
        assert_ne!(content_hash(&a), content_hash(&b));
        assert_eq!(content_hash(&a).len(), 12);
    }

    #[test]
    fn files_start_with_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = serde_json::json!({"L": 4});
        let j = write_json(dir.path(), "r", &cfg, &vec![1.0, 2.0]).unwrap();
        let text = fs::read_to_string(&j).unwrap();
        assert!(text.starts_with("{\"config\":{\"L\":4}"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["report"][1], 2.0);
        let c = write_csv(dir.path(), "r", &cfg, &[Row { l: 4, value: 0.5 }]).unwrap();
        let text = fs::read_to_string(&c).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# config: {\"L\":4}");
        assert_eq!(lines.next().unwrap(), "l,value");
        assert_eq!(lines.next().unwrap(), "4,0.5");
    }
}
