use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use wiretap_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub verb: String,
    pub input: Option<PathBuf>,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(verb: &str, input: Option<&Path>, params: Value, seed: Option<u64>) -> Self {
        Self {
            verb: verb.into(),
            input: input.map(Path::to_path_buf),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_clock_s: 0.0,
        }
    }
}

/// `results.csv` → `results.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(manifest_path(out), text + "\n")?;
    Ok(())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("runs/scalar.csv")),
            PathBuf::from("runs/scalar.csv.manifest.json")
        );
    }

    #[test]
    fn csv_rows_round_trip() {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            capacity_bits: f64,
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_csv(&path, [Row { n: 8, capacity_bits: 0.5 }]).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "n,capacity_bits\n8,0.5\n");
    }
}
