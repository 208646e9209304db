use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::search::TraceEntry;

/// Render a float with 17 significant digits so it reads back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The config as run, without `output_dir`.
    pub config: Value,
    /// Deterministic work counts, plus wall-clock time when requested.
    pub timings: Value,
    pub files: Vec<FileRecord>,
}

/// Collects artifact files in memory and writes them, with the manifest, in one go.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    files: Vec<(String, Vec<u8>)>,
}

impl ArtifactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        debug_assert!(self.files.iter().all(|(n, _)| *n != name), "duplicate artifact {name}");
        self.files.push((name, bytes));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: String) {
        self.add(name, text.into_bytes());
    }

    /// A two-column plot file. `name` should look like `curve-<what>.dat`.
    pub fn curve(&mut self, name: &str, columns: [&str; 2], points: &[(f64, f64)]) {
        let mut out = format!("# {} {}\n", columns[0], columns[1]);
        for &(x, y) in points {
            out.push_str(&fmt_f64(x));
            out.push(' ');
            out.push_str(&fmt_f64(y));
            out.push('\n');
        }
        self.text(name, out);
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Write every file and `manifest.json` into `dir`, creating it if needed.
    pub fn write(self, dir: &Path, command: &str, config: Value, timings: Value) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut records = Vec::with_capacity(self.files.len());
        let mut paths = Vec::with_capacity(self.files.len() + 1);
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            records.push(FileRecord {
                name: name.clone(),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(bytes)),
            });
            paths.push(path);
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            timings,
            files: records,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        bytes.push(b'\n');
        let path = dir.join("manifest.json");
        fs::write(&path, bytes)?;
        paths.push(path);
        Ok(paths)
    }
}

/// Trace rows: `iter, lambda_k.., w_k.., loss, c_k.., stored`. Failed solves
/// leave the solution columns empty.
pub fn trace_table(trace: &[TraceEntry], dim: usize, m: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["iter".to_string()];
    header.extend((0..m).map(|k| format!("lambda_{k}")));
    header.extend((0..dim).map(|k| format!("w_{k}")));
    header.push("loss".into());
    header.extend((0..m).map(|k| format!("c_{k}")));
    header.push("stored".into());
    let rows = trace
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut row = vec![i.to_string()];
            row.extend(e.lambda.as_slice().iter().map(|&x| fmt_f64(x)));
            match &e.result {
                Some(r) => {
                    row.extend(r.w.iter().map(|&x| fmt_f64(x)));
                    row.push(fmt_f64(r.loss));
                    row.extend(r.violation.iter().map(|&x| fmt_f64(x)));
                }
                None => row.extend(std::iter::repeat_n(String::new(), dim + 1 + m)),
            }
            row.push(e.stored.to_string());
            row
        })
        .collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 0.399_999_999_999_999_9] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn manifest_checksums_match_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = ArtifactSet::new();
        set.text("a.txt", "hello\n".into());
        set.curve("curve-x.dat", ["x", "y"], &[(1.0, 2.0)]);
        set.write(dir.path(), "demo", Value::Null, Value::Null).unwrap();
        let m: Manifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.files.len(), 2);
        for f in &m.files {
            let bytes = fs::read(dir.path().join(&f.name)).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256);
            assert_eq!(bytes.len() as u64, f.bytes);
        }
        let curve = fs::read_to_string(dir.path().join("curve-x.dat")).unwrap();
        assert_eq!(curve, "# x y\n1.0000000000000000e0 2.0000000000000000e0\n");
    }
}
