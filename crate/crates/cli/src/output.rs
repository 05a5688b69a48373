//! Output directory handling and the run manifest.
//!
//! Files are tracked as they are written. Unless [`OutputDir::finish`] runs,
//! dropping the handle removes them again, together with the directory when
//! this run created it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::failure::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub command: &'a str,
    /// Full argument vector; re-running it reproduces every output.
    pub argv: Vec<String>,
    pub config: &'a C,
    pub master_seed: u64,
    pub version: &'static str,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub struct OutputDir {
    root: PathBuf,
    created: bool,
    written: Vec<String>,
    done: bool,
    started: u64,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        let created = !root.exists();
        fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), created, written: Vec::new(), done: false, started: unix_now() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        self.written.push(name.to_string());
        fs::write(&path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    /// Writes the manifest listing every output and keeps the files.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, master_seed: u64) -> Result<(), CliError> {
        let mut outputs = self.written.clone();
        outputs.push(MANIFEST.to_string());
        let manifest = RunManifest {
            command,
            argv: std::env::args().collect(),
            config,
            master_seed,
            version: env!("CARGO_PKG_VERSION"),
            started_unix: self.started,
            finished_unix: unix_now(),
            outputs,
        };
        self.write_json(MANIFEST, &manifest)?;
        self.done = true;
        Ok(())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for name in &self.written {
            let _ = fs::remove_file(self.root.join(name));
        }
        if self.created {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unfinished_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("run");
        {
            let mut out = OutputDir::create(&root).unwrap();
            out.write_json("a.json", &[1, 2]).unwrap();
            assert!(root.join("a.json").exists());
        }
        assert!(!root.exists());

        let mut out = OutputDir::create(&root).unwrap();
        out.write_csv("b.csv", &[(1, 2.5)]).unwrap();
        out.finish("test", &"cfg", 7).unwrap();
        let m: serde_json::Value = serde_json::from_slice(&fs::read(root.join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["outputs"], serde_json::json!(["b.csv", "manifest.json"]));
        assert_eq!(m["master_seed"], 7);
    }
}
