//! Deterministic CSV and metadata-sidecar writers.
//!
//! CSV bodies use `{:.12e}` numerics and UNIX newlines so a re-run from
//! the sidecar reproduces them byte for byte. Wall time and version live
//! only in the sidecar.

use crate::config::ScenarioConfig;
use anyhow::{Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputSink {
    dir: PathBuf,
    name: String,
    pub files: Vec<PathBuf>,
}

impl OutputSink {
    pub fn new(dir: &Path, name: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output dir {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            name: name.to_string(),
            files: Vec::new(),
        })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{}", self.name, suffix))
    }

    /// Write one CSV table; `columns` are (header, values) pairs of equal
    /// length.
    pub fn write_csv(&mut self, suffix: &str, columns: &[(&str, &[f64])]) -> Result<PathBuf> {
        let path = self.path(suffix);
        let mut body = String::new();
        let headers: Vec<&str> = columns.iter().map(|(h, _)| *h).collect();
        body.push_str(&headers.join(","));
        body.push('\n');
        let rows = columns.first().map_or(0, |(_, v)| v.len());
        for (_, v) in columns {
            assert_eq!(v.len(), rows, "ragged CSV columns");
        }
        for r in 0..rows {
            let mut first = true;
            for (_, v) in columns {
                if !first {
                    body.push(',');
                }
                first = false;
                body.push_str(&format!("{:.12e}", v[r]));
            }
            body.push('\n');
        }
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_json(&mut self, suffix: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let path = self.path(suffix);
        let mut f = std::fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "{}", serde_json::to_string_pretty(value)?)?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// Metadata sidecar: resolved config, version, and wall time.
    pub fn write_sidecar(
        &mut self,
        config: &ScenarioConfig,
        wall_seconds: f64,
        extra: serde_json::Value,
    ) -> Result<PathBuf> {
        let meta = serde_json::json!({
            "tool": format!("latqed {}", env!("CARGO_PKG_VERSION")),
            "config": config,
            "wall_seconds": wall_seconds,
            "results": extra,
        });
        self.write_json(".meta.json", &meta)
    }
}
