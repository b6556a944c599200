//! Output plumbing: CSV writers, the run manifest, and the output
//! directory layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens a CSV file and writes its header line.
    pub fn csv(&mut self, name: &str, header: &str) -> Result<BufWriter<File>, CliError> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        writeln!(w, "{header}")?;
        self.written.push(name.to_string());
        Ok(w)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
        std::fs::write(self.path(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes the run manifest: command, tool version, seed, effective
    /// configuration, and the list of produced files. Deterministic
    /// commands are reproducible bit for bit from this record.
    pub fn manifest(&mut self, command: &str, cfg: &RunConfig) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            tool: &'static str,
            version: &'static str,
            seed: u64,
            config: &'a RunConfig,
            outputs: &'a [String],
        }
        let manifest = Manifest {
            command,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            outputs: &self.written,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
        std::fs::write(self.path("run_manifest.json"), text)?;
        Ok(())
    }
}

/// Fixed-format float for CSV cells: shortest representation that parses
/// back to the same value.
pub fn num(v: f64) -> String {
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // format! already emits the shortest round-trip form for f64
    format!("{v}")
}
