use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use classifim::Result;

pub const MANIFEST_VERSION: u32 = 1;

/// Record of one CLI invocation, written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: u32,
    pub library_version: String,
    pub subcommand: String,
    pub flags: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub threads: usize,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, threads: usize) -> Self {
        Self {
            version: MANIFEST_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            flags: BTreeMap::new(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            threads,
            duration_secs: 0.0,
        }
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.flags.insert(name.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    /// Writes `<output>.manifest.json` beside every recorded output.
    pub fn write(&mut self, elapsed: Duration) -> Result<()> {
        self.duration_secs = elapsed.as_secs_f64();
        for out in &self.outputs {
            let path = manifest_path(out);
            let file = BufWriter::new(File::create(&path)?);
            serde_json::to_writer_pretty(file, self)?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
