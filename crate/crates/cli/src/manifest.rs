//! Run manifests: everything needed to reproduce an invocation bit-exactly.

use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Manifest {
    pub command: String,
    /// full resolved argument list (seed included), replayable verbatim
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub timestamp_utc: String,
    /// data files written by the run, relative to the manifest's directory
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(std::io::Error::other)?;
        Ok(())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(std::io::Error::other)
    }
}
