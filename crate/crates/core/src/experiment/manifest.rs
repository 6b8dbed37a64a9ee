use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::Seed;

/// Record of one run: enough to repeat it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Subcommand or entry point that produced the outputs.
    pub command: String,
    pub seed: Seed,
    /// Worker count used; outputs do not depend on it.
    pub workers: usize,
    /// Fully resolved configuration of the command.
    pub config: serde_json::Value,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Seed, workers: usize, config: serde_json::Value) -> Self {
        Manifest {
            tool: "secnet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            workers,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable manifest")
    }

    pub fn from_json(text: &str) -> Result<Manifest> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
