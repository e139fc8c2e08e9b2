use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelArch;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "aepinn-checkpoint/1";

/// Architecture header plus the canonical-order parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub arch: ModelArch,
    pub seed: u64,
    pub iterations: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(arch: ModelArch, seed: u64, iterations: usize, params: Vec<f64>) -> Result<Self> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            arch,
            seed,
            iterations,
            params,
        };
        ck.check()?;
        Ok(ck)
    }

    fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format `{}`",
                self.format
            )));
        }
        let expected = self.arch.num_params();
        if self.params.len() != expected {
            return Err(Error::Checkpoint(format!(
                "architecture needs {expected} parameters, found {}",
                self.params.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(s).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.check()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}
