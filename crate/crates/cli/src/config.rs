use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hapgrip_core::harness::SimConfig;
use hapgrip_core::sim::{default_objects, load_object_library, ObjectSpec};
use serde::Deserialize;

use crate::{Cli, Failure};

/// Contents of the `--config` file.
///
/// ```toml
/// seed = 7
/// out = "runs/demo"
///
/// [sim]
/// time_limit = 10.0
///
/// [sim.operator]
/// gain = 0.08
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub library: Option<PathBuf>,
    pub sim: SimConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config)?;
        let cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(Failure::Config)?;
        cfg.sim
            .validate()
            .with_context(|| format!("validating {}", path.display()))
            .map_err(Failure::Config)?;
        Ok(cfg)
    }
}

/// Settings after merging the config file with command-line flags.
pub struct Resolved {
    pub file: FileConfig,
    pub library: Vec<ObjectSpec>,
}

impl Resolved {
    pub fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let library = match cli.library.as_ref().or(file.library.as_ref()) {
            Some(p) => load_object_library(p)
                .with_context(|| format!("loading object library {}", p.display()))
                .map_err(Failure::Config)?,
            None => default_objects(),
        };
        Ok(Self { file, library })
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.seed).unwrap_or(0)
    }

    pub fn out(&self, flag: Option<&PathBuf>, fallback: impl FnOnce() -> PathBuf) -> PathBuf {
        flag.cloned()
            .or_else(|| self.file.out.clone())
            .unwrap_or_else(fallback)
    }

    pub fn object(&self, name: &str) -> Result<&ObjectSpec, Failure> {
        self.library.iter().find(|o| o.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.library.iter().map(|o| o.name.as_str()).collect();
            Failure::Config(anyhow::anyhow!(
                "unknown object '{name}' (known: {})",
                known.join(", ")
            ))
        })
    }
}
