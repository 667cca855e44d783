//! Service configuration, read from TOML or JSON (by file extension).
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub backend: BackendKind,
    /// Mock logit tier fixture.
    pub logit_fixture: Option<PathBuf>,
    /// Mock instruct tier fixture.
    pub instruct_fixture: Option<PathBuf>,
    /// Remote logit endpoint; falls back to `PHRASELETTE_LOGIT_URL`.
    pub logit_url: Option<String>,
    /// Remote instruct endpoint; falls back to `PHRASELETTE_INSTRUCT_URL`.
    pub instruct_url: Option<String>,
    /// Local copy of the remote logit server's vocabulary: a JSON array of
    /// token surfaces indexed by id.
    pub vocab: Option<PathBuf>,
    /// Entries requested per remote logit call (default 64).
    pub top_k: Option<usize>,
    /// Remote request timeout in seconds (default 30).
    pub timeout_secs: Option<u64>,
    /// CMU-format pronouncing dictionary replacing the bundled subset.
    pub lexicon: Option<PathBuf>,
    /// POS perceptron weights replacing the bundled model.
    pub pos_model: Option<PathBuf>,
    /// Extra prompt presets, one `{kind}.json` list per well kind.
    pub presets_dir: Option<PathBuf>,
    /// Where the server keeps session files.
    pub sessions_dir: Option<PathBuf>,
    /// Server listen address (default 127.0.0.1:7878).
    pub bind: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_owned(),
            message,
        };
        let mut cfg: Config = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        };
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.logit_fixture,
            &mut self.instruct_fixture,
            &mut self.vocab,
            &mut self.lexicon,
            &mut self.pos_model,
            &mut self.presets_dir,
            &mut self.sessions_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
