//! Builds the shared well services (language-model tiers, phonology,
//! tagger) and presets from a [`Config`].

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use phraselette_core::lm::{
    InstructBackend, LmError, LogitBackend, MockInstruct, MockLogit, RemoteConfig, RemoteInstruct,
    RemoteLogit, Vocab, API_KEY_ENV, INSTRUCT_URL_ENV, LOGIT_URL_ENV,
};
use phraselette_core::phonology::{LexiconError, Phonology};
use phraselette_core::pos::{tagger_from_path, ModelError};
use phraselette_core::wells::{PresetError, Presets, WellServices};
use phraselette_core::Execution;
use thiserror::Error;

use crate::config::{BackendKind, Config};

const DEFAULT_TOP_K: usize = 64;

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("the mock backend needs --logit-fixture and/or --instruct-fixture")]
    MissingFixture,
    #[error("the remote backend needs a logit or instruct URL")]
    MissingUrl,
    #[error("the remote logit backend needs a local vocabulary file (vocab)")]
    MissingVocab,
    #[error("{path}: {source}")]
    Backend { path: PathBuf, source: LmError },
    #[error("reading vocabulary {path}: {message}")]
    Vocab { path: PathBuf, message: String },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("POS model: {0}")]
    PosModel(#[from] ModelError),
    #[error(transparent)]
    Presets(#[from] PresetError),
}

pub fn build_services(cfg: &Config, exec: Execution) -> Result<WellServices, SetupError> {
    let (logit, instruct) = match cfg.backend {
        BackendKind::Mock => mock_tiers(cfg)?,
        BackendKind::Remote => remote_tiers(cfg)?,
    };
    let mut services = WellServices::new(logit, instruct);
    if let Some(p) = &cfg.lexicon {
        services.phonology = Arc::new(Phonology::from_path(p)?);
    }
    if let Some(p) = &cfg.pos_model {
        services.tagger = tagger_from_path(Some(p))?;
    }
    services.exec = exec;
    Ok(services)
}

pub fn load_presets(cfg: &Config) -> Result<Presets, SetupError> {
    Ok(match &cfg.presets_dir {
        Some(dir) => Presets::with_dir(dir)?,
        None => Presets::bundled(),
    })
}

type Tiers = (Option<Arc<dyn LogitBackend>>, Option<Arc<dyn InstructBackend>>);

fn mock_tiers(cfg: &Config) -> Result<Tiers, SetupError> {
    if cfg.logit_fixture.is_none() && cfg.instruct_fixture.is_none() {
        return Err(SetupError::MissingFixture);
    }
    let logit = match &cfg.logit_fixture {
        Some(p) => Some(Arc::new(MockLogit::load(p).map_err(|e| fixture_error(p, e))?) as Arc<dyn LogitBackend>),
        None => None,
    };
    let instruct = match &cfg.instruct_fixture {
        Some(p) => Some(Arc::new(MockInstruct::load(p).map_err(|e| fixture_error(p, e))?) as Arc<dyn InstructBackend>),
        None => None,
    };
    Ok((logit, instruct))
}

fn fixture_error(path: &Path, source: LmError) -> SetupError {
    SetupError::Backend {
        path: path.to_owned(),
        source,
    }
}

fn remote_config(url: Option<&str>, env: &str, cfg: &Config) -> Option<RemoteConfig> {
    let mut rc = match url {
        Some(u) => {
            let mut rc = RemoteConfig::new(u);
            rc.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
            rc
        }
        None => RemoteConfig::from_env(env)?,
    };
    if let Some(secs) = cfg.timeout_secs {
        rc.timeout = Duration::from_secs(secs);
    }
    Some(rc)
}

fn remote_tiers(cfg: &Config) -> Result<Tiers, SetupError> {
    let logit_cfg = remote_config(cfg.logit_url.as_deref(), LOGIT_URL_ENV, cfg);
    let instruct_cfg = remote_config(cfg.instruct_url.as_deref(), INSTRUCT_URL_ENV, cfg);
    if logit_cfg.is_none() && instruct_cfg.is_none() {
        return Err(SetupError::MissingUrl);
    }
    let logit = match logit_cfg {
        Some(rc) => {
            let path = cfg.vocab.as_ref().ok_or(SetupError::MissingVocab)?;
            let vocab = load_vocab(path)?;
            let top_k = cfg.top_k.unwrap_or(DEFAULT_TOP_K);
            Some(Arc::new(RemoteLogit::new(rc, vocab, top_k)) as Arc<dyn LogitBackend>)
        }
        None => None,
    };
    let instruct = instruct_cfg.map(|rc| Arc::new(RemoteInstruct::new(rc)) as Arc<dyn InstructBackend>);
    Ok((logit, instruct))
}

fn load_vocab(path: &Path) -> Result<Vocab, SetupError> {
    let err = |message: String| SetupError::Vocab {
        path: path.to_owned(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let surfaces: Vec<String> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if surfaces.is_empty() {
        return Err(err("vocabulary is empty".into()));
    }
    Ok(Vocab::new(surfaces))
}
