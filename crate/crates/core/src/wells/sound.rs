use super::{Insight, ViewKind, Well, WellContext, WellDescriptor, WellError, WellOutput, WellRun, WellServices};
use crate::constraints::{Constraint, ConstraintSpec};
use crate::model::{ConfigError, WellConfig, WellKind};
use crate::phonology::{parse_phonemes, render_plain, Phonology, SoundMode, SoundRef};

/// Sound constraints: a reference pronunciation, typed in as raw phonemes
/// or taken from the selection, plus a pronunciation annotation of the
/// selection and the phoneme view.
pub struct SoundWell;

fn mode(cfg: &WellConfig) -> Result<SoundMode, ConfigError> {
    match cfg.param_str("mode")? {
        None => Ok(SoundMode::RhymesWith),
        Some(m) => m.parse().map_err(|e: String| cfg.bad("mode", e)),
    }
}

fn reference(cfg: &WellConfig, selection: &str, phonology: &Phonology) -> Result<Option<SoundRef>, ConfigError> {
    let mode = mode(cfg)?;
    let phonemes = match cfg.param_str("phonemes")?.filter(|p| !p.trim().is_empty()) {
        Some(raw) => parse_phonemes(raw).map_err(|e| cfg.bad("phonemes", e.to_string()))?,
        None => match phonology.pronounce_phrase(selection) {
            Ok(p) => p,
            // a selection with no letters gives no reference
            Err(_) => return Ok(None),
        },
    };
    Ok(SoundRef::new(phonemes, mode).ok())
}

impl SoundWell {
    fn build(cfg: &WellConfig, selection: &str, phonology: &Phonology) -> Result<Vec<Constraint>, WellError> {
        let Some(r) = reference(cfg, selection, phonology)? else {
            return Ok(Vec::new());
        };
        Ok(vec![Constraint::new(
            format!("{}:sound", cfg.well_id),
            cfg.well_id.clone(),
            ConstraintSpec::SoundRef(r),
        )?])
    }
}

impl Well for SoundWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            constrains: true,
            insights: true,
            views: true,
            ..WellDescriptor::new(WellKind::SOUND)
        }
        .param("phonemes", "reference as raw ARPAbet, e.g. \"K AE P\" (default: the selection)")
        .param("mode", "startsWith | endsWith | contains | rhymesWith (default rhymesWith)")
    }

    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()?;
        mode(config)?;
        if let Some(raw) = config.param_str("phonemes")?.filter(|p| !p.trim().is_empty()) {
            parse_phonemes(raw).map_err(|e| config.bad("phonemes", e.to_string()))?;
        }
        Ok(())
    }

    fn constraints(
        &self,
        config: &WellConfig,
        context: &WellContext,
        services: &WellServices,
    ) -> Result<Vec<Constraint>, WellError> {
        Self::build(config, &context.slice.selection, &services.phonology)
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        let phonology = &run.services.phonology;
        let selection = &run.context.slice.selection;
        let rendering = phonology
            .pronounce_phrase(selection)
            .map(|p| render_plain(&p))
            .unwrap_or_default();
        let alternates = phonology
            .pronounce_words(selection)
            .iter()
            .flat_map(|p| {
                phonology
                    .alternates(&p.word)
                    .into_iter()
                    .map(move |alt| format!("{}: {}", p.word, render_plain(&alt)))
            })
            .collect();
        Ok(WellOutput {
            emitted_constraints: Self::build(run.config, selection, phonology)?,
            insights: vec![Insight::PronunciationAnnotation {
                text: selection.clone(),
                rendering,
                alternates,
            }],
            view_contribution: Some(ViewKind::Phonemes),
            ..WellOutput::default()
        })
    }
}
