use super::{rephrasings_from_items, Well, WellDescriptor, WellError, WellOutput, WellRun};
use crate::lm::InstructRequest;
use crate::model::{ConfigError, WellConfig, WellKind};

pub const DEFAULT_ITEMS: usize = 12;

/// Prompted thesaurus. The prompt carries the selection only, never the
/// surrounding document.
pub struct ThesaurusWell;

impl Well for ThesaurusWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            generates: true,
            needs_description: true,
            ..WellDescriptor::new(WellKind::THESAURUS)
        }
        .param("max_items", "rephrasings to request (default 12)")
    }

    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()?;
        if config.param_usize("max_items")? == Some(0) {
            return Err(config.bad("max_items", "must be at least 1"));
        }
        Ok(())
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        self.validate(run.config)?;
        let cfg = run.config;
        let count = cfg.param_usize("max_items")?.unwrap_or(DEFAULT_ITEMS);
        let prompts = &run.services.prompts;
        let advice = prompts.advice_block(&run.advice.prompt_clauses);
        let count_text = count.to_string();
        let (system, user) = prompts.render(
            "thesaurus",
            &[
                ("description", cfg.description().unwrap_or_default()),
                ("selection", &run.context.slice.selection),
                ("count", &count_text),
                ("advice", &advice),
            ],
        );
        let req = InstructRequest::new(system, user, count).with_seed(run.seed);
        let items = run.services.instruct()?.complete(&req)?;
        Ok(WellOutput {
            rephrasings: rephrasings_from_items(&items, cfg, run.context.generation),
            ..WellOutput::default()
        })
    }
}
