use super::{rephrasings_from_items, Insight, Well, WellDescriptor, WellError, WellOutput, WellRun};
use crate::lm::InstructRequest;
use crate::model::{ConfigError, WellConfig, WellKind};

pub const MAX_BULLETS: usize = 3;
pub const MIN_REPHRASINGS: usize = 5;
pub const MAX_REPHRASINGS: usize = 12;

/// Two-step persona reader: a short critique of the selection in context,
/// then rephrasings that answer the critique.
pub struct ReaderWell;

impl Well for ReaderWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            generates: true,
            insights: true,
            needs_description: true,
            ..WellDescriptor::new(WellKind::READER)
        }
        .param(
            "document_language",
            "ask for replies in the document's language (default true)",
        )
    }

    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()?;
        config.param_bool("document_language")?;
        Ok(())
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        self.validate(run.config)?;
        let cfg = run.config;
        let backend = run.services.instruct()?;
        let prompts = &run.services.prompts;
        let slice = &run.context.slice;
        let language = if cfg.param_bool("document_language")?.unwrap_or(true) {
            prompts.clause("language")
        } else {
            ""
        };
        let description = cfg.description().unwrap_or_default();
        let bullets_cap = MAX_BULLETS.to_string();
        let (system, user) = prompts.render(
            "reader_critique",
            &[
                ("description", description),
                ("language", language),
                ("count", &bullets_cap),
                ("before", &slice.before),
                ("selection", &slice.selection),
                ("after", &slice.after),
            ],
        );
        let mut bullets = backend.complete(
            &InstructRequest::new(system, user, MAX_BULLETS).with_seed(run.seed),
        )?;
        bullets.truncate(MAX_BULLETS);

        let bullet_text: String = bullets.iter().map(|b| format!("- {b}\n")).collect();
        let advice = prompts.advice_block(&run.advice.prompt_clauses);
        let (min, max) = (MIN_REPHRASINGS.to_string(), MAX_REPHRASINGS.to_string());
        let more = super::prompts::fill(prompts.clause("more_options"), &[("min", &min)]);
        let step_two = |extra: &str| -> Result<Vec<String>, WellError> {
            let (system, user) = prompts.render(
                "reader_rephrase",
                &[
                    ("description", description),
                    ("language", language),
                    ("before", &slice.before),
                    ("selection", &slice.selection),
                    ("after", &slice.after),
                    ("bullets", bullet_text.trim_end()),
                    ("min", &min),
                    ("count", &max),
                    ("advice", &advice),
                    ("more", extra),
                ],
            );
            let req = InstructRequest::new(system, user, MAX_REPHRASINGS).with_seed(run.seed);
            Ok(backend.complete(&req)?)
        };
        let mut items = step_two("")?;
        if distinct(&items) < MIN_REPHRASINGS {
            // one retry asking for more; keep whatever the two attempts give
            if let Ok(extra) = step_two(&more) {
                items.extend(extra);
            }
        }
        let mut rephrasings = rephrasings_from_items(&items, cfg, run.context.generation);
        rephrasings.truncate(MAX_REPHRASINGS);
        Ok(WellOutput {
            rephrasings,
            insights: vec![Insight::TextBullets(bullets)],
            ..WellOutput::default()
        })
    }
}

fn distinct(items: &[String]) -> usize {
    items.iter().collect::<std::collections::HashSet<_>>().len()
}
