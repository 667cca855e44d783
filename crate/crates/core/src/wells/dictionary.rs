use super::{Insight, Well, WellDescriptor, WellError, WellOutput, WellRun};
use crate::lm::InstructRequest;
use crate::model::WellKind;

/// Prompted dictionary entry for the selection as used in its context. One
/// definition per run; no rephrasings.
pub struct DictionaryWell;

impl Well for DictionaryWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            insights: true,
            needs_description: true,
            ..WellDescriptor::new(WellKind::DICTIONARY)
        }
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        self.validate(run.config)?;
        let slice = &run.context.slice;
        let (system, user) = run.services.prompts.render(
            "dictionary",
            &[
                ("description", run.config.description().unwrap_or_default()),
                ("before", &slice.before),
                ("selection", &slice.selection),
                ("after", &slice.after),
            ],
        );
        let req = InstructRequest::new(system, user, 1).with_seed(run.seed);
        let items = run.services.instruct()?.complete(&req)?;
        let definition = items.into_iter().next().unwrap_or_default();
        Ok(WellOutput {
            insights: vec![Insight::Definition(definition)],
            ..WellOutput::default()
        })
    }
}
