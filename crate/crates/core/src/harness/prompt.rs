use crate::sim::ScenarioRegistry;

use super::{HarnessError, PromptVariant};

pub const ONE_SENTENCE: &str = "Provide your response in one sentence.";
/// Cue prepended for models that also receive a scene image.
pub const IMAGE_CUE: &str = "You are in the room shown in the image.";
pub const PARTIAL_QUESTION: &str = "Which object should be used for the final step, and where should it go?";

/// Prompt text for a registered scenario. Scenarios that only make sense
/// with an image carry their own cue.
pub fn build_prompt(
    registry: &ScenarioRegistry,
    variant: PromptVariant,
    scenario: &str,
) -> Result<String, HarnessError> {
    prompt_text(registry, variant, scenario, false)
}

/// Prompt for a model that is also shown the scene.
pub fn build_multimodal_prompt(
    registry: &ScenarioRegistry,
    variant: PromptVariant,
    scenario: &str,
) -> Result<String, HarnessError> {
    prompt_text(registry, variant, scenario, true)
}

fn prompt_text(
    registry: &ScenarioRegistry,
    variant: PromptVariant,
    scenario: &str,
    multimodal: bool,
) -> Result<String, HarnessError> {
    let sc = registry.get(scenario)?;
    let p = &sc.prompt;
    let mut parts: Vec<&str> = Vec::new();
    match &p.image_cue {
        Some(cue) => parts.push(cue),
        None if multimodal => parts.push(IMAGE_CUE),
        None => {}
    }
    parts.push(&p.base);
    match variant {
        PromptVariant::FreeText => {}
        PromptVariant::OneSentence => parts.push(ONE_SENTENCE),
        PromptVariant::PartialSolution => {
            let steps = p
                .partial_steps
                .as_deref()
                .ok_or_else(|| HarnessError::NoPartialSolution(sc.id.clone()))?;
            parts.push(steps);
            parts.push(PARTIAL_QUESTION);
        }
    }
    Ok(parts.join(" "))
}
