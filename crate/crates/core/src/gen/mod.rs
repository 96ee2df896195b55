//! Prompt construction, generator backends, hole filling with repair,
//! connection inference, missing-function generation and training-data
//! builders.

mod augment;
mod backend;
mod extract;
mod mask;
mod orchestrate;
mod prompt;

use thiserror::Error;

use crate::doc::BackendError;
use crate::template::Hole;

pub use augment::{build_augmentation_prompt, AUGMENT_TASK};
pub use backend::{
    prompt_hash, GeneratorBackend, HttpGenerator, Limits, RecordingBackend, ReplayBackend, ScriptedBackend, StubBackend,
};
pub use extract::{extract_code, extract_connections, parse_connection_line};
pub use mask::{
    build_mask_dataset, mask_unit, to_jsonl, unmask, MaskSample, CONTINUOUS_INSTRUCTION, DEFAULT_PARAPHRASES,
    DISCRETE_INSTRUCTION, MASK,
};
pub use orchestrate::{
    fill_hole, generate_missing_functions, infer_connections, repair_loop, splice, Attempt, FillContext,
    GeneratorTypeReasoner, HeuristicTypeReasoner, NoteClass, Rejection, RepairReport,
};
pub use prompt::{
    build_state_prompt, generated_code, ExampleLibrary, Label, Message, PromptBundle, Purpose, Role,
    EQUATION_INTRODUCTION, STATE_INTRODUCTION, X_BNF,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("generator backend failed: {0}")]
    Backend(BackendError),
    #[error("no acceptable output after {} attempts", report.attempts.len())]
    Exhausted { report: RepairReport },
    #[error("hole {0} is not open in the skeleton")]
    HoleNotOpen(Hole),
    #[error("the composition has no subsystems")]
    EmptyComposition,
    #[error("at least one few-shot example is required")]
    FewShotRequired,
    #[error("unit `{0}` is neither discrete nor continuous")]
    NotMaskable(String),
}

impl GenError {
    pub fn code(&self) -> &'static str {
        match self {
            GenError::Backend(_) => "BackendFailure",
            GenError::Exhausted { .. } => "Exhausted",
            GenError::HoleNotOpen(_) => "HoleNotOpen",
            GenError::EmptyComposition => "EmptyComposition",
            GenError::FewShotRequired => "FewShotRequired",
            GenError::NotMaskable(_) => "NotMaskable",
        }
    }
}
