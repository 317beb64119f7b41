//! Rationale enrichment pipeline: meta-reasoning grammar, corpus store,
//! catalyst acquisition, expansion, selection, iteration and analytics.

pub mod analytics;
pub mod backend;
pub mod catalyst;
pub mod digest;
pub mod expansion;
pub mod grammar;
pub mod jsonl;
pub mod orchestrator;
pub(crate) mod pool;
pub mod selection;
pub mod store;

pub use analytics::{fit_log_curve, pass_at_n, skill_report, LogFit, PassAtNCurve, SkillReport};
pub use backend::{Backend, BackendError, BackendHandle, GenerationParams, GenerationRequest, LiveBackend, MockBackend};
pub use catalyst::{acquire_catalyst, build_meta_prompt, CatalystConfig};
pub use expansion::{expand_dataset, ExpansionCandidate, ExpansionConfig};
pub use grammar::{parse_rationale, render_rationale, skill_histogram, GrammarError, RationaleTree, SkillHistogram, SkillTag};
pub use orchestrator::{verify_workspace, Pipeline, RunConfig};
pub use selection::{apply_selection, SelectionDecision, SelectorKind, Strategy, Winner};
pub use store::{
    load_catalyst, load_dataset, merge_training_corpus, CatalystExample, CatalystSet, InstructionSample,
    IterationDataset, IterationManifest, Provenance,
};
