//! Retrieval-augmented claim verification.
//!
//! The crate is organized along the verification workflow:
//!
//! * [`model`] holds the shared domain types (claims, labels, strategies).
//! * [`gateway`] is the only place that talks to external services and
//!   implements record/replay caching.
//! * [`strategy`] implements the four verification lenses: source analysis,
//!   expert fact-check retrieval, perspective contrast and multi-hop
//!   question answering.
//! * [`synth`] turns evidence into per-strategy and claim-level verdicts.
//! * [`pipeline`] runs everything headlessly for one claim.
//! * [`session`] is the interactive, event-sourced session state machine.
//! * [`eval`] scores pipeline predictions against gold labels.

pub mod eval;
pub mod gateway;
pub mod model;
pub mod pipeline;
pub mod prompts;
pub mod session;
pub mod strategy;
pub mod synth;

pub use gateway::{Gateway, GatewayError, GatewayMode, GenerationParams};
pub use model::{Claim, Label, QALabel, StrategyKind};
pub use prompts::PromptSet;

pub const DEFAULT_CHUNK_BUDGET: usize = 6000;
pub const DEFAULT_FANOUT: usize = 4;

/// Everything a strategy needs to run: the gateway, the prompt templates and
/// the tunables.
#[derive(Debug)]
pub struct Context {
    pub gateway: Gateway,
    pub prompts: PromptSet,
    pub generation: GenerationParams,
    pub chunk_budget: usize,
    pub fanout: usize,
}

impl Context {
    pub fn new(gateway: Gateway) -> Self {
        Self {
            gateway,
            prompts: PromptSet::default(),
            generation: GenerationParams::default(),
            chunk_budget: DEFAULT_CHUNK_BUDGET,
            fanout: DEFAULT_FANOUT,
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub(crate) fn llm(&self, task: &str, system: &str, user: &str) -> Result<String, GatewayError> {
        gateway::llm_complete(&self.gateway, task, system, user, &self.generation)
    }
}
