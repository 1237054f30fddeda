//! Probabilistic plan recognition over a travel-planning knowledge base.
//!
//! Statements arrive as predicates. Each one is matched against operator
//! preconditions, effects and bodies, attached to the running plan sequence
//! by a discourse relation, and the resulting interpretations are weighted by
//! how well defined they are. Once the dialogue ends, domain rules fill the
//! remaining gaps and the set is ranked.

pub mod cli;
pub mod direct;
pub mod discourse;
pub mod engine;
pub mod indirect;
pub mod knowledge;
pub mod report;
pub mod scoring;
pub mod transcript;

pub use direct::{Interpretation, Plan};
pub use discourse::{Cue, Predicate};
pub use engine::{EngineOptions, IndirectMode, Session};
pub use knowledge::{load_kb, KnowledgeBase};
pub use report::ResultDocument;
pub use transcript::Transcript;

/// The bundled travel knowledge base.
pub const TRAVEL_KB: &str = include_str!("../kb/travel.json");
