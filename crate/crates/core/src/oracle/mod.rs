//! The pluggable QA model boundary: question rendering, the
//! ask(question, context) contract, a synthetic noisy oracle for
//! desk-scale experiments, and an HTTP client for a real model service.

mod remote;
mod synthetic;

pub use remote::{RemoteConfig, RemoteOracle};
pub use synthetic::{BetaParams, SyntheticOracle, SyntheticOracleProfile};

use crate::domain::{Label, Relation, Statement};
use crate::error::Result;

/// A true/false question about one statement, with optional context
/// sentences prepended when re-asking with feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub statement: Statement,
    pub question_text: String,
    pub context: Option<String>,
}

impl Query {
    pub fn new(statement: Statement, context: Option<String>) -> Self {
        let question_text = render_question(&statement);
        Query {
            statement,
            question_text,
            context,
        }
    }

    /// Canonical textual form: "CONTEXT <sentences> QUERY <question>",
    /// or just the question when there is no context.
    pub fn prompt(&self) -> String {
        match self.context.as_deref() {
            Some(ctx) if !ctx.is_empty() => {
                format!("CONTEXT {ctx} QUERY {}", self.question_text)
            }
            _ => self.question_text.clone(),
        }
    }
}

/// A yes/no answer with the model's confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAnswer {
    pub label: Label,
    pub confidence: f64,
}

/// The QA model contract. Implementations must answer identical queries
/// identically given identical oracle state or seed.
pub trait Oracle: Send + Sync {
    fn ask(&self, query: &Query) -> Result<OracleAnswer>;
}

/// Deterministic per-relation interrogative rendering, e.g.
/// (swallow, HasA, gills) -> "Does a swallow have gills?".
pub fn render_question(statement: &Statement) -> String {
    let subject = statement.subject();
    let object = statement.object();
    match statement.relation() {
        Relation::IsA => format!(
            "Is {subject} {}{object}?",
            crate::domain::article(object)
        ),
        Relation::HasA => format!(
            "Does {subject} have {}{object}?",
            crate::domain::article(object)
        ),
        Relation::MadeOf => format!("Is {subject} made of {object}?"),
        Relation::PartOf => format!(
            "Is {subject} part of {}{object}?",
            crate::domain::article(object)
        ),
        Relation::HasProperty => format!("Is {subject} {object}?"),
        Relation::CapableOf => format!("Can {subject} {object}?"),
    }
}
