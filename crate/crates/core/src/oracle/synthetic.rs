//! A seeded noisy oracle over a hidden gold table.
//!
//! Without context it flips the gold label with the profile's
//! false-positive / false-negative rates. With context, beliefs parsed
//! out of the context sentences interact with the answer through the
//! grounded constraint graph: a belief contradicting the no-context
//! answer (via one constraint) re-draws the answer toward gold with
//! `context_correction_prob`; a belief supporting the wrong answer flips
//! it toward the wrong label with `context_miscorrection_prob`.
//! Confidence comes from Beta distributions, higher-mode for correct
//! answers. Everything is deterministic given (seed, statement, context).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::FactRecord;
use crate::domain::{ConstraintGraph, Label, Statement, StatementId};
use crate::error::{Error, Result};

use super::{Oracle, OracleAnswer, Query};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        Beta::new(self.alpha, self.beta)
            .expect("beta parameters validated at profile load")
            .sample(rng)
            .clamp(0.0, 1.0)
    }
}

/// Error profile of the synthetic oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracleProfile {
    /// P(answer T | gold F), no context.
    pub false_positive_rate: f64,
    /// P(answer F | gold T), no context.
    pub false_negative_rate: f64,
    pub correct_confidence: BetaParams,
    pub incorrect_confidence: BetaParams,
    /// P(re-draw toward gold | context contradicts the raw answer).
    pub context_correction_prob: f64,
    /// P(flip toward wrong | context supports the wrong answer).
    pub context_miscorrection_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticOracleProfile {
    fn default() -> Self {
        SyntheticOracleProfile {
            false_positive_rate: 0.4,
            false_negative_rate: 0.03,
            correct_confidence: BetaParams { alpha: 8.0, beta: 2.0 },
            incorrect_confidence: BetaParams { alpha: 4.0, beta: 3.0 },
            context_correction_prob: 0.8,
            context_miscorrection_prob: 0.15,
            seed: 0,
        }
    }
}

impl SyntheticOracleProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("false_positive_rate", self.false_positive_rate),
            ("false_negative_rate", self.false_negative_rate),
            ("context_correction_prob", self.context_correction_prob),
            ("context_miscorrection_prob", self.context_miscorrection_prob),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::Config(format!("profile field {name} = {p} outside [0, 1]")));
            }
        }
        for (name, b) in [
            ("correct_confidence", self.correct_confidence),
            ("incorrect_confidence", self.incorrect_confidence),
        ] {
            if !(b.alpha > 0.0) || !(b.beta > 0.0) {
                return Err(Error::Config(format!(
                    "profile field {name} has non-positive beta parameters"
                )));
            }
        }
        Ok(())
    }

    /// A noiseless profile: the oracle becomes the gold function.
    pub fn noiseless(seed: u64) -> Self {
        SyntheticOracleProfile {
            false_positive_rate: 0.0,
            false_negative_rate: 0.0,
            context_correction_prob: 0.0,
            context_miscorrection_prob: 0.0,
            seed,
            ..Self::default()
        }
    }

    /// Profile whose marginal error rates hit the given recall and
    /// precision targets on a fact population with the given True/False
    /// counts: fnr = 1 - recall, and fpr chosen so that
    /// recall*nT / (recall*nT + fpr*nF) = precision.
    pub fn for_targets(
        recall: f64,
        precision: f64,
        n_true: usize,
        n_false: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_true == 0 || n_false == 0 {
            return Err(Error::Config(
                "target-derived profile needs both true and false facts".into(),
            ));
        }
        if !(0.0 < recall && recall <= 1.0) || !(0.0 < precision && precision <= 1.0) {
            return Err(Error::Config("recall and precision must be in (0, 1]".into()));
        }
        let fpr = (recall * n_true as f64 * (1.0 - precision) / precision) / n_false as f64;
        let profile = SyntheticOracleProfile {
            false_positive_rate: fpr.clamp(0.0, 1.0),
            false_negative_rate: 1.0 - recall,
            seed,
            ..Self::default()
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// How a grounded constraint links some other statement to a query.
#[derive(Debug, Clone)]
struct Link {
    other: StatementId,
    /// True when the query statement is the premise of the rule.
    query_is_premise: bool,
    conclusion_label: Label,
}

/// Synthetic oracle over a hidden gold table and a grounded constraint
/// graph. Stateless per ask (seeds derive from statement and context),
/// hence safe to share across threads.
pub struct SyntheticOracle {
    profile: SyntheticOracleProfile,
    gold: BTreeMap<StatementId, Label>,
    /// Declarative sentence (positive and negated form) -> belief.
    sentences: BTreeMap<String, (StatementId, Label)>,
    /// One-hop constraint links per statement.
    links: BTreeMap<StatementId, Vec<Link>>,
}

impl SyntheticOracle {
    pub fn new(
        profile: SyntheticOracleProfile,
        graph: &ConstraintGraph,
        facts: &[FactRecord],
    ) -> Result<Self> {
        profile.validate()?;
        let mut gold = BTreeMap::new();
        let mut sentences = BTreeMap::new();
        let mut entities: Vec<String> = Vec::new();
        for fact in facts {
            gold.insert(fact.statement.id.clone(), fact.gold_label);
            for label in [Label::T, Label::F] {
                sentences.insert(
                    capitalize_sentence(&fact.statement.render(label)),
                    (fact.statement.id.clone(), label),
                );
            }
            let entity = fact.statement.entity().to_string();
            if !entities.contains(&entity) {
                entities.push(entity);
            }
        }
        let mut links: BTreeMap<StatementId, Vec<Link>> = BTreeMap::new();
        for entity in &entities {
            let grounded = graph.instantiate(entity)?;
            for c in grounded.constraints() {
                links.entry(c.premise.id.clone()).or_default().push(Link {
                    other: c.conclusion.id.clone(),
                    query_is_premise: true,
                    conclusion_label: c.conclusion_label,
                });
                links.entry(c.conclusion.id.clone()).or_default().push(Link {
                    other: c.premise.id.clone(),
                    query_is_premise: false,
                    conclusion_label: c.conclusion_label,
                });
            }
        }
        Ok(SyntheticOracle {
            profile,
            gold,
            sentences,
            links,
        })
    }

    pub fn profile(&self) -> &SyntheticOracleProfile {
        &self.profile
    }

    /// The no-context answer label for a statement; stable across calls
    /// and unaffected by context.
    fn raw_label(&self, statement: &Statement, gold: Label) -> Label {
        let mut rng = self.rng_for(&["base", &statement.id.to_string()]);
        let flip_prob = match gold {
            Label::T => self.profile.false_negative_rate,
            Label::F => self.profile.false_positive_rate,
        };
        if rng.random_bool(flip_prob) {
            gold.flip()
        } else {
            gold
        }
    }

    /// Beliefs recovered from context sentences.
    fn parse_context(&self, context: &str) -> Vec<(StatementId, Label)> {
        context
            .split_inclusive('.')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .filter_map(|s| self.sentences.get(s).cloned())
            .collect()
    }

    /// Does any single constraint linking `query` and a context belief
    /// get violated when the query is answered `answer`?
    fn context_contradicts(
        &self,
        query: &StatementId,
        answer: Label,
        beliefs: &[(StatementId, Label)],
    ) -> bool {
        self.link_check(query, answer, beliefs, |applicable_premise, conclusion, expected| {
            applicable_premise == Label::T && conclusion != expected
        })
    }

    /// Does any linking constraint hold (applicable and satisfied) when
    /// the query is answered `answer`?
    fn context_supports(
        &self,
        query: &StatementId,
        answer: Label,
        beliefs: &[(StatementId, Label)],
    ) -> bool {
        self.link_check(query, answer, beliefs, |applicable_premise, conclusion, expected| {
            applicable_premise == Label::T && conclusion == expected
        })
    }

    fn link_check(
        &self,
        query: &StatementId,
        answer: Label,
        beliefs: &[(StatementId, Label)],
        predicate: impl Fn(Label, Label, Label) -> bool,
    ) -> bool {
        let Some(links) = self.links.get(query) else {
            return false;
        };
        for link in links {
            for (belief_id, belief_label) in beliefs {
                if belief_id != &link.other {
                    continue;
                }
                let (premise_label, conclusion_label) = if link.query_is_premise {
                    (answer, *belief_label)
                } else {
                    (*belief_label, answer)
                };
                if predicate(premise_label, conclusion_label, link.conclusion_label) {
                    return true;
                }
            }
        }
        false
    }

    fn rng_for(&self, parts: &[&str]) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.profile.seed.to_le_bytes());
        for p in parts {
            hasher.update([0u8]);
            hasher.update(p.as_bytes());
        }
        let digest = hasher.finalize();
        let mut seed = [0u8; 8];
        seed.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(u64::from_le_bytes(seed))
    }
}

impl Oracle for SyntheticOracle {
    fn ask(&self, query: &Query) -> Result<OracleAnswer> {
        let id = &query.statement.id;
        let Some(&gold) = self.gold.get(id) else {
            return Err(Error::Oracle(format!(
                "statement {id} is not in the oracle's gold table"
            )));
        };
        let mut answer = self.raw_label(&query.statement, gold);
        let context = query.context.as_deref().unwrap_or("");
        if !context.is_empty() {
            let beliefs = self.parse_context(context);
            if !beliefs.is_empty() {
                let mut rng = self.rng_for(&["context", &id.to_string(), context]);
                if self.context_contradicts(id, answer, &beliefs)
                    && rng.random_bool(self.profile.context_correction_prob)
                {
                    answer = gold;
                }
                if self.context_supports(id, gold.flip(), &beliefs)
                    && rng.random_bool(self.profile.context_miscorrection_prob)
                {
                    answer = gold.flip();
                }
            }
        }
        let mut conf_rng = self.rng_for(&["confidence", &id.to_string(), context]);
        let confidence = if answer == gold {
            self.profile.correct_confidence.sample(&mut conf_rng)
        } else {
            self.profile.incorrect_confidence.sample(&mut conf_rng)
        };
        Ok(OracleAnswer {
            label: answer,
            confidence,
        })
    }
}

fn capitalize_sentence(raw: &str) -> String {
    let mut chars = raw.chars();
    match chars.next() {
        Some(first) => format!("{}{}.", first.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}
