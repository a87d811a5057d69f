//! Selection of beliefs to insert as query context when re-asking the
//! oracle: a uniform random policy, and a constraint-graph relevance
//! policy that picks the beliefs clashing most strongly with either
//! hypothetical answer to the query.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{Belief, BeliefBank, GroundedGraph, Label, Statement};

pub const DEFAULT_CONTEXT_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackPolicy {
    Random,
    GraphRelevance,
}

/// Beliefs chosen as context for one re-query, strongest first for the
/// relevance policy.
#[derive(Debug, Clone)]
pub struct FeedbackSelection {
    pub query: Statement,
    pub chosen: Vec<Belief>,
    /// Clash strength per chosen belief; zero for random picks and for
    /// relevance-policy padding.
    pub scores: Vec<f64>,
    pub policy: FeedbackPolicy,
}

/// Uniform sample without replacement of up to `k` beliefs, excluding
/// the query statement itself. Deterministic given the seed.
pub fn select_random(
    bank: &BeliefBank,
    query: &Statement,
    k: usize,
    seed: u64,
) -> FeedbackSelection {
    let pool: Vec<&Belief> = bank
        .beliefs()
        .filter(|b| b.id() != &query.id)
        .collect();
    let take = k.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<Belief> = if take == 0 {
        Vec::new()
    } else {
        sample(&mut rng, pool.len(), take)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect()
    };
    let scores = vec![0.0; chosen.len()];
    FeedbackSelection {
        query: query.clone(),
        chosen,
        scores,
        policy: FeedbackPolicy::Random,
    }
}

/// Graph-relevance policy: for each hypothetical answer to the query, a
/// bank belief clashes when a single grounded constraint linking the two
/// is violated by the pair. Clash strength is constraint weight times
/// belief weight; candidates from both hypotheses are pooled, deduped
/// keeping the max strength, and the top-k returned (ties break toward
/// the smaller statement id).
pub fn select_relevant(
    bank: &BeliefBank,
    graph: &GroundedGraph,
    query: &Statement,
    k: usize,
) -> FeedbackSelection {
    let mut strengths: Vec<(Belief, f64)> = Vec::new();
    for &ci in graph.incident(&query.id) {
        let constraint = &graph.constraints()[ci];
        let (other_id, query_is_premise) = if constraint.premise.id == query.id {
            (&constraint.conclusion.id, true)
        } else {
            (&constraint.premise.id, false)
        };
        if other_id == &query.id {
            continue;
        }
        let Some(belief) = bank.get(other_id) else {
            continue;
        };
        for hypothesis in [Label::T, Label::F] {
            let violated = if query_is_premise {
                constraint.violated_by(hypothesis, belief.label)
            } else {
                constraint.violated_by(belief.label, hypothesis)
            };
            if violated {
                let strength = constraint.weight * belief.weight;
                match strengths.iter_mut().find(|(b, _)| b.id() == belief.id()) {
                    Some((_, s)) => *s = s.max(strength),
                    None => strengths.push((belief.clone(), strength)),
                }
            }
        }
    }
    strengths.sort_by(|(ba, sa), (bb, sb)| {
        sb.partial_cmp(sa)
            .unwrap()
            .then_with(|| ba.id().cmp(bb.id()))
    });
    strengths.truncate(k);
    let (chosen, scores) = strengths.into_iter().unzip();
    FeedbackSelection {
        query: query.clone(),
        chosen,
        scores,
        policy: FeedbackPolicy::GraphRelevance,
    }
}

/// Relevance selection padded with random same-entity beliefs when fewer
/// than `k` clashes exist, keeping context size comparable across
/// policies. The seed only affects the padding.
pub fn select_relevant_padded(
    bank: &BeliefBank,
    graph: &GroundedGraph,
    query: &Statement,
    k: usize,
    seed: u64,
) -> FeedbackSelection {
    let mut selection = select_relevant(bank, graph, query, k);
    if selection.chosen.len() >= k {
        return selection;
    }
    let padding = select_random(bank, query, k, seed);
    for belief in padding.chosen {
        if selection.chosen.len() >= k {
            break;
        }
        if selection.chosen.iter().any(|b| b.id() == belief.id()) {
            continue;
        }
        selection.chosen.push(belief);
        selection.scores.push(0.0);
    }
    selection
}

/// Render the selection as declarative context sentences in selection
/// order: capitalized, period-terminated, negated when the belief label
/// is false.
pub fn build_context(selection: &FeedbackSelection) -> String {
    let sentences: Vec<String> = selection
        .chosen
        .iter()
        .map(|b| {
            let raw = b.statement.render(b.label);
            let mut chars = raw.chars();
            match chars.next() {
                Some(first) => format!("{}{}.", first.to_uppercase(), chars.as_str()),
                None => String::new(),
            }
        })
        .collect();
    sentences.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        ground_template, Constraint, ConstraintGraph, ConstraintKind, Provenance, Relation,
        StatementTemplate,
    };

    fn believe(bank: &mut BeliefBank, tpl: &StatementTemplate, label: Label, weight: f64) {
        let s = ground_template(tpl, bank.entity().unwrap()).unwrap();
        bank.upsert(Belief::new(s, label, weight, Provenance::RawModel).unwrap())
            .unwrap();
    }

    /// Poodle fixture: query "Is a poodle an animal?" against a bank of
    /// dog / mammal / canine beliefs plus unrelated ones.
    fn poodle_fixture() -> (BeliefBank, GroundedGraph, Statement) {
        let animal = StatementTemplate::new(Relation::IsA, "animal");
        let dog = StatementTemplate::new(Relation::IsA, "dog");
        let mammal = StatementTemplate::new(Relation::IsA, "mammal");
        let canine = StatementTemplate::new(Relation::IsA, "domesticated canine");
        let tail = StatementTemplate::new(Relation::HasA, "tail");
        let fur = StatementTemplate::new(Relation::HasA, "fur");
        let bark = StatementTemplate::new(Relation::CapableOf, "bark");

        let mut constraints = Vec::new();
        for premise in [&dog, &mammal, &canine] {
            constraints.push(
                Constraint::new(
                    premise.clone(),
                    animal.clone(),
                    Label::T,
                    4.0,
                    ConstraintKind::Forward,
                )
                .unwrap(),
            );
        }
        constraints.push(
            Constraint::new(dog.clone(), tail.clone(), Label::T, 3.0, ConstraintKind::Forward)
                .unwrap(),
        );
        constraints.push(
            Constraint::new(dog.clone(), bark.clone(), Label::T, 3.0, ConstraintKind::Forward)
                .unwrap(),
        );
        let graph = ConstraintGraph::new(
            [animal.clone(), dog.clone(), mammal.clone(), canine.clone(), tail.clone(), fur.clone(), bark],
            constraints,
        )
        .unwrap()
        .with_weights(|c| Ok(c.raw_score / 4.0))
        .unwrap();
        let grounded = graph.instantiate("poodle").unwrap();

        let mut bank = BeliefBank::for_entity("poodle");
        believe(&mut bank, &dog, Label::T, 0.95);
        believe(&mut bank, &mammal, Label::T, 0.9);
        believe(&mut bank, &canine, Label::T, 0.85);
        believe(&mut bank, &tail, Label::T, 0.8);
        believe(&mut bank, &fur, Label::T, 0.8);

        let query = ground_template(&animal, "poodle").unwrap();
        (bank, grounded, query)
    }

    #[test]
    fn relevance_selects_the_clashing_triple() {
        let (bank, grounded, query) = poodle_fixture();
        let selection = select_relevant(&bank, &grounded, &query, 3);
        let mut texts: Vec<&str> = selection
            .chosen
            .iter()
            .map(|b| b.statement.text.as_str())
            .collect();
        texts.sort();
        assert_eq!(
            texts,
            vec![
                "a poodle is a dog",
                "a poodle is a domesticated canine",
                "a poodle is a mammal"
            ]
        );
        // strongest first: dog (0.95) before mammal (0.9) before canine (0.85)
        assert!(selection.scores[0] >= selection.scores[1]);
        assert!(selection.scores[1] >= selection.scores[2]);
    }

    #[test]
    fn relevance_matches_exhaustive_clash_enumeration() {
        let (bank, grounded, query) = poodle_fixture();
        let selection = select_relevant(&bank, &grounded, &query, 10);

        // brute force: every (belief, hypothesis, constraint) triple
        let mut expected: Vec<(String, f64)> = Vec::new();
        for belief in bank.beliefs() {
            let mut best: Option<f64> = None;
            for c in grounded.constraints() {
                for hyp in [Label::T, Label::F] {
                    let pair_violates = (c.premise.id == query.id
                        && c.conclusion.id == *belief.id()
                        && c.violated_by(hyp, belief.label))
                        || (c.conclusion.id == query.id
                            && c.premise.id == *belief.id()
                            && c.violated_by(belief.label, hyp));
                    if pair_violates {
                        let s = c.weight * belief.weight;
                        best = Some(best.map_or(s, |b: f64| b.max(s)));
                    }
                }
            }
            if let Some(s) = best {
                expected.push((belief.id().to_string(), s));
            }
        }
        expected.sort_by(|(ia, sa), (ib, sb)| sb.partial_cmp(sa).unwrap().then(ia.cmp(ib)));
        let got: Vec<(String, f64)> = selection
            .chosen
            .iter()
            .zip(&selection.scores)
            .map(|(b, s)| (b.id().to_string(), *s))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn relevance_never_returns_the_query() {
        let (mut bank, grounded, query) = poodle_fixture();
        bank.upsert(Belief::new(query.clone(), Label::F, 0.5, Provenance::RawModel).unwrap())
            .unwrap();
        let selection = select_relevant(&bank, &grounded, &query, 10);
        assert!(selection.chosen.iter().all(|b| b.id() != &query.id));
    }

    #[test]
    fn empty_bank_empty_selection() {
        let (_, grounded, query) = poodle_fixture();
        let bank = BeliefBank::for_entity("poodle");
        assert!(select_relevant(&bank, &grounded, &query, 3).chosen.is_empty());
        assert!(select_random(&bank, &query, 3, 1).chosen.is_empty());
    }

    #[test]
    fn random_returns_all_when_fewer_than_k() {
        let (_, _, query) = poodle_fixture();
        let mut bank = BeliefBank::for_entity("poodle");
        believe(&mut bank, &StatementTemplate::new(Relation::IsA, "dog"), Label::T, 0.9);
        believe(&mut bank, &StatementTemplate::new(Relation::HasA, "tail"), Label::T, 0.8);
        let selection = select_random(&bank, &query, 3, 5);
        assert_eq!(selection.chosen.len(), 2);
    }

    #[test]
    fn random_is_seed_deterministic() {
        let (bank, _, query) = poodle_fixture();
        let a = select_random(&bank, &query, 3, 99);
        let b = select_random(&bank, &query, 3, 99);
        let ids = |s: &FeedbackSelection| {
            s.chosen.iter().map(|b| b.id().clone()).collect::<Vec<_>>()
        };
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn random_draws_are_roughly_uniform() {
        let (_, _, query) = poodle_fixture();
        let mut bank = BeliefBank::for_entity("poodle");
        for i in 0..10 {
            believe(
                &mut bank,
                &StatementTemplate::new(Relation::HasA, format!("part{i:02}")),
                Label::T,
                0.5,
            );
        }
        let mut counts = std::collections::BTreeMap::new();
        let draws = 10_000;
        for seed in 0..draws {
            let s = select_random(&bank, &query, 1, seed);
            *counts.entry(s.chosen[0].id().clone()).or_insert(0usize) += 1;
        }
        // expected 1000 per belief; 3 sigma of binomial(10^4, 0.1) is ~90
        let expected = draws as f64 / 10.0;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        for (_, n) in counts {
            assert!(
                (n as f64 - expected).abs() < 3.0 * sigma,
                "count {n} outside 3 sigma of {expected}"
            );
        }
    }

    #[test]
    fn padding_fills_up_to_k() {
        let (bank, grounded, query) = poodle_fixture();
        // only one clash possible: restrict the bank to dog + unrelated fur
        let mut small = BeliefBank::for_entity("poodle");
        for b in bank.beliefs() {
            if b.statement.text.contains("dog") || b.statement.text.contains("fur") {
                small.upsert(b.clone()).unwrap();
            }
        }
        let selection = select_relevant_padded(&small, &grounded, &query, 3, 7);
        assert_eq!(selection.chosen.len(), 2);
        assert!(selection.scores[0] > 0.0);
        assert_eq!(selection.scores[1], 0.0);
    }

    #[test]
    fn context_rendering_negates_false_beliefs() {
        let fish = StatementTemplate::new(Relation::IsA, "fish");
        let s = ground_template(&fish, "swallow").unwrap();
        let selection = FeedbackSelection {
            query: s.clone(),
            chosen: vec![Belief::new(s, Label::F, 0.9, Provenance::RawModel).unwrap()],
            scores: vec![1.0],
            policy: FeedbackPolicy::GraphRelevance,
        };
        assert_eq!(build_context(&selection), "A swallow is not a fish.");
    }

    #[test]
    fn context_is_empty_for_empty_selection() {
        let (_, _, query) = poodle_fixture();
        let selection = FeedbackSelection {
            query,
            chosen: vec![],
            scores: vec![],
            policy: FeedbackPolicy::Random,
        };
        assert_eq!(build_context(&selection), "");
    }

    #[test]
    fn three_beliefs_render_in_order() {
        let (bank, grounded, query) = poodle_fixture();
        let selection = select_relevant(&bank, &grounded, &query, 3);
        let ctx = build_context(&selection);
        let sentences: Vec<&str> = ctx.split(". ").collect();
        assert_eq!(sentences.len(), 3);
        assert!(ctx.starts_with("A poodle is a dog."));
    }

    #[test]
    fn clash_strength_monotone_in_constraint_weight() {
        let (bank, _, query) = poodle_fixture();
        let animal = StatementTemplate::new(Relation::IsA, "animal");
        let dog = StatementTemplate::new(Relation::IsA, "dog");
        let mammal = StatementTemplate::new(Relation::IsA, "mammal");
        for dog_weight in [0.5, 0.7, 0.9] {
            let graph = ConstraintGraph::new(
                [animal.clone(), dog.clone(), mammal.clone()],
                vec![
                    Constraint::new(dog.clone(), animal.clone(), Label::T, 4.0, ConstraintKind::Forward)
                        .unwrap(),
                    Constraint::new(mammal.clone(), animal.clone(), Label::T, 4.0, ConstraintKind::Forward)
                        .unwrap(),
                ],
            )
            .unwrap()
            .with_weights(|c| {
                Ok(if c.premise.object == "dog" { dog_weight } else { 0.6 })
            })
            .unwrap();
            let grounded = graph.instantiate("poodle").unwrap();
            let selection = select_relevant(&bank, &grounded, &query, 2);
            // dog belief weight 0.95 * dog_weight >= 0.475 vs mammal 0.9 * 0.6 = 0.54
            let first = selection.chosen[0].statement.text.clone();
            if dog_weight * 0.95 > 0.54 {
                assert_eq!(first, "a poodle is a dog");
            } else {
                assert_eq!(first, "a poodle is a mammal");
            }
        }
    }
}
