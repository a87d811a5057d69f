//! Synthetic taxonomy, constraint, and fact generation, plus label
//! propagation and calibration/evaluation splitting.
//!
//! The generator builds a forest of concept chains (specific concept at
//! the tail, general at the head). Each concept implies the next more
//! general one (forward rule), each forward rule gets a backward twin at
//! a discounted raw score, property templates hang off concepts via
//! forward rules, and every cross-chain concept pair becomes a
//! mutual-exclusivity pair. Facts come from annotating the chain tails
//! per entity and propagating labels to a fixed point: forward rules
//! push a true premise's expected label onto the conclusion, mutex
//! halves push false. Everything is deterministic given the seed.
//!
//! Chains rather than branching trees are forced by the backward twins:
//! a branching node believed true would expect every child true, so a
//! gold labeling could never satisfy all constraints at once. With
//! chains, an entity whose home-chain tail is true carries the whole
//! chain plus its properties as true facts, everything cross-chain as
//! false, and scores consistency exactly 1 under its own graph.
//!
//! Statements propagation cannot reach (cross-chain properties) are
//! annotated false directly, so every grounded statement is a fact. The
//! only constraints covering such a fact are its weak backward link and
//! a forward rule with a false premise, which is what gives the feedback
//! pipelines room to beat pure constraint solving.

pub mod files;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    Constraint, ConstraintGraph, ConstraintKind, GroundedGraph, Label, Relation, Statement,
    StatementId, StatementTemplate,
};
use crate::error::{Error, Result};

/// Share of each relation among generated templates. IsA templates are
/// the taxonomy concepts; the rest are property templates attached to
/// concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMix {
    pub is_a: f64,
    pub has_a: f64,
    pub made_of: f64,
    pub part_of: f64,
    pub has_property: f64,
    pub capable_of: f64,
}

impl Default for RelationMix {
    fn default() -> Self {
        RelationMix {
            is_a: 0.55,
            has_a: 0.15,
            made_of: 0.05,
            part_of: 0.05,
            has_property: 0.1,
            capable_of: 0.1,
        }
    }
}

impl RelationMix {
    fn entries(&self) -> [(Relation, f64); 6] {
        [
            (Relation::IsA, self.is_a),
            (Relation::HasA, self.has_a),
            (Relation::MadeOf, self.made_of),
            (Relation::PartOf, self.part_of),
            (Relation::HasProperty, self.has_property),
            (Relation::CapableOf, self.capable_of),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let entries = self.entries();
        if entries.iter().any(|(_, p)| *p < 0.0 || !p.is_finite()) {
            return Err(Error::Config("relation mix proportions must be non-negative".into()));
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "relation mix proportions sum to {sum}, expected 1"
            )));
        }
        if self.is_a <= 0.0 {
            return Err(Error::Config("relation mix needs a positive IsA share".into()));
        }
        Ok(())
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomySpec {
    pub seed: u64,
    /// Number of IsA taxonomy concepts.
    pub concept_count: usize,
    pub entity_count: usize,
    /// Number of concept chains; concepts in different chains are
    /// mutually exclusive.
    pub mutex_subtree_count: usize,
    pub relation_mix: RelationMix,
    /// Raw-score discount of a backward rule against its forward twin.
    pub backward_discount: f64,
    /// Probability that an entity's home-chain tail is annotated true.
    /// An entity with a false tail has no positive concept facts.
    pub leaf_fact_true_fraction: f64,
}

impl Default for TaxonomySpec {
    fn default() -> Self {
        TaxonomySpec {
            seed: 7,
            concept_count: 30,
            entity_count: 8,
            mutex_subtree_count: 3,
            relation_mix: RelationMix::default(),
            backward_discount: 2.0,
            leaf_fact_true_fraction: 1.0,
        }
    }
}

impl TaxonomySpec {
    pub fn validate(&self) -> Result<()> {
        self.relation_mix.validate()?;
        if self.concept_count == 0 || self.entity_count == 0 {
            return Err(Error::Config("concept and entity counts must be positive".into()));
        }
        if self.mutex_subtree_count == 0 || self.mutex_subtree_count > self.concept_count {
            return Err(Error::Config(format!(
                "mutex_subtree_count {} must be in 1..={}",
                self.mutex_subtree_count, self.concept_count
            )));
        }
        if !(self.backward_discount > 0.0) || self.backward_discount > 4.0 {
            return Err(Error::Config(format!(
                "backward_discount {} must be in (0, 4]",
                self.backward_discount
            )));
        }
        if !(self.leaf_fact_true_fraction > 0.0) || self.leaf_fact_true_fraction > 1.0 {
            return Err(Error::Config(format!(
                "leaf_fact_true_fraction {} must be in (0, 1]",
                self.leaf_fact_true_fraction
            )));
        }
        Ok(())
    }
}

/// A gold-labeled grounded statement. `silver` marks labels obtained via
/// propagation rather than direct leaf annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FactRecord {
    pub statement: Statement,
    pub gold_label: Label,
    pub silver: bool,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub graph: ConstraintGraph,
    pub entities: Vec<String>,
    pub facts: Vec<FactRecord>,
}

impl GeneratedDataset {
    /// Gold labels keyed by statement id.
    pub fn gold(&self) -> BTreeMap<StatementId, Label> {
        self.facts
            .iter()
            .map(|f| (f.statement.id.clone(), f.gold_label))
            .collect()
    }

    /// True/False fact counts.
    pub fn label_balance(&self) -> (usize, usize) {
        let n_true = self
            .facts
            .iter()
            .filter(|f| f.gold_label == Label::T)
            .count();
        (n_true, self.facts.len() - n_true)
    }
}

pub fn generate(spec: &TaxonomySpec) -> Result<GeneratedDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // concept chains: the first `mutex_subtree_count` concepts head one
    // chain each, every later concept extends a random chain at the tail
    let n = spec.concept_count;
    let roots = spec.mutex_subtree_count;
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut chains: Vec<Vec<usize>> = (0..roots).map(|r| vec![r]).collect();
    let mut subtree = vec![0usize; n];
    for (c, chain) in chains.iter().enumerate().take(roots) {
        subtree[chain[0]] = c;
    }
    for i in roots..n {
        let c = rng.random_range(0..roots);
        parent[i] = Some(*chains[c].last().unwrap());
        chains[c].push(i);
        subtree[i] = c;
    }
    let concept_templates: Vec<StatementTemplate> = (0..n)
        .map(|i| StatementTemplate::new(Relation::IsA, format!("kind{i:02}")))
        .collect();

    // property templates per the relation mix, each owned by one concept
    let total_templates = (n as f64 / spec.relation_mix.is_a).round() as usize;
    let mut property_templates: Vec<(StatementTemplate, usize)> = Vec::new();
    for (relation, share) in spec.relation_mix.entries() {
        if relation == Relation::IsA {
            continue;
        }
        let count = (total_templates as f64 * share).round() as usize;
        let stem = match relation {
            Relation::HasA => "part",
            Relation::MadeOf => "stuff",
            Relation::PartOf => "whole",
            Relation::HasProperty => "shade",
            Relation::CapableOf => "perform feat",
            Relation::IsA => unreachable!(),
        };
        for k in 0..count {
            let owner = rng.random_range(0..n);
            property_templates.push((
                StatementTemplate::new(relation, format!("{stem}{k:02}")),
                owner,
            ));
        }
    }

    // forward rules: child concept -> parent concept, concept -> property
    let mut constraints = Vec::new();
    let mut forward: Vec<(StatementTemplate, StatementTemplate)> = Vec::new();
    for i in roots..n {
        forward.push((
            concept_templates[i].clone(),
            concept_templates[parent[i].unwrap()].clone(),
        ));
    }
    for (tpl, owner) in &property_templates {
        forward.push((concept_templates[*owner].clone(), tpl.clone()));
    }
    for (premise, conclusion) in forward {
        let raw = if rng.random_bool(0.5) { 4.0 } else { 3.0 };
        constraints.push(Constraint::new(
            premise.clone(),
            conclusion.clone(),
            Label::T,
            raw,
            ConstraintKind::Forward,
        )?);
        let backward_raw = (raw - spec.backward_discount).max(0.0);
        constraints.push(Constraint::new(
            conclusion,
            premise,
            Label::T,
            backward_raw,
            ConstraintKind::Backward,
        )?);
    }

    // mutual exclusivity between every cross-subtree concept pair
    for i in 0..n {
        for j in (i + 1)..n {
            if subtree[i] == subtree[j] {
                continue;
            }
            constraints.push(Constraint::new(
                concept_templates[i].clone(),
                concept_templates[j].clone(),
                Label::F,
                4.0,
                ConstraintKind::MutexHalf,
            )?);
            constraints.push(Constraint::new(
                concept_templates[j].clone(),
                concept_templates[i].clone(),
                Label::F,
                4.0,
                ConstraintKind::MutexHalf,
            )?);
        }
    }

    let templates = concept_templates
        .iter()
        .cloned()
        .chain(property_templates.iter().map(|(t, _)| t.clone()));
    let graph = ConstraintGraph::new(templates, constraints)?;

    // chain tails are the sources of the forward subgraph
    let tails: Vec<usize> = chains.iter().map(|c| *c.last().unwrap()).collect();

    // facts per entity: annotate the tails, propagate to a fixed point
    let mut entities = Vec::with_capacity(spec.entity_count);
    let mut facts = Vec::new();
    for e in 0..spec.entity_count {
        let entity = format!("item{e:02}");
        let home = rng.random_range(0..roots);
        let home_is_true = rng.random_bool(spec.leaf_fact_true_fraction);
        let grounded = graph.instantiate(&entity)?;
        let mut leaf_labels = BTreeMap::new();
        for (c, &tail) in tails.iter().enumerate() {
            let label = if c == home && home_is_true {
                Label::T
            } else {
                Label::F
            };
            let id = StatementId::new(concept_templates[tail].id(), &entity);
            leaf_labels.insert(id, label);
        }
        let outcome = propagate_labels(&grounded, &leaf_labels)?;
        if !outcome.conflicts.is_empty() {
            return Err(Error::Data(format!(
                "generated taxonomy produced {} propagation conflicts for {entity}",
                outcome.conflicts.len()
            )));
        }
        let mut entity_facts = outcome.facts;
        // statements propagation cannot reach (properties of concepts the
        // entity is not, plus everything when the tail is false) are
        // annotated false directly; no rule is applicable to them, so
        // gold consistency stays exact, and their only graph coverage is
        // a weak backward link
        for statement in grounded.statements() {
            if !entity_facts.iter().any(|f| f.statement.id == statement.id) {
                entity_facts.push(FactRecord {
                    statement: statement.clone(),
                    gold_label: Label::F,
                    silver: false,
                });
            }
        }
        entity_facts.sort_by(|a, b| a.statement.id.cmp(&b.statement.id));
        facts.extend(entity_facts);
        entities.push(entity);
    }

    Ok(GeneratedDataset {
        graph,
        entities,
        facts,
    })
}

/// How a propagated label was derived, for conflict reporting.
#[derive(Debug, Clone)]
enum Derivation {
    Leaf,
    Rule { constraint: usize, premise: StatementId },
}

/// A statement forced both true and false, with one derivation chain for
/// each side.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConflict {
    pub statement: StatementId,
    pub kept_label: Label,
    pub kept_chain: Vec<String>,
    pub rejected_label: Label,
    pub rejected_chain: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PropagationOutcome {
    pub facts: Vec<FactRecord>,
    pub conflicts: Vec<PropagationConflict>,
}

/// Fixed-point label propagation over forward and mutex rules (backward
/// rules are ignored). Leaf labels must cover every source of the
/// forward-implication subgraph. Conflicting derivations are reported
/// and the affected statement is withheld from the output; the first
/// derivation is kept for further propagation rather than overwritten.
pub fn propagate_labels(
    grounded: &GroundedGraph,
    leaf_labels: &BTreeMap<StatementId, Label>,
) -> Result<PropagationOutcome> {
    let rules: Vec<(usize, &crate::domain::GroundedConstraint)> = grounded
        .constraints()
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, ConstraintKind::Forward | ConstraintKind::MutexHalf))
        .collect();

    // sources: never the conclusion of a forward implication
    let mut sources: Vec<&StatementId> = Vec::new();
    {
        let mut in_forward: BTreeMap<&StatementId, bool> = BTreeMap::new();
        for (_, c) in &rules {
            if c.kind == ConstraintKind::Forward {
                in_forward.entry(&c.premise.id).or_insert(false);
                in_forward.insert(&c.conclusion.id, true);
            }
        }
        for (id, has_incoming) in in_forward {
            if !has_incoming {
                sources.push(id);
            }
        }
    }
    let missing: Vec<&&StatementId> = sources
        .iter()
        .filter(|id| !leaf_labels.contains_key(**id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "leaf labels missing for {} source statement(s), first: {}",
            missing.len(),
            missing[0]
        )));
    }

    let mut labels: BTreeMap<StatementId, (Label, Derivation)> = leaf_labels
        .iter()
        .map(|(id, &label)| (id.clone(), (label, Derivation::Leaf)))
        .collect();
    let mut conflicts: Vec<PropagationConflict> = Vec::new();

    loop {
        let mut changed = false;
        for (ci, c) in &rules {
            let Some((Label::T, _)) = labels.get(&c.premise.id) else {
                continue;
            };
            let target = c.conclusion_label;
            match labels.get(&c.conclusion.id) {
                None => {
                    labels.insert(
                        c.conclusion.id.clone(),
                        (
                            target,
                            Derivation::Rule {
                                constraint: *ci,
                                premise: c.premise.id.clone(),
                            },
                        ),
                    );
                    changed = true;
                }
                Some((existing, _)) if *existing != target => {
                    if !conflicts.iter().any(|x| x.statement == c.conclusion.id) {
                        let kept_chain = derivation_chain(grounded, &labels, &c.conclusion.id);
                        let mut rejected_chain =
                            derivation_chain(grounded, &labels, &c.premise.id);
                        rejected_chain.push(format!(
                            "{} [{} via {}]",
                            c.conclusion.id,
                            target,
                            grounded.constraints()[*ci].describe()
                        ));
                        conflicts.push(PropagationConflict {
                            statement: c.conclusion.id.clone(),
                            kept_label: *existing,
                            kept_chain,
                            rejected_label: target,
                            rejected_chain,
                        });
                    }
                }
                Some(_) => {}
            }
        }
        if !changed {
            break;
        }
    }

    let facts = labels
        .iter()
        .filter(|(id, _)| !conflicts.iter().any(|c| &c.statement == *id))
        .map(|(id, (label, derivation))| FactRecord {
            statement: grounded
                .statement(id)
                .cloned()
                .unwrap_or_else(|| panic!("propagated statement {id} missing from graph")),
            gold_label: *label,
            silver: !matches!(derivation, Derivation::Leaf),
        })
        .collect();
    Ok(PropagationOutcome { facts, conflicts })
}

fn derivation_chain(
    grounded: &GroundedGraph,
    labels: &BTreeMap<StatementId, (Label, Derivation)>,
    id: &StatementId,
) -> Vec<String> {
    let mut chain = Vec::new();
    let mut cursor = id.clone();
    loop {
        match labels.get(&cursor) {
            Some((label, Derivation::Leaf)) => {
                chain.push(format!("{cursor} [{label}, leaf]"));
                break;
            }
            Some((label, Derivation::Rule { constraint, premise })) => {
                chain.push(format!(
                    "{cursor} [{label} via {}]",
                    grounded.constraints()[*constraint].describe()
                ));
                cursor = premise.clone();
            }
            None => break,
        }
    }
    chain.reverse();
    chain
}

/// Entity-disjoint split into calibration and evaluation slices,
/// deterministic given the seed.
#[derive(Debug, Clone)]
pub struct CalibrationSplit {
    pub calibration_entities: Vec<String>,
    pub evaluation_entities: Vec<String>,
    pub calibration_facts: Vec<FactRecord>,
    pub evaluation_facts: Vec<FactRecord>,
}

pub fn split_calibration(
    facts: &[FactRecord],
    entities: &[String],
    calibration_count: usize,
    seed: u64,
) -> Result<CalibrationSplit> {
    let mut shuffled: Vec<String> = entities.to_vec();
    shuffled.sort();
    shuffled.dedup();
    if shuffled.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 entities to split, got {}",
            shuffled.len()
        )));
    }
    if calibration_count == 0 || calibration_count >= shuffled.len() {
        return Err(Error::Config(format!(
            "calibration_count {} must be in 1..{}",
            calibration_count,
            shuffled.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let mut calibration_entities: Vec<String> = shuffled[..calibration_count].to_vec();
    let mut evaluation_entities: Vec<String> = shuffled[calibration_count..].to_vec();
    calibration_entities.sort();
    evaluation_entities.sort();
    let in_calibration =
        |f: &FactRecord| calibration_entities.iter().any(|e| e == f.statement.entity());
    Ok(CalibrationSplit {
        calibration_facts: facts.iter().filter(|f| in_calibration(f)).cloned().collect(),
        evaluation_facts: facts.iter().filter(|f| !in_calibration(f)).cloned().collect(),
        calibration_entities,
        evaluation_entities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ground_template;
    use crate::metrics;

    #[test]
    fn desk_spec_structure() {
        let data = generate(&TaxonomySpec::default()).unwrap();
        let constraints = data.graph.constraints();
        let forward: Vec<_> = constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Forward)
            .collect();
        let backward: Vec<_> = constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Backward)
            .collect();
        assert_eq!(forward.len(), backward.len());
        // every forward rule has a reversed backward twin at strictly
        // lower raw score
        for f in &forward {
            let twin = backward
                .iter()
                .find(|b| {
                    b.premise.id() == f.conclusion.id() && b.conclusion.id() == f.premise.id()
                })
                .expect("missing backward twin");
            assert!(twin.raw_score < f.raw_score);
        }
        // mutex halves come in direction-reversed pairs: checked by the
        // graph constructor; just confirm some exist
        assert!(constraints
            .iter()
            .any(|c| c.kind == ConstraintKind::MutexHalf));
        assert_eq!(data.entities.len(), 8);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = TaxonomySpec::default();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.entities, b.entities);
        assert_eq!(a.facts.len(), b.facts.len());
        for (x, y) in a.facts.iter().zip(&b.facts) {
            assert_eq!(x, y);
        }
        assert_eq!(a.graph.constraints().len(), b.graph.constraints().len());
    }

    #[test]
    fn paper_scale_spec_is_mutex_dominated() {
        let spec = TaxonomySpec {
            concept_count: 176,
            entity_count: 1,
            mutex_subtree_count: 8,
            ..TaxonomySpec::default()
        };
        let data = generate(&spec).unwrap();
        let mutex = data
            .graph
            .constraints()
            .iter()
            .filter(|c| c.kind == ConstraintKind::MutexHalf)
            .count();
        let total = data.graph.constraints().len();
        assert!(total >= 10_000, "got {total} constraints");
        assert!(mutex * 2 > total, "mutex halves should dominate");
    }

    #[test]
    fn gold_bank_is_perfectly_consistent() {
        let data = generate(&TaxonomySpec::default()).unwrap();
        for entity in &data.entities {
            let grounded = data.graph.instantiate(entity).unwrap();
            let mut bank = crate::domain::BeliefBank::for_entity(entity);
            for fact in data.facts.iter().filter(|f| f.statement.entity() == entity) {
                bank.upsert(
                    crate::domain::Belief::new(
                        fact.statement.clone(),
                        fact.gold_label,
                        1.0,
                        crate::domain::Provenance::RawModel,
                    )
                    .unwrap(),
                )
                .unwrap();
            }
            let report = metrics::consistency(&bank, grounded.constraints());
            assert_eq!(report.consistency, 1.0, "entity {entity}");
        }
    }

    #[test]
    fn single_hop_propagation() {
        let dog = StatementTemplate::new(Relation::IsA, "dog");
        let mammal = StatementTemplate::new(Relation::IsA, "mammal");
        let graph = ConstraintGraph::new(
            [dog.clone(), mammal.clone()],
            vec![Constraint::new(dog.clone(), mammal.clone(), Label::T, 4.0, ConstraintKind::Forward)
                .unwrap()],
        )
        .unwrap();
        let grounded = graph.instantiate("poodle").unwrap();
        let leaf = ground_template(&dog, "poodle").unwrap();
        let labels: BTreeMap<_, _> = [(leaf.id.clone(), Label::T)].into();
        let outcome = propagate_labels(&grounded, &labels).unwrap();
        assert!(outcome.conflicts.is_empty());
        let derived = outcome
            .facts
            .iter()
            .find(|f| f.statement.object() == "mammal")
            .unwrap();
        assert_eq!(derived.gold_label, Label::T);
        assert!(derived.silver);
    }

    #[test]
    fn mutex_hop_propagates_false() {
        let bird = StatementTemplate::new(Relation::IsA, "bird");
        let fish = StatementTemplate::new(Relation::IsA, "fish");
        let graph = ConstraintGraph::new(
            [bird.clone(), fish.clone()],
            vec![
                Constraint::new(bird.clone(), fish.clone(), Label::F, 4.0, ConstraintKind::MutexHalf)
                    .unwrap(),
                Constraint::new(fish.clone(), bird.clone(), Label::F, 4.0, ConstraintKind::MutexHalf)
                    .unwrap(),
            ],
        )
        .unwrap();
        let grounded = graph.instantiate("swallow").unwrap();
        let leaf = ground_template(&bird, "swallow").unwrap();
        let fish_leaf = ground_template(&fish, "swallow").unwrap();
        let labels: BTreeMap<_, _> =
            [(leaf.id.clone(), Label::T), (fish_leaf.id.clone(), Label::F)].into();
        let outcome = propagate_labels(&grounded, &labels).unwrap();
        assert!(outcome.conflicts.is_empty());
        assert_eq!(
            outcome
                .facts
                .iter()
                .find(|f| f.statement.object() == "fish")
                .unwrap()
                .gold_label,
            Label::F
        );
    }

    #[test]
    fn conflicting_derivations_are_reported_not_overwritten() {
        // a -> c expects T, b -(mutex-ish forward F)-> c expects F
        let a = StatementTemplate::new(Relation::IsA, "alpha");
        let b = StatementTemplate::new(Relation::IsA, "beta");
        let c = StatementTemplate::new(Relation::HasA, "claw");
        let graph = ConstraintGraph::new(
            [a.clone(), b.clone(), c.clone()],
            vec![
                Constraint::new(a.clone(), c.clone(), Label::T, 4.0, ConstraintKind::Forward)
                    .unwrap(),
                Constraint::new(b.clone(), c.clone(), Label::F, 4.0, ConstraintKind::Forward)
                    .unwrap(),
            ],
        )
        .unwrap();
        let grounded = graph.instantiate("x").unwrap();
        let labels: BTreeMap<_, _> = [
            (ground_template(&a, "x").unwrap().id, Label::T),
            (ground_template(&b, "x").unwrap().id, Label::T),
        ]
        .into();
        let outcome = propagate_labels(&grounded, &labels).unwrap();
        assert_eq!(outcome.conflicts.len(), 1);
        let conflict = &outcome.conflicts[0];
        assert!(!conflict.kept_chain.is_empty());
        assert!(!conflict.rejected_chain.is_empty());
        // the conflicted statement is withheld from the facts
        assert!(outcome
            .facts
            .iter()
            .all(|f| f.statement.id != conflict.statement));
    }

    #[test]
    fn missing_leaf_coverage_is_an_error() {
        let dog = StatementTemplate::new(Relation::IsA, "dog");
        let mammal = StatementTemplate::new(Relation::IsA, "mammal");
        let graph = ConstraintGraph::new(
            [dog.clone(), mammal.clone()],
            vec![Constraint::new(dog, mammal, Label::T, 4.0, ConstraintKind::Forward).unwrap()],
        )
        .unwrap();
        let grounded = graph.instantiate("poodle").unwrap();
        assert!(propagate_labels(&grounded, &BTreeMap::new()).is_err());
    }

    /// Naive fixpoint recomputation agrees with propagate_labels.
    #[test]
    fn propagation_matches_independent_fixpoint() {
        for seed in 0..10 {
            let spec = TaxonomySpec {
                seed,
                concept_count: 12,
                entity_count: 1,
                mutex_subtree_count: 3,
                ..TaxonomySpec::default()
            };
            let data = generate(&spec).unwrap();
            let entity = &data.entities[0];
            let grounded = data.graph.instantiate(entity).unwrap();
            let leaf_labels: BTreeMap<StatementId, Label> = data
                .facts
                .iter()
                .filter(|f| !f.silver)
                .map(|f| (f.statement.id.clone(), f.gold_label))
                .collect();

            // independent oracle: iterate over rules in reverse until stable
            let mut naive: BTreeMap<StatementId, Label> = leaf_labels.clone();
            loop {
                let mut next = naive.clone();
                for c in grounded.constraints().iter().rev() {
                    if matches!(c.kind, ConstraintKind::Backward) {
                        continue;
                    }
                    if naive.get(&c.premise.id) == Some(&Label::T) {
                        next.entry(c.conclusion.id.clone())
                            .or_insert(c.conclusion_label);
                    }
                }
                if next == naive {
                    break;
                }
                naive = next;
            }

            let outcome = propagate_labels(&grounded, &leaf_labels).unwrap();
            assert!(outcome.conflicts.is_empty());
            let got: BTreeMap<StatementId, Label> = outcome
                .facts
                .iter()
                .map(|f| (f.statement.id.clone(), f.gold_label))
                .collect();
            assert_eq!(got, naive, "seed {seed}");
        }
    }

    /// Adding a leaf label never retracts a previously derived label
    /// (absent conflicts).
    #[test]
    fn propagation_is_monotone() {
        // chain a -> b -> c plus a sibling d -> c
        let a = StatementTemplate::new(Relation::IsA, "alpha");
        let b = StatementTemplate::new(Relation::IsA, "beta");
        let c = StatementTemplate::new(Relation::HasA, "claw");
        let d = StatementTemplate::new(Relation::IsA, "delta");
        let graph = ConstraintGraph::new(
            [a.clone(), b.clone(), c.clone(), d.clone()],
            vec![
                Constraint::new(a.clone(), b.clone(), Label::T, 4.0, ConstraintKind::Forward)
                    .unwrap(),
                Constraint::new(b.clone(), c.clone(), Label::T, 4.0, ConstraintKind::Forward)
                    .unwrap(),
                Constraint::new(d.clone(), c.clone(), Label::T, 4.0, ConstraintKind::Forward)
                    .unwrap(),
            ],
        )
        .unwrap();
        let grounded = graph.instantiate("x").unwrap();
        let id = |t: &StatementTemplate| ground_template(t, "x").unwrap().id;
        let baseline: BTreeMap<_, _> = [(id(&a), Label::T), (id(&d), Label::F)].into();
        let before = propagate_labels(&grounded, &baseline).unwrap();
        // add an extra annotation for an interior statement
        let mut extended = baseline.clone();
        extended.insert(id(&b), Label::T);
        let after = propagate_labels(&grounded, &extended).unwrap();
        let after_labels: BTreeMap<&StatementId, Label> = after
            .facts
            .iter()
            .map(|f| (&f.statement.id, f.gold_label))
            .collect();
        for f in &before.facts {
            assert_eq!(after_labels.get(&f.statement.id), Some(&f.gold_label));
        }
    }

    #[test]
    fn split_is_entity_disjoint_and_deterministic() {
        let facts: Vec<FactRecord> = Vec::new();
        let entities: Vec<String> = (0..27).map(|i| format!("item{i:02}")).collect();
        let split = split_calibration(&facts, &entities, 7, 3).unwrap();
        assert_eq!(split.calibration_entities.len(), 7);
        assert_eq!(split.evaluation_entities.len(), 20);
        for e in &split.calibration_entities {
            assert!(!split.evaluation_entities.contains(e));
        }
        let again = split_calibration(&facts, &entities, 7, 3).unwrap();
        assert_eq!(split.calibration_entities, again.calibration_entities);
    }

    #[test]
    fn split_two_entities() {
        let entities = vec!["a".to_string(), "b".to_string()];
        let split = split_calibration(&[], &entities, 1, 0).unwrap();
        assert_eq!(split.calibration_entities.len(), 1);
        assert_eq!(split.evaluation_entities.len(), 1);
    }

    #[test]
    fn split_rejects_too_few_entities() {
        let entities = vec!["a".to_string()];
        assert!(split_calibration(&[], &entities, 1, 0).is_err());
    }

    #[test]
    fn infeasible_spec_rejected() {
        let spec = TaxonomySpec {
            mutex_subtree_count: 50,
            concept_count: 10,
            ..TaxonomySpec::default()
        };
        assert!(generate(&spec).is_err());
    }
}
