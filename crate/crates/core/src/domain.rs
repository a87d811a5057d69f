//! Domain types: statement templates, grounded statements, beliefs,
//! constraints, the constraint graph, and the belief bank.
//!
//! A template is a sentence with a single variable token "X"
//! ("X is a dog"). Grounding substitutes a concrete entity for "X",
//! with an indefinite article chosen by a first-letter vowel heuristic
//! ("a poodle is a dog", "an eagle is a bird"). Statement identity is
//! (template, entity), never the surface text, so articling quirks can
//! never split one statement into two.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six relations statements are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    IsA,
    HasA,
    MadeOf,
    PartOf,
    HasProperty,
    CapableOf,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::IsA,
        Relation::HasA,
        Relation::MadeOf,
        Relation::PartOf,
        Relation::HasProperty,
        Relation::CapableOf,
    ];

    /// Predicate of the positive declarative sentence, without subject:
    /// "is a dog", "has a tail", "can fly".
    pub fn positive_fragment(&self, object: &str) -> String {
        match self {
            Relation::IsA => format!("is {}{object}", article(object)),
            Relation::HasA => format!("has {}{object}", article(object)),
            Relation::MadeOf => format!("is made of {object}"),
            Relation::PartOf => format!("is part of {}{object}", article(object)),
            Relation::HasProperty => format!("is {object}"),
            Relation::CapableOf => format!("can {object}"),
        }
    }

    /// Negated predicate: "is not a dog", "does not have a tail", "cannot fly".
    pub fn negative_fragment(&self, object: &str) -> String {
        match self {
            Relation::IsA => format!("is not {}{object}", article(object)),
            Relation::HasA => format!("does not have {}{object}", article(object)),
            Relation::MadeOf => format!("is not made of {object}"),
            Relation::PartOf => format!("is not part of {}{object}", article(object)),
            Relation::HasProperty => format!("is not {object}"),
            Relation::CapableOf => format!("cannot {object}"),
        }
    }
}

/// Indefinite article for a noun phrase: "an " before vowels, "a "
/// otherwise, nothing before plural-looking words ("gills").
pub fn article(noun: &str) -> &'static str {
    if noun.ends_with('s') {
        return "";
    }
    match noun.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an ",
        Some(_) => "a ",
        None => "",
    }
}

/// Identity of a statement template. The (relation, object) pair is the
/// identifier: two templates with the same pair are the same template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TemplateId {
    pub relation: Relation,
    pub object: String,
}

impl TemplateId {
    pub fn new(relation: Relation, object: impl Into<String>) -> Self {
        TemplateId {
            relation,
            object: object.into(),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{}", self.relation, self.object)
    }
}

/// A variabilized sentence with exactly one occurrence of the token "X".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementTemplate {
    pub relation: Relation,
    pub object: String,
    /// Sentence text containing the variable token "X" exactly once.
    pub text: String,
}

impl StatementTemplate {
    /// Canonical template for a (relation, object) pair, e.g.
    /// `(IsA, "dog")` -> "X is a dog".
    pub fn new(relation: Relation, object: impl Into<String>) -> Self {
        let object = object.into();
        let text = format!("X {}", relation.positive_fragment(&object));
        StatementTemplate {
            relation,
            object,
            text,
        }
    }

    pub fn id(&self) -> TemplateId {
        TemplateId::new(self.relation, self.object.clone())
    }

    fn check_well_formed(&self) -> Result<()> {
        let xs = self.text.split_whitespace().filter(|t| *t == "X").count();
        if xs != 1 {
            return Err(Error::Template(format!(
                "template \"{}\" contains {xs} occurrences of the token \"X\", expected exactly 1",
                self.text
            )));
        }
        Ok(())
    }
}

/// Identity of a grounded statement: (template, entity).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StatementId {
    pub template: TemplateId,
    pub entity: String,
}

impl StatementId {
    pub fn new(template: TemplateId, entity: impl Into<String>) -> Self {
        StatementId {
            template,
            entity: entity.into(),
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.template, self.entity)
    }
}

/// A template grounded with a concrete entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: StatementId,
    /// Grounded sentence text, e.g. "a poodle is a dog".
    pub text: String,
}

impl Statement {
    pub fn entity(&self) -> &str {
        &self.id.entity
    }

    pub fn relation(&self) -> Relation {
        self.id.template.relation
    }

    pub fn object(&self) -> &str {
        &self.id.template.object
    }

    /// Articled subject phrase, e.g. "a poodle".
    pub fn subject(&self) -> String {
        format!("{}{}", article(self.entity()), self.entity())
    }

    /// Declarative sentence asserting the statement under `label`,
    /// negated per relation when the label is false:
    /// (swallow IsA fish, F) -> "a swallow is not a fish".
    pub fn render(&self, label: Label) -> String {
        match label {
            Label::T => self.text.clone(),
            Label::F => format!(
                "{} {}",
                self.subject(),
                self.relation().negative_fragment(self.object())
            ),
        }
    }
}

/// Substitute `entity` for the single "X" token of `template`.
///
/// The entity is prefixed with its indefinite article, so
/// ("X is a dog", "poodle") grounds to "a poodle is a dog".
pub fn ground_template(template: &StatementTemplate, entity: &str) -> Result<Statement> {
    template.check_well_formed()?;
    if entity.is_empty() {
        return Err(Error::Template("entity must be non-empty".into()));
    }
    let subject = format!("{}{}", article(entity), entity);
    let text = template
        .text
        .split_whitespace()
        .map(|tok| if tok == "X" { subject.as_str() } else { tok })
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Statement {
        id: StatementId::new(template.id(), entity),
        text,
    })
}

/// Truth label of a belief or an expected conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    T,
    F,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::T => Label::F,
            Label::F => Label::T,
        }
    }

    pub fn is_true(self) -> bool {
        self == Label::T
    }

    pub fn from_bool(b: bool) -> Label {
        if b {
            Label::T
        } else {
            Label::F
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::T => "T",
            Label::F => "F",
        })
    }
}

/// Where a belief's current label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RawModel,
    Feedback,
    Solver,
}

/// A statement with a truth label and a strength in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub statement: Statement,
    pub label: Label,
    pub weight: f64,
    pub provenance: Provenance,
}

impl Belief {
    pub fn new(
        statement: Statement,
        label: Label,
        weight: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) || !weight.is_finite() {
            return Err(Error::Data(format!(
                "belief weight {weight} for {} outside [0, 1]",
                statement.id
            )));
        }
        Ok(Belief {
            statement,
            label,
            weight,
            provenance,
        })
    }

    pub fn id(&self) -> &StatementId {
        &self.statement.id
    }
}

/// Constraint flavor. Mutual exclusivity is stored as two `MutexHalf`
/// rules, one per direction, each with a false conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    #[serde(rename = "forward")]
    Forward,
    #[serde(rename = "backward")]
    Backward,
    #[serde(rename = "mutex")]
    MutexHalf,
}

/// A weighted implication between templates: if the grounded premise is
/// true, the grounded conclusion is expected to carry `conclusion_label`,
/// with penalty `weight` on violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub premise: StatementTemplate,
    pub conclusion: StatementTemplate,
    pub conclusion_label: Label,
    /// Crowd-style raw score in [0, 4], before calibration.
    pub raw_score: f64,
    /// Calibrated penalty, >= 0. Zero until calibration is applied.
    pub weight: f64,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn new(
        premise: StatementTemplate,
        conclusion: StatementTemplate,
        conclusion_label: Label,
        raw_score: f64,
        kind: ConstraintKind,
    ) -> Result<Self> {
        let c = Constraint {
            premise,
            conclusion,
            conclusion_label,
            raw_score,
            weight: 0.0,
            kind,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.premise.id() == self.conclusion.id() {
            return Err(Error::Data(format!(
                "constraint premise and conclusion are the same template: {}",
                self.premise.id()
            )));
        }
        if !(0.0..=4.0).contains(&self.raw_score) || !self.raw_score.is_finite() {
            return Err(Error::Data(format!(
                "raw_score {} for {} -> {} outside [0, 4]",
                self.raw_score,
                self.premise.id(),
                self.conclusion.id()
            )));
        }
        if self.weight < 0.0 || !self.weight.is_finite() {
            return Err(Error::Data(format!(
                "constraint weight {} must be non-negative",
                self.weight
            )));
        }
        if self.kind == ConstraintKind::MutexHalf && self.conclusion_label != Label::F {
            return Err(Error::Data(format!(
                "mutex half {} -> {} must have a false conclusion",
                self.premise.id(),
                self.conclusion.id()
            )));
        }
        Ok(())
    }
}

/// A constraint grounded for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedConstraint {
    pub premise: Statement,
    pub conclusion: Statement,
    pub conclusion_label: Label,
    pub weight: f64,
    pub kind: ConstraintKind,
}

impl GroundedConstraint {
    /// Applicable under the given premise label (the condition holds).
    pub fn applicable(&self, premise_label: Label) -> bool {
        premise_label == Label::T
    }

    /// Violated by a concrete (premise label, conclusion label) pair.
    pub fn violated_by(&self, premise_label: Label, conclusion_label: Label) -> bool {
        self.applicable(premise_label) && conclusion_label != self.conclusion_label
    }

    /// Applicable and satisfied by the pair.
    pub fn supported_by(&self, premise_label: Label, conclusion_label: Label) -> bool {
        self.applicable(premise_label) && conclusion_label == self.conclusion_label
    }

    /// Human-readable rendering for reports, e.g.
    /// "a poodle is a dog => a poodle has a tail [T]".
    pub fn describe(&self) -> String {
        format!(
            "{} => {} [{}]",
            self.premise.text, self.conclusion.text, self.conclusion_label
        )
    }
}

/// Templates plus the weighted constraints between them, with an
/// adjacency index from template id to incident constraints.
#[derive(Debug, Clone)]
pub struct ConstraintGraph {
    templates: BTreeMap<TemplateId, StatementTemplate>,
    constraints: Vec<Constraint>,
    incident: BTreeMap<TemplateId, Vec<usize>>,
}

impl ConstraintGraph {
    pub fn new(
        templates: impl IntoIterator<Item = StatementTemplate>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in templates {
            t.check_well_formed()?;
            map.insert(t.id(), t);
        }
        let mut incident: BTreeMap<TemplateId, Vec<usize>> = BTreeMap::new();
        for (i, c) in constraints.iter().enumerate() {
            c.validate()?;
            for end in [&c.premise, &c.conclusion] {
                if !map.contains_key(&end.id()) {
                    return Err(Error::Data(format!(
                        "constraint endpoint {} is not in the template set",
                        end.id()
                    )));
                }
            }
            incident.entry(c.premise.id()).or_default().push(i);
            incident.entry(c.conclusion.id()).or_default().push(i);
        }
        let graph = ConstraintGraph {
            templates: map,
            constraints,
            incident,
        };
        graph.check_mutex_pairs()?;
        Ok(graph)
    }

    /// Every mutual exclusivity must appear as exactly two halves, one
    /// per direction.
    fn check_mutex_pairs(&self) -> Result<()> {
        let mut halves: BTreeMap<(TemplateId, TemplateId), usize> = BTreeMap::new();
        for c in &self.constraints {
            if c.kind == ConstraintKind::MutexHalf {
                *halves
                    .entry((c.premise.id(), c.conclusion.id()))
                    .or_default() += 1;
            }
        }
        for ((p, c), n) in &halves {
            if *n != 1 {
                return Err(Error::Data(format!(
                    "mutex half {p} -> {c} appears {n} times, expected once"
                )));
            }
            if !halves.contains_key(&(c.clone(), p.clone())) {
                return Err(Error::Data(format!(
                    "mutex half {p} -> {c} has no reverse half"
                )));
            }
        }
        Ok(())
    }

    pub fn templates(&self) -> impl Iterator<Item = &StatementTemplate> {
        self.templates.values()
    }

    pub fn template(&self, id: &TemplateId) -> Option<&StatementTemplate> {
        self.templates.get(id)
    }

    pub fn template_count(&self) -> usize {
        self.templates.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Indices of constraints incident to a template, either side.
    pub fn incident(&self, id: &TemplateId) -> &[usize] {
        self.incident.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Copy of this graph with every constraint's weight replaced.
    pub fn with_weights(&self, weight_of: impl Fn(&Constraint) -> Result<f64>) -> Result<Self> {
        let mut out = self.clone();
        for c in &mut out.constraints {
            c.weight = weight_of(c)?;
            c.validate()?;
        }
        Ok(out)
    }

    /// Ground every constraint for one entity. Cardinality is preserved:
    /// one grounded constraint per template constraint.
    pub fn instantiate(&self, entity: &str) -> Result<GroundedGraph> {
        let mut statements = BTreeMap::new();
        let mut ground = |t: &StatementTemplate| -> Result<Statement> {
            let s = ground_template(t, entity)?;
            statements.insert(s.id.clone(), s.clone());
            Ok(s)
        };
        let mut grounded = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            grounded.push(GroundedConstraint {
                premise: ground(&c.premise)?,
                conclusion: ground(&c.conclusion)?,
                conclusion_label: c.conclusion_label,
                weight: c.weight,
                kind: c.kind,
            });
        }
        // templates with no incident constraints still ground to statements
        for t in self.templates.values() {
            ground(t)?;
        }
        let mut incident: BTreeMap<StatementId, Vec<usize>> = BTreeMap::new();
        for (i, g) in grounded.iter().enumerate() {
            incident.entry(g.premise.id.clone()).or_default().push(i);
            incident.entry(g.conclusion.id.clone()).or_default().push(i);
        }
        Ok(GroundedGraph {
            entity: entity.to_string(),
            constraints: grounded,
            statements,
            incident,
        })
    }
}

/// The constraint graph instantiated for a single entity.
#[derive(Debug, Clone)]
pub struct GroundedGraph {
    entity: String,
    constraints: Vec<GroundedConstraint>,
    statements: BTreeMap<StatementId, Statement>,
    incident: BTreeMap<StatementId, Vec<usize>>,
}

impl GroundedGraph {
    pub fn entity(&self) -> &str {
        &self.entity
    }

    pub fn constraints(&self) -> &[GroundedConstraint] {
        &self.constraints
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.statements.values()
    }

    pub fn statement(&self, id: &StatementId) -> Option<&Statement> {
        self.statements.get(id)
    }

    /// Indices of grounded constraints incident to a statement.
    pub fn incident(&self, id: &StatementId) -> &[usize] {
        self.incident.get(id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One belief-bank mutation, kept for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub statement: StatementId,
    pub previous: Option<(Label, f64, Provenance)>,
    pub current: (Label, f64, Provenance),
}

/// Persistent store of beliefs, at most one per statement.
///
/// Single-writer: all mutation goes through [`BeliefBank::upsert`].
/// Cross-entity parallelism uses one bank per entity; banks are `Send`
/// and independent.
#[derive(Debug, Clone, Default)]
pub struct BeliefBank {
    entity: Option<String>,
    entries: BTreeMap<StatementId, Belief>,
    audit: Vec<AuditRecord>,
}

impl BeliefBank {
    pub fn new() -> Self {
        Self::default()
    }

    /// A bank scoped to one entity; upserting a statement about another
    /// entity is an error.
    pub fn for_entity(entity: impl Into<String>) -> Self {
        BeliefBank {
            entity: Some(entity.into()),
            ..Self::default()
        }
    }

    pub fn entity(&self) -> Option<&str> {
        self.entity.as_deref()
    }

    /// Insert or replace the belief for a statement. The previous value,
    /// if any, stays retrievable from the audit log.
    pub fn upsert(&mut self, belief: Belief) -> Result<()> {
        if let Some(scope) = &self.entity {
            if belief.statement.entity() != scope {
                return Err(Error::Data(format!(
                    "belief about {} upserted into a bank scoped to {scope}",
                    belief.statement.id
                )));
            }
        }
        let id = belief.id().clone();
        let previous = self
            .entries
            .get(&id)
            .map(|b| (b.label, b.weight, b.provenance));
        self.audit.push(AuditRecord {
            statement: id.clone(),
            previous,
            current: (belief.label, belief.weight, belief.provenance),
        });
        self.entries.insert(id, belief);
        Ok(())
    }

    pub fn get(&self, id: &StatementId) -> Option<&Belief> {
        self.entries.get(id)
    }

    pub fn label_of(&self, id: &StatementId) -> Option<Label> {
        self.entries.get(id).map(|b| b.label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Beliefs in statement-id order.
    pub fn beliefs(&self) -> impl Iterator<Item = &Belief> {
        self.entries.values()
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dog() -> StatementTemplate {
        StatementTemplate::new(Relation::IsA, "dog")
    }

    #[test]
    fn grounding_inserts_article() {
        let s = ground_template(&dog(), "poodle").unwrap();
        assert_eq!(s.text, "a poodle is a dog");
        let bird = StatementTemplate::new(Relation::IsA, "bird");
        let s = ground_template(&bird, "eagle").unwrap();
        assert_eq!(s.text, "an eagle is a bird");
    }

    #[test]
    fn grounding_degenerate_entity_is_allowed() {
        let bird = StatementTemplate::new(Relation::IsA, "bird");
        let s = ground_template(&bird, "X").unwrap();
        assert_eq!(s.text, "a X is a bird");
    }

    #[test]
    fn grounding_is_deterministic() {
        let a = ground_template(&dog(), "poodle").unwrap();
        let b = ground_template(&dog(), "poodle").unwrap();
        assert_eq!(a.id, b.id);
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn malformed_templates_are_rejected() {
        let mut t = dog();
        t.text = "there is a dog".into();
        assert!(matches!(
            ground_template(&t, "poodle"),
            Err(Error::Template(_))
        ));
        t.text = "X likes X".into();
        assert!(matches!(
            ground_template(&t, "poodle"),
            Err(Error::Template(_))
        ));
    }

    #[test]
    fn negated_rendering_per_relation() {
        let fish = StatementTemplate::new(Relation::IsA, "fish");
        let s = ground_template(&fish, "swallow").unwrap();
        assert_eq!(s.render(Label::F), "a swallow is not a fish");

        let gills = StatementTemplate::new(Relation::HasA, "gills");
        let s = ground_template(&gills, "swallow").unwrap();
        assert_eq!(s.text, "a swallow has gills");
        assert_eq!(s.render(Label::F), "a swallow does not have gills");

        let fly = StatementTemplate::new(Relation::CapableOf, "fly");
        let s = ground_template(&fly, "penguin").unwrap();
        assert_eq!(s.render(Label::F), "a penguin cannot fly");
    }

    fn mutex_pair(a: &StatementTemplate, b: &StatementTemplate) -> Vec<Constraint> {
        vec![
            Constraint::new(a.clone(), b.clone(), Label::F, 4.0, ConstraintKind::MutexHalf)
                .unwrap(),
            Constraint::new(b.clone(), a.clone(), Label::F, 4.0, ConstraintKind::MutexHalf)
                .unwrap(),
        ]
    }

    #[test]
    fn graph_requires_both_mutex_halves() {
        let bird = StatementTemplate::new(Relation::IsA, "bird");
        let fish = StatementTemplate::new(Relation::IsA, "fish");
        let one_half = vec![Constraint::new(
            bird.clone(),
            fish.clone(),
            Label::F,
            4.0,
            ConstraintKind::MutexHalf,
        )
        .unwrap()];
        assert!(ConstraintGraph::new([bird.clone(), fish.clone()], one_half).is_err());
        assert!(ConstraintGraph::new([bird.clone(), fish.clone()], mutex_pair(&bird, &fish)).is_ok());
    }

    #[test]
    fn instantiate_preserves_cardinality_and_round_trips() {
        let bird = StatementTemplate::new(Relation::IsA, "bird");
        let fish = StatementTemplate::new(Relation::IsA, "fish");
        let tail = StatementTemplate::new(Relation::HasA, "tail");
        let mut constraints = mutex_pair(&bird, &fish);
        constraints.push(
            Constraint::new(
                bird.clone(),
                tail.clone(),
                Label::T,
                3.0,
                ConstraintKind::Forward,
            )
            .unwrap(),
        );
        let g = ConstraintGraph::new([bird, fish, tail], constraints).unwrap();
        let grounded = g.instantiate("swallow").unwrap();
        assert_eq!(grounded.constraints().len(), 3);
        let mutexes = grounded
            .constraints()
            .iter()
            .filter(|c| c.kind == ConstraintKind::MutexHalf)
            .count();
        assert_eq!(mutexes, 2);

        // stripping the entity recovers the template set
        let mut recovered: Vec<TemplateId> = grounded
            .statements()
            .map(|s| s.id.template.clone())
            .collect();
        recovered.sort();
        recovered.dedup();
        let mut original: Vec<TemplateId> = g.templates().map(|t| t.id()).collect();
        original.sort();
        assert_eq!(recovered, original);
    }

    #[test]
    fn empty_graph_instantiates_empty() {
        let g = ConstraintGraph::new([], Vec::new()).unwrap();
        let grounded = g.instantiate("swallow").unwrap();
        assert!(grounded.constraints().is_empty());
    }

    #[test]
    fn upsert_keeps_one_belief_per_statement() {
        let mut bank = BeliefBank::for_entity("poodle");
        let s = ground_template(&dog(), "poodle").unwrap();
        bank.upsert(Belief::new(s.clone(), Label::T, 0.9, Provenance::RawModel).unwrap())
            .unwrap();
        assert_eq!(bank.len(), 1);
        bank.upsert(Belief::new(s.clone(), Label::F, 0.9, Provenance::Solver).unwrap())
            .unwrap();
        assert_eq!(bank.len(), 1);
        assert_eq!(bank.label_of(&s.id), Some(Label::F));
        assert_eq!(bank.audit().len(), 2);
        assert_eq!(bank.audit()[1].previous.unwrap().0, Label::T);
    }

    #[test]
    fn upsert_many_distinct() {
        let mut bank = BeliefBank::for_entity("poodle");
        for i in 0..10 {
            let t = StatementTemplate::new(Relation::HasA, format!("part{i}"));
            let s = ground_template(&t, "poodle").unwrap();
            bank.upsert(Belief::new(s, Label::T, 0.5, Provenance::RawModel).unwrap())
                .unwrap();
        }
        assert_eq!(bank.len(), 10);
    }

    #[test]
    fn scoped_bank_rejects_other_entities() {
        let mut bank = BeliefBank::for_entity("poodle");
        let s = ground_template(&dog(), "swallow").unwrap();
        let b = Belief::new(s, Label::T, 0.9, Provenance::RawModel).unwrap();
        assert!(bank.upsert(b).is_err());
    }

    #[test]
    fn belief_weight_range_enforced() {
        let s = ground_template(&dog(), "poodle").unwrap();
        assert!(Belief::new(s.clone(), Label::T, 1.2, Provenance::RawModel).is_err());
        assert!(Belief::new(s, Label::T, -0.1, Provenance::RawModel).is_err());
    }

    #[test]
    fn distinct_templates_ground_to_distinct_statements() {
        let a = ground_template(&StatementTemplate::new(Relation::IsA, "dog"), "poodle").unwrap();
        let b = ground_template(&StatementTemplate::new(Relation::HasA, "dog"), "poodle").unwrap();
        assert_ne!(a.id, b.id);
    }
}
