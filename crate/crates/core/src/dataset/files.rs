//! File persistence for constraints, facts, banks, and params.
//!
//! All files are UTF-8 JSON with stable key order, pretty-printed and
//! newline-terminated; saving and re-loading reproduces the in-memory
//! values exactly. Schema violations report the file, record index, and
//! failing field. External datasets enter only through these schemas:
//! template text is always re-derived canonically from (relation,
//! object).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::calibration::CalibrationParams;
use crate::domain::{
    ground_template, Belief, BeliefBank, Constraint, ConstraintGraph, ConstraintKind, Label,
    Provenance, Relation, StatementTemplate,
};
use crate::error::{Error, Result};

use super::FactRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateRef {
    pub relation: Relation,
    pub object: String,
}

impl TemplateRef {
    fn template(&self) -> StatementTemplate {
        StatementTemplate::new(self.relation, self.object.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub premise: TemplateRef,
    pub conclusion: TemplateRef,
    pub conclusion_label: Label,
    pub raw_score: f64,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactFileRecord {
    pub entity: String,
    pub relation: Relation,
    pub object: String,
    pub gold_label: Label,
    pub silver: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    pub entity: String,
    pub relation: Relation,
    pub object: String,
    pub label: Label,
    pub weight: f64,
    pub provenance: Provenance,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_constraints(path: &Path, graph: &ConstraintGraph) -> Result<()> {
    let records: Vec<ConstraintRecord> = graph
        .constraints()
        .iter()
        .map(|c| ConstraintRecord {
            premise: TemplateRef {
                relation: c.premise.relation,
                object: c.premise.object.clone(),
            },
            conclusion: TemplateRef {
                relation: c.conclusion.relation,
                object: c.conclusion.object.clone(),
            },
            conclusion_label: c.conclusion_label,
            raw_score: c.raw_score,
            kind: c.kind,
        })
        .collect();
    write_json(path, &records)
}

pub fn load_constraints(path: &Path) -> Result<ConstraintGraph> {
    let records: Vec<ConstraintRecord> = read_json(path)?;
    let mut templates: Vec<StatementTemplate> = Vec::new();
    let mut constraints = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if !(0.0..=4.0).contains(&r.raw_score) || !r.raw_score.is_finite() {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                record: i,
                field: "raw_score".into(),
                message: format!("{} outside [0, 4]", r.raw_score),
            });
        }
        let premise = r.premise.template();
        let conclusion = r.conclusion.template();
        templates.push(premise.clone());
        templates.push(conclusion.clone());
        let constraint =
            Constraint::new(premise, conclusion, r.conclusion_label, r.raw_score, r.kind)
                .map_err(|e| Error::Schema {
                    file: path.to_path_buf(),
                    record: i,
                    field: "kind".into(),
                    message: e.to_string(),
                })?;
        constraints.push(constraint);
    }
    ConstraintGraph::new(templates, constraints)
}

pub fn save_facts(path: &Path, facts: &[FactRecord]) -> Result<()> {
    let records: Vec<FactFileRecord> = facts
        .iter()
        .map(|f| FactFileRecord {
            entity: f.statement.entity().to_string(),
            relation: f.statement.relation(),
            object: f.statement.object().to_string(),
            gold_label: f.gold_label,
            silver: f.silver,
        })
        .collect();
    write_json(path, &records)
}

pub fn load_facts(path: &Path) -> Result<Vec<FactRecord>> {
    let records: Vec<FactFileRecord> = read_json(path)?;
    let mut facts = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if r.entity.is_empty() {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                record: i,
                field: "entity".into(),
                message: "entity must be non-empty".into(),
            });
        }
        let template = StatementTemplate::new(r.relation, r.object.clone());
        facts.push(FactRecord {
            statement: ground_template(&template, &r.entity)?,
            gold_label: r.gold_label,
            silver: r.silver,
        });
    }
    Ok(facts)
}

pub fn save_banks(path: &Path, banks: &[BeliefBank]) -> Result<()> {
    let mut records = Vec::new();
    for bank in banks {
        for belief in bank.beliefs() {
            records.push(BankRecord {
                entity: belief.statement.entity().to_string(),
                relation: belief.statement.relation(),
                object: belief.statement.object().to_string(),
                label: belief.label,
                weight: belief.weight,
                provenance: belief.provenance,
            });
        }
    }
    write_json(path, &records)
}

/// Load bank records grouped into one entity-scoped bank per entity.
pub fn load_banks(path: &Path) -> Result<BTreeMap<String, BeliefBank>> {
    let records: Vec<BankRecord> = read_json(path)?;
    let mut banks: BTreeMap<String, BeliefBank> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.weight) || !r.weight.is_finite() {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                record: i,
                field: "weight".into(),
                message: format!("{} outside [0, 1]", r.weight),
            });
        }
        let template = StatementTemplate::new(r.relation, r.object.clone());
        let statement = ground_template(&template, &r.entity)?;
        let belief = Belief::new(statement, r.label, r.weight, r.provenance)?;
        banks
            .entry(r.entity.clone())
            .or_insert_with(|| BeliefBank::for_entity(&r.entity))
            .upsert(belief)?;
    }
    Ok(banks)
}

pub fn save_params(path: &Path, params: &CalibrationParams) -> Result<()> {
    write_json(path, params)
}

pub fn load_params(path: &Path) -> Result<CalibrationParams> {
    let params: CalibrationParams = read_json(path)?;
    params.validate().map_err(|e| Error::Schema {
        file: path.to_path_buf(),
        record: 0,
        field: "params".into(),
        message: e.to_string(),
    })?;
    Ok(params)
}
