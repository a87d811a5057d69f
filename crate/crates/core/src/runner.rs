//! Experiment runner: drives the five pipelines (raw answers, constraint
//! solving, random feedback, graph feedback, graph feedback + solving)
//! over data slices, one belief bank per entity, and emits
//! machine-readable reports plus a text results table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{weight_graph, CalibrationParams};
use crate::dataset::{files, FactRecord};
use crate::domain::{Belief, BeliefBank, ConstraintGraph, GroundedGraph, Label, Provenance, Statement, StatementId};
use crate::error::{Error, Result};
use crate::feedback;
use crate::metrics;
use crate::oracle::{Oracle, Query, RemoteConfig, RemoteOracle, SyntheticOracle};
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Raw,
    Solve,
    FeedbackRandom,
    FeedbackGraph,
    FeedbackGraphSolve,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Raw,
        Pipeline::Solve,
        Pipeline::FeedbackRandom,
        Pipeline::FeedbackGraph,
        Pipeline::FeedbackGraphSolve,
    ];

    pub fn parse(name: &str) -> Result<Pipeline> {
        match name {
            "raw" => Ok(Pipeline::Raw),
            "solve" => Ok(Pipeline::Solve),
            "feedback-random" => Ok(Pipeline::FeedbackRandom),
            "feedback-graph" => Ok(Pipeline::FeedbackGraph),
            "feedback-graph-solve" => Ok(Pipeline::FeedbackGraphSolve),
            other => Err(Error::Config(format!(
                "unknown pipeline {other:?}; expected raw | solve | feedback-random | feedback-graph | feedback-graph-solve"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Raw => "raw",
            Pipeline::Solve => "solve",
            Pipeline::FeedbackRandom => "feedback-random",
            Pipeline::FeedbackGraph => "feedback-graph",
            Pipeline::FeedbackGraphSolve => "feedback-graph-solve",
        }
    }

    fn runs_feedback(&self) -> Option<feedback::FeedbackPolicy> {
        match self {
            Pipeline::FeedbackRandom => Some(feedback::FeedbackPolicy::Random),
            Pipeline::FeedbackGraph | Pipeline::FeedbackGraphSolve => {
                Some(feedback::FeedbackPolicy::GraphRelevance)
            }
            _ => None,
        }
    }

    fn runs_solver(&self) -> bool {
        matches!(self, Pipeline::Solve | Pipeline::FeedbackGraphSolve)
    }
}

/// Oracle selection: `synthetic:<profile.json>` or `remote:<url>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum OracleChoice {
    Synthetic(PathBuf),
    Remote(String),
}

impl OracleChoice {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(path) = spec.strip_prefix("synthetic:") {
            Ok(OracleChoice::Synthetic(PathBuf::from(path)))
        } else if let Some(url) = spec.strip_prefix("remote:") {
            Ok(OracleChoice::Remote(url.to_string()))
        } else {
            Err(Error::Config(format!(
                "oracle must be synthetic:<profile.json> or remote:<url>, got {spec:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Directory holding constraints.json and facts.json.
    pub data_dir: PathBuf,
    pub params_path: PathBuf,
    pub pipeline: Pipeline,
    /// Fraction of each entity's facts queried, in (0, 1].
    pub slice: f64,
    pub seed: u64,
    pub oracle: OracleChoice,
    /// Feedback rounds (re-ask passes) for feedback pipelines.
    pub rounds: usize,
    /// Beliefs per query context.
    pub context_k: usize,
    /// Flip budget for the local solver on problems above the exact cap.
    pub flip_budget: u64,
    /// Worker threads for per-entity parallelism; 0 = library default.
    pub jobs: usize,
    /// Restrict the run to these entities (all when empty).
    pub entities: Vec<String>,
    /// Entities to exclude (e.g. a calibration slice).
    pub exclude_entities: Vec<String>,
}

impl RunConfig {
    pub fn new(data_dir: impl Into<PathBuf>, params_path: impl Into<PathBuf>, pipeline: Pipeline, oracle: OracleChoice) -> Self {
        RunConfig {
            data_dir: data_dir.into(),
            params_path: params_path.into(),
            pipeline,
            slice: 1.0,
            seed: 0,
            oracle,
            rounds: 1,
            context_k: feedback::DEFAULT_CONTEXT_SIZE,
            flip_budget: 100_000,
            jobs: 0,
            entities: Vec::new(),
            exclude_entities: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slice > 0.0 && self.slice <= 1.0) {
            return Err(Error::Config(format!(
                "slice {} outside (0, 1]",
                self.slice
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be positive".into()));
        }
        if self.context_k == 0 {
            return Err(Error::Config("context_k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityReport {
    pub entity: String,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub consistency: f64,
    pub applicable_constraints: usize,
    pub violated_count: usize,
    pub flips: usize,
    pub queries: usize,
    pub violated_constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub consistency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub per_entity: Vec<EntityReport>,
    /// Macro-average of the per-entity records.
    pub aggregate: Aggregate,
    pub flips_total: usize,
    pub queries_total: usize,
    /// Entities that failed, with their errors; the run continues past
    /// individual failures.
    pub failures: Vec<(String, String)>,
    /// Not serialized: timing varies between identical runs, and report
    /// files must be byte-identical for identical (config, seed, data).
    #[serde(skip)]
    pub wall_clock_ms: u64,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        body.push('\n');
        std::fs::write(path, body).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&body).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Run one pipeline over the configured data slice.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let graph = files::load_constraints(&config.data_dir.join("constraints.json"))?;
    let facts = files::load_facts(&config.data_dir.join("facts.json"))?;
    let params = files::load_params(&config.params_path)?;
    let weighted = weight_graph(&graph, &params)?;

    let oracle: Box<dyn Oracle> = match &config.oracle {
        OracleChoice::Synthetic(profile_path) => {
            let body = std::fs::read_to_string(profile_path).map_err(|source| Error::Io {
                path: profile_path.clone(),
                source,
            })?;
            let profile = serde_json::from_str(&body).map_err(|source| Error::Json {
                path: profile_path.clone(),
                source,
            })?;
            Box::new(SyntheticOracle::new(profile, &graph, &facts)?)
        }
        OracleChoice::Remote(url) => {
            Box::new(RemoteOracle::new(url.clone(), RemoteConfig::default())?)
        }
    };

    let mut entities: Vec<String> = facts
        .iter()
        .map(|f| f.statement.entity().to_string())
        .collect();
    entities.sort();
    entities.dedup();
    if !config.entities.is_empty() {
        entities.retain(|e| config.entities.contains(e));
    }
    entities.retain(|e| !config.exclude_entities.contains(e));
    if entities.is_empty() {
        return Err(Error::Data("no entities left to run on".into()));
    }

    let run_one = |entity: &String| -> (String, Result<EntityReport>) {
        let result = run_entity(entity, &facts, &weighted, &params, oracle.as_ref(), config);
        (entity.clone(), result)
    };
    let outcomes: Vec<(String, Result<EntityReport>)> = if config.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(|| entities.par_iter().map(run_one).collect())
    } else {
        entities.par_iter().map(run_one).collect()
    };

    let mut per_entity = Vec::new();
    let mut failures = Vec::new();
    for (entity, outcome) in outcomes {
        match outcome {
            Ok(report) => per_entity.push(report),
            Err(e) => failures.push((entity, e.to_string())),
        }
    }
    if per_entity.is_empty() {
        let (entity, message) = failures
            .first()
            .cloned()
            .unwrap_or_else(|| ("?".into(), "no entities".into()));
        return Err(Error::Oracle(format!(
            "every entity failed; first failure ({entity}): {message}"
        )));
    }

    let n = per_entity.len() as f64;
    let aggregate = Aggregate {
        f1: per_entity.iter().map(|e| e.f1).sum::<f64>() / n,
        precision: per_entity.iter().map(|e| e.precision).sum::<f64>() / n,
        recall: per_entity.iter().map(|e| e.recall).sum::<f64>() / n,
        consistency: per_entity.iter().map(|e| e.consistency).sum::<f64>() / n,
    };
    Ok(RunReport {
        config: config.clone(),
        flips_total: per_entity.iter().map(|e| e.flips).sum(),
        queries_total: per_entity.iter().map(|e| e.queries).sum(),
        per_entity,
        aggregate,
        failures,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    })
}

/// Stable per-entity sub-seed.
fn entity_seed(seed: u64, entity: &str, salt: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(entity.as_bytes());
    hasher.update(salt.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn run_entity(
    entity: &str,
    facts: &[FactRecord],
    weighted: &ConstraintGraph,
    params: &CalibrationParams,
    oracle: &dyn Oracle,
    config: &RunConfig,
) -> Result<EntityReport> {
    let entity_facts: Vec<&FactRecord> = facts
        .iter()
        .filter(|f| f.statement.entity() == entity)
        .collect();
    let grounded = weighted.instantiate(entity)?;
    let gold: BTreeMap<StatementId, Label> = entity_facts
        .iter()
        .map(|f| (f.statement.id.clone(), f.gold_label))
        .collect();

    // seeded per-entity slice, queried in statement order
    let k = ((config.slice * entity_facts.len() as f64).round() as usize)
        .clamp(1, entity_facts.len());
    let mut rng = ChaCha8Rng::seed_from_u64(entity_seed(config.seed, entity, "slice"));
    let mut picked: Vec<usize> = sample(&mut rng, entity_facts.len(), k).into_vec();
    picked.sort();
    let sliced: Vec<&FactRecord> = picked.iter().map(|&i| entity_facts[i]).collect();

    // raw pass
    let mut bank = BeliefBank::for_entity(entity);
    let mut queries = 0usize;
    for fact in &sliced {
        let answer = oracle.ask(&Query::new(fact.statement.clone(), None))?;
        queries += 1;
        bank.upsert(Belief::new(
            fact.statement.clone(),
            answer.label,
            answer.confidence,
            Provenance::RawModel,
        )?)?;
    }

    // feedback passes
    if let Some(policy) = config.pipeline.runs_feedback() {
        for round in 0..config.rounds {
            for (qi, fact) in sliced.iter().enumerate() {
                let seed = entity_seed(
                    config.seed,
                    entity,
                    &format!("feedback:{round}:{qi}"),
                );
                let selection = select_context(
                    policy,
                    &bank,
                    &grounded,
                    &fact.statement,
                    config.context_k,
                    seed,
                );
                let context = feedback::build_context(&selection);
                let context = if context.is_empty() { None } else { Some(context) };
                let answer = oracle.ask(&Query::new(fact.statement.clone(), context))?;
                queries += 1;
                bank.upsert(Belief::new(
                    fact.statement.clone(),
                    answer.label,
                    answer.confidence,
                    Provenance::Feedback,
                )?)?;
            }
        }
    }

    // solve pass
    let mut flips = 0usize;
    if config.pipeline.runs_solver() {
        let problem = solver::encode(&bank, grounded.constraints(), params)?;
        let assignment = if problem.num_vars() <= solver::EXACT_VAR_CAP {
            solver::solve_exact(&problem)?
        } else {
            solver::solve_local(
                &problem,
                entity_seed(config.seed, entity, "solve"),
                config.flip_budget,
            )?
        };
        flips = solver::apply_assignment(&mut bank, &assignment)?.len();
    }

    let accuracy = metrics::f1_true(&bank, &gold);
    let consistency = metrics::consistency(&bank, grounded.constraints());
    Ok(EntityReport {
        entity: entity.to_string(),
        f1: accuracy.f1,
        precision: accuracy.precision,
        recall: accuracy.recall,
        consistency: consistency.consistency,
        applicable_constraints: consistency.applicable_count,
        violated_count: consistency.violated_count,
        violated_constraints: consistency.describe_violations(grounded.constraints()),
        flips,
        queries,
    })
}

fn select_context(
    policy: feedback::FeedbackPolicy,
    bank: &BeliefBank,
    grounded: &GroundedGraph,
    query: &Statement,
    k: usize,
    seed: u64,
) -> feedback::FeedbackSelection {
    match policy {
        feedback::FeedbackPolicy::Random => feedback::select_random(bank, query, k, seed),
        feedback::FeedbackPolicy::GraphRelevance => {
            feedback::select_relevant_padded(bank, grounded, query, k, seed)
        }
    }
}

/// Render reports as a Table-1-shaped text table: one row per pipeline,
/// one (F1, Con) column pair per slice, values in percent with two
/// decimals. All reports must come from the same dataset.
pub fn report_table(reports: &[RunReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Config("no reports to tabulate".into()));
    }
    let data_dir = &reports[0].config.data_dir;
    if reports.iter().any(|r| &r.config.data_dir != data_dir) {
        return Err(Error::Data(
            "reports mix datasets; refusing to tabulate".into(),
        ));
    }
    let mut slices: Vec<f64> = reports.iter().map(|r| r.config.slice).collect();
    slices.sort_by(|a, b| a.partial_cmp(b).unwrap());
    slices.dedup();
    let mut cells: BTreeMap<(Pipeline, usize), (f64, f64)> = BTreeMap::new();
    for r in reports {
        let si = slices
            .iter()
            .position(|s| *s == r.config.slice)
            .expect("slice present");
        cells.insert(
            (r.config.pipeline, si),
            (r.aggregate.f1 * 100.0, r.aggregate.consistency * 100.0),
        );
    }
    let mut out = String::new();
    out.push_str(&format!("{:<26}", "pipeline"));
    for s in &slices {
        out.push_str(&format!("{:>16}", format!("{:.0}%", s * 100.0)));
    }
    out.push('\n');
    out.push_str(&format!("{:<26}", ""));
    for _ in &slices {
        out.push_str(&format!("{:>9}{:>7}", "F1", "Con"));
    }
    out.push('\n');
    for pipeline in Pipeline::ALL {
        if !cells.keys().any(|(p, _)| *p == pipeline) {
            continue;
        }
        out.push_str(&format!("{:<26}", pipeline.name()));
        for si in 0..slices.len() {
            match cells.get(&(pipeline, si)) {
                Some((f1, con)) => {
                    out.push_str(&format!("{:>9.2}{:>7.2}", f1, con));
                }
                None => out.push_str(&format!("{:>9}{:>7}", "-", "-")),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(Pipeline::parse(p.name()).unwrap(), p);
        }
        assert!(Pipeline::parse("bogus").is_err());
    }

    #[test]
    fn oracle_choice_parsing() {
        assert_eq!(
            OracleChoice::parse("synthetic:profile.json").unwrap(),
            OracleChoice::Synthetic(PathBuf::from("profile.json"))
        );
        assert_eq!(
            OracleChoice::parse("remote:http://localhost:8000/ask").unwrap(),
            OracleChoice::Remote("http://localhost:8000/ask".into())
        );
        assert!(OracleChoice::parse("quantum:entangled").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(
            "data",
            "params.json",
            Pipeline::Raw,
            OracleChoice::Remote("http://x".into()),
        );
        c.slice = 0.0;
        assert!(c.validate().is_err());
        c.slice = 1.5;
        assert!(c.validate().is_err());
        c.slice = 0.5;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn table_rejects_mixed_datasets() {
        let mk = |dir: &str| RunReport {
            config: RunConfig::new(
                dir,
                "p.json",
                Pipeline::Raw,
                OracleChoice::Remote("http://x".into()),
            ),
            per_entity: vec![],
            aggregate: Aggregate {
                f1: 0.5,
                precision: 0.5,
                recall: 0.5,
                consistency: 0.5,
            },
            flips_total: 0,
            queries_total: 0,
            failures: vec![],
            wall_clock_ms: 0,
        };
        assert!(report_table(&[mk("a"), mk("b")]).is_err());
        let table = report_table(&[mk("a")]).unwrap();
        assert!(table.contains("raw"));
        assert!(table.contains("50.00"));
    }

    #[test]
    fn table_rendering_is_stable() {
        let report = RunReport {
            config: RunConfig::new(
                "data",
                "p.json",
                Pipeline::Solve,
                OracleChoice::Remote("http://x".into()),
            ),
            per_entity: vec![],
            aggregate: Aggregate {
                f1: 0.919,
                precision: 0.9,
                recall: 0.95,
                consistency: 0.9983,
            },
            flips_total: 3,
            queries_total: 10,
            failures: vec![],
            wall_clock_ms: 5,
        };
        let a = report_table(std::slice::from_ref(&report)).unwrap();
        let b = report_table(std::slice::from_ref(&report)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("91.90"));
        assert!(a.contains("99.83"));
    }
}
