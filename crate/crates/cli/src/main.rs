//! Batch experiment runner for the belief-consistency engine.
//!
//! Subcommands: `generate` a synthetic dataset, `calibrate` solver
//! weights by grid search, `run` one of the five pipelines, `solve` a
//! saved bank, `consistency`-check a saved bank, and `table` to render
//! run reports side by side.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error,
//! 3 oracle error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beliefbank::calibration::{self, CalibrationData, GridSpec};
use beliefbank::dataset::{self, files, TaxonomySpec};
use beliefbank::domain::{Belief, BeliefBank, Label, Provenance, StatementId};
use beliefbank::error::{Error, Result};
use beliefbank::metrics;
use beliefbank::oracle::{Oracle, Query, RemoteConfig, RemoteOracle, SyntheticOracle, SyntheticOracleProfile};
use beliefbank::runner::{self, OracleChoice, Pipeline, RunConfig, RunReport};
use beliefbank::solver;

#[derive(Parser)]
#[command(name = "beliefbank", version, about = "Belief-consistency experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (constraints, facts, and a matched
    /// synthetic-oracle profile) into a directory.
    Generate {
        /// TaxonomySpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit calibration parameters by exhaustive grid search on a
    /// by-entity calibration slice.
    Calibrate {
        /// Dataset directory (constraints.json, facts.json).
        #[arg(long)]
        data: PathBuf,
        /// GridSpec JSON file; built-in default grid when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Output params file.
        #[arg(long)]
        out: PathBuf,
        /// Full objective trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Oracle used to collect the raw calibration banks; defaults to
        /// synthetic:<data>/profile.json.
        #[arg(long)]
        oracle: Option<String>,
        /// Number of entities in the calibration slice.
        #[arg(long, default_value_t = 2)]
        calib_entities: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exact-solver variable cap for the objective.
        #[arg(long, default_value_t = solver::EXACT_VAR_CAP)]
        exact_cap: usize,
    },
    /// Run one pipeline over a data slice and write a JSON report.
    Run {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// raw | solve | feedback-random | feedback-graph | feedback-graph-solve
        #[arg(long)]
        pipeline: String,
        /// Fraction of each entity's facts to query, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        slice: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// synthetic:<profile.json> or remote:<url>
        #[arg(long)]
        oracle: String,
        /// Report output path.
        #[arg(long)]
        report: PathBuf,
        /// Worker threads for per-entity parallelism (0 = default).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Feedback rounds.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Local-search flip budget for large problems.
        #[arg(long, default_value_t = 100_000)]
        flips: u64,
        /// Comma-separated entities to include (default: all).
        #[arg(long)]
        entities: Option<String>,
        /// Comma-separated entities to exclude (e.g. calibration slice).
        #[arg(long)]
        exclude_entities: Option<String>,
        /// Also print the report as a one-row table.
        #[arg(long, default_value_t = false)]
        table: bool,
    },
    /// Solve a saved bank against a constraint graph and print the
    /// updated bank plus the flip list.
    Solve {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Write the updated bank here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump each entity's MaxSAT problem in weighted-CNF text form.
        #[arg(long)]
        dump_wcnf: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        flips: u64,
    },
    /// Score a saved bank's consistency against a constraint graph.
    Consistency {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
    },
    /// Render run reports as a pipelines-by-slices text table.
    Table {
        /// Report JSON files.
        reports: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { spec, out } => generate(&spec, &out),
        Command::Calibrate {
            data,
            grid,
            out,
            trace,
            oracle,
            calib_entities,
            seed,
            exact_cap,
        } => calibrate(&data, grid.as_deref(), &out, trace.as_deref(), oracle, calib_entities, seed, exact_cap),
        Command::Run {
            data,
            params,
            pipeline,
            slice,
            seed,
            oracle,
            report,
            jobs,
            rounds,
            flips,
            entities,
            exclude_entities,
            table,
        } => {
            let mut config = RunConfig::new(
                data,
                params,
                Pipeline::parse(&pipeline)?,
                OracleChoice::parse(&oracle)?,
            );
            config.slice = slice;
            config.seed = seed;
            config.jobs = jobs;
            config.rounds = rounds;
            config.flip_budget = flips;
            config.entities = split_list(entities);
            config.exclude_entities = split_list(exclude_entities);
            let run_report = runner::run(&config)?;
            run_report.write(&report)?;
            eprintln!(
                "wrote {} ({} entities, {} queries, {} flips, {} ms)",
                report.display(),
                run_report.per_entity.len(),
                run_report.queries_total,
                run_report.flips_total,
                run_report.wall_clock_ms
            );
            if table {
                print!("{}", runner::report_table(std::slice::from_ref(&run_report))?);
            }
            Ok(())
        }
        Command::Solve {
            bank,
            constraints,
            params,
            out,
            dump_wcnf,
            seed,
            flips,
        } => solve(&bank, &constraints, &params, out.as_deref(), dump_wcnf.as_deref(), seed, flips),
        Command::Consistency { bank, constraints } => consistency(&bank, &constraints),
        Command::Table { reports } => {
            let loaded: Vec<RunReport> = reports
                .iter()
                .map(|p| RunReport::read(p))
                .collect::<Result<_>>()?;
            print!("{}", runner::report_table(&loaded)?);
            Ok(())
        }
    }
}

fn split_list(arg: Option<String>) -> Vec<String> {
    arg.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(String::from)
            .collect()
    })
    .unwrap_or_default()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let body = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    body.push('\n');
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn generate(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: TaxonomySpec = read_json(spec_path)?;
    let data = dataset::generate(&spec)?;
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    files::save_constraints(&out.join("constraints.json"), &data.graph)?;
    files::save_facts(&out.join("facts.json"), &data.facts)?;
    // a synthetic-oracle profile matched to this dataset's label balance,
    // targeting recall 0.97 / precision 0.60
    let (n_true, n_false) = data.label_balance();
    let profile = SyntheticOracleProfile::for_targets(0.97, 0.60, n_true, n_false, spec.seed)?;
    write_json(&out.join("profile.json"), &profile)?;
    eprintln!(
        "wrote {}: {} constraints, {} facts ({} true / {} false), {} entities",
        out.display(),
        data.graph.constraints().len(),
        data.facts.len(),
        n_true,
        n_false,
        data.entities.len()
    );
    Ok(())
}

fn build_oracle(choice: &OracleChoice, data_dir: &Path) -> Result<Box<dyn Oracle>> {
    match choice {
        OracleChoice::Synthetic(profile_path) => {
            let profile: SyntheticOracleProfile = read_json(profile_path)?;
            let graph = files::load_constraints(&data_dir.join("constraints.json"))?;
            let facts = files::load_facts(&data_dir.join("facts.json"))?;
            Ok(Box::new(SyntheticOracle::new(profile, &graph, &facts)?))
        }
        OracleChoice::Remote(url) => Ok(Box::new(RemoteOracle::new(
            url.clone(),
            RemoteConfig::default(),
        )?)),
    }
}

#[allow(clippy::too_many_arguments)]
fn calibrate(
    data_dir: &Path,
    grid_path: Option<&Path>,
    out: &Path,
    trace_path: Option<&Path>,
    oracle_spec: Option<String>,
    calib_entities: usize,
    seed: u64,
    exact_cap: usize,
) -> Result<()> {
    let graph = files::load_constraints(&data_dir.join("constraints.json"))?;
    let facts = files::load_facts(&data_dir.join("facts.json"))?;
    let grid: GridSpec = match grid_path {
        Some(p) => read_json(p)?,
        None => GridSpec::default(),
    };
    let oracle_choice = match oracle_spec {
        Some(s) => OracleChoice::parse(&s)?,
        None => OracleChoice::Synthetic(data_dir.join("profile.json")),
    };
    let oracle = build_oracle(&oracle_choice, data_dir)?;

    let mut entities: Vec<String> = facts
        .iter()
        .map(|f| f.statement.entity().to_string())
        .collect();
    entities.sort();
    entities.dedup();
    let split = dataset::split_calibration(&facts, &entities, calib_entities, seed)?;

    // raw oracle answers over the calibration slice
    let mut banks = Vec::new();
    let mut gold: BTreeMap<StatementId, Label> = BTreeMap::new();
    for entity in &split.calibration_entities {
        let mut bank = BeliefBank::for_entity(entity);
        for fact in split
            .calibration_facts
            .iter()
            .filter(|f| f.statement.entity() == entity)
        {
            let answer = oracle.ask(&Query::new(fact.statement.clone(), None))?;
            bank.upsert(Belief::new(
                fact.statement.clone(),
                answer.label,
                answer.confidence,
                Provenance::RawModel,
            )?)?;
            gold.insert(fact.statement.id.clone(), fact.gold_label);
        }
        banks.push(bank);
    }

    let data = CalibrationData { banks, graph, gold };
    let (best, trace) = calibration::grid_search(&grid, &data, exact_cap)?;
    files::save_params(out, &best)?;
    if let Some(tp) = trace_path {
        write_json(tp, &trace)?;
    }
    eprintln!(
        "calibrated on {:?}: {} grid points, best {:?}",
        split.calibration_entities,
        trace.len(),
        best
    );
    eprintln!(
        "evaluation entities (pass via --exclude-entities to `run` if you ran calibrate on the same data): {:?}",
        split.calibration_entities
    );
    Ok(())
}

fn solve(
    bank_path: &Path,
    constraints_path: &Path,
    params_path: &Path,
    out: Option<&Path>,
    dump_wcnf: Option<&Path>,
    seed: u64,
    flips: u64,
) -> Result<()> {
    let banks = files::load_banks(bank_path)?;
    let graph = files::load_constraints(constraints_path)?;
    let params = files::load_params(params_path)?;
    let weighted = calibration::weight_graph(&graph, &params)?;
    let mut solved = Vec::new();
    let mut all_flips = Vec::new();
    for (entity, bank) in banks {
        let grounded = weighted.instantiate(&entity)?;
        let problem = solver::encode(&bank, grounded.constraints(), &params)?;
        if let Some(dump_dir) = dump_wcnf {
            std::fs::create_dir_all(dump_dir).map_err(|source| Error::Io {
                path: dump_dir.to_path_buf(),
                source,
            })?;
            let path = dump_dir.join(format!("{entity}.wcnf"));
            std::fs::write(&path, problem.to_wcnf()).map_err(|source| Error::Io {
                path,
                source,
            })?;
        }
        let assignment = if problem.num_vars() <= solver::EXACT_VAR_CAP {
            solver::solve_exact(&problem)?
        } else {
            solver::solve_local(&problem, seed, flips)?
        };
        let mut bank = bank;
        let flips = solver::apply_assignment(&mut bank, &assignment)?;
        eprintln!(
            "{entity}: cost {:.4}, {} flips ({})",
            assignment.cost,
            flips.len(),
            if assignment.optimal { "exact" } else { "local" }
        );
        all_flips.extend(flips);
        solved.push(bank);
    }
    match out {
        Some(path) => files::save_banks(path, &solved)?,
        None => {
            let records = serde_json::to_string_pretty(&all_flips).map_err(|source| {
                Error::Json {
                    path: bank_path.to_path_buf(),
                    source,
                }
            })?;
            println!("{records}");
        }
    }
    Ok(())
}

fn consistency(bank_path: &Path, constraints_path: &Path) -> Result<()> {
    let banks = files::load_banks(bank_path)?;
    let graph = files::load_constraints(constraints_path)?;
    let mut out = Vec::new();
    for (entity, bank) in banks {
        let grounded = graph.instantiate(&entity)?;
        let report = metrics::consistency(&bank, grounded.constraints());
        out.push(serde_json::json!({
            "entity": entity,
            "applicable": report.applicable_count,
            "violated": report.violated_count,
            "tau": report.tau,
            "consistency": report.consistency,
            "violations": report.describe_violations(grounded.constraints()),
        }));
    }
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}
