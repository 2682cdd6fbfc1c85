use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use sensorgame::analytic::{solve_disjoint, solve_single_sensor};
use sensorgame::approx::{focused_profile, solve_cover_packing, FocusedOutcome};
use sensorgame::colgen::{run_colgen, ColGenConfig, ColGenTrace};
use sensorgame::cover::{pure_ne_if_cover, CoverConfig};
use sensorgame::game::epsilon_of_profile;
use sensorgame::netio::{ExperimentRecord, RECORD_COLUMNS};
use sensorgame::oracle::{solve_exact, DEFAULT_ACTION_CAP};
use sensorgame::{Instance, MixedDefense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Solver {
    Exact,
    Disjoint,
    Single,
    Cover,
    Focused,
    Colgen,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Disjoint => "disjoint",
            Solver::Single => "single",
            Solver::Cover => "cover",
            Solver::Focused => "focused",
            Solver::Colgen => "colgen",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub node_limit: usize,
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub oracle_value: Option<f64>,
    /// Component names of the focus class; `None` takes the most critical.
    pub focus: Option<Vec<String>>,
}

pub struct Run {
    pub record: ExperimentRecord,
    pub trace: Option<ColGenTrace>,
    pub converged: bool,
}

pub fn run(inst: &Instance, instance_id: &str, solver: Solver, settings: &Settings) -> Result<Run> {
    let cover_config = CoverConfig { node_limit: settings.node_limit, ..CoverConfig::default() };
    let nl = settings.node_limit;
    let start = Instant::now();
    let (value, eps, iters, trace, converged) = match solver {
        Solver::Exact => {
            let r = solve_exact(inst, DEFAULT_ACTION_CAP)?;
            let eps = epsilon_of_profile(inst, &r.defense, &r.attack, nl)?;
            (r.value, eps, r.action_count, None, true)
        }
        Solver::Disjoint => {
            let ne = solve_disjoint(inst)?;
            let eps = epsilon_of_profile(inst, &ne.defense()?, &ne.attack, nl)?;
            (ne.value, eps, 0, None, true)
        }
        Solver::Single => {
            let ne = solve_single_sensor(inst)?;
            let eps = epsilon_of_profile(inst, &ne.defense, &ne.attack, nl)?;
            (ne.value, eps, 0, None, true)
        }
        Solver::Cover => match pure_ne_if_cover(inst, &cover_config)? {
            Some(_) => (0.0, 0.0, 0, None, true),
            None => {
                let p = solve_cover_packing(inst, &cover_config)?;
                let (_, up) = sensorgame::game::best_response_attack(inst, &p.defense)?;
                (up, p.certificate.eps, 0, None, true)
            }
        },
        Solver::Focused => {
            let focus = match &settings.focus {
                Some(names) => Some(
                    names
                        .iter()
                        .map(|n| inst.component_id(n).with_context(|| format!("unknown component `{n}`")))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            match focused_profile(inst, focus.as_deref(), &cover_config)? {
                FocusedOutcome::Profile(p) => {
                    let (_, up) = sensorgame::game::best_response_attack(inst, &p.defense)?;
                    (up, p.certificate.eps, 0, None, true)
                }
                FocusedOutcome::ConditionFails { gap, required } => {
                    bail!("focused bound does not apply: criticality gap {gap} is below the required {required}")
                }
            }
        }
        Solver::Colgen => {
            let init = match pure_ne_if_cover(inst, &cover_config)? {
                Some(cover) => MixedDefense::pure(cover),
                None => solve_cover_packing(inst, &cover_config)?.defense,
            };
            let config = ColGenConfig {
                max_iters: settings.max_iters,
                tol: settings.tol,
                node_limit: nl,
                oracle_value: settings.oracle_value,
            };
            let mut out = run_colgen(inst, &init, &config)?;
            if settings.oracle_value.is_none() && out.converged {
                out.trace.set_reference(out.value);
            }
            let eps = epsilon_of_profile(inst, &out.defense, &out.attack, nl)?;
            let iters = out.trace.rows.len().saturating_sub(1);
            (out.value, eps, iters, Some(out.trace), out.converged)
        }
    };
    let record = ExperimentRecord {
        instance_id: instance_id.to_string(),
        n: inst.n(),
        m: inst.m(),
        b1: inst.budget(),
        solver: solver.name().to_string(),
        value,
        eps,
        iters,
        seconds: start.elapsed().as_secs_f64(),
    };
    record.validate()?;
    Ok(Run { record, trace, converged })
}

/// Appends records to `path`, writing the header when the file is new or
/// empty.
pub fn append_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        writer.write_record(RECORD_COLUMNS)?;
    }
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn print_records(records: &[ExperimentRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(std::io::stdout());
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub const TRACE_COLUMNS: [&str; 6] = ["iteration", "master_value", "reduced_cost", "entering", "seconds", "d"];

/// Writes one row per master solve. Entering columns are node names joined
/// by spaces; the ratio column is empty without a reference value.
pub fn write_trace(path: &Path, inst: &Instance, trace: &ColGenTrace) -> Result<()> {
    let mut file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(&mut file);
    writer.write_record(TRACE_COLUMNS)?;
    let names = inst.node_names();
    for row in &trace.rows {
        let entering = row
            .entering
            .as_ref()
            .map(|nodes| nodes.iter().map(|&v| names[v].as_str()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        writer.write_record([
            row.iteration.to_string(),
            row.master_value.to_string(),
            row.reduced_cost.to_string(),
            entering,
            row.seconds.to_string(),
            row.ratio.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    drop(writer);
    file.flush()?;
    Ok(())
}
