//! The scenario-to-results pipeline behind the CLI subcommands.
//!
//! `solve` writes a deterministic result directory: `meta.txt` with status
//! and objective, one `bus_<label>.csv` view per bus, `flows.csv` with every
//! flow sequence, `levels.csv` when storages exist and `invest.csv` when
//! capacity was invested. No timestamps or absolute paths appear in any
//! artifact, so identical inputs produce byte-identical directories.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use enflow::graph::NodeId;
use enflow::lp_format;
use enflow::model::Model;
use enflow::results::{ResultSet, Table};
use enflow::solve::{solve_milp_with_options, SolveOptions, SolveStatus};

use crate::scenario::{parse_scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    NotOptimal(&'static str),
    #[error("{0}")]
    BadInput(String),
}

impl CliError {
    /// 1 for solver outcomes (infeasible/unbounded/limit), 2 for input and
    /// io problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotOptimal(_) => 1,
            _ => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// `validate <scenario>`: parse, build, freeze. Ok means the scenario is
/// well-formed.
pub fn run_validate(scenario: &Path) -> Result<(), CliError> {
    parse_scenario(scenario)?;
    Ok(())
}

/// `build <scenario> --lp <out>`: compile and export the model.
pub fn run_build(scenario: &Path, lp_out: &Path) -> Result<(), CliError> {
    let system = parse_scenario(scenario)?;
    let model = Model::build(&system);
    let text = lp_format::export_lp_string(&model);
    fs::write(lp_out, text).map_err(|e| CliError::io(lp_out, e))?;
    Ok(())
}

/// `solve <scenario> --out <dir>`: compile, solve, write results. The
/// returned status is Optimal; every other outcome is an error carrying
/// exit code 1 (meta.txt still records the status).
pub fn run_solve(
    scenario: &Path,
    out_dir: &Path,
    options: &SolveOptions,
) -> Result<f64, CliError> {
    let system = parse_scenario(scenario)?;
    let model = Model::build(&system);
    let solution = solve_milp_with_options(&model, options);

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let meta_path = out_dir.join("meta.txt");

    if solution.status != SolveStatus::Optimal {
        let meta = format!("status={}\n", solution.status.label());
        fs::write(&meta_path, meta).map_err(|e| CliError::io(&meta_path, e))?;
        return Err(CliError::NotOptimal(solution.status.label()));
    }

    let results = ResultSet::extract(&system, &model, &solution)
        .expect("optimal solution extracts");
    let objective = results.objective_value();
    let meta = format!("status=optimal\nobjective={objective:.6}\n");
    fs::write(&meta_path, meta).map_err(|e| CliError::io(&meta_path, e))?;

    for node in system.nodes().filter(|n| n.is_bus()) {
        let view = results
            .node_view(node.id())
            .expect("frozen systems have no isolated buses");
        let path = out_dir.join(format!("bus_{}.csv", file_token(node.id().as_str())));
        write_table(&path, &view.to_table())?;
    }

    write_table(&out_dir.join("flows.csv"), &results.flow_table())?;
    if results.storages().count() > 0 {
        write_table(&out_dir.join("levels.csv"), &results.level_table())?;
    }
    let investments = results.investments();
    if !investments.is_empty() {
        let mut text = String::from("entity,invested_capacity\r\n");
        for (label, value) in investments {
            text.push_str(&format!("{label},{value:.6}\r\n"));
        }
        let path = out_dir.join("invest.csv");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(objective)
}

/// `results <dir> --node <label>`: reassemble the node view from a solve
/// directory and return it as CSV text.
pub fn run_results(dir: &Path, node: &str) -> Result<String, CliError> {
    let flows_path = dir.join("flows.csv");
    let flows = read_table(&flows_path)?;
    let node_id = NodeId::new(node);

    let mut header = Vec::new();
    let mut columns = Vec::new();
    for (label, values) in flows {
        let incident = label
            .split_once("->")
            .is_some_and(|(s, t)| s == node_id.as_str() || t == node_id.as_str());
        if incident {
            header.push(label);
            columns.push(values);
        }
    }

    let levels_path = dir.join("levels.csv");
    if levels_path.exists() {
        for (label, values) in read_table(&levels_path)? {
            if label == node_id.as_str() {
                header.push("level".into());
                columns.push(values);
            }
        }
    }

    if header.is_empty() {
        return Err(CliError::BadInput(format!(
            "no results for node '{node}' in {}",
            dir.display()
        )));
    }
    let step_count = columns.first().map_or(0, Vec::len);
    let table = Table {
        header,
        columns,
        step_count,
    };
    Ok(table.to_csv_string())
}

fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    table
        .to_csv(std::io::BufWriter::new(file))
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    Ok(())
}

/// Columns of a CSV written by [`write_table`]: (label, values), the
/// timestep key column dropped.
fn read_table(path: &Path) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len().saturating_sub(1)];
    for record in reader.records() {
        let record = record.map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
        for (index, field) in record.iter().skip(1).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::BadInput(format!("{}: invalid number '{field}'", path.display()))
            })?;
            columns[index].push(value);
        }
    }
    Ok(headers.into_iter().skip(1).zip(columns).collect())
}

/// Filesystem-safe token for bus CSV names.
fn file_token(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Destination path helper used by the binary for friendlier diagnostics.
pub fn display_path(path: &Path) -> String {
    PathBuf::from(path).display().to_string()
}
