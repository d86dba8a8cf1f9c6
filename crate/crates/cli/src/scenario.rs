//! Scenario file parsing.
//!
//! Scenarios are line-oriented sectioned text with three sections:
//!
//! ```text
//! [horizon]
//! steps = 3
//! tau = 1.0
//!
//! [nodes]
//! bus el
//! source wind
//! sink demand
//! transformer boiler factor.heat=0.9
//! storage batt capacity=10 loss=0.01 charge_eff=0.95 initial=0.5 balanced=true
//!
//! [flows]
//! wind -> el nominal=5 cost=10 max=profiles.csv#wind
//! el -> demand nominal=1 fix=[3,4,2]
//! ```
//!
//! Profile-valued keys (`min`, `max`, `fix`, `cost`) accept a scalar, an
//! inline list `[a,b,c]` (no spaces), or a CSV reference `file.csv#column`
//! resolved relative to the scenario file. `#` starts a comment. Parse and
//! validation errors carry the file and line they came from.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use enflow::graph::{EnergySystem, Flow, FlowRef, FrozenSystem, Horizon, Node, NodeId, Violation};
use enflow::profile::Profile;
use enflow::{InvestmentSpec, NonconvexSpec, StorageSpec, TransformerSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedViolation {
    pub line: Option<usize>,
    pub violation: Violation,
}

impl fmt::Display for LocatedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.violation),
            None => write!(f, "{}", self.violation),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: validation failed with {} issue(s)", issues.len())]
    Validation {
        path: String,
        issues: Vec<LocatedViolation>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl ScenarioError {
    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        ScenarioError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Horizon,
    Nodes,
    Flows,
}

/// Parsed scenario: declarations plus the line each came from, before any
/// graph construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    path: PathBuf,
    horizon: Horizon,
    nodes: Vec<(usize, Node)>,
    flows: Vec<(usize, Flow)>,
}

impl Scenario {
    /// Parse a scenario file; sequence references are resolved here.
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(path, &text)
    }

    fn parse(path: &Path, text: &str) -> Result<Scenario, ScenarioError> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut section: Option<Section> = None;
        let mut horizon_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut nodes: Vec<(usize, Node)> = Vec::new();
        let mut flows: Vec<(usize, Flow)> = Vec::new();

        for (index, raw_line) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = strip_comment(raw_line).trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[horizon]" => {
                    section = Some(Section::Horizon);
                    continue;
                }
                "[nodes]" => {
                    section = Some(Section::Nodes);
                    continue;
                }
                "[flows]" => {
                    section = Some(Section::Flows);
                    continue;
                }
                _ if line.starts_with('[') => {
                    return Err(ScenarioError::parse(
                        path,
                        line_no,
                        format!("unknown section '{line}'"),
                    ));
                }
                _ => {}
            }
            match section {
                None => {
                    return Err(ScenarioError::parse(
                        path,
                        line_no,
                        "content before the first section header",
                    ))
                }
                Some(Section::Horizon) => {
                    let (key, value) = line.split_once('=').ok_or_else(|| {
                        ScenarioError::parse(path, line_no, "expected key = value")
                    })?;
                    horizon_keys.insert(
                        key.trim().to_string(),
                        (line_no, value.trim().to_string()),
                    );
                }
                Some(Section::Nodes) => nodes.push((line_no, parse_node(path, line_no, line)?)),
                Some(Section::Flows) => {
                    flows.push((line_no, parse_flow(path, base, line_no, line)?))
                }
            }
        }

        let (steps_line, steps_text) = horizon_value(path, &horizon_keys, "steps")?.clone();
        let step_count: usize = steps_text.parse().map_err(|_| {
            ScenarioError::parse(path, steps_line, format!("invalid steps '{steps_text}'"))
        })?;
        let (tau_line, tau_text) = horizon_value(path, &horizon_keys, "tau")?.clone();
        let tau: f64 = tau_text
            .parse()
            .map_err(|_| ScenarioError::parse(path, tau_line, format!("invalid tau '{tau_text}'")))?;
        let horizon = Horizon::new(step_count, tau)
            .map_err(|e| ScenarioError::parse(path, steps_line, e.to_string()))?;

        Ok(Scenario {
            path: path.to_path_buf(),
            horizon,
            nodes,
            flows,
        })
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    /// Build the energy system and freeze it. Graph errors surface with the
    /// declaring line; validation failures list every violation with its
    /// source line.
    pub fn into_system(self) -> Result<FrozenSystem, ScenarioError> {
        let path = self.path.clone();
        let mut node_lines: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut flow_lines: BTreeMap<FlowRef, usize> = BTreeMap::new();

        let mut system = EnergySystem::new(self.horizon);
        for (line, node) in self.nodes {
            let id = node.id().clone();
            system
                .add_node(node)
                .map_err(|e| ScenarioError::parse(&path, line, e.to_string()))?;
            node_lines.insert(id, line);
        }
        for (line, flow) in self.flows {
            let reference = system
                .connect(flow)
                .map_err(|e| ScenarioError::parse(&path, line, e.to_string()))?;
            flow_lines.insert(reference, line);
        }

        let violations = system.validate();
        if !violations.is_empty() {
            let issues = violations
                .into_iter()
                .map(|violation| {
                    let line = violation
                        .flow()
                        .and_then(|f| flow_lines.get(f).copied())
                        .or_else(|| violation.node().and_then(|n| node_lines.get(n).copied()));
                    LocatedViolation { line, violation }
                })
                .collect();
            return Err(ScenarioError::Validation {
                path: path.display().to_string(),
                issues,
            });
        }
        Ok(system.freeze().expect("validated system freezes"))
    }
}

/// Parse and freeze in one step.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<FrozenSystem, ScenarioError> {
    Scenario::load(path)?.into_system()
}

/// A '#' inside a csv reference (file.csv#col) is not a comment; comments
/// must start the line or follow whitespace.
fn strip_comment(line: &str) -> &str {
    for (i, _) in line.match_indices('#') {
        if i == 0 || line[..i].ends_with(char::is_whitespace) {
            return &line[..i];
        }
    }
    line
}

fn horizon_value<'a>(
    path: &Path,
    keys: &'a BTreeMap<String, (usize, String)>,
    key: &str,
) -> Result<&'a (usize, String), ScenarioError> {
    keys.get(key)
        .ok_or_else(|| ScenarioError::parse(path, 1, format!("[horizon] is missing '{key}'")))
}

fn check_label(path: &Path, line: usize, label: &str) -> Result<(), ScenarioError> {
    if label.contains("->") {
        return Err(ScenarioError::parse(
            path,
            line,
            format!("label '{label}' must not contain '->'"),
        ));
    }
    Ok(())
}

fn parse_node(path: &Path, line_no: usize, line: &str) -> Result<Node, ScenarioError> {
    let mut tokens = line.split_whitespace();
    let kind = tokens.next().expect("nonempty line");
    let label = tokens
        .next()
        .ok_or_else(|| ScenarioError::parse(path, line_no, "node line needs a label"))?;
    check_label(path, line_no, label)?;
    let params = parse_params(path, line_no, tokens)?;

    let node = match kind {
        "bus" => {
            reject_params(path, line_no, &params, &[])?;
            Node::bus(label)
        }
        "source" => {
            reject_params(path, line_no, &params, &[])?;
            Node::source(label)
        }
        "sink" => {
            reject_params(path, line_no, &params, &[])?;
            Node::sink(label)
        }
        "transformer" => {
            let mut spec = TransformerSpec::new();
            for (key, value) in &params {
                let bus = key.strip_prefix("factor.").ok_or_else(|| {
                    ScenarioError::parse(
                        path,
                        line_no,
                        format!("unknown transformer key '{key}' (expected factor.<bus>)"),
                    )
                })?;
                spec = spec.with_factor(bus, parse_number(path, line_no, key, value)?);
            }
            Node::transformer(label, spec)
        }
        "storage" => Node::storage(label, parse_storage(path, line_no, &params)?),
        other => {
            return Err(ScenarioError::parse(
                path,
                line_no,
                format!("unknown node kind '{other}'"),
            ))
        }
    };
    Ok(node)
}

fn parse_storage(
    path: &Path,
    line_no: usize,
    params: &BTreeMap<String, String>,
) -> Result<StorageSpec, ScenarioError> {
    let investment = parse_investment(path, line_no, params)?;
    let mut spec = match (params.get("capacity"), investment) {
        (Some(value), None) => {
            StorageSpec::with_capacity(parse_number(path, line_no, "capacity", value)?)
        }
        (None, Some(investment)) => StorageSpec::with_investment(investment),
        (Some(_), Some(_)) => {
            return Err(ScenarioError::parse(
                path,
                line_no,
                "storage takes either capacity or invest.* keys, not both",
            ))
        }
        (None, None) => {
            return Err(ScenarioError::parse(
                path,
                line_no,
                "storage needs capacity=<mwh> or invest.cost=<cost>",
            ))
        }
    };
    for (key, value) in params {
        match key.as_str() {
            "capacity" => {}
            k if k.starts_with("invest.") => {}
            "loss" => spec.loss_rate = parse_number(path, line_no, key, value)?,
            "charge_eff" => spec.inflow_efficiency = parse_number(path, line_no, key, value)?,
            "discharge_eff" => spec.outflow_efficiency = parse_number(path, line_no, key, value)?,
            "initial" => spec.initial_level_fraction = parse_number(path, line_no, key, value)?,
            "balanced" => spec.balanced = parse_bool(path, line_no, key, value)?,
            other => {
                return Err(ScenarioError::parse(
                    path,
                    line_no,
                    format!("unknown storage key '{other}'"),
                ))
            }
        }
    }
    Ok(spec)
}

fn parse_flow(
    path: &Path,
    base: &Path,
    line_no: usize,
    line: &str,
) -> Result<Flow, ScenarioError> {
    let mut tokens = line.split_whitespace();
    let source = tokens.next().expect("nonempty line");
    let arrow = tokens
        .next()
        .ok_or_else(|| ScenarioError::parse(path, line_no, "flow line needs 'source -> target'"))?;
    if arrow != "->" {
        return Err(ScenarioError::parse(
            path,
            line_no,
            format!("expected '->' between endpoints, found '{arrow}'"),
        ));
    }
    let target = tokens
        .next()
        .ok_or_else(|| ScenarioError::parse(path, line_no, "flow line needs a target"))?;
    check_label(path, line_no, source)?;
    check_label(path, line_no, target)?;
    let params = parse_params(path, line_no, tokens)?;

    let mut flow = Flow::between(source, target);
    if let Some(investment) = parse_investment(path, line_no, &params)? {
        flow = flow.with_investment(investment);
    }
    let mut nonconvex: Option<NonconvexSpec> = None;
    for (key, value) in &params {
        match key.as_str() {
            "nominal" => flow = flow.with_nominal_value(parse_number(path, line_no, key, value)?),
            "min" => flow = flow.with_min(parse_profile(path, base, line_no, key, value)?),
            "max" => flow = flow.with_max(parse_profile(path, base, line_no, key, value)?),
            "fix" => flow = flow.with_fix(parse_profile(path, base, line_no, key, value)?),
            "cost" => {
                flow = flow.with_variable_cost(parse_profile(path, base, line_no, key, value)?)
            }
            "summed_max" => {
                flow = flow.with_summed_max(parse_number(path, line_no, key, value)?)
            }
            "summed_min" => {
                flow = flow.with_summed_min(parse_number(path, line_no, key, value)?)
            }
            "uc" => {
                if parse_bool(path, line_no, key, value)? {
                    nonconvex.get_or_insert_with(NonconvexSpec::new);
                }
            }
            "uc.startup_cost" => {
                let cost = parse_number(path, line_no, key, value)?;
                let spec = nonconvex.get_or_insert_with(NonconvexSpec::new);
                spec.startup_cost = Some(cost);
            }
            "uc.min_uptime" => {
                let steps: usize = value.parse().map_err(|_| {
                    ScenarioError::parse(path, line_no, format!("invalid {key} '{value}'"))
                })?;
                let spec = nonconvex.get_or_insert_with(NonconvexSpec::new);
                spec.minimum_uptime = Some(steps);
            }
            k if k.starts_with("invest.") => {}
            other => {
                return Err(ScenarioError::parse(
                    path,
                    line_no,
                    format!("unknown flow key '{other}'"),
                ))
            }
        }
    }
    if let Some(nonconvex) = nonconvex {
        flow = flow.with_nonconvex(nonconvex);
    }
    Ok(flow)
}

fn parse_investment(
    path: &Path,
    line_no: usize,
    params: &BTreeMap<String, String>,
) -> Result<Option<InvestmentSpec>, ScenarioError> {
    let any = params.keys().any(|k| k.starts_with("invest."));
    if !any {
        return Ok(None);
    }
    let cost = params.get("invest.cost").ok_or_else(|| {
        ScenarioError::parse(path, line_no, "invest.* keys require invest.cost")
    })?;
    let mut spec = InvestmentSpec::new(parse_number(path, line_no, "invest.cost", cost)?);
    for (key, value) in params {
        match key.as_str() {
            "invest.cost" => {}
            "invest.min" => spec.minimum = parse_number(path, line_no, key, value)?,
            "invest.max" => spec.maximum = parse_number(path, line_no, key, value)?,
            "invest.existing" => spec.existing = parse_number(path, line_no, key, value)?,
            k if k.starts_with("invest.") => {
                return Err(ScenarioError::parse(
                    path,
                    line_no,
                    format!("unknown investment key '{k}'"),
                ))
            }
            _ => {}
        }
    }
    Ok(Some(spec))
}

fn parse_params(
    path: &Path,
    line_no: usize,
    tokens: impl Iterator<Item = impl AsRef<str>>,
) -> Result<BTreeMap<String, String>, ScenarioError> {
    let mut params = BTreeMap::new();
    for token in tokens {
        let token = token.as_ref();
        let (key, value) = token.split_once('=').ok_or_else(|| {
            ScenarioError::parse(path, line_no, format!("expected key=value, found '{token}'"))
        })?;
        if params.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ScenarioError::parse(
                path,
                line_no,
                format!("duplicate key '{key}'"),
            ));
        }
    }
    Ok(params)
}

fn reject_params(
    path: &Path,
    line_no: usize,
    params: &BTreeMap<String, String>,
    allowed: &[&str],
) -> Result<(), ScenarioError> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ScenarioError::parse(
                path,
                line_no,
                format!("key '{key}' is not valid for this node kind"),
            ));
        }
    }
    Ok(())
}

fn parse_number(path: &Path, line_no: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    value.parse().map_err(|_| {
        ScenarioError::parse(path, line_no, format!("invalid number for {key}: '{value}'"))
    })
}

fn parse_bool(path: &Path, line_no: usize, key: &str, value: &str) -> Result<bool, ScenarioError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ScenarioError::parse(
            path,
            line_no,
            format!("invalid boolean for {key}: '{other}'"),
        )),
    }
}

/// Scalar, inline `[a,b,c]` list, or `file.csv#column` reference.
fn parse_profile(
    path: &Path,
    base: &Path,
    line_no: usize,
    key: &str,
    value: &str,
) -> Result<Profile, ScenarioError> {
    if let Some(inner) = value.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or_else(|| {
            ScenarioError::parse(path, line_no, format!("unterminated list for {key}"))
        })?;
        let mut values = Vec::new();
        if !inner.is_empty() {
            for part in inner.split(',') {
                values.push(parse_number(path, line_no, key, part)?);
            }
        }
        return Ok(Profile::Series(values));
    }
    if let Some((file, column)) = value.split_once('#') {
        let series = read_csv_column(path, &base.join(file), column, line_no)?;
        return Ok(Profile::Series(series));
    }
    Ok(Profile::Scalar(parse_number(path, line_no, key, value)?))
}

fn read_csv_column(
    scenario: &Path,
    file: &Path,
    column: &str,
    line_no: usize,
) -> Result<Vec<f64>, ScenarioError> {
    let located = |message: String| ScenarioError::Parse {
        path: scenario.display().to_string(),
        line: line_no,
        message,
    };
    let mut reader = csv::Reader::from_path(file)
        .map_err(|e| located(format!("cannot read '{}': {e}", file.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| located(format!("bad csv header in '{}': {e}", file.display())))?;
    let index = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| {
            located(format!(
                "column '{column}' not found in '{}'",
                file.display()
            ))
        })?;
    let mut values = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| located(format!("bad csv row in '{}': {e}", file.display())))?;
        let field = record.get(index).ok_or_else(|| {
            located(format!(
                "row {} of '{}' is missing column '{column}'",
                row_no + 2,
                file.display()
            ))
        })?;
        let value: f64 = field.trim().parse().map_err(|_| {
            located(format!(
                "row {} of '{}': invalid number '{field}'",
                row_no + 2,
                file.display()
            ))
        })?;
        values.push(value);
    }
    Ok(values)
}
