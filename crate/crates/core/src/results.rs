//! Re-keying of solver output to graph entities and tabular export.
//!
//! A [`ResultSet`] holds one sequence per flow (plus status/startup
//! sequences for unit-commitment flows and an invested-capacity scalar),
//! one level sequence per storage, and the solve metadata. Views per node
//! and RFC 4180 CSV export are derived from it.

use std::collections::BTreeMap;
use std::io;

use thiserror::Error;

use crate::graph::{FlowRef, FrozenSystem, Horizon, NodeId};
use crate::model::{EntityRef, Model, VarId, VariableKind};
use crate::solve::{Solution, SolveStatus};

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("solution status is {0:?}, results require an optimal solve")]
    NotOptimal(SolveStatus),
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("io failure: {0}")]
    Io(#[from] io::Error),
}

/// Per-flow results: the dispatched sequence plus optional commitment
/// sequences and the invested capacity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowResult {
    pub sequence: Vec<f64>,
    pub invested_capacity: Option<f64>,
    pub status: Option<Vec<f64>>,
    pub startup: Option<Vec<f64>>,
}

/// Per-storage results: level sequence and invested capacity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StorageResult {
    pub level: Vec<f64>,
    pub invested_capacity: Option<f64>,
}

/// Uniform result container: every model variable lands in exactly one slot.
#[derive(Debug, Clone)]
pub struct ResultSet {
    horizon: Horizon,
    status: SolveStatus,
    objective_value: f64,
    flows: BTreeMap<FlowRef, FlowResult>,
    storages: BTreeMap<NodeId, StorageResult>,
}

impl ResultSet {
    /// Partition an optimal assignment by graph entity.
    pub fn extract(
        system: &FrozenSystem,
        model: &Model,
        solution: &Solution,
    ) -> Result<ResultSet, ResultsError> {
        if solution.status != SolveStatus::Optimal {
            return Err(ResultsError::NotOptimal(solution.status));
        }
        let assignment = solution
            .assignment
            .as_ref()
            .expect("optimal solution carries an assignment");
        let step_count = system.horizon().step_count();

        let mut flows: BTreeMap<FlowRef, FlowResult> = BTreeMap::new();
        let mut storages: BTreeMap<NodeId, StorageResult> = BTreeMap::new();
        let mut placed = 0usize;
        for (index, var) in model.variables().iter().enumerate() {
            let value = assignment[index];
            match (&var.kind, &var.entity) {
                (VariableKind::EdgeFlowPerStep, EntityRef::Flow(reference)) => {
                    let entry = flows.entry(reference.clone()).or_default();
                    if entry.sequence.is_empty() {
                        entry.sequence = vec![0.0; step_count];
                    }
                    entry.sequence[var.step.expect("per-step")] = value;
                }
                (VariableKind::EdgeCapacity, EntityRef::Flow(reference)) => {
                    flows.entry(reference.clone()).or_default().invested_capacity = Some(value);
                }
                (VariableKind::EdgeStatusPerStep, EntityRef::Flow(reference)) => {
                    let entry = flows.entry(reference.clone()).or_default();
                    let series = entry.status.get_or_insert_with(|| vec![0.0; step_count]);
                    series[var.step.expect("per-step")] = value;
                }
                (VariableKind::EdgeStartupPerStep, EntityRef::Flow(reference)) => {
                    let entry = flows.entry(reference.clone()).or_default();
                    let series = entry.startup.get_or_insert_with(|| vec![0.0; step_count]);
                    series[var.step.expect("per-step")] = value;
                }
                (VariableKind::NodeLevelPerStep, EntityRef::Node(node)) => {
                    let entry = storages.entry(node.clone()).or_default();
                    if entry.level.is_empty() {
                        entry.level = vec![0.0; step_count];
                    }
                    entry.level[var.step.expect("per-step")] = value;
                }
                (VariableKind::NodeCapacity, EntityRef::Node(node)) => {
                    storages.entry(node.clone()).or_default().invested_capacity = Some(value);
                }
                (kind, entity) => {
                    unreachable!("variable kind {kind:?} on entity {entity} not extractable")
                }
            }
            placed += 1;
        }
        debug_assert_eq!(placed, model.variable_count());

        Ok(ResultSet {
            horizon: *system.horizon(),
            status: solution.status,
            objective_value: solution
                .objective_value
                .expect("optimal solution carries an objective"),
            flows,
            storages,
        })
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn flows(&self) -> impl Iterator<Item = (&FlowRef, &FlowResult)> {
        self.flows.iter()
    }

    pub fn flow(&self, reference: &FlowRef) -> Option<&FlowResult> {
        self.flows.get(reference)
    }

    pub fn storages(&self) -> impl Iterator<Item = (&NodeId, &StorageResult)> {
        self.storages.iter()
    }

    pub fn storage(&self, node: &NodeId) -> Option<&StorageResult> {
        self.storages.get(node)
    }

    /// Number of scalar values held; equals the model's variable count when
    /// extraction placed every variable exactly once.
    pub fn value_count(&self) -> usize {
        let per_flow: usize = self
            .flows
            .values()
            .map(|f| {
                f.sequence.len()
                    + f.invested_capacity.map_or(0, |_| 1)
                    + f.status.as_ref().map_or(0, Vec::len)
                    + f.startup.as_ref().map_or(0, Vec::len)
            })
            .sum();
        let per_storage: usize = self
            .storages
            .values()
            .map(|s| s.level.len() + s.invested_capacity.map_or(0, |_| 1))
            .sum();
        per_flow + per_storage
    }

    /// Value of a model variable, re-read from the result slots.
    pub fn value_of(&self, model: &Model, var: VarId) -> Option<f64> {
        let var = model.variable(var);
        let step = var.step;
        match (&var.kind, &var.entity) {
            (VariableKind::EdgeFlowPerStep, EntityRef::Flow(r)) => {
                Some(self.flows.get(r)?.sequence[step?])
            }
            (VariableKind::EdgeCapacity, EntityRef::Flow(r)) => {
                self.flows.get(r)?.invested_capacity
            }
            (VariableKind::EdgeStatusPerStep, EntityRef::Flow(r)) => {
                Some(self.flows.get(r)?.status.as_ref()?[step?])
            }
            (VariableKind::EdgeStartupPerStep, EntityRef::Flow(r)) => {
                Some(self.flows.get(r)?.startup.as_ref()?[step?])
            }
            (VariableKind::NodeLevelPerStep, EntityRef::Node(n)) => {
                Some(self.storages.get(n)?.level[step?])
            }
            (VariableKind::NodeCapacity, EntityRef::Node(n)) => {
                self.storages.get(n)?.invested_capacity
            }
            _ => None,
        }
    }

    /// Recompute the objective from the result slots through the model's
    /// objective terms; matches the solver objective within tolerance.
    pub fn recompute_objective(&self, model: &Model) -> f64 {
        model
            .objective_terms()
            .iter()
            .map(|(c, var)| c * self.value_of(model, *var).unwrap_or(0.0))
            .sum()
    }

    /// Table for one node: one column per incident flow (label-sorted) plus
    /// a level column for storages; one row per time step.
    pub fn node_view(&self, node: &NodeId) -> Result<NodeView, ResultsError> {
        let mut columns: Vec<ViewColumn> = Vec::new();
        for (reference, result) in &self.flows {
            if reference.touches(node) {
                columns.push(ViewColumn {
                    label: reference.to_string(),
                    inflow: reference.target() == node,
                    values: result.sequence.clone(),
                });
            }
        }
        let mut has_level = false;
        if let Some(storage) = self.storages.get(node) {
            columns.push(ViewColumn {
                label: "level".into(),
                inflow: false,
                values: storage.level.clone(),
            });
            has_level = true;
        }
        if columns.is_empty() {
            return Err(ResultsError::UnknownNode(node.clone()));
        }
        Ok(NodeView {
            node: node.clone(),
            step_count: self.horizon.step_count(),
            has_level,
            columns,
        })
    }

    /// One table over all flows, columns label-sorted.
    pub fn flow_table(&self) -> Table {
        Table {
            header: self.flows.keys().map(FlowRef::to_string).collect(),
            columns: self.flows.values().map(|f| f.sequence.clone()).collect(),
            step_count: self.horizon.step_count(),
        }
    }

    /// One table over all storage levels, columns label-sorted.
    pub fn level_table(&self) -> Table {
        Table {
            header: self.storages.keys().map(NodeId::to_string).collect(),
            columns: self.storages.values().map(|s| s.level.clone()).collect(),
            step_count: self.horizon.step_count(),
        }
    }

    /// Invested capacities (flows first by label, then storages), if any.
    pub fn investments(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (reference, result) in &self.flows {
            if let Some(capacity) = result.invested_capacity {
                out.push((reference.to_string(), capacity));
            }
        }
        for (node, result) in &self.storages {
            if let Some(capacity) = result.invested_capacity {
                out.push((node.to_string(), capacity));
            }
        }
        out
    }

    /// Write the all-flows table as CSV.
    pub fn to_csv(&self, destination: impl io::Write) -> Result<(), ResultsError> {
        self.flow_table().to_csv(destination)
    }
}

#[derive(Debug, Clone)]
struct ViewColumn {
    label: String,
    inflow: bool,
    values: Vec<f64>,
}

/// Per-node results table.
#[derive(Debug, Clone)]
pub struct NodeView {
    node: NodeId,
    step_count: usize,
    has_level: bool,
    columns: Vec<ViewColumn>,
}

impl NodeView {
    pub fn node(&self) -> &NodeId {
        &self.node
    }

    pub fn column_labels(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.values.as_slice())
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn has_level(&self) -> bool {
        self.has_level
    }

    /// Inflow minus outflow at one step; zero for every bus row of a
    /// feasible solution. The level column does not participate.
    pub fn net_balance(&self, step: usize) -> f64 {
        self.columns
            .iter()
            .filter(|c| c.label != "level")
            .map(|c| if c.inflow { c.values[step] } else { -c.values[step] })
            .sum()
    }

    pub fn to_table(&self) -> Table {
        Table {
            header: self.columns.iter().map(|c| c.label.clone()).collect(),
            columns: self.columns.iter().map(|c| c.values.clone()).collect(),
            step_count: self.step_count,
        }
    }

    pub fn to_csv(&self, destination: impl io::Write) -> Result<(), ResultsError> {
        self.to_table().to_csv(destination)
    }
}

/// A step-indexed table of float columns; serializes to RFC 4180 CSV with a
/// `timestep` key column and six decimal places.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub step_count: usize,
}

impl Table {
    pub fn to_csv(&self, mut destination: impl io::Write) -> Result<(), ResultsError> {
        let mut line = String::from("timestep");
        for label in &self.header {
            line.push(',');
            line.push_str(&csv_field(label));
        }
        destination.write_all(line.as_bytes())?;
        destination.write_all(b"\r\n")?;
        for step in 0..self.step_count {
            let mut line = step.to_string();
            for column in &self.columns {
                line.push(',');
                line.push_str(&format_value(column.get(step).copied().unwrap_or(0.0)));
            }
            destination.write_all(line.as_bytes())?;
            destination.write_all(b"\r\n")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buffer = Vec::new();
        self.to_csv(&mut buffer).expect("writing to memory");
        String::from_utf8(buffer).expect("csv is utf-8")
    }
}

/// Fixed six decimal places; negative zero normalizes to zero.
fn format_value(value: f64) -> String {
    let value = if value == 0.0 { 0.0 } else { value };
    format!("{value:.6}")
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') || text.contains('\r') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}
