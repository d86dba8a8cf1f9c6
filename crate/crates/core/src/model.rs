//! Compilation of a frozen energy system into a mixed-integer linear program.
//!
//! The model type is never chosen explicitly: which variables, rows and
//! objective terms appear follows entirely from the parametrisation of the
//! system. A plain system yields an economic dispatch, adding an investment
//! option turns capacities into decision variables, adding a nonconvex
//! option yields a unit-commitment problem.
//!
//! Every generated constraint is local in the graph sense: all variables in
//! one row belong to a single node, its predecessor edges or its successor
//! edges. [`audit_locality`] checks this structurally for any model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{FlowRef, FrozenSystem, Horizon, NodeId, NodeKind};

/// Variable domain: nonnegative reals, nonnegative integers or binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    NonnegReal,
    NonnegInteger,
    Binary,
}

impl Domain {
    pub fn is_integral(&self) -> bool {
        !matches!(self, Domain::NonnegReal)
    }
}

/// What a variable measures. Per-step edge flows and node levels carry
/// time-dependent costs scaled by tau; edge and node capacities carry
/// time-independent costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VariableKind {
    /// w(t): flow on an edge during step t.
    EdgeFlowPerStep,
    /// w: invested capacity of an edge.
    EdgeCapacity,
    /// v(t): storage level of a node at the end of step t.
    NodeLevelPerStep,
    /// v: invested capacity of a node.
    NodeCapacity,
    /// Binary on/off status of an edge during step t.
    EdgeStatusPerStep,
    /// Binary startup indicator of an edge at step t.
    EdgeStartupPerStep,
}

impl VariableKind {
    pub fn is_per_step(&self) -> bool {
        !matches!(self, VariableKind::EdgeCapacity | VariableKind::NodeCapacity)
    }

    /// Short token used in exported variable names.
    pub fn token(&self) -> &'static str {
        match self {
            VariableKind::EdgeFlowPerStep => "flow",
            VariableKind::EdgeCapacity => "invest",
            VariableKind::NodeLevelPerStep => "level",
            VariableKind::NodeCapacity => "cap",
            VariableKind::EdgeStatusPerStep => "status",
            VariableKind::EdgeStartupPerStep => "startup",
        }
    }
}

/// The graph entity a variable or result belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityRef {
    Node(NodeId),
    Flow(FlowRef),
}

impl EntityRef {
    pub fn node(id: impl Into<NodeId>) -> Self {
        EntityRef::Node(id.into())
    }

    pub fn flow(source: impl Into<NodeId>, target: impl Into<NodeId>) -> Self {
        EntityRef::Flow(FlowRef::new(source, target))
    }

    /// Display label; flows read `source->target`.
    pub fn label(&self) -> String {
        match self {
            EntityRef::Node(id) => id.to_string(),
            EntityRef::Flow(r) => r.to_string(),
        }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Node(id) => write!(f, "{id}"),
            EntityRef::Flow(r) => write!(f, "{r}"),
        }
    }
}

/// A registered model variable: kind, owning entity, optional step, domain
/// and bounds. The upper bound may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableRef {
    pub kind: VariableKind,
    pub entity: EntityRef,
    pub step: Option<usize>,
    pub domain: Domain,
    pub lower: f64,
    pub upper: f64,
}

impl fmt::Display for VariableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(t) => write!(f, "{}({}, t={t})", self.kind.token(), self.entity),
            None => write!(f, "{}({})", self.kind.token(), self.entity),
        }
    }
}

/// Index of a variable in the model registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
}

impl RowSense {
    pub fn symbol(&self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
        }
    }
}

/// One constraint in the canonical affine form
/// `sum(coefficient * variable) + constant {<=,=} 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub name: String,
    pub terms: Vec<(f64, VarId)>,
    pub constant: f64,
    pub sense: RowSense,
}

impl ConstraintRow {
    pub fn new(name: impl Into<String>, sense: RowSense) -> Self {
        ConstraintRow {
            name: name.into(),
            terms: Vec::new(),
            constant: 0.0,
            sense,
        }
    }

    pub fn with_term(mut self, coefficient: f64, var: VarId) -> Self {
        self.terms.push((coefficient, var));
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    /// Left-hand side `sum(a * x) + constant` under the given assignment.
    pub fn evaluate(&self, assignment: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, var)| a * assignment[var.0])
            .sum::<f64>()
            + self.constant
    }

    /// Terms merged per variable, sorted by column, exact zeros dropped.
    /// Both the LP writer and the standard-form builder use this, so the
    /// two stay coefficient-identical.
    pub fn canonical_terms(&self) -> Vec<(usize, f64)> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (a, var) in &self.terms {
            *merged.entry(var.0).or_insert(0.0) += a;
        }
        merged.into_iter().filter(|(_, a)| *a != 0.0).collect()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RowError {
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("unknown flow '{0}'")]
    UnknownFlow(FlowRef),
    #[error("node '{0}' is not a bus")]
    NotABus(NodeId),
    #[error("node '{0}' is not a storage")]
    NotAStorage(NodeId),
    #[error("node '{0}' is not a transformer")]
    NotATransformer(NodeId),
    #[error("storage '{node}' has {inflows} inflow(s) and {outflows} outflow(s), needs exactly one of each")]
    StorageDegree {
        node: NodeId,
        inflows: usize,
        outflows: usize,
    },
    #[error("flow '{0}' has no nominal value")]
    MissingNominal(FlowRef),
    #[error("flow '{0}' has no nonconvex option")]
    NotNonconvex(FlowRef),
    #[error("flow '{0}' has no investment option")]
    NotInvested(FlowRef),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("row references unregistered variable {0}")]
    UnknownVariable(VarId),
}

type VarKey = (EntityRef, VariableKind, Option<usize>);

/// Registers the variables of a frozen system and generates constraint rows
/// per graph entity. [`Model::build`] drives it end to end; the individual
/// `*_rows` methods expose the same row generators one entity at a time.
pub struct ModelBuilder<'a> {
    system: &'a FrozenSystem,
    variables: Vec<VariableRef>,
    index: BTreeMap<VarKey, VarId>,
}

impl<'a> ModelBuilder<'a> {
    pub fn new(system: &'a FrozenSystem) -> Self {
        let mut builder = ModelBuilder {
            system,
            variables: Vec::new(),
            index: BTreeMap::new(),
        };
        builder.register_variables();
        builder
    }

    pub fn variables(&self) -> &[VariableRef] {
        &self.variables
    }

    pub fn var(&self, kind: VariableKind, entity: &EntityRef, step: Option<usize>) -> Option<VarId> {
        self.index.get(&(entity.clone(), kind, step)).copied()
    }

    fn expect_var(&self, kind: VariableKind, entity: &EntityRef, step: Option<usize>) -> VarId {
        self.var(kind, entity, step)
            .unwrap_or_else(|| panic!("variable {}/{entity:?}/{step:?} not registered", kind.token()))
    }

    /// Registry order: entity label, then kind, then step. Interleaving node
    /// and flow entities by label keeps the order stable under any edit that
    /// does not touch labels.
    fn register_variables(&mut self) {
        let horizon = self.system.horizon();
        let step_count = horizon.step_count();

        let mut entities: Vec<(String, u8, EntityRef)> = Vec::new();
        for flow in self.system.flows() {
            let entity = EntityRef::Flow(flow.reference());
            entities.push((entity.label(), 1, entity));
        }
        for node in self.system.nodes() {
            if node.storage_spec().is_some() {
                let entity = EntityRef::Node(node.id().clone());
                entities.push((entity.label(), 0, entity));
            }
        }
        entities.sort();

        for (_, _, entity) in entities {
            match &entity {
                EntityRef::Flow(reference) => {
                    let flow = self.system.flow(reference).expect("flow exists");
                    for t in 0..step_count {
                        let (lower, upper) = flow_bounds(flow, t);
                        self.push(VariableRef {
                            kind: VariableKind::EdgeFlowPerStep,
                            entity: entity.clone(),
                            step: Some(t),
                            domain: Domain::NonnegReal,
                            lower,
                            upper,
                        });
                    }
                    if let Some(investment) = flow.investment() {
                        self.push(VariableRef {
                            kind: VariableKind::EdgeCapacity,
                            entity: entity.clone(),
                            step: None,
                            domain: Domain::NonnegReal,
                            lower: investment.minimum,
                            upper: investment.maximum,
                        });
                    }
                    if let Some(nonconvex) = flow.nonconvex() {
                        for t in 0..step_count {
                            self.push(VariableRef {
                                kind: VariableKind::EdgeStatusPerStep,
                                entity: entity.clone(),
                                step: Some(t),
                                domain: Domain::Binary,
                                lower: 0.0,
                                upper: 1.0,
                            });
                        }
                        if nonconvex.needs_startup_vars() {
                            for t in 0..step_count {
                                self.push(VariableRef {
                                    kind: VariableKind::EdgeStartupPerStep,
                                    entity: entity.clone(),
                                    step: Some(t),
                                    domain: Domain::Binary,
                                    lower: 0.0,
                                    upper: 1.0,
                                });
                            }
                        }
                    }
                }
                EntityRef::Node(id) => {
                    let node = self.system.node(id).expect("node exists");
                    let spec = node.storage_spec().expect("storage entity");
                    let upper = spec.capacity.unwrap_or(f64::INFINITY);
                    for t in 0..step_count {
                        self.push(VariableRef {
                            kind: VariableKind::NodeLevelPerStep,
                            entity: entity.clone(),
                            step: Some(t),
                            domain: Domain::NonnegReal,
                            lower: 0.0,
                            upper,
                        });
                    }
                    if let Some(investment) = &spec.investment {
                        self.push(VariableRef {
                            kind: VariableKind::NodeCapacity,
                            entity: entity.clone(),
                            step: None,
                            domain: Domain::NonnegReal,
                            lower: investment.minimum,
                            upper: investment.maximum,
                        });
                    }
                }
            }
        }
    }

    fn push(&mut self, var: VariableRef) {
        let key = (var.entity.clone(), var.kind, var.step);
        let id = VarId(self.variables.len());
        self.variables.push(var);
        self.index.insert(key, id);
    }

    /// One balance equality per step: inflows minus outflows equal zero.
    pub fn bus_balance_rows(&self, bus: &NodeId) -> Result<Vec<ConstraintRow>, RowError> {
        let node = self
            .system
            .node(bus)
            .ok_or_else(|| RowError::UnknownNode(bus.clone()))?;
        if !node.is_bus() {
            return Err(RowError::NotABus(bus.clone()));
        }
        let inflows: Vec<EntityRef> = self
            .system
            .inflows(bus)
            .iter()
            .map(|f| EntityRef::Flow(f.reference()))
            .collect();
        let outflows: Vec<EntityRef> = self
            .system
            .outflows(bus)
            .iter()
            .map(|f| EntityRef::Flow(f.reference()))
            .collect();
        let mut rows = Vec::new();
        for t in self.system.horizon().steps() {
            let mut row = ConstraintRow::new(format!("balance_{bus}_{t}"), RowSense::Eq);
            for entity in &inflows {
                row = row.with_term(1.0, self.expect_var(VariableKind::EdgeFlowPerStep, entity, Some(t)));
            }
            for entity in &outflows {
                row = row.with_term(-1.0, self.expect_var(VariableKind::EdgeFlowPerStep, entity, Some(t)));
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Conversion rows pairing each input bus with each output bus:
    /// `factor(in) * w_out - factor(out) * w_in = 0` per step.
    pub fn transformer_rows(&self, node_id: &NodeId) -> Result<Vec<ConstraintRow>, RowError> {
        let node = self
            .system
            .node(node_id)
            .ok_or_else(|| RowError::UnknownNode(node_id.clone()))?;
        let spec = match node.kind() {
            NodeKind::Transformer(spec) => spec,
            _ => return Err(RowError::NotATransformer(node_id.clone())),
        };
        let mut rows = Vec::new();
        for inflow in self.system.inflows(node_id) {
            let in_bus = inflow.source().clone();
            let in_entity = EntityRef::Flow(inflow.reference());
            let factor_in = spec.input_factor(&in_bus);
            for outflow in self.system.outflows(node_id) {
                let out_bus = outflow.target().clone();
                let out_entity = EntityRef::Flow(outflow.reference());
                let factor_out = spec.factor(&out_bus).expect("validated output factor");
                for t in self.system.horizon().steps() {
                    rows.push(
                        ConstraintRow::new(
                            format!("conv_{node_id}_{in_bus}_{out_bus}_{t}"),
                            RowSense::Eq,
                        )
                        .with_term(
                            factor_in,
                            self.expect_var(VariableKind::EdgeFlowPerStep, &out_entity, Some(t)),
                        )
                        .with_term(
                            -factor_out,
                            self.expect_var(VariableKind::EdgeFlowPerStep, &in_entity, Some(t)),
                        ),
                    );
                }
            }
        }
        Ok(rows)
    }

    /// Inter-temporal level recursion for a storage node, plus the balanced
    /// end condition when requested. `level(t)` is the state at the end of
    /// step t; `initial_level_fraction * capacity` stands in for level(-1).
    pub fn storage_rows(&self, node_id: &NodeId) -> Result<Vec<ConstraintRow>, RowError> {
        let node = self
            .system
            .node(node_id)
            .ok_or_else(|| RowError::UnknownNode(node_id.clone()))?;
        let spec = node
            .storage_spec()
            .ok_or_else(|| RowError::NotAStorage(node_id.clone()))?;
        let inflows = self.system.inflows(node_id);
        let outflows = self.system.outflows(node_id);
        if inflows.len() != 1 || outflows.len() != 1 {
            return Err(RowError::StorageDegree {
                node: node_id.clone(),
                inflows: inflows.len(),
                outflows: outflows.len(),
            });
        }
        let in_entity = EntityRef::Flow(inflows[0].reference());
        let out_entity = EntityRef::Flow(outflows[0].reference());
        let node_entity = EntityRef::Node(node_id.clone());
        let tau = self.system.horizon().tau();
        let step_count = self.system.horizon().step_count();
        let keep = 1.0 - spec.loss_rate;
        let charge = spec.inflow_efficiency * tau;
        let discharge = tau / spec.outflow_efficiency;
        let capacity_var = self.var(VariableKind::NodeCapacity, &node_entity, None);

        let mut rows = Vec::new();
        for t in 0..step_count {
            let mut row = ConstraintRow::new(format!("storage_{node_id}_{t}"), RowSense::Eq)
                .with_term(1.0, self.expect_var(VariableKind::NodeLevelPerStep, &node_entity, Some(t)))
                .with_term(-charge, self.expect_var(VariableKind::EdgeFlowPerStep, &in_entity, Some(t)))
                .with_term(discharge, self.expect_var(VariableKind::EdgeFlowPerStep, &out_entity, Some(t)));
            if t == 0 {
                let initial = keep * spec.initial_level_fraction;
                match (spec.capacity, capacity_var) {
                    (Some(capacity), _) => row = row.with_constant(-initial * capacity),
                    (None, Some(var)) => row = row.with_term(-initial, var),
                    (None, None) => unreachable!("storage without capacity or investment"),
                }
            } else {
                row = row.with_term(
                    -keep,
                    self.expect_var(VariableKind::NodeLevelPerStep, &node_entity, Some(t - 1)),
                );
            }
            rows.push(row);
        }

        if spec.balanced {
            let mut row = ConstraintRow::new(format!("storage_balanced_{node_id}"), RowSense::Eq)
                .with_term(
                    1.0,
                    self.expect_var(VariableKind::NodeLevelPerStep, &node_entity, Some(step_count - 1)),
                );
            match (spec.capacity, capacity_var) {
                (Some(capacity), _) => {
                    row = row.with_constant(-spec.initial_level_fraction * capacity)
                }
                (None, Some(var)) => row = row.with_term(-spec.initial_level_fraction, var),
                (None, None) => unreachable!("storage without capacity or investment"),
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Unit-commitment rows for a nonconvex flow: status gates the flow
    /// between its min and max loads, startups are tracked when they carry a
    /// cost or a minimum uptime, and the uptime window pins the status after
    /// each startup.
    pub fn nonconvex_rows(&self, reference: &FlowRef) -> Result<Vec<ConstraintRow>, RowError> {
        let flow = self
            .system
            .flow(reference)
            .ok_or_else(|| RowError::UnknownFlow(reference.clone()))?;
        let nonconvex = flow
            .nonconvex()
            .ok_or_else(|| RowError::NotNonconvex(reference.clone()))?;
        let nominal = flow
            .nominal_value()
            .ok_or_else(|| RowError::MissingNominal(reference.clone()))?;
        let entity = EntityRef::Flow(reference.clone());
        let step_count = self.system.horizon().step_count();

        let mut rows = Vec::new();
        for t in 0..step_count {
            let w = self.expect_var(VariableKind::EdgeFlowPerStep, &entity, Some(t));
            let status = self.expect_var(VariableKind::EdgeStatusPerStep, &entity, Some(t));
            rows.push(
                ConstraintRow::new(format!("uc_max_{reference}_{t}"), RowSense::Le)
                    .with_term(1.0, w)
                    .with_term(-nominal * flow.max_at(t), status),
            );
            rows.push(
                ConstraintRow::new(format!("uc_min_{reference}_{t}"), RowSense::Le)
                    .with_term(nominal * flow.min_at(t), status)
                    .with_term(-1.0, w),
            );
        }
        if nonconvex.needs_startup_vars() {
            for t in 0..step_count {
                let status = self.expect_var(VariableKind::EdgeStatusPerStep, &entity, Some(t));
                let startup = self.expect_var(VariableKind::EdgeStartupPerStep, &entity, Some(t));
                let mut row = ConstraintRow::new(format!("uc_start_{reference}_{t}"), RowSense::Le)
                    .with_term(1.0, status)
                    .with_term(-1.0, startup);
                if t > 0 {
                    row = row.with_term(
                        -1.0,
                        self.expect_var(VariableKind::EdgeStatusPerStep, &entity, Some(t - 1)),
                    );
                }
                rows.push(row);
            }
        }
        if let Some(uptime) = nonconvex.minimum_uptime {
            for t in 0..step_count {
                let status = self.expect_var(VariableKind::EdgeStatusPerStep, &entity, Some(t));
                for k in t.saturating_sub(uptime - 1)..=t {
                    let startup = self.expect_var(VariableKind::EdgeStartupPerStep, &entity, Some(k));
                    rows.push(
                        ConstraintRow::new(format!("uc_uptime_{reference}_{k}_{t}"), RowSense::Le)
                            .with_term(1.0, startup)
                            .with_term(-1.0, status),
                    );
                }
            }
        }
        Ok(rows)
    }

    /// Capacity coupling for an invested flow:
    /// `w(t) <= max[t] * (P + existing)` per step.
    pub fn investment_rows(&self, reference: &FlowRef) -> Result<Vec<ConstraintRow>, RowError> {
        let flow = self
            .system
            .flow(reference)
            .ok_or_else(|| RowError::UnknownFlow(reference.clone()))?;
        let investment = flow
            .investment()
            .ok_or_else(|| RowError::NotInvested(reference.clone()))?;
        let entity = EntityRef::Flow(reference.clone());
        let capacity = self.expect_var(VariableKind::EdgeCapacity, &entity, None);
        let mut rows = Vec::new();
        for t in self.system.horizon().steps() {
            let max = flow.max_at(t);
            rows.push(
                ConstraintRow::new(format!("invest_ub_{reference}_{t}"), RowSense::Le)
                    .with_term(1.0, self.expect_var(VariableKind::EdgeFlowPerStep, &entity, Some(t)))
                    .with_term(-max, capacity)
                    .with_constant(-max * investment.existing),
            );
        }
        Ok(rows)
    }

    /// Level coupling for a storage with invested capacity:
    /// `level(t) <= P` per step.
    fn storage_capacity_rows(&self, node_id: &NodeId) -> Vec<ConstraintRow> {
        let entity = EntityRef::Node(node_id.clone());
        let capacity = match self.var(VariableKind::NodeCapacity, &entity, None) {
            Some(var) => var,
            None => return Vec::new(),
        };
        self.system
            .horizon()
            .steps()
            .map(|t| {
                ConstraintRow::new(format!("level_ub_{node_id}_{t}"), RowSense::Le)
                    .with_term(1.0, self.expect_var(VariableKind::NodeLevelPerStep, &entity, Some(t)))
                    .with_term(-1.0, capacity)
            })
            .collect()
    }

    /// Total-energy limits over the horizon for one flow:
    /// `sum_t w(t) * tau <= summed_max * nominal` and/or the `>=` twin
    /// written in `<=` form.
    pub fn summed_limit_rows(&self, reference: &FlowRef) -> Result<Vec<ConstraintRow>, RowError> {
        let flow = self
            .system
            .flow(reference)
            .ok_or_else(|| RowError::UnknownFlow(reference.clone()))?;
        if flow.summed_max().is_none() && flow.summed_min().is_none() {
            return Ok(Vec::new());
        }
        let nominal = flow
            .nominal_value()
            .ok_or_else(|| RowError::MissingNominal(reference.clone()))?;
        let entity = EntityRef::Flow(reference.clone());
        let tau = self.system.horizon().tau();
        let mut rows = Vec::new();
        if let Some(limit) = flow.summed_max() {
            let mut row = ConstraintRow::new(format!("sum_max_{reference}"), RowSense::Le)
                .with_constant(-limit * nominal);
            for t in self.system.horizon().steps() {
                row = row.with_term(tau, self.expect_var(VariableKind::EdgeFlowPerStep, &entity, Some(t)));
            }
            rows.push(row);
        }
        if let Some(limit) = flow.summed_min() {
            let mut row = ConstraintRow::new(format!("sum_min_{reference}"), RowSense::Le)
                .with_constant(limit * nominal);
            for t in self.system.horizon().steps() {
                row = row.with_term(-tau, self.expect_var(VariableKind::EdgeFlowPerStep, &entity, Some(t)));
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Objective terms in registry order, nonzero coefficients only.
    fn objective(&self) -> Vec<(f64, VarId)> {
        let tau = self.system.horizon().tau();
        let mut terms = Vec::new();
        for (index, var) in self.variables.iter().enumerate() {
            let coefficient = match (&var.kind, &var.entity) {
                (VariableKind::EdgeFlowPerStep, EntityRef::Flow(reference)) => {
                    let flow = self.system.flow(reference).expect("flow exists");
                    flow.cost_at(var.step.expect("per-step variable")) * tau
                }
                (VariableKind::EdgeCapacity, EntityRef::Flow(reference)) => {
                    let flow = self.system.flow(reference).expect("flow exists");
                    flow.investment().expect("invested flow").ep_cost
                }
                (VariableKind::NodeCapacity, EntityRef::Node(id)) => {
                    let spec = self
                        .system
                        .node(id)
                        .and_then(|n| n.storage_spec())
                        .expect("storage node");
                    spec.investment.as_ref().expect("invested storage").ep_cost
                }
                (VariableKind::EdgeStartupPerStep, EntityRef::Flow(reference)) => {
                    let flow = self.system.flow(reference).expect("flow exists");
                    flow.nonconvex()
                        .and_then(|nc| nc.startup_cost)
                        .unwrap_or(0.0)
                }
                _ => 0.0,
            };
            if coefficient != 0.0 {
                terms.push((coefficient, VarId(index)));
            }
        }
        terms
    }

    /// Assemble the full model: bus balances, transformer conversions,
    /// storage recursions, unit-commitment rows, investment couplings and
    /// summed limits, in that order, each block in entity label order.
    pub fn build(self) -> Model {
        let mut constraints = Vec::new();
        let mut provenance: BTreeMap<String, String> = BTreeMap::new();
        let mut record = |rows: Vec<ConstraintRow>, rule: &str, out: &mut Vec<ConstraintRow>| {
            for row in rows {
                provenance.insert(row.name.clone(), rule.to_string());
                out.push(row);
            }
        };

        let buses: Vec<NodeId> = self
            .system
            .nodes()
            .filter(|n| n.is_bus())
            .map(|n| n.id().clone())
            .collect();
        for bus in &buses {
            record(
                self.bus_balance_rows(bus).expect("bus"),
                "bus_balance",
                &mut constraints,
            );
        }

        for node in self.system.nodes() {
            if matches!(node.kind(), NodeKind::Transformer(_)) {
                record(
                    self.transformer_rows(node.id()).expect("transformer"),
                    "transformer_conversion",
                    &mut constraints,
                );
            }
        }

        for node in self.system.nodes() {
            if node.storage_spec().is_some() {
                record(
                    self.storage_rows(node.id()).expect("validated storage"),
                    "storage_balance",
                    &mut constraints,
                );
            }
        }

        for flow in self.system.flows() {
            if flow.nonconvex().is_some() {
                record(
                    self.nonconvex_rows(&flow.reference()).expect("nonconvex flow"),
                    "uc",
                    &mut constraints,
                );
            }
        }

        for flow in self.system.flows() {
            if flow.investment().is_some() {
                record(
                    self.investment_rows(&flow.reference()).expect("invested flow"),
                    "investment_bound",
                    &mut constraints,
                );
            }
        }
        for node in self.system.nodes() {
            if node.storage_spec().is_some() {
                record(
                    self.storage_capacity_rows(node.id()),
                    "investment_bound",
                    &mut constraints,
                );
            }
        }

        for flow in self.system.flows() {
            record(
                self.summed_limit_rows(&flow.reference())
                    .expect("validated summed limits"),
                "summed_limit",
                &mut constraints,
            );
        }

        let objective = self.objective();
        Model {
            horizon: *self.system.horizon(),
            variables: self.variables,
            index: self.index,
            constraints,
            objective,
            provenance,
            custom_rows: 0,
        }
    }
}

/// Variable bounds of a flow variable at step `t`. Fixing wins, then the
/// unit-commitment case leaves the lower bound at zero (the minimum applies
/// only when committed), then the plain nominal bounds; invested or
/// unconstrained flows run on [0, inf) and are bounded by rows if at all.
fn flow_bounds(flow: &crate::graph::Flow, t: usize) -> (f64, f64) {
    if let (Some(nominal), Some(fix)) = (flow.nominal_value(), flow.fix_profile()) {
        let value = nominal * fix.at(t);
        return (value, value);
    }
    match flow.nominal_value() {
        Some(nominal) if flow.nonconvex().is_some() => (0.0, nominal * flow.max_at(t)),
        Some(nominal) => (nominal * flow.min_at(t), nominal * flow.max_at(t)),
        None => (0.0, f64::INFINITY),
    }
}

/// A compiled optimization model: ordered variable registry, constraint rows
/// and objective terms, plus a provenance record per generated row.
#[derive(Debug, Clone)]
pub struct Model {
    horizon: Horizon,
    variables: Vec<VariableRef>,
    index: BTreeMap<VarKey, VarId>,
    constraints: Vec<ConstraintRow>,
    objective: Vec<(f64, VarId)>,
    provenance: BTreeMap<String, String>,
    custom_rows: usize,
}

impl Model {
    /// Compile a frozen system. Frozen systems are always compilable; the
    /// model type follows from the parametrisation alone.
    pub fn build(system: &FrozenSystem) -> Model {
        ModelBuilder::new(system).build()
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn variables(&self) -> &[VariableRef] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &VariableRef {
        &self.variables[id.0]
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn find_variable(
        &self,
        kind: VariableKind,
        entity: &EntityRef,
        step: Option<usize>,
    ) -> Option<VarId> {
        self.index.get(&(entity.clone(), kind, step)).copied()
    }

    pub fn constraints(&self) -> &[ConstraintRow] {
        &self.constraints
    }

    /// All objective terms merged: time-dependent edge terms
    /// (`cost[t] * tau` on flows, startup costs on startups), time-dependent
    /// node terms, and the time-independent edge/node capacity terms.
    pub fn objective_terms(&self) -> &[(f64, VarId)] {
        &self.objective
    }

    /// Objective under a full assignment (indexed by `VarId`).
    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|(c, var)| c * assignment[var.0])
            .sum()
    }

    /// Rule that generated the named row ("custom" for user rows).
    pub fn provenance(&self, row_name: &str) -> Option<&str> {
        self.provenance.get(row_name).map(String::as_str)
    }

    pub fn has_integral_variables(&self) -> bool {
        self.variables.iter().any(|v| v.domain.is_integral())
    }

    /// Append a user-defined row. All referenced variables must be
    /// registered; the locality rule is waived for custom rows.
    pub fn add_custom_row(&mut self, row: ConstraintRow) -> Result<(), ModelError> {
        for (_, var) in &row.terms {
            if var.0 >= self.variables.len() {
                return Err(ModelError::UnknownVariable(*var));
            }
        }
        self.custom_rows += 1;
        self.provenance.insert(row.name.clone(), "custom".into());
        self.constraints.push(row);
        Ok(())
    }
}

/// Candidate owner nodes of a variable: a node variable belongs to its node,
/// an edge variable to either endpoint.
fn owner_candidates(var: &VariableRef) -> Vec<&NodeId> {
    match &var.entity {
        EntityRef::Node(id) => vec![id],
        EntityRef::Flow(r) => vec![r.source(), r.target()],
    }
}

/// True if all variables of `row` fit into the neighbourhood of one node:
/// the node itself, its predecessor edges or its successor edges.
pub fn check_row_locality(model: &Model, row: &ConstraintRow) -> bool {
    let mut candidates: Option<BTreeSet<&NodeId>> = None;
    for (_, var) in &row.terms {
        let owners: BTreeSet<&NodeId> = owner_candidates(model.variable(*var)).into_iter().collect();
        candidates = Some(match candidates {
            None => owners,
            Some(existing) => existing.intersection(&owners).copied().collect(),
        });
        if candidates.as_ref().is_some_and(BTreeSet::is_empty) {
            return false;
        }
    }
    true
}

/// Names of generated (non-custom) rows that violate the locality rule.
/// An empty result means the model conforms to the canonical constraint
/// shape; equality rows count as a pair of `<=` rows, which has no effect on
/// the locality check itself.
pub fn audit_locality(model: &Model) -> Vec<String> {
    model
        .constraints()
        .iter()
        .filter(|row| model.provenance(&row.name) != Some("custom"))
        .filter(|row| !check_row_locality(model, row))
        .map(|row| row.name.clone())
        .collect()
}
