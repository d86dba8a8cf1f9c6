//! The bipartite energy-system graph.
//!
//! Nodes are buses or components (sources, sinks, transformers, storages);
//! directed flows connect buses to components and vice versa, never bus to
//! bus or component to component. The graph carries all parameters but no
//! optimization logic: it can be inspected, validated and frozen, and a
//! [`FrozenSystem`] is the only input the model builder accepts.
//!
//! All collections are ordered by node label so that every traversal, and
//! ultimately every generated model, is deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::components::{InvestmentSpec, NonconvexSpec, StorageSpec, TransformerSpec};
use crate::profile::Profile;

/// Time horizon: number of steps and the step length `tau` in hours.
///
/// `tau` converts power-valued flows into energy in costs and sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    step_count: usize,
    tau: f64,
}

impl Horizon {
    pub fn new(step_count: usize, tau: f64) -> Result<Self, GraphError> {
        if step_count == 0 {
            return Err(GraphError::InvalidHorizon(
                "step_count must be at least 1".into(),
            ));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(GraphError::InvalidHorizon(format!(
                "tau must be a positive finite number, got {tau}"
            )));
        }
        Ok(Self { step_count, tau })
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> std::ops::Range<usize> {
        0..self.step_count
    }
}

/// Node label. Uniqueness and non-emptiness are enforced when the node is
/// inserted into a system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Self {
        NodeId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(label: &str) -> Self {
        NodeId::new(label)
    }
}

impl From<String> for NodeId {
    fn from(label: String) -> Self {
        NodeId::new(label)
    }
}

impl From<&NodeId> for NodeId {
    fn from(id: &NodeId) -> Self {
        id.clone()
    }
}

/// Graph vertex: a bus or one of the component kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    id: NodeId,
    kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Commodity balance point; only connects to components.
    Bus,
    /// Producer: outflows only.
    Source,
    /// Consumer: inflows only.
    Sink,
    /// Converter between buses, with per-bus conversion factors.
    Transformer(TransformerSpec),
    /// Inter-temporal store with a level state per step.
    Storage(StorageSpec),
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Bus => "bus",
            NodeKind::Source => "source",
            NodeKind::Sink => "sink",
            NodeKind::Transformer(_) => "transformer",
            NodeKind::Storage(_) => "storage",
        }
    }
}

impl Node {
    pub fn bus(label: impl Into<NodeId>) -> Self {
        Node {
            id: label.into(),
            kind: NodeKind::Bus,
        }
    }

    pub fn source(label: impl Into<NodeId>) -> Self {
        Node {
            id: label.into(),
            kind: NodeKind::Source,
        }
    }

    pub fn sink(label: impl Into<NodeId>) -> Self {
        Node {
            id: label.into(),
            kind: NodeKind::Sink,
        }
    }

    pub fn transformer(label: impl Into<NodeId>, spec: TransformerSpec) -> Self {
        Node {
            id: label.into(),
            kind: NodeKind::Transformer(spec),
        }
    }

    pub fn storage(label: impl Into<NodeId>, spec: StorageSpec) -> Self {
        Node {
            id: label.into(),
            kind: NodeKind::Storage(spec),
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn is_bus(&self) -> bool {
        matches!(self.kind, NodeKind::Bus)
    }

    pub fn is_component(&self) -> bool {
        !self.is_bus()
    }

    pub fn storage_spec(&self) -> Option<&StorageSpec> {
        match &self.kind {
            NodeKind::Storage(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn transformer_spec(&self) -> Option<&TransformerSpec> {
        match &self.kind {
            NodeKind::Transformer(spec) => Some(spec),
            _ => None,
        }
    }
}

/// Identity of a directed edge: the ordered (source, target) label pair.
/// Parallel edges between the same pair are forbidden, so this is unique.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowRef {
    source: NodeId,
    target: NodeId,
}

impl FlowRef {
    pub fn new(source: impl Into<NodeId>, target: impl Into<NodeId>) -> Self {
        FlowRef {
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn source(&self) -> &NodeId {
        &self.source
    }

    pub fn target(&self) -> &NodeId {
        &self.target
    }

    /// True if `node` is either endpoint.
    pub fn touches(&self, node: &NodeId) -> bool {
        &self.source == node || &self.target == node
    }
}

impl fmt::Display for FlowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

/// Directed edge with all flow parameters. Built with `Flow::between` plus
/// `with_*` setters, then inserted via [`EnergySystem::connect`].
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    source: NodeId,
    target: NodeId,
    nominal_value: Option<f64>,
    min_profile: Option<Profile>,
    max_profile: Option<Profile>,
    fix_profile: Option<Profile>,
    variable_cost: Option<Profile>,
    summed_max: Option<f64>,
    summed_min: Option<f64>,
    investment: Option<InvestmentSpec>,
    nonconvex: Option<NonconvexSpec>,
}

impl Flow {
    pub fn between(source: impl Into<NodeId>, target: impl Into<NodeId>) -> Self {
        Flow {
            source: source.into(),
            target: target.into(),
            nominal_value: None,
            min_profile: None,
            max_profile: None,
            fix_profile: None,
            variable_cost: None,
            summed_max: None,
            summed_min: None,
            investment: None,
            nonconvex: None,
        }
    }

    /// Installed capacity scaling the relative min/max/fix profiles.
    pub fn with_nominal_value(mut self, nominal: f64) -> Self {
        self.nominal_value = Some(nominal);
        self
    }

    /// Per-step lower bound as a fraction of the nominal value (default 0).
    pub fn with_min(mut self, profile: impl Into<Profile>) -> Self {
        self.min_profile = Some(profile.into());
        self
    }

    /// Per-step upper bound as a fraction of the nominal value (default 1).
    pub fn with_max(mut self, profile: impl Into<Profile>) -> Self {
        self.max_profile = Some(profile.into());
        self
    }

    /// Fix the flow to `nominal_value * fix[t]` per step.
    pub fn with_fix(mut self, profile: impl Into<Profile>) -> Self {
        self.fix_profile = Some(profile.into());
        self
    }

    /// Cost per unit of energy moved (applied as `cost[t] * tau` per step).
    pub fn with_variable_cost(mut self, profile: impl Into<Profile>) -> Self {
        self.variable_cost = Some(profile.into());
        self
    }

    /// Upper bound on total energy over the horizon, as a multiple of the
    /// nominal value.
    pub fn with_summed_max(mut self, multiple: f64) -> Self {
        self.summed_max = Some(multiple);
        self
    }

    /// Lower bound on total energy over the horizon, as a multiple of the
    /// nominal value.
    pub fn with_summed_min(mut self, multiple: f64) -> Self {
        self.summed_min = Some(multiple);
        self
    }

    pub fn with_investment(mut self, investment: InvestmentSpec) -> Self {
        self.investment = Some(investment);
        self
    }

    pub fn with_nonconvex(mut self, nonconvex: NonconvexSpec) -> Self {
        self.nonconvex = Some(nonconvex);
        self
    }

    pub fn source(&self) -> &NodeId {
        &self.source
    }

    pub fn target(&self) -> &NodeId {
        &self.target
    }

    pub fn reference(&self) -> FlowRef {
        FlowRef::new(self.source.clone(), self.target.clone())
    }

    pub fn nominal_value(&self) -> Option<f64> {
        self.nominal_value
    }

    pub fn min_profile(&self) -> Option<&Profile> {
        self.min_profile.as_ref()
    }

    pub fn max_profile(&self) -> Option<&Profile> {
        self.max_profile.as_ref()
    }

    pub fn fix_profile(&self) -> Option<&Profile> {
        self.fix_profile.as_ref()
    }

    pub fn variable_cost(&self) -> Option<&Profile> {
        self.variable_cost.as_ref()
    }

    pub fn summed_max(&self) -> Option<f64> {
        self.summed_max
    }

    pub fn summed_min(&self) -> Option<f64> {
        self.summed_min
    }

    pub fn investment(&self) -> Option<&InvestmentSpec> {
        self.investment.as_ref()
    }

    pub fn nonconvex(&self) -> Option<&NonconvexSpec> {
        self.nonconvex.as_ref()
    }

    /// Relative lower bound at step `t` (default 0).
    pub fn min_at(&self, t: usize) -> f64 {
        self.min_profile.as_ref().map_or(0.0, |p| p.at(t))
    }

    /// Relative upper bound at step `t` (default 1).
    pub fn max_at(&self, t: usize) -> f64 {
        self.max_profile.as_ref().map_or(1.0, |p| p.at(t))
    }

    /// Cost per unit energy at step `t` (default 0).
    pub fn cost_at(&self, t: usize) -> f64 {
        self.variable_cost.as_ref().map_or(0.0, |p| p.at(t))
    }

    fn normalize_profiles(&mut self, step_count: usize) {
        for profile in [
            &mut self.min_profile,
            &mut self.max_profile,
            &mut self.fix_profile,
            &mut self.variable_cost,
        ]
        .into_iter()
        .flatten()
        {
            profile.normalize(step_count);
        }
    }
}

/// A well-formedness violation found by [`EnergySystem::validate`].
/// Violations are data, not errors: validate never fails, it reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The system has no nodes at all; there is nothing to optimize.
    NoNodes,
    /// A node without any incident flow.
    IsolatedNode { node: NodeId },
    /// A transformer missing its input or output side.
    DanglingTransformer { node: NodeId, missing_output: bool },
    /// A storage must have exactly one inflow and one outflow.
    StorageDegree {
        node: NodeId,
        inflows: usize,
        outflows: usize,
    },
    /// An explicit series profile whose length differs from the horizon.
    ProfileLengthMismatch {
        flow: FlowRef,
        profile: &'static str,
        expected: usize,
        found: usize,
    },
    /// A relative min/max profile value outside [0, 1], or a negative fix.
    ProfileOutOfRange {
        flow: FlowRef,
        profile: &'static str,
        step: usize,
        value: f64,
    },
    /// min_profile above max_profile at some step.
    MinExceedsMax { flow: FlowRef, step: usize },
    /// min/max profiles given on a flow with neither nominal value nor
    /// investment; there is no capacity for the fractions to refer to.
    ProfileWithoutCapacity { flow: FlowRef, profile: &'static str },
    /// summed_max/summed_min given without a nominal value.
    SummedLimitWithoutNominal { flow: FlowRef },
    /// Investment and nonconvex options cannot be combined on one flow.
    InvestmentNonconvexConflict { flow: FlowRef },
    /// A transformer output bus without a conversion factor.
    MissingConversionFactor { node: NodeId, bus: NodeId },
    /// A parameter outside its documented range (NaN, negative cost, ...).
    InvalidParameter { entity: String, detail: String },
}

impl Violation {
    /// The flow this violation is about, if any.
    pub fn flow(&self) -> Option<&FlowRef> {
        match self {
            Violation::ProfileLengthMismatch { flow, .. }
            | Violation::ProfileOutOfRange { flow, .. }
            | Violation::MinExceedsMax { flow, .. }
            | Violation::ProfileWithoutCapacity { flow, .. }
            | Violation::SummedLimitWithoutNominal { flow }
            | Violation::InvestmentNonconvexConflict { flow } => Some(flow),
            _ => None,
        }
    }

    /// The node this violation is about, if any.
    pub fn node(&self) -> Option<&NodeId> {
        match self {
            Violation::IsolatedNode { node }
            | Violation::DanglingTransformer { node, .. }
            | Violation::StorageDegree { node, .. }
            | Violation::MissingConversionFactor { node, .. } => Some(node),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoNodes => write!(f, "system has no nodes"),
            Violation::IsolatedNode { node } => {
                write!(f, "node '{node}' has no incident flows")
            }
            Violation::DanglingTransformer {
                node,
                missing_output,
            } => {
                let side = if *missing_output { "output" } else { "input" };
                write!(f, "transformer '{node}' has no {side} flow")
            }
            Violation::StorageDegree {
                node,
                inflows,
                outflows,
            } => write!(
                f,
                "storage '{node}' needs exactly one inflow and one outflow, found {inflows} in / {outflows} out"
            ),
            Violation::ProfileLengthMismatch {
                flow,
                profile,
                expected,
                found,
            } => write!(
                f,
                "flow '{flow}': {profile} profile has {found} entries, horizon has {expected} steps"
            ),
            Violation::ProfileOutOfRange {
                flow,
                profile,
                step,
                value,
            } => write!(
                f,
                "flow '{flow}': {profile} profile value {value} at step {step} is out of range"
            ),
            Violation::MinExceedsMax { flow, step } => {
                write!(f, "flow '{flow}': min exceeds max at step {step}")
            }
            Violation::ProfileWithoutCapacity { flow, profile } => write!(
                f,
                "flow '{flow}': {profile} profile given but neither nominal value nor investment set"
            ),
            Violation::SummedLimitWithoutNominal { flow } => {
                write!(f, "flow '{flow}': summed limit requires a nominal value")
            }
            Violation::InvestmentNonconvexConflict { flow } => {
                write!(f, "flow '{flow}': investment and nonconvex cannot be combined")
            }
            Violation::MissingConversionFactor { node, bus } => write!(
                f,
                "transformer '{node}': no conversion factor for output bus '{bus}'"
            ),
            Violation::InvalidParameter { entity, detail } => {
                write!(f, "{entity}: {detail}")
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),
    #[error("node labels must be nonempty")]
    EmptyLabel,
    #[error("duplicate node label '{0}'")]
    DuplicateLabel(NodeId),
    #[error("system is frozen and cannot be modified")]
    SystemFrozen,
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("flow '{0}->{1}' violates bipartiteness: exactly one endpoint must be a bus")]
    BipartitenessViolation(NodeId, NodeId),
    #[error("source '{0}' cannot have an inflow")]
    SourceHasInflow(NodeId),
    #[error("sink '{0}' cannot have an outflow")]
    SinkHasOutflow(NodeId),
    #[error("duplicate flow '{0}'")]
    DuplicateEdge(FlowRef),
    #[error("flow '{0}': fix profile requires a nominal value")]
    FixRequiresNominal(FlowRef),
    #[error("flow '{0}': investment and nominal value are mutually exclusive")]
    InvestmentExcludesNominal(FlowRef),
    #[error("flow '{0}': nonconvex requires a nominal value or an investment")]
    NonconvexRequiresCapacity(FlowRef),
    #[error("system has no nodes")]
    EmptySystem,
    #[error("validation failed with {} violation(s)", .0.len())]
    ValidationFailed(Vec<Violation>),
}

/// Container for nodes and flows plus the time horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySystem {
    horizon: Horizon,
    nodes: BTreeMap<NodeId, Node>,
    flows: BTreeMap<FlowRef, Flow>,
    frozen: bool,
}

impl EnergySystem {
    /// Create an empty, unfrozen system over the given horizon.
    pub fn new(horizon: Horizon) -> Self {
        EnergySystem {
            horizon,
            nodes: BTreeMap::new(),
            flows: BTreeMap::new(),
            frozen: false,
        }
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn flow(&self, reference: &FlowRef) -> Option<&Flow> {
        self.flows.get(reference)
    }

    /// Nodes in label order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Flows ordered by (source, target) label pair.
    pub fn flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows.values()
    }

    /// Insert a node. The label must be nonempty and unused.
    pub fn add_node(&mut self, node: Node) -> Result<NodeId, GraphError> {
        if self.frozen {
            return Err(GraphError::SystemFrozen);
        }
        if node.id.as_str().is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateLabel(node.id));
        }
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    /// Insert a flow. Both endpoints must exist, exactly one of them must be
    /// a bus, sources accept no inflows, sinks no outflows, and the ordered
    /// (source, target) pair must be new. Scalar profiles are broadcast to
    /// the horizon length here.
    pub fn connect(&mut self, mut flow: Flow) -> Result<FlowRef, GraphError> {
        if self.frozen {
            return Err(GraphError::SystemFrozen);
        }
        let reference = flow.reference();
        let source = self
            .nodes
            .get(&flow.source)
            .ok_or_else(|| GraphError::UnknownNode(flow.source.clone()))?;
        let target = self
            .nodes
            .get(&flow.target)
            .ok_or_else(|| GraphError::UnknownNode(flow.target.clone()))?;
        if source.is_bus() == target.is_bus() {
            return Err(GraphError::BipartitenessViolation(
                flow.source.clone(),
                flow.target.clone(),
            ));
        }
        if matches!(target.kind, NodeKind::Source) {
            return Err(GraphError::SourceHasInflow(flow.target.clone()));
        }
        if matches!(source.kind, NodeKind::Sink) {
            return Err(GraphError::SinkHasOutflow(flow.source.clone()));
        }
        if self.flows.contains_key(&reference) {
            return Err(GraphError::DuplicateEdge(reference));
        }
        if flow.fix_profile.is_some() && flow.nominal_value.is_none() {
            return Err(GraphError::FixRequiresNominal(reference));
        }
        if flow.investment.is_some() && flow.nominal_value.is_some() {
            return Err(GraphError::InvestmentExcludesNominal(reference));
        }
        if flow.nonconvex.is_some() && flow.nominal_value.is_none() && flow.investment.is_none() {
            return Err(GraphError::NonconvexRequiresCapacity(reference));
        }
        flow.normalize_profiles(self.horizon.step_count);
        self.flows.insert(reference.clone(), flow);
        Ok(reference)
    }

    /// Direct predecessors of `n`, sorted by label.
    pub fn predecessors(&self, n: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        if !self.nodes.contains_key(n) {
            return Err(GraphError::UnknownNode(n.clone()));
        }
        let mut preds: Vec<NodeId> = self
            .flows
            .keys()
            .filter(|r| r.target() == n)
            .map(|r| r.source().clone())
            .collect();
        preds.sort();
        Ok(preds)
    }

    /// Direct successors of `n`, sorted by label.
    pub fn successors(&self, n: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        if !self.nodes.contains_key(n) {
            return Err(GraphError::UnknownNode(n.clone()));
        }
        // FlowRef ordering starts with the source label, so this range scan
        // yields targets already sorted.
        let succs: Vec<NodeId> = self
            .flows
            .keys()
            .filter(|r| r.source() == n)
            .map(|r| r.target().clone())
            .collect();
        Ok(succs)
    }

    /// Flows into `n`, ordered by source label.
    pub fn inflows(&self, n: &NodeId) -> Vec<&Flow> {
        self.flows.values().filter(|f| &f.target == n).collect()
    }

    /// Flows out of `n`, ordered by target label.
    pub fn outflows(&self, n: &NodeId) -> Vec<&Flow> {
        self.flows.values().filter(|f| &f.source == n).collect()
    }

    /// True iff the undirected version of the graph has a single connected
    /// component. Requires at least one node.
    pub fn is_connected(&self) -> Result<bool, GraphError> {
        let start = self.nodes.keys().next().ok_or(GraphError::EmptySystem)?;
        let mut adjacency: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for reference in self.flows.keys() {
            adjacency
                .entry(reference.source())
                .or_default()
                .push(reference.target());
            adjacency
                .entry(reference.target())
                .or_default()
                .push(reference.source());
        }
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(current) = queue.pop_front() {
            for next in adjacency.get(current).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen.len() == self.nodes.len())
    }

    /// Check every well-formedness rule and return all violations. The empty
    /// list means the system can be frozen. Pure: two consecutive calls
    /// return identical lists.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let step_count = self.horizon.step_count;

        if self.nodes.is_empty() {
            violations.push(Violation::NoNodes);
        }

        for node in self.nodes.values() {
            let inflows = self.inflows(&node.id);
            let outflows = self.outflows(&node.id);
            if inflows.is_empty() && outflows.is_empty() {
                violations.push(Violation::IsolatedNode {
                    node: node.id.clone(),
                });
            }
            match &node.kind {
                NodeKind::Transformer(spec) => {
                    if !inflows.is_empty() && outflows.is_empty() {
                        violations.push(Violation::DanglingTransformer {
                            node: node.id.clone(),
                            missing_output: true,
                        });
                    }
                    if inflows.is_empty() && !outflows.is_empty() {
                        violations.push(Violation::DanglingTransformer {
                            node: node.id.clone(),
                            missing_output: false,
                        });
                    }
                    for flow in &outflows {
                        match spec.factor(&flow.target) {
                            None => violations.push(Violation::MissingConversionFactor {
                                node: node.id.clone(),
                                bus: flow.target.clone(),
                            }),
                            Some(factor) if !(factor.is_finite() && factor > 0.0) => violations
                                .push(Violation::InvalidParameter {
                                    entity: format!("transformer '{}'", node.id),
                                    detail: format!(
                                        "conversion factor for '{}' must be positive, got {factor}",
                                        flow.target
                                    ),
                                }),
                            Some(_) => {}
                        }
                    }
                    for flow in &inflows {
                        if let Some(factor) = spec.factor(&flow.source) {
                            if !(factor.is_finite() && factor > 0.0) {
                                violations.push(Violation::InvalidParameter {
                                    entity: format!("transformer '{}'", node.id),
                                    detail: format!(
                                        "conversion factor for '{}' must be positive, got {factor}",
                                        flow.source
                                    ),
                                });
                            }
                        }
                    }
                }
                NodeKind::Storage(spec) => {
                    if !(inflows.is_empty() && outflows.is_empty())
                        && (inflows.len() != 1 || outflows.len() != 1)
                    {
                        violations.push(Violation::StorageDegree {
                            node: node.id.clone(),
                            inflows: inflows.len(),
                            outflows: outflows.len(),
                        });
                    }
                    self.check_storage_spec(&node.id, spec, &mut violations);
                }
                _ => {}
            }
        }

        for flow in self.flows.values() {
            self.check_flow(flow, step_count, &mut violations);
        }

        violations
    }

    fn check_storage_spec(&self, id: &NodeId, spec: &StorageSpec, out: &mut Vec<Violation>) {
        let entity = format!("storage '{id}'");
        let invalid = |detail: String| Violation::InvalidParameter {
            entity: entity.clone(),
            detail,
        };
        match (&spec.capacity, &spec.investment) {
            (Some(_), Some(_)) => {
                out.push(invalid("capacity and investment are mutually exclusive".into()))
            }
            (None, None) => out.push(invalid("either capacity or investment must be set".into())),
            (Some(cap), None) => {
                if !(cap.is_finite() && *cap >= 0.0) {
                    out.push(invalid(format!(
                        "capacity must be nonnegative and finite, got {cap}"
                    )));
                }
            }
            (None, Some(investment)) => {
                check_investment_spec(&entity, investment, out);
            }
        }
        if !(spec.loss_rate >= 0.0 && spec.loss_rate < 1.0) {
            out.push(invalid(format!(
                "loss_rate must be in [0, 1), got {}",
                spec.loss_rate
            )));
        }
        for (name, eff) in [
            ("inflow_efficiency", spec.inflow_efficiency),
            ("outflow_efficiency", spec.outflow_efficiency),
        ] {
            if !(eff > 0.0 && eff <= 1.0) {
                out.push(invalid(format!("{name} must be in (0, 1], got {eff}")));
            }
        }
        if !(spec.initial_level_fraction >= 0.0 && spec.initial_level_fraction <= 1.0) {
            out.push(invalid(format!(
                "initial_level_fraction must be in [0, 1], got {}",
                spec.initial_level_fraction
            )));
        }
    }

    fn check_flow(&self, flow: &Flow, step_count: usize, out: &mut Vec<Violation>) {
        let reference = flow.reference();

        let mut lengths_ok = true;
        for (name, profile) in [
            ("min", flow.min_profile.as_ref()),
            ("max", flow.max_profile.as_ref()),
            ("fix", flow.fix_profile.as_ref()),
            ("variable_cost", flow.variable_cost.as_ref()),
        ] {
            if let Some(found) = profile.and_then(Profile::series_len) {
                if found != step_count {
                    out.push(Violation::ProfileLengthMismatch {
                        flow: reference.clone(),
                        profile: name,
                        expected: step_count,
                        found,
                    });
                    lengths_ok = false;
                }
            }
        }

        if let Some(nominal) = flow.nominal_value {
            if !(nominal.is_finite() && nominal >= 0.0) {
                out.push(Violation::InvalidParameter {
                    entity: format!("flow '{reference}'"),
                    detail: format!("nominal_value must be nonnegative and finite, got {nominal}"),
                });
            }
        }

        let has_capacity = flow.nominal_value.is_some() || flow.investment.is_some();
        for (name, profile) in [
            ("min", flow.min_profile.as_ref()),
            ("max", flow.max_profile.as_ref()),
        ] {
            if let Some(profile) = profile {
                if !has_capacity {
                    out.push(Violation::ProfileWithoutCapacity {
                        flow: reference.clone(),
                        profile: name,
                    });
                }
                for (step, value) in profile.values().iter().enumerate() {
                    if !(value.is_finite() && (0.0..=1.0).contains(value)) {
                        out.push(Violation::ProfileOutOfRange {
                            flow: reference.clone(),
                            profile: name,
                            step,
                            value: *value,
                        });
                    }
                }
            }
        }
        if let Some(fix) = &flow.fix_profile {
            for (step, value) in fix.values().iter().enumerate() {
                if !(value.is_finite() && *value >= 0.0) {
                    out.push(Violation::ProfileOutOfRange {
                        flow: reference.clone(),
                        profile: "fix",
                        step,
                        value: *value,
                    });
                }
            }
        }
        if let Some(cost) = &flow.variable_cost {
            for (step, value) in cost.values().iter().enumerate() {
                if !value.is_finite() {
                    out.push(Violation::ProfileOutOfRange {
                        flow: reference.clone(),
                        profile: "variable_cost",
                        step,
                        value: *value,
                    });
                }
            }
        }

        if lengths_ok {
            for t in 0..step_count {
                if flow.min_at(t) > flow.max_at(t) {
                    out.push(Violation::MinExceedsMax {
                        flow: reference.clone(),
                        step: t,
                    });
                }
            }
        }

        for (name, limit) in [("summed_max", flow.summed_max), ("summed_min", flow.summed_min)] {
            if let Some(limit) = limit {
                if flow.nominal_value.is_none() {
                    out.push(Violation::SummedLimitWithoutNominal {
                        flow: reference.clone(),
                    });
                }
                if !(limit.is_finite() && limit >= 0.0) {
                    out.push(Violation::InvalidParameter {
                        entity: format!("flow '{reference}'"),
                        detail: format!("{name} must be nonnegative and finite, got {limit}"),
                    });
                }
            }
        }
        if let (Some(lo), Some(hi)) = (flow.summed_min, flow.summed_max) {
            if lo > hi {
                out.push(Violation::InvalidParameter {
                    entity: format!("flow '{reference}'"),
                    detail: format!("summed_min {lo} exceeds summed_max {hi}"),
                });
            }
        }

        if flow.investment.is_some() && flow.nonconvex.is_some() {
            out.push(Violation::InvestmentNonconvexConflict {
                flow: reference.clone(),
            });
        }
        if let Some(investment) = &flow.investment {
            check_investment_spec(&format!("flow '{reference}'"), investment, out);
        }
        if let Some(nonconvex) = &flow.nonconvex {
            if let Some(cost) = nonconvex.startup_cost {
                if !(cost.is_finite() && cost >= 0.0) {
                    out.push(Violation::InvalidParameter {
                        entity: format!("flow '{reference}'"),
                        detail: format!("startup_cost must be nonnegative and finite, got {cost}"),
                    });
                }
            }
            if nonconvex.minimum_uptime == Some(0) {
                out.push(Violation::InvalidParameter {
                    entity: format!("flow '{reference}'"),
                    detail: "minimum_uptime must be at least 1".into(),
                });
            }
        }
    }

    /// Validate and, if clean, freeze the system. A frozen system is
    /// immutable and is the only input the model builder accepts.
    pub fn freeze(mut self) -> Result<FrozenSystem, GraphError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(GraphError::ValidationFailed(violations));
        }
        self.frozen = true;
        Ok(FrozenSystem { inner: self })
    }
}

fn check_investment_spec(entity: &str, spec: &InvestmentSpec, out: &mut Vec<Violation>) {
    let mut invalid = |detail: String| {
        out.push(Violation::InvalidParameter {
            entity: entity.to_string(),
            detail,
        });
    };
    if !(spec.ep_cost.is_finite() && spec.ep_cost >= 0.0) {
        invalid(format!(
            "ep_cost must be nonnegative and finite, got {}",
            spec.ep_cost
        ));
    }
    if !(spec.minimum.is_finite() && spec.minimum >= 0.0) {
        invalid(format!(
            "investment minimum must be nonnegative and finite, got {}",
            spec.minimum
        ));
    }
    if spec.maximum.is_nan() || spec.maximum < spec.minimum {
        invalid(format!(
            "investment maximum {} must be at least the minimum {}",
            spec.maximum, spec.minimum
        ));
    }
    if !(spec.existing.is_finite() && spec.existing >= 0.0) {
        invalid(format!(
            "existing capacity must be nonnegative and finite, got {}",
            spec.existing
        ));
    }
}

/// A validated, immutable energy system. Dereferences to [`EnergySystem`]
/// for read access; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSystem {
    inner: EnergySystem,
}

impl Deref for FrozenSystem {
    type Target = EnergySystem;

    fn deref(&self) -> &EnergySystem {
        &self.inner
    }
}

impl FrozenSystem {
    /// Clone back into a mutable, unfrozen system.
    pub fn thaw(&self) -> EnergySystem {
        let mut system = self.inner.clone();
        system.frozen = false;
        system
    }
}
