//! Parameter blocks for components and flows.
//!
//! These are plain data carried by nodes ([`TransformerSpec`],
//! [`StorageSpec`]) or flows ([`InvestmentSpec`], [`NonconvexSpec`]). Their
//! numeric invariants are checked by `EnergySystem::validate`, so a system
//! with out-of-range parameters cannot be frozen or compiled.

use std::collections::BTreeMap;

use crate::graph::NodeId;

/// Conversion factors of a transformer, keyed by connected bus label.
///
/// Every output bus must have a factor; input buses default to 1.0. For each
/// (input bus, output bus) pair the compiled model enforces
/// `factor(in) * w_out = factor(out) * w_in` per step, which for a single
/// input with factor 1 reduces to the familiar `w_out = efficiency * w_in`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransformerSpec {
    factors: BTreeMap<NodeId, f64>,
}

impl TransformerSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single-output shorthand: one output bus with the given efficiency.
    pub fn efficiency(bus: impl Into<NodeId>, factor: f64) -> Self {
        Self::new().with_factor(bus, factor)
    }

    pub fn with_factor(mut self, bus: impl Into<NodeId>, factor: f64) -> Self {
        self.factors.insert(bus.into(), factor);
        self
    }

    /// Factor for `bus`, or `None` if not set.
    pub fn factor(&self, bus: &NodeId) -> Option<f64> {
        self.factors.get(bus).copied()
    }

    /// Factor for an input bus: explicit value or the default 1.0.
    pub fn input_factor(&self, bus: &NodeId) -> f64 {
        self.factor(bus).unwrap_or(1.0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&NodeId, f64)> {
        self.factors.iter().map(|(bus, f)| (bus, *f))
    }
}

/// Storage parameters. Capacity is either fixed (`capacity`) or a decision
/// variable (`investment`); exactly one of the two must be set.
///
/// The level recursion per step `t` is
/// `level(t) = (1 - loss_rate) * level(t-1) + inflow_efficiency * tau * w_in(t)
///  - tau / outflow_efficiency * w_out(t)`,
/// with `initial_level_fraction * capacity` standing in for `level(-1)`.
/// `level(t)` is the state at the end of step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageSpec {
    pub capacity: Option<f64>,
    pub investment: Option<InvestmentSpec>,
    pub loss_rate: f64,
    pub inflow_efficiency: f64,
    pub outflow_efficiency: f64,
    pub initial_level_fraction: f64,
    pub balanced: bool,
}

impl StorageSpec {
    /// Storage with a fixed energy capacity and lossless defaults.
    pub fn with_capacity(capacity: f64) -> Self {
        Self {
            capacity: Some(capacity),
            investment: None,
            loss_rate: 0.0,
            inflow_efficiency: 1.0,
            outflow_efficiency: 1.0,
            initial_level_fraction: 0.0,
            balanced: false,
        }
    }

    /// Storage whose capacity is a cost-determined decision variable.
    pub fn with_investment(investment: InvestmentSpec) -> Self {
        Self {
            capacity: None,
            investment: Some(investment),
            loss_rate: 0.0,
            inflow_efficiency: 1.0,
            outflow_efficiency: 1.0,
            initial_level_fraction: 0.0,
            balanced: false,
        }
    }

    pub fn with_loss_rate(mut self, loss_rate: f64) -> Self {
        self.loss_rate = loss_rate;
        self
    }

    pub fn with_efficiencies(mut self, inflow: f64, outflow: f64) -> Self {
        self.inflow_efficiency = inflow;
        self.outflow_efficiency = outflow;
        self
    }

    pub fn with_initial_level(mut self, fraction: f64) -> Self {
        self.initial_level_fraction = fraction;
        self
    }

    /// Require the final level to equal the initial level.
    pub fn balanced(mut self) -> Self {
        self.balanced = true;
        self
    }
}

/// Capacity investment option: the capacity becomes a decision variable with
/// a time-independent cost `ep_cost` per unit, bounded by
/// `minimum ..= maximum`, on top of `existing` pre-installed capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentSpec {
    pub ep_cost: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub existing: f64,
}

impl InvestmentSpec {
    pub fn new(ep_cost: f64) -> Self {
        Self {
            ep_cost,
            minimum: 0.0,
            maximum: f64::INFINITY,
            existing: 0.0,
        }
    }

    pub fn with_minimum(mut self, minimum: f64) -> Self {
        self.minimum = minimum;
        self
    }

    pub fn with_maximum(mut self, maximum: f64) -> Self {
        self.maximum = maximum;
        self
    }

    pub fn with_existing(mut self, existing: f64) -> Self {
        self.existing = existing;
        self
    }
}

/// Unit-commitment option for a flow: a binary status variable gates the flow
/// between `nominal * min_profile` and `nominal * max_profile` when on and
/// forces it to zero when off. Startup events can carry a cost and enforce a
/// minimum uptime.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NonconvexSpec {
    pub startup_cost: Option<f64>,
    pub minimum_uptime: Option<usize>,
}

impl NonconvexSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_startup_cost(mut self, cost: f64) -> Self {
        self.startup_cost = Some(cost);
        self
    }

    pub fn with_minimum_uptime(mut self, steps: usize) -> Self {
        self.minimum_uptime = Some(steps);
        self
    }

    /// Startup variables are needed as soon as startups carry a cost or a
    /// minimum uptime has to be tracked.
    pub fn needs_startup_vars(&self) -> bool {
        self.startup_cost.is_some() || self.minimum_uptime.is_some()
    }
}
