//! Energy system modelling as a bipartite graph, compiled to linear and
//! mixed-integer linear programs.
//!
//! An energy system is described as a directed bipartite graph: buses
//! (commodity balance points) on one side, components (sources, sinks,
//! transformers, storages) on the other, connected by flows that carry the
//! per-step decision variables. The graph is purely descriptive; all
//! optimization semantics come from compiling a frozen system into a
//! [`model::Model`], which can be solved with the embedded simplex /
//! branch-and-bound solver or exported as a CPLEX LP file for external
//! solvers. Whether a model is an economic dispatch, an investment or a
//! unit-commitment problem is determined by parametrisation alone: adding an
//! investment or nonconvex option to a flow changes the model type, not any
//! mode switch.
//!
//! Typical round trip:
//!
//! ```
//! use enflow::graph::{EnergySystem, Flow, Horizon, Node};
//! use enflow::model::Model;
//! use enflow::results::ResultSet;
//! use enflow::solve::solve_milp;
//!
//! let mut system = EnergySystem::new(Horizon::new(2, 1.0).unwrap());
//! system.add_node(Node::bus("el")).unwrap();
//! system.add_node(Node::source("wind")).unwrap();
//! system.add_node(Node::sink("demand")).unwrap();
//! system
//!     .connect(Flow::between("wind", "el").with_nominal_value(5.0).with_variable_cost(10.0))
//!     .unwrap();
//! system
//!     .connect(Flow::between("el", "demand").with_nominal_value(1.0).with_fix(vec![3.0, 4.0]))
//!     .unwrap();
//! let frozen = system.freeze().unwrap();
//! let model = Model::build(&frozen);
//! let solution = solve_milp(&model);
//! let results = ResultSet::extract(&frozen, &model, &solution).unwrap();
//! assert!((results.objective_value() - 70.0).abs() < 1e-6);
//! ```

pub mod components;
pub mod graph;
pub mod lp_format;
pub mod model;
pub mod profile;
pub mod results;
pub mod simplex;
pub mod solve;
pub mod standard_form;

pub use components::{InvestmentSpec, NonconvexSpec, StorageSpec, TransformerSpec};
pub use graph::{
    EnergySystem, Flow, FlowRef, FrozenSystem, GraphError, Horizon, Node, NodeId, NodeKind,
    Violation,
};
pub use model::{
    ConstraintRow, Domain, EntityRef, Model, ModelBuilder, RowError, RowSense, VarId, VariableKind,
    VariableRef,
};
pub use results::{NodeView, ResultSet, ResultsError};
pub use solve::{solve_lp, solve_milp, Solution, SolveOptions, SolveStats, SolveStatus};
pub use standard_form::StandardForm;
