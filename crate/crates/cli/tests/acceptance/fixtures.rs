//! The model suite shared by the acceptance criteria: one representative
//! system per model family, all feasible.

use enflow::graph::{EnergySystem, Flow, FrozenSystem, Horizon, Node};
use enflow::{InvestmentSpec, NonconvexSpec, StorageSpec, TransformerSpec};

pub struct Fixture {
    pub name: &'static str,
    pub system: FrozenSystem,
    /// Unit-commitment models need branch-and-bound; everything else is LP.
    pub has_integers: bool,
}

pub fn suite() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "dispatch_two_sources",
            system: dispatch_two_sources(),
            has_integers: false,
        },
        Fixture {
            name: "dispatch_profiled",
            system: dispatch_profiled(),
            has_integers: false,
        },
        Fixture {
            name: "investment_vs_market",
            system: investment_vs_market(),
            has_integers: false,
        },
        Fixture {
            name: "storage_cycle",
            system: storage_cycle(false),
            has_integers: false,
        },
        Fixture {
            name: "storage_balanced",
            system: storage_cycle(true),
            has_integers: false,
        },
        Fixture {
            name: "storage_invested",
            system: storage_invested(),
            has_integers: false,
        },
        Fixture {
            name: "uc_startup",
            system: uc_startup(),
            has_integers: true,
        },
        Fixture {
            name: "uc_uptime",
            system: uc_uptime(),
            has_integers: true,
        },
        Fixture {
            name: "sector_coupled_chp",
            system: sector_coupled_chp(),
            has_integers: false,
        },
        Fixture {
            name: "summed_limit",
            system: summed_limit(),
            has_integers: false,
        },
    ]
}

fn horizon(steps: usize, tau: f64) -> Horizon {
    Horizon::new(steps, tau).unwrap()
}

fn dispatch_two_sources() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(2, 1.0));
    system.add_node(Node::source("cheap")).unwrap();
    system.add_node(Node::source("dear")).unwrap();
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::sink("demand")).unwrap();
    system
        .connect(
            Flow::between("cheap", "el")
                .with_nominal_value(5.0)
                .with_variable_cost(1.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("dear", "el")
                .with_nominal_value(5.0)
                .with_variable_cost(2.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "demand")
                .with_nominal_value(1.0)
                .with_fix(vec![8.0, 3.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}

fn dispatch_profiled() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(4, 0.25));
    system.add_node(Node::source("wind")).unwrap();
    system.add_node(Node::source("grid")).unwrap();
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::sink("town")).unwrap();
    system
        .connect(
            Flow::between("wind", "el")
                .with_nominal_value(12.0)
                .with_max(vec![0.1, 0.6, 0.9, 0.3])
                .with_variable_cost(0.2),
        )
        .unwrap();
    system
        .connect(
            Flow::between("grid", "el")
                .with_nominal_value(20.0)
                .with_variable_cost(vec![25.0, 30.0, 18.0, 40.0]),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "town")
                .with_nominal_value(1.0)
                .with_fix(vec![4.0, 7.0, 9.0, 5.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}

fn investment_vs_market() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(3, 1.0));
    system.add_node(Node::source("pv")).unwrap();
    system.add_node(Node::source("market")).unwrap();
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::sink("load")).unwrap();
    system
        .connect(
            Flow::between("pv", "el")
                .with_investment(InvestmentSpec::new(4.0).with_maximum(30.0))
                .with_max(vec![0.5, 1.0, 0.25]),
        )
        .unwrap();
    system
        .connect(
            Flow::between("market", "el")
                .with_nominal_value(50.0)
                .with_variable_cost(6.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "load")
                .with_nominal_value(1.0)
                .with_fix(vec![5.0, 12.0, 4.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}

fn storage_cycle(balanced: bool) -> FrozenSystem {
    let mut spec = StorageSpec::with_capacity(15.0)
        .with_loss_rate(0.05)
        .with_efficiencies(0.9, 0.8)
        .with_initial_level(0.4);
    if balanced {
        spec = spec.balanced();
    }
    let mut system = EnergySystem::new(horizon(4, 1.0));
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::source("offpeak")).unwrap();
    system.add_node(Node::source("peak")).unwrap();
    system.add_node(Node::sink("load")).unwrap();
    system.add_node(Node::storage("battery", spec)).unwrap();
    system
        .connect(
            Flow::between("offpeak", "el")
                .with_nominal_value(10.0)
                .with_max(vec![1.0, 1.0, 0.0, 0.0])
                .with_variable_cost(1.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("peak", "el")
                .with_nominal_value(20.0)
                .with_variable_cost(12.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "load")
                .with_nominal_value(1.0)
                .with_fix(vec![3.0, 3.0, 8.0, 6.0]),
        )
        .unwrap();
    system
        .connect(Flow::between("el", "battery").with_nominal_value(9.0))
        .unwrap();
    system
        .connect(Flow::between("battery", "el").with_nominal_value(9.0))
        .unwrap();
    system.freeze().unwrap()
}

fn storage_invested() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(3, 1.0));
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::source("night")).unwrap();
    system.add_node(Node::source("day")).unwrap();
    system.add_node(Node::sink("load")).unwrap();
    system
        .add_node(Node::storage(
            "store",
            StorageSpec::with_investment(InvestmentSpec::new(2.0).with_maximum(25.0))
                .with_efficiencies(0.95, 0.95),
        ))
        .unwrap();
    system
        .connect(
            Flow::between("night", "el")
                .with_nominal_value(10.0)
                .with_max(vec![1.0, 0.0, 0.0])
                .with_variable_cost(1.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("day", "el")
                .with_nominal_value(20.0)
                .with_variable_cost(20.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "load")
                .with_nominal_value(1.0)
                .with_fix(vec![2.0, 5.0, 4.0]),
        )
        .unwrap();
    system
        .connect(Flow::between("el", "store").with_nominal_value(10.0))
        .unwrap();
    system
        .connect(Flow::between("store", "el").with_nominal_value(10.0))
        .unwrap();
    system.freeze().unwrap()
}

fn uc_startup() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(3, 1.0));
    system.add_node(Node::source("gas_unit")).unwrap();
    system.add_node(Node::source("grid")).unwrap();
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::sink("load")).unwrap();
    system
        .connect(
            Flow::between("gas_unit", "el")
                .with_nominal_value(10.0)
                .with_min(0.4)
                .with_variable_cost(2.0)
                .with_nonconvex(NonconvexSpec::new().with_startup_cost(6.0)),
        )
        .unwrap();
    system
        .connect(
            Flow::between("grid", "el")
                .with_nominal_value(30.0)
                .with_variable_cost(7.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "load")
                .with_nominal_value(1.0)
                .with_fix(vec![2.0, 9.0, 8.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}

fn uc_uptime() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(4, 1.0));
    system.add_node(Node::source("unit")).unwrap();
    system.add_node(Node::source("backup")).unwrap();
    system.add_node(Node::bus("el")).unwrap();
    system.add_node(Node::sink("load")).unwrap();
    system
        .connect(
            Flow::between("unit", "el")
                .with_nominal_value(10.0)
                .with_min(0.2)
                .with_variable_cost(vec![9.0, 1.0, 8.0, 9.0])
                .with_nonconvex(
                    NonconvexSpec::new()
                        .with_startup_cost(1.0)
                        .with_minimum_uptime(2),
                ),
        )
        .unwrap();
    system
        .connect(
            Flow::between("backup", "el")
                .with_nominal_value(25.0)
                .with_variable_cost(4.0),
        )
        .unwrap();
    system
        .connect(
            Flow::between("el", "load")
                .with_nominal_value(1.0)
                .with_fix(vec![3.0, 9.0, 4.0, 2.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}

fn sector_coupled_chp() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(2, 1.0));
    system.add_node(Node::source("gas")).unwrap();
    system.add_node(Node::bus("gas_bus")).unwrap();
    system
        .add_node(Node::transformer(
            "chp",
            TransformerSpec::new()
                .with_factor("el_bus", 0.35)
                .with_factor("heat_bus", 0.5),
        ))
        .unwrap();
    system.add_node(Node::bus("el_bus")).unwrap();
    system.add_node(Node::bus("heat_bus")).unwrap();
    system.add_node(Node::sink("power_load")).unwrap();
    system.add_node(Node::sink("heat_dump")).unwrap();
    system
        .connect(
            Flow::between("gas", "gas_bus")
                .with_nominal_value(60.0)
                .with_variable_cost(3.0),
        )
        .unwrap();
    system.connect(Flow::between("gas_bus", "chp")).unwrap();
    system.connect(Flow::between("chp", "el_bus")).unwrap();
    system.connect(Flow::between("chp", "heat_bus")).unwrap();
    system
        .connect(
            Flow::between("el_bus", "power_load")
                .with_nominal_value(1.0)
                .with_fix(vec![7.0, 3.5]),
        )
        .unwrap();
    system
        .connect(Flow::between("heat_bus", "heat_dump").with_nominal_value(40.0))
        .unwrap();
    system.freeze().unwrap()
}

fn summed_limit() -> FrozenSystem {
    let mut system = EnergySystem::new(horizon(3, 1.0));
    system.add_node(Node::source("gas")).unwrap();
    system.add_node(Node::source("bio")).unwrap();
    system.add_node(Node::bus("b")).unwrap();
    system.add_node(Node::sink("d")).unwrap();
    system
        .connect(
            Flow::between("gas", "b")
                .with_nominal_value(10.0)
                .with_variable_cost(1.0)
                .with_summed_max(1.5),
        )
        .unwrap();
    system
        .connect(
            Flow::between("bio", "b")
                .with_nominal_value(10.0)
                .with_variable_cost(5.0)
                .with_summed_min(0.5),
        )
        .unwrap();
    system
        .connect(
            Flow::between("b", "d")
                .with_nominal_value(1.0)
                .with_fix(vec![6.0, 6.0, 6.0]),
        )
        .unwrap();
    system.freeze().unwrap()
}
