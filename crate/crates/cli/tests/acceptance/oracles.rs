//! Independent oracles: greedy merit-order dispatch, the storage level
//! recursion, and exhaustive status enumeration for unit commitment. All of
//! them compute expectations without touching the model builder or solver.

/// Cost-minimal dispatch of sources with given (cost, capacity) against a
/// single demand: fill in ascending cost order. Returns per-source amounts,
/// or `None` when capacity cannot cover the demand.
pub fn merit_order_dispatch(sources: &[(f64, f64)], demand: f64) -> Option<Vec<f64>> {
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.sort_by(|&a, &b| sources[a].0.total_cmp(&sources[b].0));
    let mut allocation = vec![0.0; sources.len()];
    let mut remaining = demand;
    for index in order {
        let take = remaining.min(sources[index].1);
        allocation[index] = take;
        remaining -= take;
        if remaining <= 1e-12 {
            return Some(allocation);
        }
    }
    (remaining <= 1e-9).then_some(allocation)
}

/// End-of-step storage levels from the flow sequences:
/// `level(t) = (1-loss) * level(t-1) + eta_in * tau * w_in(t)
///  - tau / eta_out * w_out(t)` with the initial level standing in for
/// `level(-1)`.
pub struct StorageRecursion {
    pub loss_rate: f64,
    pub inflow_efficiency: f64,
    pub outflow_efficiency: f64,
    pub initial_level: f64,
    pub tau: f64,
}

impl StorageRecursion {
    pub fn propagate(&self, charge: &[f64], discharge: &[f64]) -> Vec<f64> {
        let mut levels = Vec::with_capacity(charge.len());
        let mut previous = self.initial_level;
        for (w_in, w_out) in charge.iter().zip(discharge) {
            let level = (1.0 - self.loss_rate) * previous
                + self.inflow_efficiency * self.tau * w_in
                - self.tau / self.outflow_efficiency * w_out;
            levels.push(level);
            previous = level;
        }
        levels
    }
}

/// A unit-commitment instance solved by exhaustive status enumeration.
/// Units run between `nominal * min_fraction` and `nominal` when committed;
/// an always-available backup source at `backup_cost` keeps some vector
/// feasible. Startup counting uses status(-1) = 0.
pub struct UcInstance {
    pub units: Vec<UcUnit>,
    pub demand: Vec<f64>,
    pub backup_capacity: f64,
    pub backup_cost: f64,
    pub tau: f64,
}

pub struct UcUnit {
    pub nominal: f64,
    pub min_fraction: f64,
    pub cost: f64,
    pub startup_cost: f64,
    pub minimum_uptime: Option<usize>,
}

impl UcInstance {
    pub fn step_count(&self) -> usize {
        self.demand.len()
    }

    /// Minimum total cost over all feasible status vectors, `None` if no
    /// vector is feasible (cannot happen with a large enough backup).
    pub fn enumeration_optimum(&self) -> Option<f64> {
        let units = self.units.len();
        let steps = self.step_count();
        let bits = units * steps;
        assert!(bits <= 12, "enumeration oracle is for tiny instances");
        let mut best: Option<f64> = None;
        'vectors: for mask in 0..(1usize << bits) {
            let status =
                |u: usize, t: usize| -> bool { (mask >> (u * steps + t)) & 1 == 1 };

            // minimum uptime: every startup pins the status for the window
            for (u, unit) in self.units.iter().enumerate() {
                if let Some(uptime) = unit.minimum_uptime {
                    for t in 0..steps {
                        let started = status(u, t) && (t == 0 || !status(u, t - 1));
                        if started {
                            for k in t..(t + uptime).min(steps) {
                                if !status(u, k) {
                                    continue 'vectors;
                                }
                            }
                        }
                    }
                }
            }

            let mut cost = 0.0;
            for (u, unit) in self.units.iter().enumerate() {
                for t in 0..steps {
                    if status(u, t) && (t == 0 || !status(u, t - 1)) {
                        cost += unit.startup_cost;
                    }
                }
            }

            let mut feasible = true;
            for t in 0..steps {
                // committed units run at least at minimum load
                let mut dispatched = 0.0;
                let mut merit: Vec<(f64, f64)> = Vec::new();
                for (u, unit) in self.units.iter().enumerate() {
                    if status(u, t) {
                        let minimum = unit.nominal * unit.min_fraction;
                        dispatched += minimum;
                        cost += unit.cost * minimum * self.tau;
                        merit.push((unit.cost, unit.nominal - minimum));
                    }
                }
                if dispatched > self.demand[t] + 1e-9 {
                    feasible = false;
                    break;
                }
                merit.push((self.backup_cost, self.backup_capacity));
                match merit_order_dispatch(&merit, self.demand[t] - dispatched) {
                    Some(allocation) => {
                        for ((unit_cost, _), amount) in merit.iter().zip(&allocation) {
                            cost += unit_cost * amount * self.tau;
                        }
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                best = Some(best.map_or(cost, |b: f64| b.min(cost)));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merit_order_fills_cheapest_first() {
        let allocation = merit_order_dispatch(&[(2.0, 5.0), (1.0, 5.0)], 8.0).unwrap();
        assert_eq!(allocation, vec![3.0, 5.0]);
        assert!(merit_order_dispatch(&[(1.0, 5.0)], 6.0).is_none());
    }

    #[test]
    fn recursion_matches_hand_example() {
        let recursion = StorageRecursion {
            loss_rate: 0.0,
            inflow_efficiency: 0.9,
            outflow_efficiency: 0.8,
            initial_level: 0.0,
            tau: 1.0,
        };
        let levels = recursion.propagate(&[10.0, 0.0], &[0.0, 7.2]);
        assert!((levels[0] - 9.0).abs() < 1e-12);
        assert!(levels[1].abs() < 1e-12);
    }
}
