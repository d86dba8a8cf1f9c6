//! LP and MILP solving on top of the simplex core.
//!
//! [`solve_lp`] relaxes any integrality and runs the two-phase simplex.
//! [`solve_milp`] runs best-bound branch-and-bound, branching on the most
//! fractional integer variable (registry order breaks ties). Every solution
//! reported as optimal is verified against rows, bounds and integrality
//! before it leaves this module.

use std::collections::BinaryHeap;

use crate::model::Model;
use crate::simplex::{SimplexInstance, SimplexOutcome};
use crate::standard_form::StandardForm;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Absolute per-row feasibility tolerance.
    pub feasibility_tol: f64,
    /// Distance from an integer at which a value counts as integral.
    pub integrality_tol: f64,
    /// Simplex pivot cap per solve (both phases combined).
    pub max_pivots: usize,
    /// Branch-and-bound node cap.
    pub max_nodes: usize,
    /// Absolute gap at which branch-and-bound nodes are pruned.
    pub mip_gap_abs: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feasibility_tol: 1e-6,
            integrality_tol: 1e-5,
            max_pivots: 50_000,
            max_nodes: 100_000,
            mip_gap_abs: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub simplex_iterations: usize,
    pub branch_nodes: usize,
}

/// Solver output. The assignment (indexed by `VarId`) and objective are
/// present only for optimal solutions.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective_value: Option<f64>,
    pub assignment: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: crate::model::VarId) -> Option<f64> {
        self.assignment.as_ref().map(|x| x[var.0])
    }

    fn non_optimal(status: SolveStatus, stats: SolveStats) -> Self {
        Solution {
            status,
            objective_value: None,
            assignment: None,
            stats,
        }
    }
}

/// Solve the LP relaxation of a model (integrality ignored).
pub fn solve_lp(model: &Model) -> Solution {
    solve_lp_with_options(model, &SolveOptions::default())
}

pub fn solve_lp_with_options(model: &Model, options: &SolveOptions) -> Solution {
    let sf = StandardForm::from_model(model);
    solve_standard_form(&sf, options)
}

/// Solve a model to integral optimality via branch-and-bound. Models
/// without integer variables reduce to a single LP solve.
pub fn solve_milp(model: &Model) -> Solution {
    solve_milp_with_options(model, &SolveOptions::default())
}

pub fn solve_milp_with_options(model: &Model, options: &SolveOptions) -> Solution {
    let sf = StandardForm::from_model(model);
    solve_standard_form_milp(&sf, options)
}

/// LP relaxation of a standard form.
pub fn solve_standard_form(sf: &StandardForm, options: &SolveOptions) -> Solution {
    let instance = SimplexInstance::from_standard_form(sf);
    let (outcome, pivots) = instance.solve(
        &sf.lower,
        &sf.upper,
        options.max_pivots,
        options.feasibility_tol,
    );
    let stats = SolveStats {
        simplex_iterations: pivots,
        branch_nodes: 0,
    };
    finish(sf, outcome, stats, options, false)
}

/// Branch-and-bound over a standard form: best-bound node selection, most
/// fractional branching variable with registry-order tie-break.
pub fn solve_standard_form_milp(sf: &StandardForm, options: &SolveOptions) -> Solution {
    let integral_cols: Vec<usize> = (0..sf.ncols).filter(|j| sf.integrality[*j]).collect();
    if integral_cols.is_empty() {
        return solve_standard_form(sf, options);
    }

    let instance = SimplexInstance::from_standard_form(sf);
    let mut stats = SolveStats::default();

    let solve_node = |lower: &[f64], upper: &[f64], stats: &mut SolveStats| {
        let (outcome, pivots) = instance.solve(
            lower,
            upper,
            options.max_pivots,
            options.feasibility_tol,
        );
        stats.simplex_iterations += pivots;
        outcome
    };

    let root = solve_node(&sf.lower, &sf.upper, &mut stats);
    let (root_x, root_obj) = match root {
        SimplexOutcome::Optimal { x, objective } => (x, objective),
        SimplexOutcome::Infeasible => {
            return Solution::non_optimal(SolveStatus::Infeasible, stats)
        }
        SimplexOutcome::Unbounded => return Solution::non_optimal(SolveStatus::Unbounded, stats),
        SimplexOutcome::IterationLimit => {
            return Solution::non_optimal(SolveStatus::IterationLimit, stats)
        }
    };

    let mut queue: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut push = |queue: &mut BinaryHeap<Node>,
                    bound: f64,
                    relaxation: Option<Vec<f64>>,
                    lower: Vec<f64>,
                    upper: Vec<f64>| {
        queue.push(Node {
            bound,
            id: next_id,
            relaxation,
            lower,
            upper,
        });
        next_id += 1;
    };
    push(
        &mut queue,
        root_obj,
        Some(root_x),
        sf.lower.clone(),
        sf.upper.clone(),
    );

    let mut incumbent: Option<(f64, Vec<f64>)> = None;

    while let Some(node) = queue.pop() {
        if let Some((best_obj, _)) = &incumbent {
            // best-bound order: once the best node cannot improve, none can
            if node.bound >= best_obj - options.mip_gap_abs {
                break;
            }
        }
        stats.branch_nodes += 1;
        if stats.branch_nodes > options.max_nodes {
            return Solution::non_optimal(SolveStatus::IterationLimit, stats);
        }

        let (x, objective) = match node.relaxation {
            Some(ref x) => (x.clone(), node.bound),
            None => match solve_node(&node.lower, &node.upper, &mut stats) {
                SimplexOutcome::Optimal { x, objective } => (x, objective),
                SimplexOutcome::Infeasible => continue,
                // A bounded-below MILP whose relaxation is unbounded at the
                // root cannot appear here; children only tighten bounds.
                SimplexOutcome::Unbounded => {
                    return Solution::non_optimal(SolveStatus::Unbounded, stats)
                }
                SimplexOutcome::IterationLimit => {
                    return Solution::non_optimal(SolveStatus::IterationLimit, stats)
                }
            },
        };
        if let Some((best_obj, _)) = &incumbent {
            if objective >= best_obj - options.mip_gap_abs {
                continue;
            }
        }

        match most_fractional(&x, &integral_cols, options.integrality_tol) {
            None => {
                // Integral within tolerance: polish by fixing the integer
                // variables to their rounded values and re-solving the
                // continuous rest, so the incumbent is cleanly feasible.
                let mut lower = node.lower.clone();
                let mut upper = node.upper.clone();
                for &j in &integral_cols {
                    let rounded = x[j].round();
                    lower[j] = rounded;
                    upper[j] = rounded;
                }
                let polished = solve_node(&lower, &upper, &mut stats);
                let (px, pobj) = match polished {
                    SimplexOutcome::Optimal { x, objective } => (x, objective),
                    _ => (x, objective),
                };
                if incumbent
                    .as_ref()
                    .is_none_or(|(best_obj, _)| pobj < *best_obj)
                {
                    incumbent = Some((pobj, px));
                }
            }
            Some(j) => {
                let value = x[j];
                let mut floor_upper = node.upper.clone();
                floor_upper[j] = floor_upper[j].min(value.floor());
                push(
                    &mut queue,
                    objective,
                    None,
                    node.lower.clone(),
                    floor_upper,
                );
                let mut ceil_lower = node.lower.clone();
                ceil_lower[j] = ceil_lower[j].max(value.ceil());
                push(&mut queue, objective, None, ceil_lower, node.upper);
            }
        }
    }

    match incumbent {
        Some((objective, x)) => finish(
            sf,
            SimplexOutcome::Optimal { x, objective },
            stats,
            options,
            true,
        ),
        None => Solution::non_optimal(SolveStatus::Infeasible, stats),
    }
}

/// Most fractional integral column; ties break to the lowest index.
fn most_fractional(x: &[f64], integral_cols: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in integral_cols {
        let frac = x[j] - x[j].floor();
        let distance = frac.min(1.0 - frac);
        if distance <= tol {
            continue;
        }
        if best.is_none_or(|(_, d)| distance > d) {
            best = Some((j, distance));
        }
    }
    best.map(|(j, _)| j)
}

fn finish(
    sf: &StandardForm,
    outcome: SimplexOutcome,
    stats: SolveStats,
    options: &SolveOptions,
    check_integrality: bool,
) -> Solution {
    match outcome {
        SimplexOutcome::Optimal { x, objective } => {
            verify(sf, &x, options, check_integrality);
            Solution {
                status: SolveStatus::Optimal,
                objective_value: Some(objective),
                assignment: Some(x),
                stats,
            }
        }
        SimplexOutcome::Infeasible => Solution::non_optimal(SolveStatus::Infeasible, stats),
        SimplexOutcome::Unbounded => Solution::non_optimal(SolveStatus::Unbounded, stats),
        SimplexOutcome::IterationLimit => {
            Solution::non_optimal(SolveStatus::IterationLimit, stats)
        }
    }
}

/// A solution may never be reported optimal while violating a row, a bound
/// or integrality beyond tolerance.
fn verify(sf: &StandardForm, x: &[f64], options: &SolveOptions, check_integrality: bool) {
    for i in 0..sf.row_count() {
        let violation = sf.row_violation(i, x);
        assert!(
            violation <= options.feasibility_tol,
            "row '{}' violated by {violation:e} in a solution reported optimal",
            sf.row_names[i]
        );
    }
    for j in 0..sf.ncols {
        let below = sf.lower[j] - x[j];
        let above = x[j] - sf.upper[j];
        assert!(
            below <= options.feasibility_tol && above <= options.feasibility_tol,
            "bound on '{}' violated in a solution reported optimal",
            sf.col_names[j]
        );
        if check_integrality && sf.integrality[j] {
            let distance = (x[j] - x[j].round()).abs();
            assert!(
                distance <= options.integrality_tol,
                "integrality of '{}' violated by {distance:e}",
                sf.col_names[j]
            );
        }
    }
}

/// Branch-and-bound node ordered for a min-heap on the parent bound:
/// `BinaryHeap` is a max-heap, so the comparison is reversed; ties pop the
/// older node first.
struct Node {
    bound: f64,
    id: usize,
    relaxation: Option<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}
