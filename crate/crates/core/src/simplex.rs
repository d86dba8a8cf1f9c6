//! Bounded-variable two-phase primal simplex.
//!
//! Works on the rows of a [`StandardForm`] with variable bounds handled
//! implicitly (nonbasic variables sit at a bound and may flip), so fixed
//! flows and capacity bounds never become rows. Slacks turn `<=` rows into
//! equalities; artificial variables open phase 1 whenever the initial basis
//! is infeasible. Pricing is Dantzig's rule with a permanent switch to
//! Bland's rule after 1,000 consecutive degenerate pivots. The basis inverse
//! is kept dense and refactorized periodically.

use crate::model::RowSense;
use crate::standard_form::StandardForm;

const REDUCED_COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-10;
const DEGENERATE_STEP_TOL: f64 = 1e-12;
const BLAND_TRIGGER: usize = 1_000;
const REFACTOR_INTERVAL: usize = 200;

const NOT_BASIC: usize = usize::MAX;

/// Reusable solver input: structural columns plus row data. Bounds are
/// passed per solve so branch-and-bound nodes share one instance.
pub struct SimplexInstance {
    nrows: usize,
    nstruct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
    objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SimplexInstance {
    pub fn from_standard_form(sf: &StandardForm) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sf.ncols];
        for row in 0..sf.row_count() {
            for (col, a) in sf.matrix.row_terms(row) {
                cols[col].push((row, a));
            }
        }
        SimplexInstance {
            nrows: sf.row_count(),
            nstruct: sf.ncols,
            cols,
            senses: sf.senses.clone(),
            rhs: sf.rhs.clone(),
            objective: sf.objective.clone(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.nstruct
    }

    /// Solve with the given bounds. `max_pivots` caps phase 1 + phase 2
    /// combined; `feasibility_tol` decides when phase 1 counts as feasible.
    /// Returns the outcome and the number of pivots spent.
    pub fn solve(
        &self,
        lower: &[f64],
        upper: &[f64],
        max_pivots: usize,
        feasibility_tol: f64,
    ) -> (SimplexOutcome, usize) {
        debug_assert_eq!(lower.len(), self.nstruct);
        debug_assert_eq!(upper.len(), self.nstruct);
        if lower.iter().zip(upper).any(|(lo, up)| lo > up) {
            return (SimplexOutcome::Infeasible, 0);
        }
        let mut worker = Worker::new(self, lower, upper, max_pivots, feasibility_tol);
        let outcome = worker.run();
        (outcome, worker.pivots)
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

struct Worker<'a> {
    inst: &'a SimplexInstance,
    m: usize,
    nstruct: usize,
    base_slack: usize,
    base_art: usize,
    ntotal: usize,
    slack_row: Vec<usize>,
    art_sign: Vec<f64>,
    art_active: Vec<bool>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    at_upper: Vec<bool>,
    binv: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
    degenerate_streak: usize,
    bland: bool,
    max_pivots: usize,
    feasibility_tol: f64,
}

impl<'a> Worker<'a> {
    fn new(
        inst: &'a SimplexInstance,
        lower: &[f64],
        upper: &[f64],
        max_pivots: usize,
        feasibility_tol: f64,
    ) -> Self {
        let m = inst.nrows;
        let nstruct = inst.nstruct;
        let slack_rows: Vec<usize> = (0..m)
            .filter(|i| inst.senses[*i] == RowSense::Le)
            .collect();
        let base_slack = nstruct;
        let base_art = base_slack + slack_rows.len();
        let ntotal = base_art + m;

        let mut lo = vec![0.0; ntotal];
        let mut up = vec![0.0; ntotal];
        lo[..nstruct].copy_from_slice(lower);
        up[..nstruct].copy_from_slice(upper);
        for s in 0..slack_rows.len() {
            lo[base_slack + s] = 0.0;
            up[base_slack + s] = f64::INFINITY;
        }
        // artificial bounds stay pinned at [0, 0] until activated

        let mut x = vec![0.0; ntotal];
        let mut at_upper = vec![false; ntotal];
        for j in 0..nstruct {
            if lo[j].is_finite() {
                x[j] = lo[j];
            } else if up[j].is_finite() {
                x[j] = up[j];
                at_upper[j] = true;
            } else {
                x[j] = 0.0;
            }
        }

        Worker {
            inst,
            m,
            nstruct,
            base_slack,
            base_art,
            ntotal,
            slack_row: slack_rows,
            art_sign: vec![1.0; m],
            art_active: vec![false; m],
            lo,
            up,
            cost: vec![0.0; ntotal],
            x,
            basis: Vec::new(),
            basic_row: vec![NOT_BASIC; ntotal],
            at_upper,
            binv: vec![0.0; m * m],
            y: vec![0.0; m],
            w: vec![0.0; m],
            pivots: 0,
            since_refactor: 0,
            degenerate_streak: 0,
            bland: false,
            max_pivots,
            feasibility_tol,
        }
    }

    fn col_entries(&self, var: usize) -> ColEntries<'_> {
        if var < self.nstruct {
            ColEntries::Structural(self.inst.cols[var].iter())
        } else if var < self.base_art {
            ColEntries::Unit(Some((self.slack_row[var - self.base_slack], 1.0)))
        } else {
            let row = var - self.base_art;
            ColEntries::Unit(Some((row, self.art_sign[row])))
        }
    }

    fn run(&mut self) -> SimplexOutcome {
        // Initial basis: slacks where the residual allows it, artificials
        // everywhere else.
        let mut residual = self.inst.rhs.clone();
        for j in 0..self.nstruct {
            if self.x[j] != 0.0 {
                for &(i, a) in self.inst.cols[j].iter() {
                    residual[i] -= a * self.x[j];
                }
            }
        }
        self.basis = Vec::with_capacity(self.m);
        let mut slack_ordinal = 0usize;
        let mut need_phase1 = false;
        for i in 0..self.m {
            let basic = match self.inst.senses[i] {
                RowSense::Le => {
                    let slack = self.base_slack + slack_ordinal;
                    slack_ordinal += 1;
                    if residual[i] >= 0.0 {
                        self.x[slack] = residual[i];
                        slack
                    } else {
                        let art = self.base_art + i;
                        self.activate_artificial(i, -1.0, -residual[i]);
                        need_phase1 = true;
                        art
                    }
                }
                RowSense::Eq => {
                    let art = self.base_art + i;
                    let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                    self.activate_artificial(i, sign, residual[i].abs());
                    need_phase1 = true;
                    art
                }
            };
            self.basic_row[basic] = i;
            self.basis.push(basic);
        }
        if !self.refactorize() {
            return SimplexOutcome::IterationLimit;
        }

        if need_phase1 {
            for i in 0..self.m {
                if self.art_active[i] {
                    self.cost[self.base_art + i] = 1.0;
                }
            }
            match self.iterate() {
                PhaseEnd::Optimal => {}
                PhaseEnd::IterationLimit | PhaseEnd::NumericalFailure => {
                    return SimplexOutcome::IterationLimit
                }
                // The phase-1 objective is bounded below by zero, so an
                // unbounded ray here is numerical breakdown.
                PhaseEnd::Unbounded => return SimplexOutcome::IterationLimit,
            }
            let infeasibility: f64 = (0..self.m)
                .filter(|i| self.art_active[*i])
                .map(|i| self.x[self.base_art + i].max(0.0))
                .sum();
            if infeasibility > self.feasibility_tol {
                return SimplexOutcome::Infeasible;
            }
            if !self.purge_artificials() {
                return SimplexOutcome::IterationLimit;
            }
        }

        // Phase 2 with the real objective; artificials pinned at zero.
        self.cost.fill(0.0);
        self.cost[..self.nstruct].copy_from_slice(&self.inst.objective);
        for i in 0..self.m {
            let art = self.base_art + i;
            self.lo[art] = 0.0;
            self.up[art] = 0.0;
            if self.basic_row[art] != NOT_BASIC && self.x[art].abs() <= self.feasibility_tol {
                self.x[art] = 0.0;
            }
        }
        match self.iterate() {
            PhaseEnd::Optimal => {
                let mut x = self.x[..self.nstruct].to_vec();
                for (j, value) in x.iter_mut().enumerate() {
                    let (lo, up) = (self.lo[j], self.up[j]);
                    if *value < lo && lo - *value <= 1e-9 {
                        *value = lo;
                    }
                    if *value > up && *value - up <= 1e-9 {
                        *value = up;
                    }
                    if value.abs() < 1e-11 {
                        *value = 0.0;
                    }
                }
                let objective = self
                    .inst
                    .objective
                    .iter()
                    .zip(&x)
                    .map(|(c, v)| c * v)
                    .sum();
                SimplexOutcome::Optimal { x, objective }
            }
            PhaseEnd::Unbounded => SimplexOutcome::Unbounded,
            PhaseEnd::IterationLimit | PhaseEnd::NumericalFailure => {
                SimplexOutcome::IterationLimit
            }
        }
    }

    fn activate_artificial(&mut self, row: usize, sign: f64, value: f64) {
        let art = self.base_art + row;
        self.art_sign[row] = sign;
        self.art_active[row] = true;
        self.lo[art] = 0.0;
        self.up[art] = f64::INFINITY;
        self.x[art] = value;
    }

    /// Price, choose entering and leaving, pivot; repeat until optimal or
    /// the phase ends otherwise.
    fn iterate(&mut self) -> PhaseEnd {
        loop {
            if self.pivots >= self.max_pivots {
                return PhaseEnd::IterationLimit;
            }
            if self.since_refactor >= REFACTOR_INTERVAL
                && !self.refactorize() {
                    return PhaseEnd::NumericalFailure;
                }

            self.compute_duals();
            let (q, sigma) = match self.select_entering() {
                Some(pair) => pair,
                None => return PhaseEnd::Optimal,
            };
            self.ftran(q);

            // Ratio test over basic variables, against the entering
            // variable's own range.
            let own_range = self.up[q] - self.lo[q];
            let mut best_step = own_range;
            let mut leaving: Option<(usize, bool)> = None;
            for r in 0..self.m {
                let wr = self.w[r];
                if wr.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let xb = self.x[b];
                let rate = sigma * wr;
                let (step, to_upper) = if rate > 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (((xb - self.lo[b]) / rate).max(0.0), false)
                } else {
                    if !self.up[b].is_finite() {
                        continue;
                    }
                    (((self.up[b] - xb) / -rate).max(0.0), true)
                };
                let replace = match leaving {
                    None => step <= best_step,
                    Some((prev_row, _)) => {
                        if step < best_step - RATIO_TIE_TOL {
                            true
                        } else if step <= best_step + RATIO_TIE_TOL {
                            if self.bland {
                                self.basis[r] < self.basis[prev_row]
                            } else {
                                wr.abs() > self.w[prev_row].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    best_step = best_step.min(step);
                    leaving = Some((r, to_upper));
                }
            }

            if best_step.is_infinite() {
                return PhaseEnd::Unbounded;
            }

            match leaving {
                None => {
                    // Bound flip: the entering variable crosses to its other
                    // bound before any basic variable blocks.
                    let step = own_range;
                    for r in 0..self.m {
                        let b = self.basis[r];
                        self.x[b] -= sigma * step * self.w[r];
                    }
                    self.x[q] = if self.at_upper[q] { self.lo[q] } else { self.up[q] };
                    self.at_upper[q] = !self.at_upper[q];
                    self.note_step(step);
                }
                Some((r, to_upper)) => {
                    let step = best_step.max(0.0);
                    let entering_value = self.x[q] + sigma * step;
                    for k in 0..self.m {
                        if k != r {
                            let b = self.basis[k];
                            self.x[b] -= sigma * step * self.w[k];
                        }
                    }
                    let leaving_var = self.basis[r];
                    self.x[leaving_var] = if to_upper {
                        self.up[leaving_var]
                    } else {
                        self.lo[leaving_var]
                    };
                    self.at_upper[leaving_var] = to_upper;
                    self.basic_row[leaving_var] = NOT_BASIC;
                    self.basis[r] = q;
                    self.basic_row[q] = r;
                    self.x[q] = entering_value;
                    self.update_binv(r);
                    self.note_step(step);
                }
            }
        }
    }

    fn note_step(&mut self, step: f64) {
        self.pivots += 1;
        self.since_refactor += 1;
        if step <= DEGENERATE_STEP_TOL {
            self.degenerate_streak += 1;
            if self.degenerate_streak >= BLAND_TRIGGER {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
        }
    }

    fn compute_duals(&mut self) {
        self.y.fill(0.0);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.binv[r * self.m..(r + 1) * self.m];
                for (yi, bi) in self.y.iter_mut().zip(row) {
                    *yi += cb * bi;
                }
            }
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        for (i, a) in self.col_entries(j) {
            d -= self.y[i] * a;
        }
        d
    }

    /// Entering variable and its movement direction: Dantzig (largest
    /// improving reduced cost, lowest index on ties) or Bland (lowest
    /// improving index) once triggered. Nonbasic free variables may move in
    /// either direction, against the sign of their reduced cost.
    fn select_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ntotal {
            if self.basic_row[j] != NOT_BASIC || self.lo[j] >= self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j);
            let free = self.lo[j].is_infinite() && self.up[j].is_infinite();
            let direction = if free {
                if d.abs() <= REDUCED_COST_TOL {
                    continue;
                }
                -d.signum()
            } else if self.at_upper[j] {
                if d <= REDUCED_COST_TOL {
                    continue;
                }
                -1.0
            } else {
                if d >= -REDUCED_COST_TOL {
                    continue;
                }
                1.0
            };
            let score = d.abs();
            if self.bland {
                return Some((j, direction));
            }
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, direction, score));
            }
        }
        best.map(|(j, direction, _)| (j, direction))
    }

    fn ftran(&mut self, var: usize) {
        self.w.fill(0.0);
        let m = self.m;
        if var < self.nstruct {
            let inst = self.inst;
            for &(i, a) in &inst.cols[var] {
                if a == 0.0 {
                    continue;
                }
                for r in 0..m {
                    self.w[r] += self.binv[r * m + i] * a;
                }
            }
        } else {
            let (i, a) = if var < self.base_art {
                (self.slack_row[var - self.base_slack], 1.0)
            } else {
                (var - self.base_art, self.art_sign[var - self.base_art])
            };
            for r in 0..m {
                self.w[r] = self.binv[r * m + i] * a;
            }
        }
    }

    /// Gauss-Jordan update of the dense inverse after replacing the basis
    /// column in row `r`; `self.w` holds B^-1 times the entering column.
    fn update_binv(&mut self, r: usize) {
        let m = self.m;
        let pivot = self.w[r];
        let inv_pivot = 1.0 / pivot;
        for c in 0..m {
            self.binv[r * m + c] *= inv_pivot;
        }
        for k in 0..m {
            if k == r {
                continue;
            }
            let factor = self.w[k];
            if factor == 0.0 {
                continue;
            }
            for c in 0..m {
                self.binv[k * m + c] -= factor * self.binv[r * m + c];
            }
        }
    }

    /// Rebuild the inverse from the basis columns and recompute basic
    /// values. Returns false on a numerically singular basis.
    fn refactorize(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (r, &var) in self.basis.iter().enumerate() {
            for (i, v) in self.col_entries(var) {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for pivot_col in 0..m {
            let mut best_row = pivot_col;
            let mut best = a[pivot_col * m + pivot_col].abs();
            for row in pivot_col + 1..m {
                let candidate = a[row * m + pivot_col].abs();
                if candidate > best {
                    best = candidate;
                    best_row = row;
                }
            }
            if best <= 1e-12 {
                return false;
            }
            if best_row != pivot_col {
                for c in 0..m {
                    a.swap(pivot_col * m + c, best_row * m + c);
                    inv.swap(pivot_col * m + c, best_row * m + c);
                }
            }
            let inv_pivot = 1.0 / a[pivot_col * m + pivot_col];
            for c in 0..m {
                a[pivot_col * m + c] *= inv_pivot;
                inv[pivot_col * m + c] *= inv_pivot;
            }
            for row in 0..m {
                if row == pivot_col {
                    continue;
                }
                let factor = a[row * m + pivot_col];
                if factor == 0.0 {
                    continue;
                }
                for c in 0..m {
                    a[row * m + c] -= factor * a[pivot_col * m + c];
                    inv[row * m + c] -= factor * inv[pivot_col * m + c];
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;

        // x_B = B^-1 (rhs - N x_N)
        let mut t = self.inst.rhs.clone();
        for j in 0..self.ntotal {
            if self.basic_row[j] != NOT_BASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (i, a) in self.col_entries(j) {
                t[i] -= a * xj;
            }
        }
        for r in 0..m {
            let mut value = 0.0;
            for i in 0..m {
                value += self.binv[r * m + i] * t[i];
            }
            self.x[self.basis[r]] = value;
        }
        true
    }

    /// Drive remaining artificials out of the basis where a non-artificial
    /// pivot exists; rows without one are redundant and keep their
    /// artificial pinned at zero.
    fn purge_artificials(&mut self) -> bool {
        for r in 0..self.m {
            if self.basis[r] < self.base_art {
                continue;
            }
            let mut entering = None;
            for j in 0..self.base_art {
                if self.basic_row[j] != NOT_BASIC {
                    continue;
                }
                let mut alpha = 0.0;
                for (i, a) in self.col_entries(j) {
                    alpha += self.binv[r * self.m + i] * a;
                }
                if alpha.abs() > PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(q) = entering else { continue };
            self.ftran(q);
            let leaving_var = self.basis[r];
            self.x[leaving_var] = 0.0;
            self.at_upper[leaving_var] = false;
            self.basic_row[leaving_var] = NOT_BASIC;
            self.basis[r] = q;
            self.basic_row[q] = r;
            // zero step: entering keeps its bound value
            self.update_binv(r);
        }
        self.refactorize()
    }
}

enum ColEntries<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Unit(Option<(usize, f64)>),
}

impl Iterator for ColEntries<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColEntries::Structural(iter) => iter.next().copied(),
            ColEntries::Unit(entry) => entry.take(),
        }
    }
}
