//! Canonical matrix form of a model.
//!
//! Rows are `a . x {<=,=} rhs` with per-variable bounds and an integrality
//! mask; the right-hand side is the negated row constant. The coefficient
//! matrix is stored dense up to 10,000 nonzeros and sparse beyond. Variable
//! and row names are generated here so the LP writer, the parser and the
//! solver all agree on one deterministic naming scheme.

use std::collections::BTreeSet;

use crate::model::{Model, RowSense};

/// Dense up to and including [`DENSE_NNZ_LIMIT`] nonzeros, sparse beyond.
pub const DENSE_NNZ_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMatrix {
    Dense(Vec<Vec<f64>>),
    Sparse { ncols: usize, rows: Vec<Vec<(usize, f64)>> },
}

impl ConstraintMatrix {
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz: usize = rows.iter().map(Vec::len).sum();
        if nnz <= DENSE_NNZ_LIMIT {
            let dense = rows
                .iter()
                .map(|row| {
                    let mut values = vec![0.0; ncols];
                    for (col, a) in row {
                        values[*col] = *a;
                    }
                    values
                })
                .collect();
            ConstraintMatrix::Dense(dense)
        } else {
            ConstraintMatrix::Sparse { ncols, rows }
        }
    }

    pub fn row_count(&self) -> usize {
        match self {
            ConstraintMatrix::Dense(rows) => rows.len(),
            ConstraintMatrix::Sparse { rows, .. } => rows.len(),
        }
    }

    /// Nonzero (column, coefficient) pairs of row `i`, ascending by column.
    pub fn row_terms(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            ConstraintMatrix::Dense(rows) => rows[i]
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(col, a)| (col, *a))
                .collect(),
            ConstraintMatrix::Sparse { rows, .. } => rows[i].clone(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            ConstraintMatrix::Dense(rows) => rows
                .iter()
                .map(|r| r.iter().filter(|a| **a != 0.0).count())
                .sum(),
            ConstraintMatrix::Sparse { rows, .. } => rows.iter().map(Vec::len).sum(),
        }
    }
}

/// A model flattened into vectors and a matrix, ready to solve or serialize.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub ncols: usize,
    pub matrix: ConstraintMatrix,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integrality: Vec<bool>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl StandardForm {
    pub fn from_model(model: &Model) -> StandardForm {
        let ncols = model.variable_count();

        let mut objective = vec![0.0; ncols];
        for (c, var) in model.objective_terms() {
            objective[var.0] += c;
        }

        let mut rows = Vec::with_capacity(model.constraints().len());
        let mut senses = Vec::with_capacity(model.constraints().len());
        let mut rhs = Vec::with_capacity(model.constraints().len());
        let mut row_names = Vec::with_capacity(model.constraints().len());
        let mut taken: BTreeSet<String> = BTreeSet::new();
        for row in model.constraints() {
            rows.push(row.canonical_terms());
            senses.push(row.sense);
            rhs.push(-row.constant);
            row_names.push(unique_name(sanitize(&row.name), &mut taken));
        }

        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        let mut integrality = Vec::with_capacity(ncols);
        let mut col_names = Vec::with_capacity(ncols);
        let mut taken_cols: BTreeSet<String> = BTreeSet::new();
        for var in model.variables() {
            lower.push(var.lower);
            upper.push(var.upper);
            integrality.push(var.domain.is_integral());
            let base = match var.step {
                Some(t) => format!("{}_{}_{t}", var.kind.token(), var.entity.label()),
                None => format!("{}_{}", var.kind.token(), var.entity.label()),
            };
            col_names.push(unique_name(sanitize(&base), &mut taken_cols));
        }

        StandardForm {
            ncols,
            matrix: ConstraintMatrix::from_rows(ncols, rows),
            senses,
            rhs,
            objective,
            lower,
            upper,
            integrality,
            col_names,
            row_names,
        }
    }

    pub fn row_count(&self) -> usize {
        self.rhs.len()
    }

    /// Coefficient-for-coefficient equality: matrix triplets, senses,
    /// right-hand sides, objective, bounds, integrality and names.
    pub fn matches(&self, other: &StandardForm) -> bool {
        if self.ncols != other.ncols
            || self.row_count() != other.row_count()
            || self.senses != other.senses
            || self.rhs != other.rhs
            || self.objective != other.objective
            || self.lower != other.lower
            || self.upper != other.upper
            || self.integrality != other.integrality
            || self.col_names != other.col_names
            || self.row_names != other.row_names
        {
            return false;
        }
        (0..self.row_count()).all(|i| self.matrix.row_terms(i) == other.matrix.row_terms(i))
    }

    /// Absolute violation of row `i` under `x`: positive means infeasible.
    pub fn row_violation(&self, i: usize, x: &[f64]) -> f64 {
        let lhs: f64 = self
            .matrix
            .row_terms(i)
            .iter()
            .map(|(col, a)| a * x[*col])
            .sum();
        match self.senses[i] {
            RowSense::Le => lhs - self.rhs[i],
            RowSense::Eq => (lhs - self.rhs[i]).abs(),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// LP-safe identifier: alphanumerics and underscores only, never starting
/// with a digit or a character that could read as part of a number.
fn sanitize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            out.push(ch);
        } else {
            out.push('_');
        }
    }
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E') {
        out.insert(0, 'n');
    }
    // CPLEX LP names are limited to 255 characters; leave room for the
    // dedup suffix.
    if out.len() > 240 {
        out.truncate(240);
    }
    out
}

fn unique_name(base: String, taken: &mut BTreeSet<String>) -> String {
    if taken.insert(base.clone()) {
        return base;
    }
    let mut counter = 2usize;
    loop {
        let candidate = format!("{base}_{counter}");
        if taken.insert(candidate.clone()) {
            return candidate;
        }
        counter += 1;
    }
}
