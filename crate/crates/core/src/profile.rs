//! Per-step parameter profiles.
//!
//! Time-dependent parameters (relative flow bounds, costs, fixed values) are
//! profiles over the horizon. Scalars are accepted everywhere a profile is
//! and broadcast to the full horizon length when the flow is inserted into a
//! system.

/// A time-indexed parameter: a scalar broadcast over every step, or an
/// explicit per-step series.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Scalar(f64),
    Series(Vec<f64>),
}

impl Profile {
    /// Value at step `t`. Series profiles must cover `t`; systems that
    /// passed validation always do.
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Profile::Scalar(v) => *v,
            Profile::Series(values) => values[t],
        }
    }

    /// Length of an explicit series, `None` for scalars.
    pub fn series_len(&self) -> Option<usize> {
        match self {
            Profile::Scalar(_) => None,
            Profile::Series(values) => Some(values.len()),
        }
    }

    /// Broadcast a scalar to a series of `step_count` entries. Explicit
    /// series are kept as-is so that validation can report length mismatches.
    pub(crate) fn normalize(&mut self, step_count: usize) {
        if let Profile::Scalar(v) = *self {
            *self = Profile::Series(vec![v; step_count]);
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        match self {
            Profile::Scalar(v) => std::slice::from_ref(v),
            Profile::Series(values) => values,
        }
    }
}

impl From<f64> for Profile {
    fn from(value: f64) -> Self {
        Profile::Scalar(value)
    }
}

impl From<Vec<f64>> for Profile {
    fn from(values: Vec<f64>) -> Self {
        Profile::Series(values)
    }
}

impl From<&[f64]> for Profile {
    fn from(values: &[f64]) -> Self {
        Profile::Series(values.to_vec())
    }
}
