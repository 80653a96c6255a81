//! Singular value function, partition sums and their critical exponent,
//! box counting, Hausdorff convergence and the constant-rate spectral checks.

mod boxcount;
mod convergence;
mod pressure;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result};

pub use boxcount::{box_count, box_count_anchored, box_dim_fit, dyadic_scales, BoxCountSeries};
pub use convergence::{convergence_report, ConvergenceReport, ConvergenceRow};
pub use pressure::{
    partition_sum, pressure_root, s0_estimate, LevelSpectrum, PartitionSum, SyntheticWords, WordSource,
};
pub use spectral::{
    constant_rate_matrices, irreducibility_probe, proximality_check, DMapReport, IrreducibilityBranch,
    IrreducibilityReport, ProximalityReport,
};

/// Singular values `a1 >= a2 >= a3 >= 0` of a 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularTriple {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl SingularTriple {
    pub fn of(m: &Mat3) -> Self {
        let sv = m.singular_values();
        let mut v = [sv[0], sv[1], sv[2]];
        v.sort_by(|a, b| b.total_cmp(a));
        Self {
            a1: v[0],
            a2: v[1],
            a3: v[2],
        }
    }

    pub fn logs(&self) -> [f64; 3] {
        [self.a1.ln(), self.a2.ln(), self.a3.ln()]
    }

    /// φˢ for `s >= 0`.
    pub fn phi(&self, s: f64) -> f64 {
        log_phi_from_log_sv(&self.logs(), s).exp()
    }
}

/// log φˢ from log singular values (descending), `s >= 0`.
pub fn log_phi_from_log_sv(l: &[f64; 3], s: f64) -> f64 {
    if s <= 1.0 {
        if s == 0.0 {
            return 0.0;
        }
        s * l[0]
    } else if s <= 2.0 {
        l[0] + (s - 1.0) * l[1]
    } else if s <= 3.0 {
        l[0] + l[1] + (s - 2.0) * l[2]
    } else {
        s / 3.0 * (l[0] + l[1] + l[2])
    }
}

/// The singular value function of `m` at `s`.
pub fn phi_s(m: &Mat3, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("phi_s needs s >= 0, got {s}")));
    }
    Ok(SingularTriple::of(m).phi(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    S0Pressure,
    BoxSlope,
}

/// A dimension estimate with its bracket and the data behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub method: EstimateMethod,
    /// Depth range (pressure) or scale range (box counting).
    pub window: (f64, f64),
    /// `(depth, root)` for pressure, `(log(1/δ), log N)` for box counting.
    pub levels: Vec<(f64, f64)>,
    /// Fit residual (box counting) or bisection tolerance (pressure).
    pub residual: f64,
}

impl DimEstimate {
    pub fn in_range(&self, lo: f64, hi: f64) -> bool {
        self.value >= lo && self.value <= hi
    }
}
