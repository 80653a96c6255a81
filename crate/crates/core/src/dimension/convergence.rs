use serde::{Deserialize, Serialize};

use crate::chipper::ChipSequence;
use crate::polytope::{edge_net, hausdorff_distance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Hausdorff distance between the edge nets of `P_n` and `P_{n+1}`.
    pub distance: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `exp` of the least-squares slope of `log d_n` against `n`.
    pub fitted_ratio: f64,
    /// `(1 - δ) + 0.05` with `δ` the policy margin.
    pub bound: f64,
    pub strictly_decreasing: bool,
    pub passed: bool,
}

/// Distances between consecutive edge nets of a run and their geometric rate.
/// Sampling starts at spacing `eps` and is refined whenever the distance is
/// under 50 spacings, so each row is accurate to about one percent.
pub fn convergence_report(seq: &ChipSequence, eps: f64) -> Result<ConvergenceReport> {
    if seq.depth() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 chipping steps, have {}",
            seq.depth()
        )));
    }
    let nets: Vec<_> = seq.polys().iter().map(edge_net).collect();
    let mut rows = Vec::with_capacity(nets.len() - 1);
    for n in 0..nets.len() - 1 {
        let mut h = hausdorff_distance(&nets[n], &nets[n + 1], eps)?;
        if h.value < 50.0 * eps && h.value > 0.0 {
            h = hausdorff_distance(&nets[n], &nets[n + 1], h.value / 50.0)?;
        }
        rows.push(ConvergenceRow {
            n,
            distance: h.value,
            error_bound: h.error_bound,
        });
    }
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r.n as f64).sum::<f64>() / k;
    let my = rows.iter().map(|r| r.distance.ln()).sum::<f64>() / k;
    let sxx: f64 = rows.iter().map(|r| (r.n as f64 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.n as f64 - mx) * (r.distance.ln() - my)).sum();
    let fitted_ratio = (sxy / sxx).exp();
    let bound = 1.0 - seq.policy().margin() + 0.05;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(ConvergenceReport {
        rows,
        fitted_ratio,
        bound,
        strictly_decreasing,
        passed: fitted_ratio <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipper::{chip_sequence, RatePolicy};
    use crate::polytope::{make_seed, SeedShape};

    #[test]
    fn constant_rate_cube_halves() {
        let cube = make_seed(SeedShape::Cube);
        let seq = chip_sequence(&cube, &RatePolicy::constant(0.25).unwrap(), 5, 0).unwrap();
        let r = convergence_report(&seq, 1e-3).unwrap();
        // Successive ratios settle near 0.39 rather than the sibling factor
        // 1 - 2p = 0.5: the corner cut distance also shrinks with the angles.
        for w in r.rows[1..].windows(2) {
            let q = w[1].distance / w[0].distance;
            assert!((0.35..0.45).contains(&q), "{r:?}");
        }
        assert!(r.passed && r.strictly_decreasing);
        assert!(r.rows[0].distance < edge_net(&cube).diameter());
    }

    #[test]
    fn too_short_runs_are_rejected() {
        let cube = make_seed(SeedShape::Cube);
        let seq = chip_sequence(&cube, &RatePolicy::constant(0.25).unwrap(), 1, 0).unwrap();
        assert!(convergence_report(&seq, 1e-3).is_err());
    }
}
