use serde::{Deserialize, Serialize};

use super::{log_phi_from_log_sv, DimEstimate, EstimateMethod, SingularTriple};
use crate::charts::{MatrixWord, WordSpace};
use crate::{Error, Result};

/// `Σ φˢ` over all words of one depth, for the `C` and `B` matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSum {
    pub depth: usize,
    pub s: f64,
    pub value: f64,
    pub value_b: f64,
    pub pruned_mass_bound: f64,
}

/// Sums φˢ(C) and φˢ(B) over `words`, which must share one depth.
pub fn partition_sum<'a>(depth: usize, s: f64, words: impl IntoIterator<Item = &'a MatrixWord>) -> Result<PartitionSum> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be >= 0, got {s}")));
    }
    let mut out = PartitionSum {
        depth,
        s,
        value: 0.0,
        value_b: 0.0,
        pruned_mass_bound: 0.0,
    };
    for w in words {
        if w.depth != depth {
            return Err(Error::MixedDepths {
                expected: depth,
                found: w.depth,
            });
        }
        out.value += SingularTriple::of(&w.c).phi(s);
        out.value_b += SingularTriple::of(&w.b).phi(s);
    }
    Ok(out)
}

/// Log singular values of every word at one depth.
///
/// Each entry stands for `weight` identical words, which lets synthetic
/// sources describe huge levels compactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpectrum {
    pub depth: usize,
    pub roots: usize,
    pub log_sv: Vec<[f64; 3]>,
    pub weight: f64,
}

impl LevelSpectrum {
    /// `log Σ φˢ` by log-sum-exp.
    pub fn log_sum(&self, s: f64) -> f64 {
        let terms = self.log_sv.iter().map(|l| log_phi_from_log_sv(l, s));
        let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        let acc: f64 = terms.map(|t| (t - max).exp()).sum();
        max + acc.ln() + self.weight.ln()
    }

    /// Growth exponent per generation of the sum, per root vertex.
    pub fn pressure(&self, s: f64) -> f64 {
        let n = self.depth.max(1) as f64;
        (self.log_sum(s) - (self.roots as f64).ln()) / n
    }
}

/// Anything that can list the spectra of all words at given depths.
pub trait WordSource {
    fn spectra(&self, depths: &[usize]) -> Result<Vec<LevelSpectrum>>;
}

impl WordSource for WordSpace {
    fn spectra(&self, depths: &[usize]) -> Result<Vec<LevelSpectrum>> {
        let all = self.log_singular_values(depths)?;
        Ok(depths
            .iter()
            .zip(all)
            .map(|(&depth, log_sv)| LevelSpectrum {
                depth,
                roots: self.root_count(),
                log_sv,
                weight: 1.0,
            })
            .collect())
    }
}

/// Every word of depth `n` is `diag(c, c, c)ⁿ`, with `branching` children
/// per node and `roots` roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticWords {
    pub c: f64,
    pub branching: usize,
    pub roots: usize,
}

impl WordSource for SyntheticWords {
    fn spectra(&self, depths: &[usize]) -> Result<Vec<LevelSpectrum>> {
        if !(self.c > 0.0 && self.c < 1.0) || self.branching == 0 || self.roots == 0 {
            return Err(Error::InvalidParameter(format!("bad synthetic source {self:?}")));
        }
        Ok(depths
            .iter()
            .map(|&depth| {
                let l = depth as f64 * self.c.ln();
                LevelSpectrum {
                    depth,
                    roots: self.roots,
                    log_sv: vec![[l; 3]],
                    weight: self.roots as f64 * (self.branching as f64).powi(depth as i32),
                }
            })
            .collect())
    }
}

/// Zero of the pressure of one level in `(lo, hi)` by bisection.
pub fn pressure_root(level: &LevelSpectrum, (lo, hi): (f64, f64), tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !(lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!("bracket ({lo}, {hi}) with tol {tol}")));
    }
    if level.depth == 0 {
        return Err(Error::InvalidParameter("pressure needs depth >= 1".into()));
    }
    let (mut a, mut b) = (lo, hi);
    if level.pressure(a) < 0.0 || level.pressure(b) > 0.0 {
        return Err(Error::NotBracketed { lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if level.pressure(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Pressure roots at each depth; the value is the root at the largest depth
/// and the bracket spans all roots.
pub fn s0_estimate(depths: &[usize], bracket: (f64, f64), tol: f64, source: &impl WordSource) -> Result<DimEstimate> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no depths given".into()));
    }
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let levels = source.spectra(&sorted)?;
    let mut roots = Vec::with_capacity(levels.len());
    for level in &levels {
        roots.push((level.depth as f64, pressure_root(level, bracket, tol)?));
    }
    let value = roots.last().expect("non-empty").1;
    let lo = roots.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = roots.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(DimEstimate {
        value,
        lo,
        hi,
        method: EstimateMethod::S0Pressure,
        window: (sorted[0] as f64, *sorted.last().expect("non-empty") as f64),
        levels: roots,
        residual: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{c_matrix_from_rates, SigmaChoice};
    use crate::chipper::{chip_sequence, RatePolicy};
    use crate::polytope::{make_seed, SeedShape};

    fn cube_space(policy: RatePolicy) -> WordSpace {
        let seq = chip_sequence(&make_seed(SeedShape::Cube), &policy, 0, 4).unwrap();
        WordSpace::new(&seq, SigmaChoice::Sorted)
    }

    #[test]
    fn synthetic_diagonal_root() {
        for c in [0.1, 0.2, 0.3] {
            let src = SyntheticWords {
                c,
                branching: 3,
                roots: 1,
            };
            let est = s0_estimate(&[1, 5, 9], (0.0, 3.0), 1e-9, &src).unwrap();
            let want = 3f64.ln() / (1.0 / c).ln();
            assert!((est.value - want).abs() < 1e-8, "{c}: {} vs {want}", est.value);
        }
    }

    #[test]
    fn depth_one_sum_is_a_multiple_of_one_matrix() {
        let p = 0.25;
        let ws = cube_space(RatePolicy::constant(p).unwrap());
        let words: Vec<MatrixWord> = ws.words(1, None).map(|w| w.unwrap()).collect();
        let c1 = c_matrix_from_rates(0, p, p, [p; 3]);
        for s in [0.0, 0.7, 1.4, 2.2] {
            let sum = partition_sum(1, s, &words).unwrap();
            let want = 24.0 * SingularTriple::of(&c1).phi(s);
            assert!((sum.value - want).abs() < 1e-12 * want);
        }
        assert!(partition_sum(2, 1.0, &words).is_err());
    }

    #[test]
    fn sums_at_zero_count_words_and_decrease_in_s() {
        let ws = cube_space(RatePolicy::uniform(0.05, 0.4).unwrap());
        let words: Vec<MatrixWord> = ws.words(3, None).map(|w| w.unwrap()).collect();
        assert_eq!(partition_sum(3, 0.0, &words).unwrap().value, 216.0);
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let v = partition_sum(3, 0.1 * k as f64, &words).unwrap().value;
            assert!(v > 0.0 && v <= prev);
            prev = v;
        }
        let level = &ws.spectra(&[3]).unwrap()[0];
        for s in [0.5, 1.5] {
            let direct = partition_sum(3, s, &words).unwrap().value.ln();
            assert!((level.log_sum(s) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn pressure_roots_lie_between_one_and_two() {
        let ws = cube_space(RatePolicy::uniform(0.1, 0.4).unwrap());
        let est = s0_estimate(&[3, 5, 6], (0.0, 3.0), 1e-6, &ws).unwrap();
        for &(_, r) in &est.levels {
            assert!((1.0..=2.0).contains(&r), "{r}");
        }
        assert!(est.lo <= est.value && est.value <= est.hi);
    }

    #[test]
    fn unbracketed_root_is_reported() {
        let src = SyntheticWords {
            c: 0.2,
            branching: 3,
            roots: 1,
        };
        assert!(matches!(
            s0_estimate(&[4], (0.0, 0.1), 1e-6, &src),
            Err(Error::NotBracketed { .. })
        ));
        assert!(s0_estimate(&[], (0.0, 3.0), 1e-6, &src).is_err());
    }
}
