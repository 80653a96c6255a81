use serde::{Deserialize, Serialize};

use super::rates::child_key;
use super::{ChipSequence, RatePolicy};
use crate::polytope::VertexId;
use crate::{Error, Result};

/// Hard cap on the number of terms summed for one λ value.
pub const MAX_SERIES_STEPS: usize = 100_000;

/// A vertex together with its neighbourhood, enough to generate all of
/// its descendants and their rates without any geometry.
///
/// Codes use wrapping arithmetic, so they stay exact only while `3^g` fits
/// in 64 bits; keys never lose information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineageNode {
    pub generation: u32,
    pub code: u64,
    pub key: u64,
    pub nbr_code: [u64; 3],
    pub nbr_key: [u64; 3],
    /// `back[m]` is the slot of this vertex in the list of neighbour `m`.
    pub back: [u8; 3],
}

impl LineageNode {
    /// The child created through neighbour slot `t`.
    pub fn child(&self, t: usize) -> LineageNode {
        let mut nbr_code = [0u64; 3];
        let mut nbr_key = [0u64; 3];
        let mut back = [0u8; 3];
        for m in 0..3 {
            if m == t {
                let b = self.back[t] as usize;
                nbr_code[m] = self.nbr_code[t].wrapping_mul(3).wrapping_add(b as u64);
                nbr_key[m] = child_key(self.nbr_key[t], b);
                back[m] = b as u8;
            } else {
                nbr_code[m] = self.code.wrapping_mul(3).wrapping_add(m as u64);
                nbr_key[m] = child_key(self.key, m);
                back[m] = t as u8;
            }
        }
        LineageNode {
            generation: self.generation + 1,
            code: self.code.wrapping_mul(3).wrapping_add(t as u64),
            key: child_key(self.key, t),
            nbr_code,
            nbr_key,
            back,
        }
    }

    pub fn id(&self) -> VertexId {
        VertexId::new(self.generation, self.code)
    }

    /// Rate of the edge from this vertex to neighbour slot `m`.
    pub fn rate(&self, m: usize, policy: &RatePolicy) -> Result<f64> {
        policy.rate(self.generation, self.code, self.nbr_code[m], child_key(self.key, m))
    }

    /// Rate of the edge from neighbour slot `m` back to this vertex.
    pub fn reverse_rate(&self, m: usize, policy: &RatePolicy) -> Result<f64> {
        let b = self.back[m] as usize;
        policy.rate(self.generation, self.nbr_code[m], self.code, child_key(self.nbr_key[m], b))
    }

    /// λ of the edge through slot `m`, summed along its sibling lineage.
    pub fn lambda(&self, m: usize, policy: &RatePolicy, tol: f64) -> Result<f64> {
        let mut node = *self;
        let mut err = None;
        let terms = std::iter::from_fn(|| {
            let step = node.rate(m, policy).and_then(|pj| Ok((pj, node.reverse_rate(m, policy)?)));
            node = node.child(m);
            match step {
                Ok(pair) => Some(pair),
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        });
        let out = lambda_from_pairs(terms, tol);
        match err {
            Some(e) => Err(e),
            None => out,
        }
    }
}

/// One generation of a sibling sequence: the facing pair and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiblingStep {
    pub j: VertexId,
    pub i: VertexId,
    /// Rate of the edge `j -> i`.
    pub p_j: f64,
    /// Rate of the edge `i -> j`.
    pub p_i: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SiblingSequence {
    pub steps: Vec<SiblingStep>,
}

/// Follows the pair of facing descendants of the generation-0 edge
/// `start = (j, i)` for `depth` chipping steps (`depth + 1` entries).
pub fn sibling_sequence(seq: &ChipSequence, start: (VertexId, VertexId), depth: usize) -> Result<SiblingSequence> {
    let (j0, i0) = start;
    if j0.generation != 0 || i0.generation != 0 {
        return Err(Error::InvalidParameter("sibling sequences start on a generation-0 edge".into()));
    }
    if depth > seq.depth() || depth >= seq.rate_generations() {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: seq.rate_generations().saturating_sub(1),
        });
    }
    let (mut j, mut i) = (j0.code as u32, i0.code as u32);
    let mut steps = Vec::with_capacity(depth + 1);
    for g in 0..=depth {
        let p = seq.poly(g);
        let a = p.slot_of(j, i).ok_or(Error::AdjacencyMismatch {
            vertex: j as u64,
            detail: format!("{} is not a neighbour in generation {g}", i),
        })?;
        let b = p.slot_of(i, j).ok_or(Error::AdjacencyMismatch {
            vertex: i as u64,
            detail: format!("{} is not a neighbour in generation {g}", j),
        })?;
        let rates = seq.rates(g);
        steps.push(SiblingStep {
            j: VertexId::new(g as u32, j as u64),
            i: VertexId::new(g as u32, i as u64),
            p_j: rates.get(j, a),
            p_i: rates.get(i, b),
        });
        (j, i) = (3 * j + a as u32, 3 * i + b as u32);
    }
    Ok(SiblingSequence { steps })
}

/// λ for the first edge of a materialised sibling sequence. Fails if the
/// sequence ends before the running product drops below `tol`.
pub fn lambda_from_series(s: &SiblingSequence, tol: f64) -> Result<f64> {
    let n = s.steps.len();
    let pairs = s.steps.iter().map(|st| (st.p_j, st.p_i));
    match lambda_from_pairs(pairs, tol) {
        Err(Error::SeriesNotConverged { .. }) => Err(Error::SeriesNotConverged { steps: n }),
        other => other,
    }
}

/// Σ_k p_{j,k} Π_{l<k} (1 - p_{j,l} - p_{i,l}), stopped once the running
/// product (which bounds the remaining tail) falls below `tol`.
pub fn lambda_from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut sum = 0.0;
    let mut prod = 1.0;
    for (k, (pj, pi)) in pairs.into_iter().enumerate() {
        if k >= MAX_SERIES_STEPS {
            return Err(Error::SeriesNotConverged { steps: k });
        }
        if !(pj > 0.0 && pi > 0.0 && pj + pi < 1.0) {
            return Err(Error::NotRegular(format!(
                "sibling pair rates ({pj}, {pi}) at step {k} violate p > 0, p + p' < 1"
            )));
        }
        sum += pj * prod;
        prod *= 1.0 - pj - pi;
        if prod < tol {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNotConverged { steps: 0 })
}
