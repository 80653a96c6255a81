use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::polytope::{Polyhedron, VertexId};
use crate::{Error, Result};

use super::ChipRates;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const ROOT_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const DRAW_SALT: u64 = 0x8CB9_2BA7_2F3D_8DD7;

/// SplitMix64 output function.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Genealogy key of a generation-0 vertex.
pub(crate) fn root_key(seed: u64, code: u64) -> u64 {
    mix64(mix64(seed ^ ROOT_SALT).wrapping_add(code.wrapping_mul(GOLDEN)))
}

/// Key of the child created through neighbour slot `slot`.
pub(crate) fn child_key(key: u64, slot: usize) -> u64 {
    mix64(key.wrapping_add((slot as u64 + 1).wrapping_mul(GOLDEN)))
}

/// Uniform draw in the open interval (0, 1).
fn unit_draw(key: u64) -> f64 {
    ((mix64(key ^ DRAW_SALT) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Explicit rates keyed by ordered vertex pair, with an optional fallback
/// for pairs not listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub entries: HashMap<(VertexId, VertexId), f64>,
    pub fallback: Option<f64>,
}

/// How rates are assigned to the ordered edges of every generation.
///
/// Rates are a pure function of the edge and the run seed: each vertex
/// carries a 64-bit genealogy key and the rate of an ordered edge is drawn
/// from the key of the vertex it creates. Any generation can therefore be
/// evaluated without materialising the ones before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum RatePolicy {
    Constant { p: f64 },
    Uniform { delta: f64, p_max: f64 },
    /// Not serialisable; runs using a table record their rates instead.
    #[serde(skip)]
    Table(RateTable),
}

impl RatePolicy {
    pub fn constant(p: f64) -> Result<Self> {
        let out = Self::Constant { p };
        out.validate()?;
        Ok(out)
    }

    pub fn uniform(delta: f64, p_max: f64) -> Result<Self> {
        let out = Self::Uniform { delta, p_max };
        out.validate()?;
        Ok(out)
    }

    pub fn table(entries: HashMap<(VertexId, VertexId), f64>, fallback: Option<f64>) -> Result<Self> {
        let out = Self::Table(RateTable { entries, fallback });
        out.validate()?;
        Ok(out)
    }

    /// Rejects infeasible parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Self::Constant { p } => {
                if !(p > 0.0 && p < 0.5) {
                    return bad(format!("constant rate must satisfy 0 < p < 1/2, got {p}"));
                }
            }
            Self::Uniform { delta, p_max } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return bad(format!("uniform rates need 0 < delta < 1/2, got {delta}"));
                }
                if !(p_max > delta) {
                    return bad(format!("uniform rates need p_max > delta, got {p_max} <= {delta}"));
                }
                if p_max > (1.0 - delta) / 2.0 {
                    return bad(format!(
                        "uniform rates need p_max <= (1 - delta)/2 = {}, got {p_max}",
                        (1.0 - delta) / 2.0
                    ));
                }
            }
            Self::Table(ref t) => {
                for v in t.entries.values().chain(t.fallback.iter()) {
                    if !(*v > 0.0 && *v < 1.0) {
                        return bad(format!("table rates must lie in (0, 1), got {v}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rate of the ordered edge `from -> to` of `generation`; `edge_key` is
    /// the key of the vertex the edge creates.
    pub fn rate(&self, generation: u32, from: u64, to: u64, edge_key: u64) -> Result<f64> {
        match *self {
            Self::Constant { p } => Ok(p),
            Self::Uniform { delta, p_max } => Ok(delta + unit_draw(edge_key) * (p_max - delta)),
            Self::Table(ref t) => {
                let key = (VertexId::new(generation, from), VertexId::new(generation, to));
                t.entries
                    .get(&key)
                    .copied()
                    .or(t.fallback)
                    .ok_or(Error::MissingRate { from, to })
            }
        }
    }

    /// Smallest and largest rate the policy can produce.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Self::Constant { p } => (p, p),
            Self::Uniform { delta, p_max } => (delta, p_max),
            Self::Table(ref t) => t
                .entries
                .values()
                .chain(t.fallback.iter())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        }
    }

    /// A regularity margin every sequence drawn from this policy satisfies:
    /// rates exceed it and any two rates sum below one minus it. It is not
    /// positive when the policy gives no such guarantee.
    pub fn margin(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.min(1.0 - 2.0 * hi) * (1.0 - 1e-9)
    }
}

/// Rates for one polyhedron treated as generation 0 of a run with `seed`.
pub fn rate_policy(policy: &RatePolicy, p: &Polyhedron, seed: u64) -> Result<ChipRates> {
    policy.validate()?;
    let g = p.generation();
    let mut values = Vec::with_capacity(3 * p.vertex_count());
    for v in 0..p.vertex_count() as u32 {
        let key = root_key(seed, v as u64);
        for (m, &u) in p.neighbours(v).iter().enumerate() {
            values.push(policy.rate(g, v as u64, u as u64, child_key(key, m))?);
        }
    }
    ChipRates::from_values(p, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{make_seed, SeedShape};

    #[test]
    fn constant_quarter_on_cube() {
        let cube = make_seed(SeedShape::Cube);
        let r = rate_policy(&RatePolicy::constant(0.25).unwrap(), &cube, 1).unwrap();
        assert_eq!(r.len(), 24);
        assert!(r.values().iter().all(|&x| x == 0.25));
    }

    #[test]
    fn uniform_rates_stay_in_range() {
        let cube = make_seed(SeedShape::Cube);
        let pol = RatePolicy::uniform(0.05, 0.4).unwrap();
        let r = rate_policy(&pol, &cube, 42).unwrap();
        for v in 0..8u32 {
            for m in 0..3 {
                let x = r.get(v, m);
                assert!((0.05..=0.4).contains(&x));
                let u = cube.neighbours(v)[m];
                let back = cube.slot_of(u, v).unwrap();
                assert!(x + r.get(u, back) < 0.95);
            }
        }
        assert_eq!(r, rate_policy(&pol, &cube, 42).unwrap());
        assert_ne!(r, rate_policy(&pol, &cube, 43).unwrap());
    }

    #[test]
    fn infeasible_parameters_fail() {
        assert!(RatePolicy::constant(0.5).is_err());
        assert!(RatePolicy::constant(0.0).is_err());
        assert!(RatePolicy::uniform(0.1, 0.05).is_err());
        assert!(RatePolicy::uniform(0.1, 0.46).is_err());
        assert!(RatePolicy::uniform(0.1, 0.45).is_ok());
    }

    #[test]
    fn margins() {
        assert!((RatePolicy::constant(0.25).unwrap().margin() - 0.25).abs() < 1e-8);
        assert!((RatePolicy::constant(0.4).unwrap().margin() - 0.2).abs() < 1e-8);
        assert!((RatePolicy::uniform(0.05, 0.4).unwrap().margin() - 0.05).abs() < 1e-8);
    }

    #[test]
    fn table_lookup_and_fallback() {
        let mut entries = HashMap::new();
        entries.insert((VertexId::new(0, 0), VertexId::new(0, 1)), 0.3);
        let t = RatePolicy::table(entries.clone(), None).unwrap();
        assert_eq!(t.rate(0, 0, 1, 0).unwrap(), 0.3);
        assert!(matches!(t.rate(0, 1, 0, 0), Err(Error::MissingRate { .. })));
        let t = RatePolicy::table(entries, Some(0.2)).unwrap();
        assert_eq!(t.rate(0, 1, 0, 0).unwrap(), 0.2);
    }

    #[test]
    fn unit_draw_is_open_interval() {
        for k in 0..10_000u64 {
            let u = unit_draw(mix64(k));
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
