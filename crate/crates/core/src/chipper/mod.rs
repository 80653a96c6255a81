//! Vertex chipping, rate policies, genealogy and sibling sequences.

mod lineage;
mod rates;
mod sequence;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::polytope::{Neighbours, Polyhedron, VertexId};
use crate::{Error, Result};

pub use lineage::{
    lambda_from_pairs, lambda_from_series, sibling_sequence, LineageNode, SiblingSequence, SiblingStep,
    MAX_SERIES_STEPS,
};
pub use rates::{rate_policy, RatePolicy, RateTable};
pub use sequence::{chip_sequence, ChipSequence};

/// Rates for every ordered edge of one polyhedron.
///
/// Stored densely: the rate of the edge leaving `v` through neighbour slot
/// `m` sits at index `3v + m`, which is also the code of the vertex that
/// edge creates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipRates {
    generation: u32,
    values: Vec<f64>,
}

impl ChipRates {
    pub fn from_values(p: &Polyhedron, values: Vec<f64>) -> Result<Self> {
        if values.len() != 3 * p.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} rates, got {}",
                3 * p.vertex_count(),
                values.len()
            )));
        }
        Ok(Self {
            generation: p.generation(),
            values,
        })
    }

    pub fn constant(p: &Polyhedron, value: f64) -> Self {
        Self {
            generation: p.generation(),
            values: vec![value; 3 * p.vertex_count()],
        }
    }

    /// `f(v, slot, neighbour)` for every ordered edge.
    pub fn from_fn(p: &Polyhedron, mut f: impl FnMut(u32, usize, u32) -> f64) -> Self {
        let mut values = Vec::with_capacity(3 * p.vertex_count());
        for v in 0..p.vertex_count() as u32 {
            for (m, &u) in p.neighbours(v).iter().enumerate() {
                values.push(f(v, m, u));
            }
        }
        Self {
            generation: p.generation(),
            values,
        }
    }

    /// Rates from an explicit map; every ordered edge must be present.
    pub fn from_map(p: &Polyhedron, map: &HashMap<(VertexId, VertexId), f64>) -> Result<Self> {
        let g = p.generation();
        let mut values = Vec::with_capacity(3 * p.vertex_count());
        for v in 0..p.vertex_count() as u32 {
            for &u in p.neighbours(v) {
                let key = (VertexId::new(g, v as u64), VertexId::new(g, u as u64));
                values.push(*map.get(&key).ok_or(Error::MissingRate {
                    from: v as u64,
                    to: u as u64,
                })?);
            }
        }
        Ok(Self { generation: g, values })
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rate of the edge leaving `v` through neighbour slot `slot`.
    pub fn get(&self, v: u32, slot: usize) -> f64 {
        self.values[3 * v as usize + slot]
    }

    /// Rate of the ordered edge `from -> to`.
    pub fn edge(&self, p: &Polyhedron, from: u32, to: u32) -> Result<f64> {
        let slot = p.slot_of(from, to).ok_or(Error::MissingRate {
            from: from as u64,
            to: to as u64,
        })?;
        Ok(self.get(from, slot))
    }

    /// Checks `0 < p < 1` and `p_vu + p_uv < 1` on every edge.
    pub fn check_constraints(&self, p: &Polyhedron) -> Result<()> {
        if self.values.len() != 3 * p.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "rates cover {} ordered edges, polyhedron has {}",
                self.values.len(),
                3 * p.vertex_count()
            )));
        }
        for v in 0..p.vertex_count() as u32 {
            for (m, &u) in p.neighbours(v).iter().enumerate() {
                let a = self.get(v, m);
                let back = p.slot_of(u, v).ok_or(Error::AdjacencyMismatch {
                    vertex: u as u64,
                    detail: format!("missing back edge to {v}"),
                })?;
                let b = self.get(u, back);
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::RateConstraint {
                        from: v as u64,
                        to: u as u64,
                        detail: format!("rate {a} outside (0, 1)"),
                    });
                }
                if !(a + b < 1.0) {
                    return Err(Error::RateConstraint {
                        from: v as u64,
                        to: u as u64,
                        detail: format!("p + p' = {} is not below 1", a + b),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Mother, father, sibling and cousins of a vertex of generation `g + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genealogy {
    pub mother: VertexId,
    pub father: VertexId,
    pub sibling: VertexId,
    pub cousins: [VertexId; 2],
}

/// Genealogy of `child` from the adjacency of its mother's generation.
pub fn genealogy(mothers: &Polyhedron, child: VertexId) -> Result<Genealogy> {
    let g = mothers.generation();
    if child.generation != g + 1 || child.code >= 3 * mothers.vertex_count() as u64 {
        return Err(Error::InvalidParameter(format!(
            "{child} is not a child of generation {g}"
        )));
    }
    let v = (child.code / 3) as u32;
    let t = (child.code % 3) as usize;
    let u = mothers.neighbours(v)[t];
    let back = mothers.slot_of(u, v).ok_or(Error::SiblingNotFound(child.code))?;
    let others: Vec<u64> = (0..3).filter(|&m| m != t).map(|m| 3 * v as u64 + m as u64).collect();
    Ok(Genealogy {
        mother: VertexId::new(g, v as u64),
        father: VertexId::new(g, u as u64),
        sibling: VertexId::new(g + 1, 3 * u as u64 + back as u64),
        cousins: [VertexId::new(g + 1, others[0]), VertexId::new(g + 1, others[1])],
    })
}

/// One chipping step.
///
/// The child of `v` through slot `t` gets code `3v + t`. Its neighbour slot
/// `t` holds its sibling and the other two slots hold its cousins, so slot
/// positions carry over from mother to child.
pub fn chip(p: &Polyhedron, r: &ChipRates) -> Result<Polyhedron> {
    let n = p.vertex_count();
    if let Some(v) = (0..n as u32).find(|&v| p.neighbours(v).len() != 3) {
        return Err(Error::NotSimple {
            vertex: v,
            degree: p.neighbours(v).len(),
        });
    }
    r.check_constraints(p)?;

    let mut back = vec![[0u32; 3]; n];
    for v in 0..n as u32 {
        for (m, &u) in p.neighbours(v).iter().enumerate() {
            back[v as usize][m] = p.slot_of(u, v).ok_or(Error::AdjacencyMismatch {
                vertex: u as u64,
                detail: format!("missing back edge to {v}"),
            })? as u32;
        }
    }

    let mut positions = Vec::with_capacity(3 * n);
    let mut neighbours: Vec<Neighbours> = Vec::with_capacity(3 * n);
    let mut parents = Vec::with_capacity(3 * n);
    for v in 0..n as u32 {
        let a = p.position(v);
        let ns = p.neighbours(v);
        for t in 0..3 {
            let u = ns[t];
            let rate = r.get(v, t);
            positions.push(a + (p.position(u) - a) * rate);
            let mut adj: Neighbours = smallvec![0; 3];
            for m in 0..3 {
                adj[m] = if m == t {
                    3 * u + back[v as usize][t]
                } else {
                    3 * v + m as u32
                };
            }
            neighbours.push(adj);
            parents.push([v, u]);
        }
    }

    let slot = |v: u32, u: u32| -> Result<u32> {
        p.slot_of(v, u).map(|s| s as u32).ok_or(Error::AdjacencyMismatch {
            vertex: v as u64,
            detail: format!("face edge to {u} is not an edge"),
        })
    };
    let mut faces = Vec::with_capacity(p.face_count() + n);
    for face in p.faces() {
        let k = face.len();
        let mut out = Vec::with_capacity(2 * k);
        for i in 0..k {
            let (prev, cur, next) = (face[(i + k - 1) % k], face[i], face[(i + 1) % k]);
            out.push(3 * cur + slot(cur, prev)?);
            out.push(3 * cur + slot(cur, next)?);
        }
        faces.push(out);
    }
    let centre = p.centroid();
    for v in 0..n as u32 {
        let tri = [3 * v, 3 * v + 1, 3 * v + 2];
        let [a, b, c] = tri.map(|i| positions[i as usize]);
        let normal = (b - a).cross(&(c - a));
        if normal.dot(&(p.position(v) - centre)) > 0.0 {
            faces.push(tri.to_vec());
        } else {
            faces.push(vec![tri[0], tri[2], tri[1]]);
        }
    }
    Ok(Polyhedron::from_parts(
        p.generation() + 1,
        positions,
        neighbours,
        faces,
        parents,
    ))
}

/// Regularity of a whole sequence with margin `delta`: every rate exceeds
/// `delta` and summed with the rate of any neighbour of the created vertex
/// (its sibling or a cousin) stays below `1 - delta`.
pub fn check_regular(seq: &ChipSequence, delta: f64) -> bool {
    (0..seq.rate_generations()).all(|g| regularity_violations(seq.poly(g), seq.rates(g), delta, 1).is_empty())
}

/// Up to `limit` descriptions of regularity violations in one generation
/// of rates. Vertices created by `rates` are addressed by their codes.
pub fn regularity_violations(p: &Polyhedron, rates: &ChipRates, delta: f64, limit: usize) -> Vec<String> {
    let mut out = Vec::new();
    if !(delta > 0.0 && delta < 0.5) {
        out.push(format!("margin {delta} outside (0, 1/2)"));
        return out;
    }
    let gen = p.generation() + 1;
    for v in 0..p.vertex_count() as u32 {
        for t in 0..3 {
            let x = rates.get(v, t);
            let code = 3 * v as u64 + t as u64;
            if !(x > delta) {
                out.push(format!("rate {x} of g{gen}:{code} is not above {delta}"));
            }
            let u = p.neighbours(v)[t];
            let sib = p.slot_of(u, v).map(|b| rates.get(u, b));
            let partners = (0..3).filter(|&m| m != t).map(|m| rates.get(v, m)).chain(sib);
            for y in partners {
                if !(x + y < 1.0 - delta) {
                    out.push(format!(
                        "rates {x} + {y} at g{gen}:{code} reach 1 - {delta}"
                    ));
                }
            }
            if out.len() >= limit {
                out.truncate(limit);
                return out;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{make_seed, validate, SeedShape};
    use crate::Point3;

    fn cube_corner() -> Polyhedron {
        // Cube with a corner at the origin and unit edges along the axes.
        let cube = make_seed(SeedShape::Cube);
        let s = 3f64.sqrt() / 2.0;
        let shift = cube.position(0).coords;
        let mut out = cube.clone();
        for v in 0..8 {
            out = out.with_position(v, Point3::from((cube.position(v).coords - shift) * s));
        }
        out
    }

    #[test]
    fn corner_cut_positions() {
        let cube = cube_corner();
        let r = ChipRates::constant(&cube, 0.2);
        let c = chip(&cube, &r).unwrap();
        let mut got: Vec<[f64; 3]> = (0..3).map(|t| {
            let q = c.position(t);
            [q.x, q.y, q.z]
        }).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [[0.0, 0.0, 0.2], [0.0, 0.2, 0.0], [0.2, 0.0, 0.0]];
        for (g, w) in got.iter().zip(want.iter()) {
            for k in 0..3 {
                assert!((g[k] - w[k]).abs() < 1e-15, "{got:?}");
            }
        }
    }

    #[test]
    fn chipped_cube_counts_and_validity() {
        let cube = make_seed(SeedShape::Cube);
        let c = chip(&cube, &ChipRates::constant(&cube, 0.25)).unwrap();
        assert_eq!((c.vertex_count(), c.edge_count(), c.face_count()), (24, 36, 14));
        assert!(c.is_simple());
        assert!(validate(&c).passed());
        assert_eq!(c.generation(), 1);
    }

    #[test]
    fn sibling_is_involution_and_genealogy_matches_adjacency() {
        let cube = make_seed(SeedShape::Cube);
        let c = chip(&cube, &ChipRates::constant(&cube, 0.3)).unwrap();
        for x in 0..24u64 {
            let g = genealogy(&cube, VertexId::new(1, x)).unwrap();
            let back = genealogy(&cube, g.sibling).unwrap();
            assert_eq!(back.sibling.code, x);
            assert_eq!(g.mother, back.father);
            let ns = c.neighbours(x as u32);
            assert_eq!(ns[(x % 3) as usize] as u64, g.sibling.code);
            for cz in g.cousins {
                assert!(ns.contains(&(cz.code as u32)));
            }
        }
    }

    #[test]
    fn missing_and_bad_rates_fail() {
        let cube = make_seed(SeedShape::Cube);
        let map = HashMap::new();
        assert!(matches!(ChipRates::from_map(&cube, &map), Err(Error::MissingRate { .. })));
        let r = ChipRates::constant(&cube, 0.5);
        assert!(matches!(chip(&cube, &r), Err(Error::RateConstraint { .. })));
    }

    #[test]
    fn regularity_examples() {
        let cube = make_seed(SeedShape::Cube);
        let r = ChipRates::constant(&cube, 0.25);
        assert!(regularity_violations(&cube, &r, 0.1, 1).is_empty());
        assert!(!regularity_violations(&cube, &r, 0.3, 1).is_empty());
        // Two facing rates of 0.495 reach 1 - 0.01.
        let u = cube.neighbours(0)[0];
        let b = cube.slot_of(u, 0).unwrap();
        let r = ChipRates::from_fn(&cube, |v, m, _| {
            if (v == 0 && m == 0) || (v == u && m == b) { 0.495 } else { 0.2 }
        });
        assert!(!regularity_violations(&cube, &r, 0.01, 1).is_empty());
        // 0.49 + 0.49 = 0.98 stays below 0.99.
        let r = ChipRates::from_fn(&cube, |v, m, _| {
            if (v == 0 && m == 0) || (v == u && m == b) { 0.49 } else { 0.2 }
        });
        assert!(regularity_violations(&cube, &r, 0.01, 1).is_empty());
    }

    #[test]
    fn octahedron_is_not_chipped() {
        let cube = make_seed(SeedShape::Cube);
        let mut ns = cube.neighbours(0).to_vec();
        ns.push(7);
        let bad = cube.with_neighbours(0, ns);
        assert!(matches!(
            chip(&bad, &ChipRates::constant(&cube, 0.2)),
            Err(Error::NotSimple { vertex: 0, degree: 4 })
        ));
    }
}
