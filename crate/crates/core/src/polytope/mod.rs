//! Simple convex polyhedra, their edge nets and set distances.

mod hausdorff;
mod net;
pub mod obj;
mod seeds;
mod validate;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::{Point3, Vec3};

pub use hausdorff::{hausdorff_distance, HausdorffEstimate};
pub use net::{edge_net, EdgeNet};
pub use seeds::{make_seed, SeedShape};
pub use validate::{validate, CheckResult, ValidationReport, TAU_CONV, TAU_PLANE};

/// Identifier of a vertex in a chipping sequence.
///
/// `code` is dense within a generation. A vertex of generation `g + 1` with
/// code `c` was created on the ordered edge leaving vertex `c / 3` of
/// generation `g` through that vertex's neighbour slot `c % 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub generation: u32,
    pub code: u64,
}

impl VertexId {
    pub fn new(generation: u32, code: u64) -> Self {
        Self { generation, code }
    }

    /// Mother of this vertex, `None` at generation 0.
    pub fn mother(self) -> Option<VertexId> {
        (self.generation > 0).then(|| VertexId::new(self.generation - 1, self.code / 3))
    }

    /// Neighbour slot of the mother through which this vertex was created.
    pub fn mother_slot(self) -> Option<usize> {
        (self.generation > 0).then_some((self.code % 3) as usize)
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "g{}:{}", self.generation, self.code)
    }
}

pub(crate) type Neighbours = SmallVec<[u32; 3]>;

/// Combinatorial and metric description of a convex polyhedron.
///
/// Neighbour lists are ordered. For chipped polyhedra the order is the slot
/// convention of [`crate::chip`]: slot `t` of vertex `3v + t` holds its
/// sibling, the other slots hold its cousins `3v + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    generation: u32,
    positions: Vec<Point3>,
    neighbours: Vec<Neighbours>,
    faces: Vec<Vec<u32>>,
    /// `(mother, father)` in the previous generation; empty at generation 0.
    parents: Vec<[u32; 2]>,
}

impl Polyhedron {
    /// Assembles a polyhedron without checking it; see [`validate`].
    pub fn new(
        generation: u32,
        positions: Vec<Point3>,
        neighbours: Vec<Vec<u32>>,
        faces: Vec<Vec<u32>>,
    ) -> Self {
        Self {
            generation,
            positions,
            neighbours: neighbours.into_iter().map(SmallVec::from_vec).collect(),
            faces,
            parents: Vec::new(),
        }
    }

    pub(crate) fn from_parts(
        generation: u32,
        positions: Vec<Point3>,
        neighbours: Vec<Neighbours>,
        faces: Vec<Vec<u32>>,
        parents: Vec<[u32; 2]>,
    ) -> Self {
        Self {
            generation,
            positions,
            neighbours,
            faces,
            parents,
        }
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    /// Number of undirected edges, counted from the adjacency lists.
    pub fn edge_count(&self) -> usize {
        self.neighbours.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn position(&self, v: u32) -> Point3 {
        self.positions[v as usize]
    }

    pub fn neighbours(&self, v: u32) -> &[u32] {
        &self.neighbours[v as usize]
    }

    pub fn faces(&self) -> &[Vec<u32>] {
        &self.faces
    }

    pub fn vertex_id(&self, v: u32) -> VertexId {
        VertexId::new(self.generation, v as u64)
    }

    /// `(mother, father)` codes in the previous generation.
    pub fn parents(&self, v: u32) -> Option<[u32; 2]> {
        self.parents.get(v as usize).copied()
    }

    pub fn is_simple(&self) -> bool {
        self.neighbours.iter().all(|n| n.len() == 3)
    }

    /// Position of `u` in the neighbour list of `v`.
    pub fn slot_of(&self, v: u32, u: u32) -> Option<usize> {
        self.neighbours[v as usize].iter().position(|&w| w == u)
    }

    /// Undirected edges `(v, u)` with `v < u`, in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.neighbours.iter().enumerate().flat_map(|(v, ns)| {
            let v = v as u32;
            ns.iter().filter(move |&&u| v < u).map(move |&u| (v, u))
        })
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self
            .positions
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.positions.len().max(1) as f64)
    }

    /// Largest distance from the vertex centroid to a vertex.
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.positions
            .iter()
            .map(|p| (p - c).norm())
            .fold(0.0, f64::max)
    }

    /// Copy with one vertex moved; used to build invalid inputs.
    pub fn with_position(&self, v: u32, p: Point3) -> Self {
        let mut out = self.clone();
        out.positions[v as usize] = p;
        out
    }

    /// Copy with the neighbour list of `v` replaced.
    pub fn with_neighbours(&self, v: u32, ns: Vec<u32>) -> Self {
        let mut out = self.clone();
        out.neighbours[v as usize] = SmallVec::from_vec(ns);
        out
    }
}

/// Newell normal of a closed polygon (not normalised).
pub(crate) fn newell_normal(points: impl Iterator<Item = Point3> + Clone) -> Vec3 {
    let first = points.clone().next();
    let mut n = Vec3::zeros();
    let mut prev: Option<Point3> = None;
    for p in points.chain(first) {
        if let Some(q) = prev {
            n.x += (q.y - p.y) * (q.z + p.z);
            n.y += (q.z - p.z) * (q.x + p.x);
            n.z += (q.x - p.x) * (q.y + p.y);
        }
        prev = Some(p);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_id_genealogy_arithmetic() {
        let v = VertexId::new(2, 17);
        assert_eq!(v.mother(), Some(VertexId::new(1, 5)));
        assert_eq!(v.mother_slot(), Some(2));
        assert_eq!(VertexId::new(0, 3).mother(), None);
    }

    #[test]
    fn newell_normal_of_unit_square() {
        let sq = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let n = newell_normal(sq.iter().copied());
        assert!((n - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
    }
}
