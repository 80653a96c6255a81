//! Local and adapted charts, the per-step matrices and mother-sequence words.
//!
//! A chart at vertex `j` is the affine map `x -> A_j + M_j Λ_j x` whose frame
//! `M_j` has the edge vectors towards the neighbours as columns, in σ order,
//! and whose diagonal `Λ_j` holds the chart rates λ of those edges. One
//! chipping step in chart coordinates is the matrix `C_j`; the map `G`
//! between the chart of a vertex and that of its mother satisfies
//! `F_j = F_mother ∘ G`.

mod checks;
mod words;

use serde::{Deserialize, Serialize};

use crate::chipper::ChipSequence;
use crate::polytope::{Polyhedron, VertexId};
use crate::{Error, Mat3, Result, Vec3};

pub use checks::{
    chart_identity_error, convex_intersection_area, proj_disjointness_check, projected_triangle,
    tetra_invariance_check, union_identity_error, Vec2, W_SLACK,
};
pub use words::{
    compose_word, write_words_csv, EnumStats, MatrixWord, MotherSeq, PrunedSubtree, WordIter, WordSpace,
};

/// Affine map `x -> linear x + translate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap3 {
    pub linear: Mat3,
    pub translate: Vec3,
}

impl AffineMap3 {
    pub fn new(linear: Mat3, translate: Vec3) -> Self {
        Self { linear, translate }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.linear * x + self.translate
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap3) -> AffineMap3 {
        AffineMap3::new(self.linear * other.linear, self.linear * other.translate + self.translate)
    }

    pub fn inverse(&self) -> Result<AffineMap3> {
        let inv = self.linear.try_inverse().ok_or(Error::Singular)?;
        Ok(AffineMap3::new(inv, -(inv * self.translate)))
    }

    /// Largest difference between the two maps on the reference points
    /// `0, e_1, e_2, e_3`.
    pub fn distance_on_reference(&self, other: &AffineMap3) -> f64 {
        reference_points()
            .iter()
            .map(|x| (self.apply(x) - other.apply(x)).amax())
            .fold(0.0, f64::max)
    }
}

/// `0, e_1, e_2, e_3`.
pub fn reference_points() -> [Vec3; 4] {
    [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
}

/// Initial neighbour ordering at every generation-0 vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaChoice {
    /// Neighbours by increasing vertex id.
    #[default]
    Sorted,
    /// Neighbours by decreasing vertex id.
    Reversed,
    /// Sorted order rotated by one position.
    Rotated,
}

impl std::str::FromStr for SigmaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sorted" => Ok(Self::Sorted),
            "reversed" => Ok(Self::Reversed),
            "rotated" => Ok(Self::Rotated),
            other => Err(Error::InvalidParameter(format!("unknown sigma choice `{other}`"))),
        }
    }
}

impl std::fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sorted => "sorted",
            Self::Reversed => "reversed",
            Self::Rotated => "rotated",
        })
    }
}

impl SigmaChoice {
    /// Storage slots of `v`'s neighbours in σ order.
    pub fn slots(self, p: &Polyhedron, v: u32) -> [u8; 3] {
        let ns = p.neighbours(v);
        let mut by_id = [0u8, 1, 2];
        by_id.sort_by_key(|&m| ns[m as usize]);
        match self {
            Self::Sorted => by_id,
            Self::Reversed => [by_id[2], by_id[1], by_id[0]],
            Self::Rotated => [by_id[1], by_id[2], by_id[0]],
        }
    }
}

/// Charts of every vertex of one generation.
///
/// The neighbour ordering is kept as storage slots: the σ-slot `l` of
/// vertex `v` refers to `neighbours(v)[slots[v][l]]`. Because children keep
/// their mother's slot layout, adapted charts inherit these slots unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    generation: u32,
    slots: Vec<[u8; 3]>,
    lambda: Vec<[f64; 3]>,
}

impl Chart {
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// σ-slot to storage slot.
    pub fn slots(&self, v: u32) -> [u8; 3] {
        self.slots[v as usize]
    }

    /// σ-slot holding storage slot `stored`.
    pub fn sigma_slot_of(&self, v: u32, stored: usize) -> usize {
        self.slots[v as usize]
            .iter()
            .position(|&s| s as usize == stored)
            .expect("slots form a permutation")
    }

    /// Neighbour ids in σ order.
    pub fn sigma(&self, p: &Polyhedron, v: u32) -> [u32; 3] {
        let ns = p.neighbours(v);
        self.slots[v as usize].map(|s| ns[s as usize])
    }

    /// Chart rates in σ order.
    pub fn lambda(&self, v: u32) -> [f64; 3] {
        self.lambda[v as usize]
    }

    /// Frame with columns `A_σ(l) - A_v`.
    pub fn frame(&self, p: &Polyhedron, v: u32) -> Mat3 {
        let a = p.position(v);
        let cols = self.sigma(p, v).map(|u| p.position(u) - a);
        Mat3::from_columns(&cols)
    }

    pub fn scale(&self, v: u32) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.lambda[v as usize]))
    }

    pub fn scale_inverse(&self, v: u32) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.lambda[v as usize].map(|l| 1.0 / l)))
    }

    /// The chart map `F_v`.
    pub fn map(&self, p: &Polyhedron, v: u32) -> AffineMap3 {
        AffineMap3::new(self.frame(p, v) * self.scale(v), p.position(v).coords)
    }
}

/// Charts of `P_0` with neighbour order `sigma` and λ from the sibling series.
pub fn initial_chart(seq: &ChipSequence, sigma: SigmaChoice, tol: f64) -> Result<Chart> {
    let p = seq.poly(0);
    let n = p.vertex_count() as u32;
    let slots: Vec<[u8; 3]> = (0..n).map(|v| sigma.slots(p, v)).collect();
    let lambda = chart_rates(seq, 0, &slots, tol)?;
    Ok(Chart {
        generation: 0,
        slots,
        lambda,
    })
}

/// Charts of generation `n + 1` adapted to `chart` (generation `n`).
///
/// The child in σ-slot `l` of a vertex created at `v` towards its father
/// is its sibling when σ_v(l) is the father and the cousin created towards
/// σ_v(l) otherwise.
pub fn adapt_chart(chart: &Chart, seq: &ChipSequence, tol: f64) -> Result<Chart> {
    let n = chart.generation as usize;
    if n + 1 > seq.depth() {
        return Err(Error::DepthExceeded {
            requested: n + 1,
            available: seq.depth(),
        });
    }
    let (mothers, children) = (seq.poly(n), seq.poly(n + 1));
    let mut slots = Vec::with_capacity(children.vertex_count());
    for c in 0..children.vertex_count() as u32 {
        let (v, t) = (c / 3, (c % 3) as usize);
        let mother_slots = chart.slots[v as usize];
        let father = mothers.neighbours(v)[t];
        let back = mothers.slot_of(father, v).ok_or(Error::SiblingNotFound(c as u64))? as u32;
        for &s in &mother_slots {
            let expected = if mothers.neighbours(v)[s as usize] == father {
                3 * father + back
            } else {
                3 * v + s as u32
            };
            let found = children.neighbours(c)[s as usize];
            if found != expected {
                return Err(Error::AdjacencyMismatch {
                    vertex: c as u64,
                    detail: format!("slot {s} holds {found}, propagation gives {expected}"),
                });
            }
        }
        slots.push(mother_slots);
    }
    let lambda = chart_rates(seq, n + 1, &slots, tol)?;
    Ok(Chart {
        generation: n as u32 + 1,
        slots,
        lambda,
    })
}

/// Adapted charts for generations `0..=seq.depth()`.
pub fn chart_sequence(seq: &ChipSequence, sigma: SigmaChoice, tol: f64) -> Result<Vec<Chart>> {
    let mut out = vec![initial_chart(seq, sigma, tol)?];
    for _ in 0..seq.depth() {
        let next = adapt_chart(out.last().expect("non-empty"), seq, tol)?;
        out.push(next);
    }
    Ok(out)
}

fn chart_rates(seq: &ChipSequence, n: usize, slots: &[[u8; 3]], tol: f64) -> Result<Vec<[f64; 3]>> {
    let policy = seq.policy();
    slots
        .iter()
        .enumerate()
        .map(|(v, s)| {
            let node = seq.lineage(n, v as u32);
            let mut l = [0.0; 3];
            for k in 0..3 {
                l[k] = node.lambda(s[k] as usize, policy, tol)?;
            }
            Ok(l)
        })
        .collect()
}

/// The one-step matrix for a vertex whose sibling sits in σ-slot `sib`.
///
/// `p_self` and `p_sibling` are the creation rates of the vertex and its
/// sibling; `p_cousin[l]` is the creation rate of the cousin in σ-slot `l`
/// (ignored at `sib`).
pub fn c_matrix_from_rates(sib: usize, p_self: f64, p_sibling: f64, p_cousin: [f64; 3]) -> Mat3 {
    let mut c = Mat3::zeros();
    c[(sib, sib)] = 1.0 - p_self - p_sibling;
    for l in (0..3).filter(|&l| l != sib) {
        c[(l, l)] = p_cousin[l];
        c[(sib, l)] = -p_self;
    }
    c
}

/// Creation rates needed for `C` of a child, read from the materialised run:
/// `(sibling σ-slot, p_self, p_sibling, p_cousin)`.
fn child_rates(seq: &ChipSequence, slots: [u8; 3], child: VertexId) -> Result<(usize, f64, f64, [f64; 3])> {
    if child.generation == 0 {
        return Err(Error::InvalidParameter(format!("{child} has no mother")));
    }
    let n = child.generation as usize - 1;
    if n >= seq.rate_generations() {
        return Err(Error::DepthExceeded {
            requested: child.generation as usize,
            available: seq.depth(),
        });
    }
    let mothers = seq.poly(n);
    let (v, t) = ((child.code / 3) as u32, (child.code % 3) as usize);
    let rates = seq.rates(n);
    let father = mothers.neighbours(v)[t];
    let back = mothers.slot_of(father, v).ok_or(Error::SiblingNotFound(child.code))?;
    let sibling = 3 * father + back as u32;
    if !seq.poly(n + 1).neighbours(child.code as u32).contains(&sibling) {
        return Err(Error::SiblingNotFound(child.code));
    }
    let sib = slots
        .iter()
        .position(|&s| s as usize == t)
        .ok_or(Error::SiblingNotFound(child.code))?;
    let mut p_cousin = [0.0; 3];
    for l in 0..3 {
        p_cousin[l] = rates.get(v, slots[l] as usize);
    }
    Ok((sib, rates.get(v, t), rates.get(father, back), p_cousin))
}

/// `C` for a vertex of generation `>= 1` under the neighbour order of `chart`
/// (the chart of the vertex's own generation).
pub fn c_matrix(seq: &ChipSequence, chart: &Chart, child: VertexId) -> Result<Mat3> {
    let (sib, ps, pb, pc) = child_rates(seq, chart.slots(child.code as u32), child)?;
    Ok(c_matrix_from_rates(sib, ps, pb, pc))
}

/// `G` from the chart of `child` to the chart of its mother:
/// `G(x) = Λ_mother⁻¹ (C Λ_child x + p_child e_sib)`.
pub fn g_map(mother_chart: &Chart, child_chart: &Chart, seq: &ChipSequence, child: VertexId) -> Result<AffineMap3> {
    if child_chart.generation != child.generation || mother_chart.generation + 1 != child.generation {
        return Err(Error::NotAdapted(format!(
            "charts of generations {} and {} do not fit {child}",
            mother_chart.generation, child_chart.generation
        )));
    }
    let c = child.code as u32;
    let v = c / 3;
    if child_chart.slots(c) != mother_chart.slots(v) {
        return Err(Error::NotAdapted(format!("{child} does not inherit its mother's order")));
    }
    let (sib, ps, pb, pc) = child_rates(seq, child_chart.slots(c), child)?;
    let cm = c_matrix_from_rates(sib, ps, pb, pc);
    let lm = mother_chart.lambda(v);
    let lc = child_chart.lambda(c);
    let expected = ps + (1.0 - ps - pb) * lc[sib];
    if (lm[sib] - expected).abs() > 1e-9 {
        return Err(Error::NotAdapted(format!(
            "λ of {child} in the sibling slot gives {expected}, mother has {}",
            lm[sib]
        )));
    }
    let inv = mother_chart.scale_inverse(v);
    let mut e = Vec3::zeros();
    e[sib] = ps;
    Ok(AffineMap3::new(inv * cm * child_chart.scale(c), inv * e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipper::{chip_sequence, RatePolicy};
    use crate::polytope::{make_seed, SeedShape};
    use approx::assert_relative_eq;

    #[test]
    fn constant_rate_matrix_with_sibling_first() {
        let p = 0.2;
        let c = c_matrix_from_rates(0, p, p, [p; 3]);
        let want = Mat3::new(1.0 - 2.0 * p, -p, -p, 0.0, p, 0.0, 0.0, 0.0, p);
        assert_relative_eq!(c, want, epsilon = 1e-15);
        // Column sums in absolute value.
        let norm1 = (0..3).map(|j| c.column(j).abs().sum()).fold(0.0, f64::max);
        assert_relative_eq!(norm1, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn determinant_and_inverse_sign() {
        let c = c_matrix_from_rates(1, 0.3, 0.1, [0.2, 0.0, 0.35]);
        assert_relative_eq!(c.determinant(), 0.2 * 0.35 * (1.0 - 0.3 - 0.1), epsilon = 1e-15);
        let inv = c.try_inverse().unwrap();
        assert!(inv.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn constant_rate_charts_are_half_scaled() {
        let cube = make_seed(SeedShape::Cube);
        let seq = chip_sequence(&cube, &RatePolicy::constant(0.3).unwrap(), 2, 0).unwrap();
        let charts = chart_sequence(&seq, SigmaChoice::Sorted, 1e-12).unwrap();
        for ch in &charts {
            for v in 0..ch.len() as u32 {
                for l in ch.lambda(v) {
                    assert!((l - 0.5).abs() < 1e-12);
                }
            }
        }
        // F_j(0) = A_j and F_j(e_1) is the midpoint towards σ(1).
        let f = charts[0].map(&cube, 0);
        assert_eq!(f.apply(&Vec3::zeros()), cube.position(0).coords);
        let u = charts[0].sigma(&cube, 0)[0];
        let mid = (cube.position(0).coords + cube.position(u).coords) / 2.0;
        // λ carries the 1e-12 series tolerance.
        assert!((f.apply(&Vec3::x()) - mid).norm() < 1e-11);
    }

    #[test]
    fn sigma_choices_permute_sorted_order() {
        let cube = make_seed(SeedShape::Cube);
        let sorted = SigmaChoice::Sorted.slots(&cube, 5);
        let ids = sorted.map(|s| cube.neighbours(5)[s as usize]);
        assert!(ids[0] < ids[1] && ids[1] < ids[2]);
        assert_eq!(SigmaChoice::Reversed.slots(&cube, 5), [sorted[2], sorted[1], sorted[0]]);
        assert_eq!("rotated".parse::<SigmaChoice>().unwrap(), SigmaChoice::Rotated);
    }

    #[test]
    fn g_map_fixes_sibling_direction_and_matches_cousins() {
        let cube = make_seed(SeedShape::Cube);
        let pol = RatePolicy::uniform(0.05, 0.4).unwrap();
        let seq = chip_sequence(&cube, &pol, 2, 4).unwrap();
        let charts = chart_sequence(&seq, SigmaChoice::Rotated, 1e-13).unwrap();
        for c in 0..24u32 {
            let id = VertexId::new(1, c as u64);
            let g = g_map(&charts[0], &charts[1], &seq, id).unwrap();
            let sib = charts[1].sigma_slot_of(c, (c % 3) as usize);
            let mut e = Vec3::zeros();
            e[sib] = 1.0;
            assert!((g.apply(&e) - e).amax() < 1e-12);
        }
        // Cousins k and l meet on the new triangle edge between them.
        for v in 0..8u32 {
            let slots = charts[0].slots(v);
            for a in 0..3 {
                for b in 0..3 {
                    if a == b {
                        continue;
                    }
                    let (ka, kb) = (3 * v + slots[a] as u32, 3 * v + slots[b] as u32);
                    let ga = g_map(&charts[0], &charts[1], &seq, VertexId::new(1, ka as u64)).unwrap();
                    let gb = g_map(&charts[0], &charts[1], &seq, VertexId::new(1, kb as u64)).unwrap();
                    let mut ea = Vec3::zeros();
                    ea[a] = 1.0;
                    let mut eb = Vec3::zeros();
                    eb[b] = 1.0;
                    assert!((ga.apply(&eb) - gb.apply(&ea)).amax() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn affine_inverse_round_trips() {
        let m = AffineMap3::new(Mat3::new(2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0), Vec3::new(1.0, 2.0, 3.0));
        let id = m.compose(&m.inverse().unwrap());
        assert!(id.distance_on_reference(&AffineMap3::identity()) < 1e-14);
    }
}
