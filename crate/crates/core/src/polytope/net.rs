use super::Polyhedron;
use crate::Point3;

/// Union of the edges of a polyhedron as a list of segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeNet {
    pub segments: Vec<[Point3; 2]>,
}

impl EdgeNet {
    pub fn new(segments: Vec<[Point3; 2]>) -> Self {
        Self { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Axis-aligned bounding box `(min, max)`; `None` for an empty net.
    pub fn bbox(&self) -> Option<(Point3, Point3)> {
        let mut it = self.segments.iter().flatten();
        let first = *it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        });
        Some((lo, hi))
    }

    /// Length of the bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        self.bbox().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|[a, b]| (b - a).norm()).sum()
    }
}

/// One segment per undirected edge, endpoints copied from the vertices.
pub fn edge_net(p: &Polyhedron) -> EdgeNet {
    EdgeNet::new(
        p.edges()
            .map(|(v, u)| [p.position(v), p.position(u)])
            .collect(),
    )
}
