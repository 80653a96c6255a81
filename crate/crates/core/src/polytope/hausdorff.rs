use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::EdgeNet;
use crate::{Error, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// The true distance is within this of `value`.
    pub error_bound: f64,
}

/// Hausdorff distance between two edge nets. Each net is sampled with
/// spacing at most `eps` and the samples are measured exactly against the
/// segments of the other net, so the error is at most `eps / 2`.
pub fn hausdorff_distance(a: &EdgeNet, b: &EdgeNet, eps: f64) -> Result<HausdorffEstimate> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling spacing must be positive, got {eps}")));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let diag = a.diameter().max(b.diameter());
    let ga = SegmentGrid::new(a, diag);
    let gb = SegmentGrid::new(b, diag);
    let value = directed(&sample(a, eps), &gb).max(directed(&sample(b, eps), &ga));
    Ok(HausdorffEstimate {
        value,
        error_bound: eps / 2.0,
    })
}

/// Points along every segment with spacing at most `eps`, endpoints included.
pub(crate) fn sample(net: &EdgeNet, eps: f64) -> Vec<Point3> {
    let mut out = Vec::new();
    for [p, q] in &net.segments {
        let k = ((q - p).norm() / eps).ceil().max(1.0) as usize;
        for i in 0..=k {
            out.push(p + (q - p) * (i as f64 / k as f64));
        }
    }
    out
}

fn directed(from: &[Point3], to: &SegmentGrid) -> f64 {
    let mut worst = 0.0f64;
    for p in from {
        // Only distances above the running maximum matter.
        let d = to.nearest_above(p, worst);
        worst = worst.max(d);
    }
    worst
}

fn point_segment_distance2(p: &Point3, [a, b]: &[Point3; 2]) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * t - p).norm_squared()
}

/// Uniform hash grid; each segment is listed in every cell its bounding box meets.
struct SegmentGrid<'a> {
    segments: &'a [[Point3; 2]],
    cell: f64,
    origin: Point3,
    extent: [i64; 3],
    buckets: HashMap<[i64; 3], Vec<u32>>,
}

impl<'a> SegmentGrid<'a> {
    fn new(net: &'a EdgeNet, diag: f64) -> Self {
        let segments = &net.segments[..];
        let (origin, _) = net.bbox().expect("non-empty net");
        let mean = net.total_length() / segments.len() as f64;
        let cell = mean.max(diag / 4096.0).max(f64::MIN_POSITIVE);
        let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut extent = [0i64; 3];
        for (i, [p, q]) in segments.iter().enumerate() {
            let lo = Self::key(origin, cell, &p.inf(q));
            let hi = Self::key(origin, cell, &p.sup(q));
            for k in 0..3 {
                extent[k] = extent[k].max(hi[k]);
            }
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        buckets.entry([x, y, z]).or_default().push(i as u32);
                    }
                }
            }
        }
        Self {
            segments,
            cell,
            origin,
            extent,
            buckets,
        }
    }

    fn key(origin: Point3, cell: f64, p: &Point3) -> [i64; 3] {
        let d = p - origin;
        [
            (d.x / cell).floor() as i64,
            (d.y / cell).floor() as i64,
            (d.z / cell).floor() as i64,
        ]
    }

    /// Distance from `p` to the nearest segment, or any value `<= floor`
    /// once a segment within `floor` is found.
    fn nearest_above(&self, p: &Point3, floor: f64) -> f64 {
        let c = Self::key(self.origin, self.cell, p);
        let max_ring = (0..3)
            .map(|k| c[k].abs().max((c[k] - self.extent[k]).abs()))
            .max()
            .unwrap_or(0)
            + 1;
        // Rings closer than the occupied box are empty.
        let first_ring = (0..3)
            .map(|k| (-c[k]).max(c[k] - self.extent[k]).max(0))
            .max()
            .unwrap_or(0);
        let mut best2 = f64::INFINITY;
        for r in first_ring..=max_ring {
            // Offsets on the shell of Chebyshev radius r, clipped to the box.
            let lo = |k: usize| (-r).max(-c[k]);
            let hi = |k: usize| r.min(self.extent[k] - c[k]);
            for dx in lo(0)..=hi(0) {
                for dy in lo(1)..=hi(1) {
                    let on_shell = dx.abs() == r || dy.abs() == r;
                    let zs: SmallVec<[i64; 2]> = if on_shell {
                        (lo(2)..=hi(2)).collect()
                    } else {
                        [-r, r].into_iter().filter(|&z| z >= lo(2) && z <= hi(2)).collect()
                    };
                    for dz in zs {
                        if let Some(ids) = self.buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in ids {
                                best2 = best2.min(point_segment_distance2(p, &self.segments[i as usize]));
                            }
                        }
                    }
                }
            }
            let best = best2.sqrt();
            // Segment points outside ring r are at least r cells away.
            if best <= floor || best <= r as f64 * self.cell {
                return best;
            }
        }
        best2.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{edge_net, make_seed, SeedShape};

    fn seg(a: [f64; 3], b: [f64; 3]) -> [Point3; 2] {
        [Point3::new(a[0], a[1], a[2]), Point3::new(b[0], b[1], b[2])]
    }

    fn brute(a: &EdgeNet, b: &EdgeNet, eps: f64) -> f64 {
        let dir = |x: &EdgeNet, y: &EdgeNet| {
            sample(x, eps)
                .iter()
                .map(|p| {
                    y.segments
                        .iter()
                        .map(|s| point_segment_distance2(p, s).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn identical_nets_have_zero_distance() {
        let net = edge_net(&make_seed(SeedShape::Cube));
        let h = hausdorff_distance(&net, &net, 1e-2).unwrap();
        assert!(h.value < 1e-15);
    }

    #[test]
    fn segment_versus_endpoints() {
        let a = EdgeNet::new(vec![seg([0.0; 3], [1.0, 0.0, 0.0])]);
        let b = EdgeNet::new(vec![
            seg([0.0; 3], [0.0; 3]),
            seg([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ]);
        let eps = 1e-3;
        let h = hausdorff_distance(&a, &b, eps).unwrap();
        assert!((h.value - 0.5).abs() <= eps);
    }

    #[test]
    fn empty_net_is_rejected() {
        let a = EdgeNet::new(vec![seg([0.0; 3], [1.0, 0.0, 0.0])]);
        let err = hausdorff_distance(&a, &EdgeNet::default(), 0.1).unwrap_err();
        assert_eq!(err.to_string(), "empty set has no Hausdorff distance");
    }

    #[test]
    fn grid_search_matches_brute_force_on_far_sets() {
        let a = EdgeNet::new(vec![seg([0.0; 3], [1.0, 0.0, 0.0]), seg([0.0; 3], [0.0, 0.2, 0.0])]);
        let b = EdgeNet::new(vec![seg([5.0, 3.0, 1.0], [5.0, 3.0, 2.0])]);
        let eps = 0.05;
        let h = hausdorff_distance(&a, &b, eps).unwrap();
        assert!((h.value - brute(&a, &b, eps)).abs() < 1e-12);
    }

    #[test]
    fn helix_against_brute_force() {
        let pts: Vec<Point3> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.3;
                Point3::new(t.cos(), t.sin(), 0.1 * t)
            })
            .collect();
        let a = EdgeNet::new(pts.windows(2).map(|w| [w[0], w[1]]).collect());
        let b = EdgeNet::new(
            pts.windows(2)
                .step_by(3)
                .map(|w| [w[0] + crate::Vec3::new(0.05, 0.0, 0.0), w[1]])
                .collect(),
        );
        let eps = 0.02;
        let h = hausdorff_distance(&a, &b, eps).unwrap();
        assert!((h.value - brute(&a, &b, eps)).abs() < 1e-12);
    }
}
