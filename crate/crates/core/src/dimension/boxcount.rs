use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{DimEstimate, EstimateMethod};
use crate::polytope::EdgeNet;
use crate::{Error, Point3, Result, Vec3};

/// Occupied-cube counts `(δ, N)` in the order the scales were given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    pub points: Vec<(f64, u64)>,
}

const AXIS_BITS: u32 = 21;

/// `diameter · 2^{-k}` for `k` in `ks`.
pub fn dyadic_scales(diameter: f64, ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| diameter * 2f64.powi(-k)).collect()
}

/// Number of grid cubes of side `δ` met by the net, for each scale, with the
/// grid anchored at the bounding-box minimum.
pub fn box_count(net: &EdgeNet, scales: &[f64]) -> Result<BoxCountSeries> {
    box_count_anchored(net, scales, Vec3::zeros())
}

/// As [`box_count`], with the grid origin moved to `min - offset·δ`;
/// `offset` is a fraction of a cell in each axis, in `[0, 1)`.
pub fn box_count_anchored(net: &EdgeNet, scales: &[f64], offset: Vec3) -> Result<BoxCountSeries> {
    let (lo, hi) = net.bbox().ok_or(Error::EmptySet)?;
    if offset.iter().any(|&o| !(0.0..1.0).contains(&o)) {
        return Err(Error::InvalidParameter(format!("grid offset {offset:?} outside [0, 1)")));
    }
    let mut points = Vec::with_capacity(scales.len());
    for (k, &delta) in scales.iter().enumerate() {
        if !(delta > 0.0) || (k > 0 && delta >= scales[k - 1]) {
            return Err(Error::InvalidParameter("scales must be positive and decreasing".into()));
        }
        let grid = Grid::new(lo, hi, delta, offset)?;
        let mut cells = HashSet::new();
        for seg in &net.segments {
            grid.trace(seg, &mut cells);
        }
        points.push((delta, cells.len() as u64));
    }
    Ok(BoxCountSeries { points })
}

struct Grid {
    origin: Point3,
    delta: f64,
    dims: [i64; 3],
}

impl Grid {
    fn new(lo: Point3, hi: Point3, delta: f64, offset: Vec3) -> Result<Self> {
        let origin = lo - offset * delta;
        let mut dims = [1i64; 3];
        for a in 0..3 {
            let extent = hi[a] - origin[a];
            let n = (extent / delta * (1.0 - 1e-12)).ceil().max(1.0);
            if n >= (1u64 << AXIS_BITS) as f64 {
                return Err(Error::InvalidParameter(format!("scale {delta} too fine for the grid")));
            }
            dims[a] = n as i64;
        }
        Ok(Self { origin, delta, dims })
    }

    fn index(&self, x: f64, a: usize) -> i64 {
        (((x - self.origin[a]) / self.delta).floor() as i64).clamp(0, self.dims[a] - 1)
    }

    fn key(&self, idx: [i64; 3]) -> u64 {
        ((idx[0] as u64) << (2 * AXIS_BITS)) | ((idx[1] as u64) << AXIS_BITS) | idx[2] as u64
    }

    fn cell_at(&self, x: &Point3) -> [i64; 3] {
        [self.index(x.x, 0), self.index(x.y, 1), self.index(x.z, 2)]
    }

    /// Adds every cell the closed segment meets: cells at the endpoints, at
    /// each plane crossing and at the midpoint of every piece in between.
    fn trace(&self, seg: &[Point3; 2], cells: &mut HashSet<u64>) {
        let (a, b) = (seg[0], seg[1]);
        let d = b - a;
        let mut ts: Vec<(f64, Option<(usize, i64)>)> = vec![(0.0, None), (1.0, None)];
        for ax in 0..3 {
            if d[ax] == 0.0 {
                continue;
            }
            let ka = (a[ax] - self.origin[ax]) / self.delta;
            let kb = (b[ax] - self.origin[ax]) / self.delta;
            let (k0, k1) = (ka.min(kb).floor() as i64 + 1, ka.max(kb).ceil() as i64 - 1);
            for k in k0.max(1)..=k1.min(self.dims[ax] - 1) {
                let t = (self.origin[ax] + k as f64 * self.delta - a[ax]) / d[ax];
                if t > 0.0 && t < 1.0 {
                    ts.push((t, Some((ax, k))));
                }
            }
        }
        ts.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (i, &(t, plane)) in ts.iter().enumerate() {
            let mut idx = self.cell_at(&(a + d * t));
            if let Some((ax, k)) = plane {
                idx[ax] = k;
            }
            cells.insert(self.key(idx));
            if let Some(&(next, _)) = ts.get(i + 1) {
                if next > t {
                    cells.insert(self.key(self.cell_at(&(a + d * (0.5 * (t + next))))));
                }
            }
        }
    }
}

/// Least-squares slope of `log N` against `log(1/δ)` over scales in
/// `[window.0, window.1]`, bracketed by two standard errors.
pub fn box_dim_fit(series: &BoxCountSeries, window: (f64, f64)) -> Result<DimEstimate> {
    let (wmin, wmax) = (window.0.min(window.1), window.0.max(window.1));
    let slack = 1e-12 * wmax;
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|(d, _)| *d >= wmin - slack && *d <= wmax + slack)
        .map(|&(d, n)| ((1.0 / d).ln(), (n as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateWindow(format!("{} points in window, need 3", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateWindow("all scales equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(DimEstimate {
        value: slope,
        lo: slope - 2.0 * stderr,
        hi: slope + 2.0 * stderr,
        method: EstimateMethod::BoxSlope,
        window: (wmin, wmax),
        levels: pts,
        residual: (ssr / k).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn counts(net: &EdgeNet, scales: &[f64]) -> Vec<u64> {
        box_count(net, scales).unwrap().points.iter().map(|x| x.1).collect()
    }

    #[test]
    fn unit_segment_covers_m_cells() {
        let net = EdgeNet::new(vec![[p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0)]]);
        let ms = [1, 2, 3, 7, 10, 64, 100];
        let scales: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
        assert_eq!(counts(&net, &scales), ms.map(|m| m as u64).to_vec());
    }

    #[test]
    fn square_perimeter_count() {
        let c = [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(1.0, 1.0, 0.0), p(0.0, 1.0, 0.0)];
        let net = EdgeNet::new((0..4).map(|i| [c[i], c[(i + 1) % 4]]).collect());
        let ms = [2u64, 3, 5, 8, 16, 33];
        let scales: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
        assert_eq!(counts(&net, &scales), ms.map(|m| 4 * m - 4).to_vec());
    }

    #[test]
    fn diagonal_segment_stair_count() {
        // The segment crosses 9 vertical and 6 horizontal grid lines at
        // distinct points; each crossing enters a new cell.
        let net = EdgeNet::new(vec![[p(0.0, 0.0, 0.0), p(1.0, 0.7, 0.0)]]);
        let delta = 0.1;
        let n = counts(&net, &[delta])[0];
        assert_eq!(n, 10 + 7 - 1);
    }

    #[test]
    fn exact_power_laws_fit() {
        let line = BoxCountSeries {
            points: (1..8).map(|k| (2f64.powi(-k), 2u64.pow(k as u32))).collect(),
        };
        let est = box_dim_fit(&line, (1e-3, 1.0)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9 && est.hi - est.lo < 1e-9);
        let plane = BoxCountSeries {
            points: (1..8).map(|k| (2f64.powi(-k), 4u64.pow(k as u32))).collect(),
        };
        assert!((box_dim_fit(&plane, (1e-3, 1.0)).unwrap().value - 2.0).abs() < 1e-9);
        assert!(matches!(box_dim_fit(&plane, (0.2, 0.6)), Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn bad_inputs() {
        let net = EdgeNet::new(vec![[p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0)]]);
        assert!(box_count(&net, &[0.5, 0.5]).is_err());
        assert!(box_count(&net, &[-1.0]).is_err());
        assert!(box_count(&EdgeNet::new(vec![]), &[0.5]).is_err());
        assert!(box_count_anchored(&net, &[0.5], Vec3::new(1.0, 0.0, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn counts_match_a_dense_sampling(
            ends in prop::array::uniform6(-1.0f64..1.0),
            m in 2u32..12,
        ) {
            let a = p(ends[0], ends[1], ends[2]);
            let b = p(ends[3], ends[4], ends[5]);
            let net = EdgeNet::new(vec![[a, b], [b, p(0.9, -0.9, 0.2)]]);
            let delta = 2.0 / m as f64;
            let (lo, hi) = net.bbox().unwrap();
            let grid = Grid::new(lo, hi, delta, Vec3::zeros()).unwrap();
            let mut sampled = HashSet::new();
            for seg in &net.segments {
                for i in 0..=20000 {
                    let t = i as f64 / 20000.0;
                    sampled.insert(grid.key(grid.cell_at(&(seg[0] + (seg[1] - seg[0]) * t))));
                }
            }
            let exact = counts(&net, &[delta])[0];
            // Sampling can only miss cells, never invent them.
            prop_assert!(sampled.len() as u64 <= exact);
            prop_assert!(exact <= sampled.len() as u64 + 3);
        }

        #[test]
        fn shifted_grids_agree(ox in 0.0f64..1.0, oy in 0.0f64..1.0, oz in 0.0f64..1.0) {
            // A closed curve filling all three directions.
            let pts: Vec<Point3> = (0..=400)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::TAU / 400.0;
                    p(t.cos() + 0.3 * (5.0 * t).cos(), t.sin() + 0.3 * (5.0 * t).sin(), (3.0 * t).sin())
                })
                .collect();
            let net = EdgeNet::new(pts.windows(2).map(|w| [w[0], w[1]]).collect());
            let scales = dyadic_scales(net.diameter(), 3..=7);
            let base = box_count(&net, &scales).unwrap();
            let moved = box_count_anchored(&net, &scales, Vec3::new(ox, oy, oz)).unwrap();
            for (x, y) in base.points.iter().zip(&moved.points) {
                prop_assert!(((x.1 as f64).ln() - (y.1 as f64).ln()).abs() < 0.7);
            }
        }
    }
}
