use chipnet::charts::{chart_sequence, SigmaChoice};
use chipnet::dimension::{box_count, dyadic_scales, s0_estimate};
use chipnet::polytope::{edge_net, hausdorff_distance, obj, validate};
use chipnet::{chip_sequence, make_seed, RatePolicy, SeedShape, WordSpace};
use proptest::prelude::*;

#[test]
fn obj_coordinates_round_trip_exactly() {
    let seq = chip_sequence(&make_seed(SeedShape::Dodecahedron), &RatePolicy::uniform(0.1, 0.4).unwrap(), 2, 3).unwrap();
    let p = seq.last();
    let mut buf = Vec::new();
    obj::write_polyhedron(&mut buf, p).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let parsed: Vec<[f64; 3]> = text
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let xs: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            [xs[0], xs[1], xs[2]]
        })
        .collect();
    assert_eq!(parsed.len(), p.vertex_count());
    for (q, r) in p.positions().iter().zip(&parsed) {
        assert_eq!([q.x, q.y, q.z], *r);
    }
    let faces = text.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!(faces, p.face_count());
}

#[test]
fn every_shape_stays_valid_under_chipping() {
    for shape in [SeedShape::Tetrahedron, SeedShape::Cube, SeedShape::Dodecahedron] {
        let seq = chip_sequence(&make_seed(shape), &RatePolicy::uniform(0.05, 0.45).unwrap(), 4, 11).unwrap();
        for p in seq.polys() {
            let r = validate(p);
            assert!(r.passed(), "{shape}: {:?}", r.failures().collect::<Vec<_>>());
        }
        chart_sequence(&seq, SigmaChoice::Rotated, 1e-13).unwrap();
    }
}

#[test]
fn neighbour_order_does_not_move_the_pressure_root() {
    // Reordering the seed neighbours permutes rows and columns of every
    // product, which leaves singular values unchanged.
    let seq = chip_sequence(&make_seed(SeedShape::Cube), &RatePolicy::uniform(0.1, 0.4).unwrap(), 0, 4).unwrap();
    let roots: Vec<f64> = [SigmaChoice::Sorted, SigmaChoice::Reversed, SigmaChoice::Rotated]
        .iter()
        .map(|&s| s0_estimate(&[6], (0.0, 3.0), 1e-9, &WordSpace::new(&seq, s)).unwrap().value)
        .collect();
    assert!((roots[0] - roots[1]).abs() < 1e-8 && (roots[0] - roots[2]).abs() < 1e-8, "{roots:?}");
}

#[test]
fn constant_quarter_root_regression() {
    // Measured anchor: the per-root pressure root at depth 8.
    let seq = chip_sequence(&make_seed(SeedShape::Cube), &RatePolicy::constant(0.25).unwrap(), 0, 0).unwrap();
    let est = s0_estimate(&[8], (0.0, 3.0), 1e-6, &WordSpace::new(&seq, SigmaChoice::Sorted)).unwrap();
    assert!((est.value - 1.2915).abs() < 1e-3, "{}", est.value);
}

#[test]
fn box_counts_grow_with_finer_scales() {
    let seq = chip_sequence(&make_seed(SeedShape::Cube), &RatePolicy::constant(0.3).unwrap(), 5, 0).unwrap();
    let net = edge_net(seq.last());
    let series = box_count(&net, &dyadic_scales(net.diameter(), 1..=6)).unwrap();
    for w in series.points.windows(2) {
        assert!(w[1].1 > w[0].1, "{series:?}");
        // Halving the box size at most multiplies the count by 8.
        assert!(w[1].1 <= 8 * w[0].1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hausdorff_is_symmetric_and_triangular(seed in 0u64..1000, lo in 0.05f64..0.2) {
        let policy = RatePolicy::uniform(lo, 0.4).unwrap();
        let seq = chip_sequence(&make_seed(SeedShape::Tetrahedron), &policy, 2, seed).unwrap();
        let nets: Vec<_> = seq.polys().iter().map(edge_net).collect();
        let eps = 1e-3;
        let d = |a: usize, b: usize| hausdorff_distance(&nets[a], &nets[b], eps).unwrap();
        let (d01, d10, d12, d02) = (d(0, 1), d(1, 0), d(1, 2), d(0, 2));
        let slack = |h: &chipnet::polytope::HausdorffEstimate| h.error_bound;
        prop_assert!((d01.value - d10.value).abs() <= slack(&d01) + slack(&d10));
        prop_assert!(d02.value <= d01.value + d12.value + slack(&d02) + slack(&d01) + slack(&d12));
        prop_assert!(d01.value > 0.0);
    }
}
