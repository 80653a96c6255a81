use super::{g_map, reference_points, AffineMap3, Chart, MatrixWord};
use crate::chipper::ChipSequence;
use crate::polytope::VertexId;
use crate::{Result, Vec3};

/// Barycentric slack for membership in the reference tetrahedron.
pub const W_SLACK: f64 = 1e-10;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Whether `G` maps the corners of W = conv{0, e_1, e_2, e_3} into W.
/// W is convex, so this certifies `G(W) ⊂ W`.
pub fn tetra_invariance_check(word: &MatrixWord) -> bool {
    reference_points().iter().all(|x| in_tetrahedron(&word.g.apply(x)))
}

fn in_tetrahedron(y: &Vec3) -> bool {
    y.iter().all(|&c| c >= -W_SLACK) && y.sum() <= 1.0 + W_SLACK
}

/// Orthonormal coordinates on the plane orthogonal to (1, 1, 1).
fn project(x: &Vec3) -> Vec2 {
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6f64.sqrt();
    Vec2::new((x.x - x.y) / s2, (x.x + x.y - 2.0 * x.z) / s6)
}

/// Projection of `G(T_0)`, `T_0 = conv{e_1, e_2, e_3}`, counter-clockwise.
pub fn projected_triangle(g: &AffineMap3) -> [Vec2; 3] {
    let mut t = [Vec3::x(), Vec3::y(), Vec3::z()].map(|e| project(&g.apply(&e)));
    if signed_area(&t) < 0.0 {
        t.swap(1, 2);
    }
    t
}

fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - a.y * b.x
        })
        .sum::<f64>()
        / 2.0
}

/// Area of the intersection of two counter-clockwise convex polygons
/// (Sutherland–Hodgman clipping).
pub fn convex_intersection_area(subject: &[Vec2], clip: &[Vec2]) -> f64 {
    let mut out: Vec<Vec2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let edge = b - a;
        let side = |p: &Vec2| edge.x * (p.y - a.y) - edge.y * (p.x - a.x);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for k in 0..m {
            let (p, q) = (input[k], input[(k + 1) % m]);
            let (sp, sq) = (side(&p), side(&q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push(p + (q - p) * t);
            }
        }
    }
    if out.len() < 3 {
        0.0
    } else {
        signed_area(&out).max(0.0)
    }
}

/// Whether the projected open images of `T_0` under two words are disjoint
/// (intersection area at most `1e-14` times the squared scale).
pub fn proj_disjointness_check(a: &MatrixWord, b: &MatrixWord) -> bool {
    let ta = projected_triangle(&a.g);
    let tb = projected_triangle(&b.g);
    let scale = ta
        .iter()
        .chain(tb.iter())
        .flat_map(|p| [p.x.abs(), p.y.abs()])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    convex_intersection_area(&ta, &tb) <= 1e-14 * scale * scale
}

/// Largest deviation of `F_child` from `F_mother ∘ G` on the reference points.
pub fn chart_identity_error(
    seq: &ChipSequence,
    mother_chart: &Chart,
    child_chart: &Chart,
    child: u32,
) -> Result<f64> {
    let n = mother_chart.generation() as usize;
    let id = VertexId::new(n as u32 + 1, child as u64);
    let g = g_map(mother_chart, child_chart, seq, id)?;
    let f_child = child_chart.map(seq.poly(n + 1), child);
    let f_mother = mother_chart.map(seq.poly(n), child / 3);
    Ok(f_child.distance_on_reference(&f_mother.compose(&g)))
}

/// Largest gap between the chart endpoints `F_v(e_l)` and `F_u(e_l')` of the
/// two charts meeting on each edge `(v, u)`. Zero means the images of the
/// unit segments `[0, e_l]` under all charts tile the edge net.
pub fn union_identity_error(seq: &ChipSequence, chart: &Chart) -> f64 {
    let p = seq.poly(chart.generation() as usize);
    let mut worst = 0.0f64;
    for v in 0..p.vertex_count() as u32 {
        let fv = chart.map(p, v);
        let sigma = chart.sigma(p, v);
        for (l, &u) in sigma.iter().enumerate() {
            let back = chart.sigma(p, u).iter().position(|&w| w == v).expect("symmetric");
            let fu = chart.map(p, u);
            let mut el = Vec3::zeros();
            el[l] = 1.0;
            let mut eb = Vec3::zeros();
            eb[back] = 1.0;
            worst = worst.max((fv.apply(&el) - fu.apply(&eb)).amax());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat3;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + s, y0),
            Vec2::new(x0 + s, y0 + s),
            Vec2::new(x0, y0 + s),
        ]
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = square(0.0, 0.0, 2.0);
        let b = square(1.0, 1.0, 2.0);
        assert!((convex_intersection_area(&a, &b) - 1.0).abs() < 1e-15);
        let c = square(2.0, 0.0, 1.0);
        assert!(convex_intersection_area(&a, &c).abs() < 1e-15);
        assert!((convex_intersection_area(&a, &a) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn identity_word_stays_in_tetrahedron() {
        let w = MatrixWord::identity(VertexId::new(0, 0));
        assert!(tetra_invariance_check(&w));
        let mut bad = w.clone();
        bad.g.translate += Vec3::new(2.0, 0.0, 0.0);
        assert!(!tetra_invariance_check(&bad));
    }

    #[test]
    fn identical_words_overlap() {
        let mut w = MatrixWord::identity(VertexId::new(0, 0));
        w.g = AffineMap3::new(Mat3::identity() * 0.5, Vec3::new(0.1, 0.1, 0.1));
        assert!(!proj_disjointness_check(&w, &w));
    }
}
