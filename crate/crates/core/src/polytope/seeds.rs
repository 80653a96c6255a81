use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{newell_normal, Polyhedron};
use crate::{Error, Point3, Vec3};

/// Built-in simple seed polyhedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedShape {
    Tetrahedron,
    Cube,
    Dodecahedron,
}

impl FromStr for SeedShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "tetrahedron" | "tetra" => Ok(Self::Tetrahedron),
            "cube" => Ok(Self::Cube),
            "dodecahedron" | "dodeca" => Ok(Self::Dodecahedron),
            other => Err(Error::InvalidParameter(format!("unknown seed shape `{other}`"))),
        }
    }
}

impl fmt::Display for SeedShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tetrahedron => "tetrahedron",
            Self::Cube => "cube",
            Self::Dodecahedron => "dodecahedron",
        })
    }
}

/// Seed polyhedron at generation 0, centred at the origin with
/// circumradius 1. Neighbour lists are sorted by vertex id and faces are
/// oriented counter-clockwise seen from outside.
pub fn make_seed(shape: SeedShape) -> Polyhedron {
    let raw: Vec<[f64; 3]> = match shape {
        SeedShape::Tetrahedron => vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ],
        SeedShape::Cube => {
            let mut v = Vec::with_capacity(8);
            for &x in &[-1.0, 1.0] {
                for &y in &[-1.0, 1.0] {
                    for &z in &[-1.0, 1.0] {
                        v.push([x, y, z]);
                    }
                }
            }
            v
        }
        SeedShape::Dodecahedron => {
            let phi = (1.0 + 5f64.sqrt()) / 2.0;
            let inv = 1.0 / phi;
            let mut v = Vec::with_capacity(20);
            for &x in &[-1.0, 1.0] {
                for &y in &[-1.0, 1.0] {
                    for &z in &[-1.0, 1.0] {
                        v.push([x, y, z]);
                    }
                }
            }
            for &a in &[-1.0, 1.0] {
                for &b in &[-1.0, 1.0] {
                    v.push([0.0, a * inv, b * phi]);
                    v.push([a * inv, b * phi, 0.0]);
                    v.push([a * phi, 0.0, b * inv]);
                }
            }
            v
        }
    };
    let positions: Vec<Point3> = raw
        .iter()
        .map(|c| {
            let p = Vec3::new(c[0], c[1], c[2]);
            Point3::from(p / p.norm())
        })
        .collect();
    from_vertex_cloud(positions)
}

/// Adjacency from shortest vertex distances and faces from the rotation
/// system around each vertex. Only valid for vertex-transitive seeds.
fn from_vertex_cloud(positions: Vec<Point3>) -> Polyhedron {
    let n = positions.len();
    let mut min_d = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_d = min_d.min((positions[i] - positions[j]).norm());
        }
    }
    let neighbours: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && (positions[i] - positions[j]).norm() < min_d * (1.0 + 1e-9))
                .map(|j| j as u32)
                .collect()
        })
        .collect();

    // Neighbours of each vertex in counter-clockwise order about the outward
    // direction (the seed is centred at the origin).
    let rotation: Vec<Vec<u32>> = (0..n)
        .map(|v| {
            let normal = positions[v].coords.normalize();
            let dirs: Vec<Vec3> = neighbours[v]
                .iter()
                .map(|&u| {
                    let d = positions[u as usize] - positions[v];
                    d - normal * d.dot(&normal)
                })
                .collect();
            let e1 = dirs[0].normalize();
            let e2 = normal.cross(&e1);
            let mut order: Vec<(f64, u32)> = dirs
                .iter()
                .zip(&neighbours[v])
                .map(|(d, &u)| (d.dot(&e2).atan2(d.dot(&e1)), u))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            order.into_iter().map(|(_, u)| u).collect()
        })
        .collect();

    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut faces = Vec::new();
    for v in 0..n as u32 {
        for &u in &neighbours[v as usize] {
            if seen.contains(&(v, u)) {
                continue;
            }
            let mut face = Vec::new();
            let (mut a, mut b) = (v, u);
            while seen.insert((a, b)) {
                face.push(a);
                // Next corner: the neighbour of `b` preceding `a` in the
                // counter-clockwise rotation at `b`.
                let rot = &rotation[b as usize];
                let k = rot.iter().position(|&w| w == a).expect("rotation contains neighbour");
                let c = rot[(k + rot.len() - 1) % rot.len()];
                a = b;
                b = c;
            }
            let normal = newell_normal(face.iter().map(|&i| positions[i as usize]));
            let centre = face
                .iter()
                .fold(Vec3::zeros(), |acc, &i| acc + positions[i as usize].coords);
            if normal.dot(&centre) < 0.0 {
                face.reverse();
            }
            faces.push(face);
        }
    }
    Polyhedron::new(0, positions, neighbours, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(p: &Polyhedron) -> (usize, usize, usize) {
        (p.vertex_count(), p.edge_count(), p.face_count())
    }

    #[test]
    fn seed_combinatorics() {
        assert_eq!(counts(&make_seed(SeedShape::Tetrahedron)), (4, 6, 4));
        assert_eq!(counts(&make_seed(SeedShape::Cube)), (8, 12, 6));
        assert_eq!(counts(&make_seed(SeedShape::Dodecahedron)), (20, 30, 12));
        for s in [SeedShape::Tetrahedron, SeedShape::Cube, SeedShape::Dodecahedron] {
            let p = make_seed(s);
            assert!(p.is_simple());
            assert!((p.circumradius() - 1.0).abs() < 1e-15);
            assert!(p.centroid().coords.norm() < 1e-15);
        }
    }

    #[test]
    fn cube_faces_are_quads_and_face_sizes_match() {
        let cube = make_seed(SeedShape::Cube);
        assert!(cube.faces().iter().all(|f| f.len() == 4));
        let tet = make_seed(SeedShape::Tetrahedron);
        assert!(tet.faces().iter().all(|f| f.len() == 3));
        let dod = make_seed(SeedShape::Dodecahedron);
        assert!(dod.faces().iter().all(|f| f.len() == 5));
    }

    #[test]
    fn faces_point_outward() {
        for s in [SeedShape::Tetrahedron, SeedShape::Cube, SeedShape::Dodecahedron] {
            let p = make_seed(s);
            for f in p.faces() {
                let n = newell_normal(f.iter().map(|&i| p.position(i)));
                let c = f.iter().fold(Vec3::zeros(), |a, &i| a + p.position(i).coords);
                assert!(n.dot(&c) > 0.0);
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("Cube".parse::<SeedShape>().unwrap(), SeedShape::Cube);
        assert!("octahedron".parse::<SeedShape>().is_err());
    }
}
