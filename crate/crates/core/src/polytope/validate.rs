use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{newell_normal, Polyhedron};
use crate::Vec3;

/// Convexity tolerance relative to the circumradius.
pub const TAU_CONV: f64 = 1e-9;
/// Face planarity tolerance relative to the circumradius.
pub const TAU_PLANE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity the check compares against its threshold.
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs the structural and geometric checks. Failures are report entries.
pub fn validate(p: &Polyhedron) -> ValidationReport {
    let scale = p.circumradius().max(f64::MIN_POSITIVE);
    let checks = vec![
        symmetry(p),
        regularity(p),
        euler(p),
        convexity(p, scale),
        planarity(p, scale),
    ];
    ValidationReport { checks }
}

fn symmetry(p: &Polyhedron) -> CheckResult {
    let n = p.vertex_count() as u32;
    let mut bad = 0usize;
    for v in 0..n {
        for &u in p.neighbours(v) {
            if u >= n || u == v || !p.neighbours(u).contains(&v) {
                bad += 1;
            }
        }
    }
    CheckResult {
        name: "symmetry".into(),
        passed: bad == 0,
        residual: bad as f64,
        detail: format!("{bad} asymmetric adjacency entries"),
    }
}

fn regularity(p: &Polyhedron) -> CheckResult {
    let bad: Vec<u32> = (0..p.vertex_count() as u32)
        .filter(|&v| p.neighbours(v).len() != 3)
        .collect();
    CheckResult {
        name: "3-regularity".into(),
        passed: bad.is_empty(),
        residual: bad.len() as f64,
        detail: match bad.first() {
            Some(&v) => format!(
                "{} vertices without 3 neighbours (first: {v} with {})",
                bad.len(),
                p.neighbours(v).len()
            ),
            None => "all vertices have 3 neighbours".into(),
        },
    }
}

fn euler(p: &Polyhedron) -> CheckResult {
    let v = p.vertex_count() as i64;
    let degree_sum: i64 = (0..v as u32).map(|i| p.neighbours(i).len() as i64).sum();
    let e = degree_sum / 2;
    let f = p.face_count() as i64;
    let chi = v - e + f;
    let passed = degree_sum % 2 == 0 && chi == 2 && 2 * e == 3 * v;
    CheckResult {
        name: "euler".into(),
        passed,
        residual: (chi - 2) as f64,
        detail: format!("V={v} E={e} F={f} V-E+F={chi}"),
    }
}

/// Local convexity at every face corner: the vertices within two edges of
/// the corner that are not on the face must lie strictly below the plane
/// through the corner and its two face neighbours. A closed, locally convex
/// polyhedral surface bounds a convex body.
fn convexity(p: &Polyhedron, scale: f64) -> CheckResult {
    let tol = TAU_CONV * scale;
    let mut worst = f64::NEG_INFINITY;
    let mut degenerate = 0usize;
    let nv = p.vertex_count() as u32;
    for face in p.faces() {
        let on_face: HashSet<u32> = face.iter().copied().collect();
        let m = face.len();
        for t in 0..m {
            let (a, b, c) = (face[(t + m - 1) % m], face[t], face[(t + 1) % m]);
            if [a, b, c].iter().any(|&i| i >= nv) {
                degenerate += 1;
                continue;
            }
            let pb = p.position(b);
            let u = pb - p.position(a);
            let w = p.position(c) - pb;
            let n: Vec3 = u.cross(&w);
            let norm = n.norm();
            if !(norm > 1e-14 * u.norm() * w.norm()) {
                degenerate += 1;
                continue;
            }
            let n = n / norm;
            for &x in p.neighbours(b) {
                for y in std::iter::once(x).chain(p.neighbours(x).iter().copied()) {
                    if y >= nv || on_face.contains(&y) {
                        continue;
                    }
                    let d = n.dot(&(p.position(y) - pb));
                    worst = worst.max(d);
                }
            }
        }
    }
    let passed = degenerate == 0 && worst < -tol;
    CheckResult {
        name: "convexity".into(),
        passed,
        residual: worst / scale,
        detail: format!(
            "max relative signed distance {:.3e} (needs < -{TAU_CONV:e}), {degenerate} degenerate corners",
            worst / scale
        ),
    }
}

fn planarity(p: &Polyhedron, scale: f64) -> CheckResult {
    let nv = p.vertex_count() as u32;
    let mut worst = 0.0f64;
    for face in p.faces() {
        if face.len() < 4 || face.iter().any(|&i| i >= nv) {
            continue;
        }
        let pts = face.iter().map(|&i| p.position(i));
        let n = newell_normal(pts.clone());
        let norm = n.norm();
        if norm == 0.0 {
            worst = f64::INFINITY;
            continue;
        }
        let n = n / norm;
        let centre = pts.clone().fold(Vec3::zeros(), |a, q| a + q.coords) / face.len() as f64;
        for q in pts {
            worst = worst.max(n.dot(&(q.coords - centre)).abs());
        }
    }
    CheckResult {
        name: "planarity".into(),
        passed: worst <= TAU_PLANE * scale,
        residual: worst / scale,
        detail: format!("max relative face-plane deviation {:.3e}", worst / scale),
    }
}
