//! Wavefront OBJ output for meshes and edge nets.
//!
//! Coordinates are written with 17 significant digits so they round-trip.

use std::collections::HashMap;
use std::io::Write;

use super::{EdgeNet, Polyhedron};
use crate::{Point3, Result};

fn write_vertex(w: &mut impl Write, p: &Point3) -> std::io::Result<()> {
    writeln!(w, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)
}

/// Vertices and polygonal faces, 1-based indices.
pub fn write_polyhedron(w: &mut impl Write, p: &Polyhedron) -> Result<()> {
    writeln!(
        w,
        "# generation {} V={} E={} F={}",
        p.generation(),
        p.vertex_count(),
        p.edge_count(),
        p.face_count()
    )?;
    for q in p.positions() {
        write_vertex(w, q)?;
    }
    for face in p.faces() {
        write!(w, "f")?;
        for &i in face {
            write!(w, " {}", i + 1)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Segment endpoints as vertices (bit-identical points shared) plus one
/// `l i j` element per segment.
pub fn write_edge_net(w: &mut impl Write, net: &EdgeNet) -> Result<()> {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut order: Vec<Point3> = Vec::new();
    let mut lines = Vec::with_capacity(net.len());
    for seg in &net.segments {
        let mut ids = [0usize; 2];
        for (k, p) in seg.iter().enumerate() {
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            ids[k] = *index.entry(key).or_insert_with(|| {
                order.push(*p);
                order.len()
            });
        }
        lines.push(ids);
    }
    writeln!(w, "# edge net, {} segments", net.len())?;
    for p in &order {
        write_vertex(w, p)?;
    }
    for [a, b] in lines {
        writeln!(w, "l {a} {b}")?;
    }
    Ok(())
}
