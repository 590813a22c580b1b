//! Voxel-face surface meshes of the solute region.

use std::collections::HashMap;
use std::io::Write;

use crate::grid::BinaryField;

/// Quad mesh on the lattice of cell corners.
///
/// Vertices are stored in physical coordinates; each quad lists four vertex
/// indices counter-clockwise when seen from the solvent side.
#[derive(Debug, Clone, Default)]
pub struct QuadMesh {
    pub vertices: Vec<[f64; 3]>,
    pub quads: Vec<[u32; 4]>,
    /// Area of one quad (h²).
    pub face_area: f64,
}

impl QuadMesh {
    pub fn total_area(&self) -> f64 {
        self.quads.len() as f64 * self.face_area
    }

    pub fn write_obj<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# voxel surface: {} quads", self.quads.len())?;
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for q in &self.quads {
            writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1)?;
        }
        Ok(())
    }
}

// Corner offsets (in cell units) of the face on the +axis side, ordered so
// the right-hand normal points along +axis.
const POS_FACES: [[[i64; 3]; 4]; 3] = [
    [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]],
    [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]],
    [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
];

/// One quad per face between a solute cell and a solvent cell (or the
/// outside of the box, which counts as solvent).
pub fn extract_surface_mesh(field: &BinaryField) -> QuadMesh {
    let grid = *field.grid();
    let mut vertex_ids: HashMap<[i64; 3], u32> = HashMap::new();
    let mut mesh = QuadMesh {
        face_area: grid.h() * grid.h(),
        ..QuadMesh::default()
    };
    let mut vertex = |c: [i64; 3], mesh: &mut QuadMesh| -> u32 {
        *vertex_ids.entry(c).or_insert_with(|| {
            mesh.vertices
                .push(c.map(|x| -grid.half_width() + x as f64 * grid.h()));
            (mesh.vertices.len() - 1) as u32
        })
    };
    for l in 0..grid.cell_count() {
        if !field.is_solute(l) {
            continue;
        }
        let c = grid.multi_index(l).map(|x| x as i64);
        for axis in 0..3 {
            for dir in [1i64, -1] {
                let mut nb = c;
                nb[axis] += dir;
                if field.sign_at(nb) < 0 {
                    continue;
                }
                let mut corners = POS_FACES[axis].map(|o| [c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
                if dir < 0 {
                    // Mirror onto the lower plane and reverse winding.
                    for v in corners.iter_mut() {
                        v[axis] -= 1;
                    }
                    corners.reverse();
                }
                let q = corners.map(|v| vertex(v, &mut mesh));
                mesh.quads.push(q);
            }
        }
    }
    mesh
}
