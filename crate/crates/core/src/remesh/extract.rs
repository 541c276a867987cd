use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::mesh::{validate_simplicial, TriMesh};
use crate::voronoi::VoronoiState;

use super::fup::full_report;
use super::RemeshOutput;

/// One dual triangle per texel triple, oriented like the first primal
/// triangle (in index order) that realizes it.
pub(crate) fn triangles_from_labels(mesh: &TriMesh, labels: &[usize]) -> Vec<[usize; 3]> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for tri in mesh.triangles() {
        let l = tri.map(|v| labels[v]);
        if l[0] == l[1] || l[1] == l[2] || l[0] == l[2] || l.contains(&usize::MAX) {
            continue;
        }
        let mut key = l;
        key.sort_unstable();
        if seen.insert(key) {
            out.push(l);
        }
    }
    out
}

/// Builds the low-resolution mesh dual to the Voronoi decomposition.
/// Refuses states that violate the Flat Union Property.
pub fn extract_idt(state: &VoronoiState, mesh: &TriMesh) -> Result<RemeshOutput> {
    let report = full_report(state, mesh);
    if !report.is_empty() {
        return Err(Error::Topology(format!(
            "flat union property violated ({} defects); repair before extracting",
            report.len()
        )));
    }
    let labels = state.labels();
    let positions = state.samples().iter().map(|&p| mesh.vertex(p)).collect();
    let lowres = TriMesh::new(positions, triangles_from_labels(mesh, &labels))?;
    if let Some(d) = validate_simplicial(&lowres).first() {
        return Err(Error::Topology(format!("extracted mesh is not a proper triangulation: {d}")));
    }
    Ok(RemeshOutput { lowres, generator_of: state.samples().to_vec(), texel_of: labels, repair_count: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::voronoi::{fps, Seed};

    #[test]
    fn identity_remesh_of_octahedron() {
        let m = shapes::octahedron();
        let st = fps(&m, 6, Seed::Vertex(0)).unwrap();
        let out = extract_idt(&st, &m).unwrap();
        assert_eq!(out.lowres.num_triangles(), 8);
        assert_eq!(out.lowres.euler_characteristic(), 2);
        for i in 0..6 {
            assert_eq!(out.lowres.vertex(i), m.vertex(out.generator_of[i]));
            assert_eq!(out.texel_of[out.generator_of[i]], i);
        }
    }

    #[test]
    fn refuses_bad_state() {
        let m = shapes::icosphere(3);
        let st = fps(&m, 2, Seed::Vertex(0)).unwrap();
        assert!(matches!(extract_idt(&st, &m), Err(Error::Topology(_))));
    }
}
