//! Topology queries: manifold validation, connected components and Euler
//! characteristics of vertex regions measured on the dual mesh.

use std::collections::HashMap;

use super::TriMesh;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Defect {
    /// Edge shared by more than two triangles.
    NonManifoldEdge {
        edge: usize,
        triangles: usize,
    },
    /// Triangle fan around the vertex splits into several disks.
    NonManifoldVertex {
        vertex: usize,
        fans: usize,
    },
    IsolatedVertex {
        vertex: usize,
    },
    DuplicateTriangle {
        triangle: usize,
        first: usize,
    },
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Defect::NonManifoldEdge { edge, triangles } => {
                write!(f, "edge {edge} with {triangles} incident triangles")
            }
            Defect::NonManifoldVertex { vertex, fans } => {
                write!(f, "non-manifold vertex {vertex} ({fans} separate fans)")
            }
            Defect::IsolatedVertex { vertex } => write!(f, "isolated vertex {vertex}"),
            Defect::DuplicateTriangle { triangle, first } => {
                write!(f, "triangle {triangle} duplicates triangle {first}")
            }
        }
    }
}

/// Edge- and vertex-manifold check. An empty list means the mesh is manifold.
pub fn validate_manifold(mesh: &TriMesh) -> Vec<Defect> {
    let mut defects = Vec::new();
    for e in 0..mesh.num_edges() {
        let c = mesh.edge_triangle_count(e);
        if c > 2 {
            defects.push(Defect::NonManifoldEdge { edge: e, triangles: c });
        }
    }
    let mut local: Vec<usize> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();
    for v in 0..mesh.num_vertices() {
        local.clear();
        local.extend(mesh.vertex_triangles(v));
        if local.is_empty() {
            defects.push(Defect::IsolatedVertex { vertex: v });
            continue;
        }
        parent.clear();
        parent.extend(0..local.len());
        for (_, e) in mesh.neighbors(v) {
            let mut tris = mesh.edge_triangles(e).map(|t| local.iter().position(|&x| x == t));
            let Some(Some(first)) = tris.next() else { continue };
            for other in tris.flatten() {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, other));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let fans = (0..local.len()).filter(|&i| find(&mut parent, i) == i).count();
        if fans > 1 {
            defects.push(Defect::NonManifoldVertex { vertex: v, fans });
        }
    }
    defects
}

/// Simplicial-complex check: manifold defects plus repeated triangles.
pub fn validate_simplicial(mesh: &TriMesh) -> Vec<Defect> {
    let mut defects = validate_manifold(mesh);
    let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(mesh.num_triangles());
    for (t, mut tri) in mesh.triangles().enumerate() {
        tri.sort_unstable();
        if let Some(&first) = seen.get(&tri) {
            defects.push(Defect::DuplicateTriangle { triangle: t, first });
        } else {
            seen.insert(tri, t);
        }
    }
    defects
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Triangles with area at most `eps` times the mean triangle area.
pub fn degenerate_triangles(mesh: &TriMesh, eps: f64) -> Vec<usize> {
    if mesh.num_triangles() == 0 {
        return Vec::new();
    }
    let mean = mesh.total_area() / mesh.num_triangles() as f64;
    (0..mesh.num_triangles()).filter(|&t| mesh.triangle_area(t) <= eps * mean).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStats {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub area: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    /// Per vertex; labels are contiguous and numbered by smallest member vertex.
    pub label: Vec<usize>,
    pub stats: Vec<ComponentStats>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.stats.len()
    }
}

pub fn connected_components(mesh: &TriMesh) -> Components {
    let n = mesh.num_vertices();
    let mut label = vec![usize::MAX; n];
    let mut stats = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = stats.len();
        label[start] = id;
        stack.push(start);
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for (u, _) in mesh.neighbors(v) {
                if label[u] == usize::MAX {
                    label[u] = id;
                    stack.push(u);
                }
            }
        }
        stats.push(ComponentStats { vertex_count: count, triangle_count: 0, area: 0.0 });
    }
    for (t, tri) in mesh.triangles().enumerate() {
        let s = &mut stats[label[tri[0]]];
        s.triangle_count += 1;
        s.area += mesh.triangle_area(t);
    }
    Components { label, stats }
}

/// Removes every connected component whose area is below
/// `threshold * total_area`. Survivors keep their relative vertex order.
/// Returns the filtered mesh and the removed original vertex indices.
pub fn remove_small_components(mesh: &TriMesh, threshold: f64) -> Result<(TriMesh, Vec<usize>)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!("component area threshold must lie in (0, 1), got {threshold}")));
    }
    let comps = connected_components(mesh);
    let total: f64 = comps.stats.iter().map(|s| s.area).sum();
    let small: Vec<bool> = comps.stats.iter().map(|s| s.area < threshold * total).collect();
    if small.iter().all(|&s| s) {
        return Err(Error::Topology(format!(
            "all {} components are below the area threshold {threshold}",
            comps.count()
        )));
    }
    let (keep, removed): (Vec<usize>, Vec<usize>) = (0..mesh.num_vertices()).partition(|&v| !small[comps.label[v]]);
    if removed.is_empty() {
        return Ok((mesh.clone(), removed));
    }
    let (out, _) = mesh.submesh(&keep);
    Ok((out, removed))
}

/// Cell counts of the closed dual region formed by the dual faces of a
/// primal vertex set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubregionCounts {
    pub n_faces: usize,
    pub n_edges: usize,
    pub n_verts: usize,
}

impl SubregionCounts {
    pub fn euler(&self) -> i64 {
        self.n_verts as i64 - self.n_edges as i64 + self.n_faces as i64
    }
}

/// Counts dual cells of the region without building the dual mesh.
///
/// Each primal triangle is a dual vertex, each primal edge a dual edge and
/// each primal vertex a dual face. Along the surface boundary the dual faces
/// are closed off: every boundary edge contributes its midpoint as a dual
/// vertex, every boundary vertex contributes itself, and each half of a
/// boundary edge is a dual edge of the face of its endpoint.
pub fn region_subregion_counts(mesh: &TriMesh, region: &[usize]) -> SubregionCounts {
    let mut inside = vec![false; mesh.num_vertices()];
    for &v in region {
        inside[v] = true;
    }
    count_masked(mesh, region.iter().copied(), &inside)
}

pub(crate) fn count_masked(mesh: &TriMesh, region: impl Iterator<Item = usize>, inside: &[bool]) -> SubregionCounts {
    let mut c = SubregionCounts::default();
    let mut seen_faces = 0usize;
    for v in region {
        if !inside[v] {
            continue;
        }
        seen_faces += 1;
        let mut boundary_incident = 0;
        for (u, e) in mesh.neighbors(v) {
            let boundary = mesh.is_boundary_edge(e);
            if !inside[u] || v < u {
                c.n_edges += 1;
                if boundary {
                    c.n_verts += 1;
                }
            }
            if boundary {
                boundary_incident += 1;
            }
        }
        c.n_edges += boundary_incident;
        if boundary_incident > 0 {
            c.n_verts += 1;
        }
        for t in mesh.vertex_triangles(v) {
            let first_inside = mesh.triangle(t).into_iter().find(|&w| inside[w]);
            if first_inside == Some(v) {
                c.n_verts += 1;
            }
        }
    }
    c.n_faces = seen_faces;
    c
}

/// Euler characteristic of the closed dual region of `region_vertices`.
pub fn region_euler_characteristic(mesh: &TriMesh, region_vertices: &[usize]) -> i64 {
    let mut uniq = region_vertices.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    region_subregion_counts(mesh, &uniq).euler()
}

#[cfg(test)]
mod tests {
    use super::super::shapes;
    use super::*;

    fn glued_tetrahedra() -> TriMesh {
        // two tetrahedra sharing vertex 0
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, -1.0],
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3], [0, 5, 4], [0, 4, 6], [0, 6, 5], [4, 5, 6]];
        TriMesh::new(v, t).unwrap()
    }

    #[test]
    fn octahedron_is_manifold() {
        assert!(validate_manifold(&shapes::octahedron()).is_empty());
    }

    #[test]
    fn pinched_vertex_detected() {
        let d = validate_manifold(&glued_tetrahedra());
        assert_eq!(d, vec![Defect::NonManifoldVertex { vertex: 0, fans: 2 }]);
    }

    #[test]
    fn fin_edge_detected() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = TriMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap();
        let d = validate_manifold(&m);
        assert!(d.contains(&Defect::NonManifoldEdge { edge: m.find_edge(0, 1).unwrap(), triangles: 3 }));
    }

    #[test]
    fn duplicate_triangles_flagged_by_simplicial_check() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = TriMesh::new(v, vec![[0, 1, 2], [2, 1, 0]]).unwrap();
        assert!(validate_simplicial(&m).contains(&Defect::DuplicateTriangle { triangle: 1, first: 0 }));
    }

    #[test]
    fn components_of_two_octahedra() {
        let m = shapes::disjoint_union(&shapes::octahedron(), &shapes::octahedron().translated([5.0, 0.0, 0.0]));
        let c = connected_components(&m);
        assert_eq!(c.count(), 2);
        assert_eq!(c.stats[0].vertex_count, 6);
        assert_eq!(c.stats[1].vertex_count, 6);
        assert_eq!(c.label[..6], [0; 6]);
        assert_eq!(c.label[6..], [1; 6]);
    }

    #[test]
    fn small_component_removal() {
        let oct = shapes::octahedron();
        let (same, removed) = remove_small_components(&oct, 0.01).unwrap();
        assert!(removed.is_empty());
        assert_eq!(same.num_vertices(), 6);

        let big = oct.scaled(10.0);
        let m = shapes::disjoint_union(&oct.translated([50.0, 0.0, 0.0]), &big);
        let (out, removed) = remove_small_components(&m, 0.05).unwrap();
        assert_eq!(removed, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(out.num_vertices(), 6);
        assert_eq!(out.vertex(0), big.vertex(0));

        let twin = shapes::disjoint_union(&oct, &oct.translated([5.0, 0.0, 0.0]));
        assert!(remove_small_components(&twin, 0.6).is_err());
        assert!(remove_small_components(&twin, 0.0).is_err());
    }

    #[test]
    fn octahedron_region_euler() {
        let m = shapes::octahedron();
        assert_eq!(region_euler_characteristic(&m, &[0, 1, 2, 3, 4, 5]), 2);
        assert_eq!(region_euler_characteristic(&m, &[3]), 1);
        assert_eq!(region_euler_characteristic(&m, &[0, 1, 2, 3, 4]), 1);
    }

    #[test]
    fn boundary_regions_are_disks() {
        let square = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(region_euler_characteristic(&square, &[0, 1, 2, 3]), 1);
        for v in 0..4 {
            assert_eq!(region_euler_characteristic(&square, &[v]), 1);
        }
        // opposite corners 1 and 3 only touch through triangle centres
        assert_eq!(region_euler_characteristic(&square, &[1, 3]), 2);
        let patch = shapes::grid_patch(6, 5, 1.0);
        let all: Vec<usize> = (0..patch.num_vertices()).collect();
        assert_eq!(region_euler_characteristic(&patch, &all), 1);
    }
}
