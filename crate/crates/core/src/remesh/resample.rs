//! Midpoint refinement of triangles that are large relative to the target
//! sampling density.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{dist, dot, norm, sub, Point3, TriMesh};

const MAX_ROUNDS: usize = 64;

/// Edge length threshold for `s` samples: the side of an equilateral
/// triangle whose area is that of an average output triangle.
pub fn resample_threshold(mesh: &TriMesh, s: usize) -> f64 {
    let target_area = mesh.total_area() / (2.0 * s as f64);
    (2.0 * target_area / 3f64.sqrt()).sqrt()
}

/// Splits edges longer than the threshold at their midpoints until none is
/// left. Original vertices keep their indices; new vertices are appended.
pub fn resample_large_triangles(mesh: &TriMesh, s: usize) -> Result<TriMesh> {
    if s < 1 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let rho = resample_threshold(mesh, s);
    let mut current = mesh.clone();
    for _ in 0..MAX_ROUNDS {
        match split_round(&current, rho)? {
            Some(next) => current = next,
            None => return Ok(current),
        }
    }
    Err(Error::Numerical(format!("edge splitting did not settle after {MAX_ROUNDS} rounds")))
}

fn interior_angle(at: &Point3, a: &Point3, b: &Point3) -> f64 {
    let (u, v) = (sub(a, at), sub(b, at));
    let c = dot(&u, &v) / (norm(&u) * norm(&v));
    c.clamp(-1.0, 1.0).acos()
}

fn split_round(mesh: &TriMesh, rho: f64) -> Result<Option<TriMesh>> {
    let limit = rho * (1.0 + 1e-9);
    let long: Vec<bool> = (0..mesh.num_edges()).map(|e| mesh.edge_length(e) > limit).collect();
    if !long.iter().any(|&l| l) {
        return Ok(None);
    }
    let mut verts = mesh.vertices().to_vec();
    let mut midpoint = HashMap::new();
    for e in 0..mesh.num_edges() {
        if long[e] {
            let [a, b] = mesh.edge(e);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            midpoint.insert(e, verts.len());
            verts.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0]);
        }
    }
    let mut tris = Vec::with_capacity(mesh.num_triangles() * 2);
    for t in 0..mesh.num_triangles() {
        let c = mesh.triangle(t);
        // edge k joins corners k and k+1
        let te = mesh.triangle_edges(t);
        let mid: [Option<usize>; 3] = te.map(|e| midpoint.get(&e).copied());
        match mid.iter().filter(|m| m.is_some()).count() {
            0 => tris.push(c),
            1 => {
                let k = mid.iter().position(|m| m.is_some()).unwrap();
                let (a, b, o, m) = (c[k], c[(k + 1) % 3], c[(k + 2) % 3], mid[k].unwrap());
                tris.push([a, m, o]);
                tris.push([m, b, o]);
            }
            2 => {
                // the short edge runs from corner k+1 to corner k+2
                let k = (mid.iter().position(|m| m.is_none()).unwrap() + 2) % 3;
                let (a, b, cc) = (c[k], c[(k + 1) % 3], c[(k + 2) % 3]);
                let (m_ab, m_ca) = (mid[k].unwrap(), mid[(k + 2) % 3].unwrap());
                tris.push([a, m_ab, m_ca]);
                // quad m_ab, b, cc, m_ca
                let q = [m_ab, b, cc, m_ca];
                let angle = |i: usize| interior_angle(&verts[q[i]], &verts[q[(i + 3) % 4]], &verts[q[(i + 1) % 4]]);
                let sum02 = angle(0) + angle(2);
                let sum13 = angle(1) + angle(3);
                let d02 = (q[0].min(q[2]), q[0].max(q[2]));
                let d13 = (q[1].min(q[3]), q[1].max(q[3]));
                let use02 = sum02 > sum13 || (sum02 == sum13 && d02 < d13);
                if use02 {
                    tris.push([q[0], q[1], q[2]]);
                    tris.push([q[0], q[2], q[3]]);
                } else {
                    tris.push([q[0], q[1], q[3]]);
                    tris.push([q[1], q[2], q[3]]);
                }
            }
            _ => {
                let (m0, m1, m2) = (mid[0].unwrap(), mid[1].unwrap(), mid[2].unwrap());
                tris.push([c[0], m0, m2]);
                tris.push([m0, c[1], m1]);
                tris.push([m2, m1, c[2]]);
                tris.push([m0, m1, m2]);
            }
        }
    }
    Ok(Some(TriMesh::new(verts, tris)?))
}

/// Longest edge of a mesh.
pub fn max_edge_length(mesh: &TriMesh) -> f64 {
    mesh.edges().map(|[a, b]| dist(&mesh.vertex(a), &mesh.vertex(b))).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{shapes, validate_manifold};

    fn equilateral(side: f64) -> TriMesh {
        let h = side * 3f64.sqrt() / 2.0;
        TriMesh::new(vec![[0.0, 0.0, 0.0], [side, 0.0, 0.0], [side / 2.0, h, 0.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn small_edges_untouched() {
        let m = shapes::icosphere(2);
        let out = resample_large_triangles(&m, 10).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn equilateral_splits_in_four() {
        let m = equilateral(2.0);
        let rho = resample_threshold(&m, 1);
        assert!((rho - 1.0).abs() < 1e-12);
        let out = resample_large_triangles(&m, 1).unwrap();
        assert_eq!(out.num_triangles(), 4);
        assert_eq!(out.num_vertices(), 6);
        assert!((max_edge_length(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_long_edge_makes_two_triangles() {
        // only edge 0-1 exceeds the threshold
        let m = TriMesh::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.3, 0.0]], vec![[0, 1, 2]]).unwrap();
        let out = split_round(&m, 1.5).unwrap().unwrap();
        assert_eq!(out.num_triangles(), 2);
        assert_eq!(out.vertex(3), [1.0, 0.0, 0.0]);
        assert!(split_round(&out, 1.5).unwrap().is_none());
    }

    #[test]
    fn refinement_preserves_area_and_topology() {
        let m = shapes::torus(1.0, 0.4, 12, 6);
        let out = resample_large_triangles(&m, 2000).unwrap();
        assert!(out.num_vertices() > m.num_vertices());
        assert!(max_edge_length(&out) <= resample_threshold(&m, 2000) * (1.0 + 1e-9));
        assert!((out.total_area() - m.total_area()).abs() <= 1e-9 * m.total_area());
        assert!(validate_manifold(&out).is_empty());
        assert_eq!(out.euler_characteristic(), 0);
        assert_eq!(&out.vertices()[..m.num_vertices()], m.vertices());
    }
}
