use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::mesh::{cross, dot, norm, sub, TriMesh};

const COT_CLAMP: f64 = 1e6;

/// Cotangent stiffness `S` and lumped (diagonal) mass `A`.
#[derive(Clone, Debug)]
pub struct LaplacianPair {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
}

impl LaplacianPair {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Cotangent of the angle at `at` in the triangle (`at`, `a`, `b`); `None`
/// when the triangle has no area.
fn cot_at(mesh: &TriMesh, at: usize, a: usize, b: usize) -> Option<f64> {
    let p = mesh.vertex(at);
    let u = sub(&mesh.vertex(a), &p);
    let v = sub(&mesh.vertex(b), &p);
    let c = norm(&cross(&u, &v));
    if c == 0.0 || !c.is_finite() {
        return None;
    }
    Some((dot(&u, &v) / c).clamp(-COT_CLAMP, COT_CLAMP))
}

/// Assembles `S_ij = -(cot α + cot β) / 2` over each edge and barycentric
/// lumped masses. Zero-area triangles add no stiffness and a tiny mass.
pub fn build_laplacian(mesh: &TriMesh) -> LaplacianPair {
    let n = mesh.num_vertices();
    let total = mesh.total_area();
    let eps_mass = 1e-12 * total.max(f64::MIN_POSITIVE);
    let weights: Vec<f64> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let [a, b] = mesh.edge(e);
            mesh.edge_triangles(e)
                .filter_map(|t| {
                    let o = mesh.triangle(t).into_iter().find(|&v| v != a && v != b)?;
                    cot_at(mesh, o, a, b)
                })
                .sum::<f64>()
                / 2.0
        })
        .collect();
    let mut degenerate = 0usize;
    let mut mass = vec![0.0; n];
    for t in 0..mesh.num_triangles() {
        let area = mesh.triangle_area(t);
        let share = if area > 0.0 {
            area / 3.0
        } else {
            degenerate += 1;
            eps_mass
        };
        for v in mesh.triangle(t) {
            mass[v] += share;
        }
    }
    for m in mass.iter_mut() {
        if *m <= 0.0 {
            *m = eps_mass;
        }
    }
    if degenerate > 0 {
        log::warn!("{degenerate} zero-area triangles given epsilon mass and no stiffness");
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| {
            let mut row = Vec::with_capacity(mesh.degree(v) + 1);
            let mut diag = 0.0;
            let mut placed = false;
            for (u, e) in mesh.neighbors(v) {
                if !placed && u > v {
                    row.push((v, 0.0));
                    placed = true;
                }
                row.push((u, -weights[e]));
                diag += weights[e];
            }
            if !placed {
                row.push((v, 0.0));
            }
            let k = row.iter().position(|&(c, _)| c == v).unwrap();
            row[k].1 = diag;
            row
        })
        .collect();
    LaplacianPair { stiffness: CsrMatrix::from_rows(rows), mass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn rhombus_interior_weight() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0], [0.5, -h, 0.0]],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap();
        let l = build_laplacian(&m);
        assert!((l.stiffness.get(0, 1) + 1.0 / 3f64.sqrt()).abs() < 1e-12);
        // boundary edge: one term only
        assert!((l.stiffness.get(0, 2) + 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rows_sum_to_zero_and_mass_is_area() {
        let m = shapes::torus(1.0, 0.3, 30, 12);
        let l = build_laplacian(&m);
        let scale = l.stiffness.norm_inf();
        for i in 0..m.num_vertices() {
            assert!(l.stiffness.row(i).map(|(_, v)| v).sum::<f64>().abs() < 1e-9 * scale);
        }
        assert!(l.stiffness.is_symmetric(1e-12 * scale));
        assert!((l.total_mass() - m.total_area()).abs() < 1e-9 * m.total_area());
        let o = shapes::octahedron();
        assert!((build_laplacian(&o).total_mass() - o.total_area()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_is_clamped() {
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
            vec![[0, 1, 3], [1, 2, 3], [0, 2, 1]],
        )
        .unwrap();
        let l = build_laplacian(&m);
        assert!(l.mass.iter().all(|&a| a > 0.0));
        assert!(l.stiffness.diagonal().iter().all(|d| d.is_finite()));
    }
}
