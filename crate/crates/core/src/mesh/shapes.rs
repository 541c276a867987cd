//! Procedural test shapes: platonic solids, geodesic spheres, tori, voxel
//! surfaces of higher genus, flat patches and deformable tubes.

use std::collections::HashMap;

use super::{Point3, TriMesh};

fn mesh(v: Vec<Point3>, t: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(v, t).expect("procedural mesh is well formed")
}

pub fn octahedron() -> TriMesh {
    let v =
        vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    let t = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    mesh(v, t)
}

pub fn icosahedron() -> TriMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let v = raw.iter().map(normalized).collect();
    let t = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    mesh(v, t)
}

fn normalized(p: &Point3) -> Point3 {
    let n = super::norm(p);
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Geodesic sphere of unit radius: every icosahedron face is split into
/// `frequency^2` triangles and vertices are projected onto the sphere.
/// Has `10 * frequency^2 + 2` vertices.
pub fn geodesic_sphere(frequency: usize) -> TriMesh {
    let f = frequency.max(1);
    let ico = icosahedron();
    let corners: Vec<Point3> = ico.vertices().to_vec();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut verts: Vec<Point3> = Vec::with_capacity(10 * f * f + 2);
    let mut tris = Vec::with_capacity(20 * f * f);
    for tri in ico.triangles() {
        let mut id = |i: usize, j: usize| -> usize {
            let k = f - i - j;
            let mut key: Vec<(usize, usize)> =
                [(tri[0], k), (tri[1], i), (tri[2], j)].into_iter().filter(|&(_, w)| w > 0).collect();
            key.sort_unstable();
            *index.entry(key).or_insert_with(|| {
                let (a, b, c) = (corners[tri[0]], corners[tri[1]], corners[tri[2]]);
                let w = [k as f64 / f as f64, i as f64 / f as f64, j as f64 / f as f64];
                let p = [
                    w[0] * a[0] + w[1] * b[0] + w[2] * c[0],
                    w[0] * a[1] + w[1] * b[1] + w[2] * c[1],
                    w[0] * a[2] + w[1] * b[2] + w[2] * c[2],
                ];
                verts.push(normalized(&p));
                verts.len() - 1
            })
        };
        for j in 0..f {
            for i in 0..f - j {
                let a = id(i, j);
                let b = id(i + 1, j);
                let c = id(i, j + 1);
                tris.push([a, b, c]);
                if i + j + 1 < f {
                    let d = id(i + 1, j + 1);
                    tris.push([b, d, c]);
                }
            }
        }
    }
    mesh(verts, tris)
}

/// Icosphere at subdivision level `level` (frequency `2^level`).
pub fn icosphere(level: u32) -> TriMesh {
    geodesic_sphere(1 << level)
}

/// Latitude/longitude sphere; thin sliver triangles collect at the poles.
pub fn uv_sphere(n_lon: usize, n_lat: usize) -> TriMesh {
    let mut v = vec![[0.0, 0.0, 1.0]];
    for i in 1..n_lat {
        let th = std::f64::consts::PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / n_lon as f64;
            v.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
        }
    }
    v.push([0.0, 0.0, -1.0]);
    let south = v.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + (j % n_lon);
    let mut t = Vec::new();
    for j in 0..n_lon {
        t.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            t.push([a, c, b]);
            t.push([b, c, d]);
        }
    }
    for j in 0..n_lon {
        t.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    mesh(v, t)
}

pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriMesh {
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let w = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let r = major + minor * w.cos();
            v.push([r * u.cos(), r * u.sin(), minor * w.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut t = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            t.push([a, b, d]);
            t.push([a, d, c]);
        }
    }
    mesh(v, t)
}

/// Flat `nx` by `ny` vertex grid in the z = 0 plane.
pub fn grid_patch(nx: usize, ny: usize, spacing: f64) -> TriMesh {
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                t.push([a, b, d]);
                t.push([a, d, c]);
            } else {
                t.push([a, b, c]);
                t.push([b, d, c]);
            }
        }
    }
    mesh(v, t)
}

/// Closed surface bounding a union of unit voxels, each voxel face split into
/// `res x res` quads. `filled(x, y, z)` selects voxels in `[0, dims)`.
pub fn voxel_surface(dims: [usize; 3], res: usize, filled: impl Fn(usize, usize, usize) -> bool) -> TriMesh {
    let inside = |x: i64, y: i64, z: i64| {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < dims[0]
            && (y as usize) < dims[1]
            && (z as usize) < dims[2]
            && filled(x as usize, y as usize, z as usize)
    };
    let r = res.max(1) as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    let mut id = |p: [i64; 3], verts: &mut Vec<Point3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            verts.push([p[0] as f64 / r as f64, p[1] as f64 / r as f64, p[2] as f64 / r as f64]);
            verts.len() - 1
        })
    };
    for x in 0..dims[0] as i64 {
        for y in 0..dims[1] as i64 {
            for z in 0..dims[2] as i64 {
                if !inside(x, y, z) {
                    continue;
                }
                for axis in 0..3 {
                    for dir in [-1i64, 1] {
                        let mut nb = [x, y, z];
                        nb[axis] += dir;
                        if inside(nb[0], nb[1], nb[2]) {
                            continue;
                        }
                        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                        let mut base = [x * r, y * r, z * r];
                        if dir > 0 {
                            base[axis] += r;
                        }
                        for a in 0..r {
                            for b in 0..r {
                                let corner = |da: i64, db: i64| {
                                    let mut p = base;
                                    p[u] += a + da;
                                    p[w] += b + db;
                                    p
                                };
                                let q = [
                                    id(corner(0, 0), &mut verts),
                                    id(corner(1, 0), &mut verts),
                                    id(corner(1, 1), &mut verts),
                                    id(corner(0, 1), &mut verts),
                                ];
                                // (u, w, axis) is right handed, so this winding faces +axis
                                if dir > 0 {
                                    tris.push([q[0], q[1], q[2]]);
                                    tris.push([q[0], q[2], q[3]]);
                                } else {
                                    tris.push([q[0], q[2], q[1]]);
                                    tris.push([q[0], q[3], q[2]]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    mesh(verts, tris)
}

/// Genus-2 slab: a 5 x 3 x 1 voxel block with two through holes.
pub fn genus2(res: usize) -> TriMesh {
    voxel_surface([5, 3, 1], res, |x, y, _| !(y == 1 && (x == 1 || x == 3)))
}

/// Capped tube along +z with an asymmetric radius profile and two bumps of
/// different size, so it has no intrinsic symmetry. `bend` > 0 wraps the axis
/// onto a circular arc of that total angle (radians), which is close to an
/// isometry while the tube stays thin relative to the bend radius.
pub fn bumpy_tube(n_around: usize, n_along: usize, bend: f64) -> TriMesh {
    let length = 4.0;
    let profile = |z: f64, ang: f64| {
        let t = z / length;
        let mut r = 0.35 + 0.12 * t + 0.04 * (2.0 * std::f64::consts::PI * t).sin();
        let bump = |z0: f64, a0: f64, h: f64, w: f64| {
            let da = (ang - a0 + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            let d2 = ((z - z0) / w).powi(2) + (da * 0.4 / w).powi(2);
            h * (-d2).exp()
        };
        r += bump(1.1, 0.0, 0.14, 0.35);
        r += bump(2.9, 1.9, 0.09, 0.25);
        r
    };
    let mut straight: Vec<Point3> = Vec::new();
    for i in 0..=n_along {
        let z = length * i as f64 / n_along as f64;
        for j in 0..n_around {
            let a = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
            let r = profile(z, a);
            straight.push([r * a.cos(), r * a.sin(), z]);
        }
    }
    let ring = |i: usize, j: usize| i * n_around + (j % n_around);
    let mut t = Vec::new();
    for i in 0..n_along {
        for j in 0..n_around {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            t.push([a, b, d]);
            t.push([a, d, c]);
        }
    }
    // caps: concentric rings down to a centre vertex
    let cap_rings = (n_around / 6).max(1);
    for (end, z, outer) in [(0usize, 0.0, 0usize), (1, length, n_along)] {
        let mut prev: Vec<usize> = (0..n_around).map(|j| ring(outer, j)).collect();
        for k in 1..=cap_rings {
            let s = 1.0 - k as f64 / (cap_rings as f64 + 1.0);
            let cur: Vec<usize> = (0..n_around)
                .map(|j| {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / n_around as f64;
                    let r = profile(z, a) * s;
                    straight.push([r * a.cos(), r * a.sin(), z]);
                    straight.len() - 1
                })
                .collect();
            for j in 0..n_around {
                let (a, b, c, d) = (prev[j], prev[(j + 1) % n_around], cur[j], cur[(j + 1) % n_around]);
                if end == 0 {
                    t.push([a, d, b]);
                    t.push([a, c, d]);
                } else {
                    t.push([a, b, d]);
                    t.push([a, d, c]);
                }
            }
            prev = cur;
        }
        straight.push([0.0, 0.0, z]);
        let centre = straight.len() - 1;
        for j in 0..n_around {
            let (a, b) = (prev[j], prev[(j + 1) % n_around]);
            if end == 0 {
                t.push([a, centre, b]);
            } else {
                t.push([a, b, centre]);
            }
        }
    }
    let verts = if bend == 0.0 {
        straight
    } else {
        let radius = length / bend;
        straight
            .iter()
            .map(|p| {
                let th = p[2] / radius;
                let (s, c) = th.sin_cos();
                // centre curve (R(1 - cos), 0, R sin); normal (cos, 0, -sin)
                [radius * (1.0 - c) + p[0] * c, p[1], radius * s - p[0] * s]
            })
            .collect()
    };
    mesh(verts, t)
}

/// Rotation matrix about a unit axis.
pub fn rotation(axis: Point3, angle: f64) -> [[f64; 3]; 3] {
    let a = normalized(&axis);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * a[0] * a[0] + c, t * a[0] * a[1] - s * a[2], t * a[0] * a[2] + s * a[1]],
        [t * a[0] * a[1] + s * a[2], t * a[1] * a[1] + c, t * a[1] * a[2] - s * a[0]],
        [t * a[0] * a[2] - s * a[1], t * a[1] * a[2] + s * a[0], t * a[2] * a[2] + c],
    ]
}

impl TriMesh {
    pub fn translated(&self, d: Point3) -> TriMesh {
        let v = self.vertices().iter().map(|p| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect();
        self.with_vertices(v).unwrap()
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        let v = self.vertices().iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect();
        self.with_vertices(v).unwrap()
    }

    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> TriMesh {
        let v = self
            .vertices()
            .iter()
            .map(|p| {
                [
                    r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
                    r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
                    r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
                ]
            })
            .collect();
        self.with_vertices(v).unwrap()
    }
}

/// Both meshes in one, `b`'s vertices appended after `a`'s.
pub fn disjoint_union(a: &TriMesh, b: &TriMesh) -> TriMesh {
    let off = a.num_vertices();
    let mut v = a.vertices().to_vec();
    v.extend_from_slice(b.vertices());
    let mut t: Vec<[usize; 3]> = a.triangles().collect();
    t.extend(b.triangles().map(|[x, y, z]| [x + off, y + off, z + off]));
    mesh(v, t)
}

#[cfg(test)]
mod tests {
    use super::super::topology::{connected_components, validate_manifold};
    use super::*;

    #[test]
    fn sphere_counts() {
        for f in [1, 2, 3, 8] {
            let s = geodesic_sphere(f);
            assert_eq!(s.num_vertices(), 10 * f * f + 2);
            assert_eq!(s.num_triangles(), 20 * f * f);
            assert_eq!(s.euler_characteristic(), 2);
            assert!(validate_manifold(&s).is_empty());
        }
        assert_eq!(icosphere(4).num_vertices(), 2562);
    }

    #[test]
    fn closed_surfaces_have_expected_genus() {
        let t = torus(2.0, 0.7, 24, 12);
        assert_eq!(t.euler_characteristic(), 0);
        assert!(validate_manifold(&t).is_empty());
        let g = genus2(2);
        assert_eq!(g.euler_characteristic(), -2);
        assert!(validate_manifold(&g).is_empty());
        assert_eq!(connected_components(&g).count(), 1);
        let u = uv_sphere(32, 10);
        assert_eq!(u.euler_characteristic(), 2);
        assert!(validate_manifold(&u).is_empty());
    }

    #[test]
    fn tube_is_closed_sphere_and_bends_nearly_isometrically() {
        let a = bumpy_tube(24, 40, 0.0);
        let b = bumpy_tube(24, 40, std::f64::consts::FRAC_PI_3);
        assert_eq!(a.euler_characteristic(), 2);
        assert!(validate_manifold(&a).is_empty());
        let mut worst: f64 = 0.0;
        for e in 0..a.num_edges() {
            worst = worst.max((a.edge_length(e) / b.edge_length(e) - 1.0).abs());
        }
        assert!(worst < 0.2, "edge distortion {worst}");
    }

    #[test]
    fn rotation_preserves_lengths() {
        let m = icosphere(2);
        let r = m.rotated(&rotation([1.0, 2.0, 3.0], 0.7));
        for e in 0..m.num_edges() {
            assert!((m.edge_length(e) - r.edge_length(e)).abs() < 1e-12);
        }
    }
}
