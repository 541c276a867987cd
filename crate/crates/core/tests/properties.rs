mod common;

use std::path::Path;

use meshcorr::bench::{badtosca_perturb, parse_timing_csv, GroundTruthMap, Manifest};
use meshcorr::fmap::{FunctionalMap, PointMap};
use meshcorr::geodesic::{propagate_update, DistanceField};
use meshcorr::mesh::io::{parse_mesh, write_mesh};
use meshcorr::mesh::{region_euler_characteristic, shapes, MeshFormat, TriMesh};
use meshcorr::prolongation::ProlongationMap;
use meshcorr::spectral::cache::{decode_basis, encode_basis};
use meshcorr::textio::{parse_index_lines, parse_matrix_rows};
use meshcorr::voronoi::{fps, Seed};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn base_mesh(i: usize) -> TriMesh {
    match i % 6 {
        0 => shapes::icosphere(2),
        1 => shapes::torus(1.0, 0.4, 16, 8),
        2 => shapes::grid_patch(9, 7, 0.2),
        3 => shapes::genus2(2),
        4 => shapes::disjoint_union(&shapes::octahedron(), &shapes::icosahedron().translated([3.0, 0.0, 0.0])),
        _ => shapes::bumpy_tube(10, 12, 0.4),
    }
}

/// A corpus mesh with its vertices jittered so edge lengths vary.
fn jittered(i: usize, jitter: &[f64]) -> TriMesh {
    let m = base_mesh(i);
    let v = m.vertices().iter().enumerate().map(|(k, p)| {
        let j = jitter[k % jitter.len()];
        [p[0] + 0.05 * j, p[1] - 0.03 * j, p[2] + 0.04 * j]
    });
    m.with_vertices(v.collect()).unwrap()
}

fn mesh_strategy() -> impl Strategy<Value = TriMesh> {
    (0usize..6, prop::collection::vec(-1.0f64..1.0, 1..40)).prop_map(|(i, j)| jittered(i, &j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_field_equals_batch(m in mesh_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..25)) {
        let n = m.num_vertices();
        let mut sources: Vec<usize> = picks.iter().map(|p| p.index(n)).collect();
        sources.dedup();
        let mut field = DistanceField::unreached(n);
        let mut seen = Vec::new();
        for &s in &sources {
            if !seen.contains(&s) {
                propagate_update(&m, s, &mut field).unwrap();
                seen.push(s);
            }
        }
        prop_assert_eq!(field.dist, common::batch_dijkstra(&m, &seen));
    }

    #[test]
    fn fps_matches_rescan(m in mesh_strategy(), seed in any::<u64>(), frac in 0.05f64..1.0) {
        let count = ((m.num_vertices() as f64 * frac) as usize).max(1);
        let fast = fps(&m, count, Seed::Random(seed)).unwrap();
        let naive = common::naive_fps(&m, fast.samples()[0], count);
        prop_assert_eq!(fast.samples(), naive.as_slice());
        prop_assert!(fast.check_invariants());
    }

    #[test]
    fn dual_euler_matches_explicit_complex(i in 0usize..6, mask in prop::collection::vec(any::<bool>(), 1..400)) {
        let m = base_mesh(i);
        let region: Vec<usize> = (0..m.num_vertices()).filter(|&v| mask[v % mask.len()]).collect();
        prop_assert_eq!(region_euler_characteristic(&m, &region), common::explicit_dual_euler(&m, &region));
    }

    #[test]
    fn perturbation_rows_are_convex(i in 0usize..6, seed in any::<u64>()) {
        let m = base_mesh(i);
        let (p, u) = badtosca_perturb(&m, seed).unwrap();
        prop_assert_eq!(p.num_vertices(), m.num_vertices());
        for r in 0..u.rows() {
            let row: Vec<(usize, f64)> = u.row(r).collect();
            prop_assert!(row.iter().all(|&(_, w)| (0.0..=1.0).contains(&w)));
            prop_assert!((row.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_formats_round_trip(m in mesh_strategy()) {
        for f in [MeshFormat::Off, MeshFormat::Obj, MeshFormat::Ply, MeshFormat::PlyBinary] {
            let back = parse_mesh(&write_mesh(&m, f), f).unwrap();
            prop_assert_eq!(back.num_vertices(), m.num_vertices());
            prop_assert!(back.triangles().eq(m.triangles()));
            prop_assert_eq!(back.vertices(), m.vertices());
        }
    }

    #[test]
    fn maps_round_trip(rows in 1usize..12, cols in 1usize..12, vals in prop::collection::vec(-1e3f64..1e3, 144)) {
        let c = FunctionalMap { c: DMatrix::from_fn(rows, cols, |i, j| vals[i * 12 + j]) };
        prop_assert_eq!(FunctionalMap::parse(&c.to_text()).unwrap(), c.clone());
        let p = PointMap { target_of: vals.iter().map(|v| v.abs() as usize).collect() };
        prop_assert_eq!(PointMap::parse(&p.to_text()).unwrap(), p);
        let lambda: Vec<f64> = (0..cols).map(|i| i as f64).collect();
        let (phi, l) = decode_basis(&encode_basis(&c.c, &lambda)).unwrap();
        prop_assert_eq!(phi, c.c);
        prop_assert_eq!(l, lambda);
    }

    #[test]
    fn prolongation_round_trips(weights in prop::collection::vec(prop::collection::btree_map(0usize..20, 0.0f64..1.0, 0..4), 1..30)) {
        let rows = weights.into_iter().map(|r| r.into_iter().collect()).collect();
        let u = ProlongationMap::from_rows(20, rows).unwrap();
        prop_assert_eq!(ProlongationMap::parse(&u.to_text()).unwrap(), u);
    }

    #[test]
    fn parsers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let text = String::from_utf8_lossy(&bytes);
        for f in [MeshFormat::Off, MeshFormat::Obj, MeshFormat::Ply, MeshFormat::PlyBinary] {
            let _ = parse_mesh(&bytes, f);
        }
        let _ = FunctionalMap::parse(&text);
        let _ = PointMap::parse(&text);
        let _ = ProlongationMap::parse(&text);
        let _ = GroundTruthMap::parse(&text);
        let _ = Manifest::parse(&text, Path::new("."));
        let _ = decode_basis(&bytes);
        let _ = parse_timing_csv(&text);
        let _ = parse_index_lines(&text);
        let _ = parse_matrix_rows(&text);
    }

    #[test]
    fn structured_text_never_panics(lines in prop::collection::vec("[-0-9 .e#a-z]{0,24}", 0..12)) {
        let text = lines.join("\n");
        let _ = FunctionalMap::parse(&text);
        let _ = PointMap::parse(&text);
        let _ = ProlongationMap::parse(&text);
        let _ = GroundTruthMap::parse(&text);
        let _ = Manifest::parse(&text, Path::new("."));
        let _ = parse_timing_csv(&text);
        for header in ["OFF\n", "ply\nformat ascii 1.0\n", ""] {
            let _ = parse_mesh(format!("{header}{text}").as_bytes(), MeshFormat::Off);
            let _ = parse_mesh(format!("{header}{text}").as_bytes(), MeshFormat::Ply);
            let _ = parse_mesh(text.as_bytes(), MeshFormat::Obj);
        }
    }
}
