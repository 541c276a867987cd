#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = meshcorr::mesh::io::parse_mesh(data, meshcorr::mesh::MeshFormat::Ply);
});
