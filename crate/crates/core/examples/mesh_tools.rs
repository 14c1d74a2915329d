//! Structured meshes, boundary labels and the text format.
//!
//! `cargo run --example mesh_tools`

use hdg_fsi::mesh::{generate_structured, Mesh, Point, Rect};

fn main() -> hdg_fsi::Result<()> {
    // a 2 x 1 channel, fluid below y = 0.5
    let mesh = generate_structured(Rect::new(0.0, 2.0, 0.0, 1.0), 8, 4, Some(0.5))?.classify_facets(&[
        ("inflow", &|p: Point| p[0] < 1e-12),
        ("outflow", &|p: Point| p[0] > 2.0 - 1e-12),
        ("walls", &|_| true),
    ])?;
    print!("{}", mesh.info());

    let dir = std::env::temp_dir().join("hdg-fsi-mesh-tools");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("channel.mesh");
    mesh.save(&path)?;
    let back = Mesh::load(&path)?;
    assert_eq!(back.triangles(), mesh.triangles());
    println!("saved and reloaded {}", path.display());

    let p = [1.3, 0.7];
    let e = mesh.locate(p).expect("inside");
    println!("{p:?} lies in element {e} ({:?})", mesh.subdomain(e));
    Ok(())
}
