//! Regenerates `include/vlcdsm.h` from the exported surface on every build,
//! so the committed header cannot drift from the source.

use std::path::Path;

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let header = Path::new(&crate_dir).join("include").join("vlcdsm.h");
    cbindgen::generate(&crate_dir)
        .expect("C header generation failed")
        .write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
