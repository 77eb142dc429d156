//! Test cases shipped with the crate.
//!
//! The mini-corpus mixes divide-by-zero, buffer overflow, use-after-free and
//! uninitialized-variable programs with one warning-free case. `dz01` and
//! `bo01` are the two case-study programs; `bo01` gains `#include <string.h>`
//! so that it compiles.

use std::path::Path;

use crate::corpus::{load_manifest, CorpusError, CorpusManifest, TestCase};
use crate::fsutil::atomic_write;

/// `(file name, contents)` for every mini-corpus case.
pub const CASES: &[(&str, &str)] = &[
    ("bo01.c", include_str!("../fixtures/cases/bo01.c")),
    ("bo02.c", include_str!("../fixtures/cases/bo02.c")),
    ("clean01.c", include_str!("../fixtures/cases/clean01.c")),
    ("dz01.cpp", include_str!("../fixtures/cases/dz01.cpp")),
    ("dz02.c", include_str!("../fixtures/cases/dz02.c")),
    ("uaf01.c", include_str!("../fixtures/cases/uaf01.c")),
    ("uv01.c", include_str!("../fixtures/cases/uv01.c")),
];

pub const MANIFEST: &str = include_str!("../fixtures/cases/manifest.json");

/// A class overriding a virtual method without `override`.
pub const MISSING_OVERRIDE_CPP: &str = include_str!("../fixtures/extra/missing_override.cpp");

/// `int main(void) { return 0; }`
pub const TRIVIAL_C: &str = include_str!("../fixtures/extra/trivial.c");

/// `dz01.cpp` with the division guarded by a zero check.
pub const DZ01_FIXED_CPP: &str = include_str!("../fixtures/fixes/dz01_fixed.cpp");

/// Absolute path of the fixture directory in the source tree.
pub fn source_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

/// Writes the mini-corpus and its manifest into `dir` and loads it back.
pub fn write_mini_corpus(dir: &Path) -> Result<CorpusManifest, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, text) in CASES {
        let path = dir.join(name);
        atomic_write(&path, text.as_bytes()).map_err(io(&path))?;
    }
    let manifest_path = dir.join("manifest.json");
    atomic_write(&manifest_path, MANIFEST.as_bytes()).map_err(io(&manifest_path))?;
    load_manifest(&manifest_path)
}

/// A bundled case by id, with its source text.
pub fn case(id: &str) -> Option<TestCase> {
    let manifest: CorpusManifest = serde_json::from_str(MANIFEST).ok()?;
    let mut case = manifest.cases.into_iter().find(|c| c.id == id)?;
    let name = case.path.to_string_lossy().into_owned();
    case.source_text = CASES.iter().find(|(n, _)| *n == name)?.1.to_string();
    Some(case)
}
