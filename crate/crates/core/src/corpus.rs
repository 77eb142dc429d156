//! Test cases and corpus manifests.
//!
//! A manifest is a JSON file listing cases by relative path under a root
//! directory. Source text lives on disk next to it and is loaded eagerly so
//! that a loaded manifest is self-contained.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::fsutil::atomic_write;
use crate::timestamp;

pub const MANIFEST_VERSION: u32 = 1;

/// Directories holding Juliet's shared harness code rather than test cases.
const SUPPORT_DIRS: &[&str] = &["testcasesupport"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: unsupported manifest version {found} (expected {MANIFEST_VERSION})")]
    UnsupportedVersion { path: PathBuf, found: u32 },
    #[error("duplicate case id \"{id}\"")]
    DuplicateId { id: String },
    #[error("case \"{id}\": file {path} does not exist under the corpus root")]
    DanglingPath { id: String, path: PathBuf },
    #[error("case \"{id}\": source file {path} is empty")]
    EmptySource { id: String, path: PathBuf },
    #[error("case \"{id}\": language {language} does not match extension of {path}")]
    LanguageMismatch {
        id: String,
        language: Language,
        path: PathBuf,
    },
    #[error("case \"{id}\": cwe must be a positive integer")]
    InvalidCwe { id: String },
    #[error("{path}: not a C or C++ source file")]
    UnsupportedExtension { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Cpp,
}

impl Language {
    pub fn from_path(path: &Path) -> Option<Language> {
        match path.extension()?.to_str()? {
            "c" => Some(Language::C),
            "cpp" | "cc" => Some(Language::Cpp),
            _ => None,
        }
    }

    /// Extension used when writing a case of this language.
    pub fn extension(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::Cpp => "cpp",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::Cpp => "C++",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::C => "c",
            Language::Cpp => "cpp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    JulietImport,
    Extracted,
    Fixture,
    User,
}

/// One standalone C/C++ source file plus what we know about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub cwe: u32,
    pub name: String,
    pub language: Language,
    /// Relative to the corpus root.
    pub path: PathBuf,
    #[serde(skip)]
    pub source_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_check_ids: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl TestCase {
    /// Builds an ad-hoc case for a single file outside any manifest.
    ///
    /// The id is the file stem and the CWE comes from the first `CWE<digits>`
    /// token in the path, or 0 when the path carries none.
    pub fn from_file(path: &Path) -> Result<TestCase, CorpusError> {
        let language = Language::from_path(path).ok_or_else(|| CorpusError::UnsupportedExtension {
            path: path.to_path_buf(),
        })?;
        let source_text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(TestCase {
            id: stem.clone(),
            cwe: cwe_from_path(&path.to_string_lossy()).unwrap_or(0),
            name: stem,
            language,
            path: PathBuf::from(path.file_name().unwrap_or_default()),
            source_text,
            expected_check_ids: None,
            provenance: Provenance::User,
        })
    }

    /// File name this case is written under: `<id>.<ext>`.
    pub fn file_name(&self) -> String {
        format!("{}.{}", self.id, self.language.extension())
    }
}

/// A CWE number with its human-readable name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CweClass {
    pub cwe: u32,
    pub name: &'static str,
}

/// The weakness classes tabulated by default, in CWE order.
pub const BUNDLED_CWE_CLASSES: [CweClass; 5] = [
    CweClass { cwe: 121, name: "Stack Based Buffer Overflow" },
    CweClass { cwe: 122, name: "Heap Based Buffer Overflow" },
    CweClass { cwe: 369, name: "Divide by Zero" },
    CweClass { cwe: 416, name: "Use after Free" },
    CweClass { cwe: 457, name: "Use of Uninitialized Variable" },
];

pub fn cwe_name(cwe: u32) -> Option<&'static str> {
    BUNDLED_CWE_CLASSES.iter().find(|c| c.cwe == cwe).map(|c| c.name)
}

/// Digits of the first `CWE<digits>` token in `path`.
pub fn cwe_from_path(path: &str) -> Option<u32> {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"CWE(\d+)").unwrap());
    re.captures(path)?.get(1)?.as_str().parse().ok().filter(|&n| n > 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    /// As written in the manifest; relative roots resolve against the
    /// manifest's own directory.
    pub root: PathBuf,
    #[serde(default)]
    pub created_at: String,
    pub cases: Vec<TestCase>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Deserialize)]
struct ManifestHeader {
    version: u32,
}

impl CorpusManifest {
    pub fn new(root: impl Into<PathBuf>) -> CorpusManifest {
        CorpusManifest {
            version: MANIFEST_VERSION,
            root: root.into(),
            created_at: timestamp::now_rfc3339(),
            cases: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }

    /// Directory case paths are relative to.
    pub fn root_dir(&self) -> PathBuf {
        if self.root.is_absolute() {
            self.root.clone()
        } else {
            self.base_dir.join(&self.root)
        }
    }

    pub fn case_path(&self, case: &TestCase) -> PathBuf {
        self.root_dir().join(&case.path)
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Inserts `case`, replacing any existing case with the same id.
    pub fn upsert_case(&mut self, case: TestCase) {
        match self.cases.iter_mut().find(|c| c.id == case.id) {
            Some(slot) => *slot = case,
            None => self.cases.push(case),
        }
    }

    /// Checks every manifest invariant against the files under the root.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for case in &self.cases {
            if !seen.insert(case.id.as_str()) {
                return Err(CorpusError::DuplicateId { id: case.id.clone() });
            }
            if case.cwe == 0 {
                return Err(CorpusError::InvalidCwe { id: case.id.clone() });
            }
            if Language::from_path(&case.path) != Some(case.language) {
                return Err(CorpusError::LanguageMismatch {
                    id: case.id.clone(),
                    language: case.language,
                    path: case.path.clone(),
                });
            }
            if !self.case_path(case).is_file() {
                return Err(CorpusError::DanglingPath {
                    id: case.id.clone(),
                    path: case.path.clone(),
                });
            }
        }
        Ok(())
    }

    /// Serializes the manifest (without source text) as pretty JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Reads, validates and loads a manifest plus every case's source text.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |e: serde_json::Error| CorpusError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: ManifestHeader = serde_json::from_str(&raw).map_err(parse_err)?;
    if header.version != MANIFEST_VERSION {
        return Err(CorpusError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: header.version,
        });
    }
    let mut manifest: CorpusManifest = serde_json::from_str(&raw).map_err(parse_err)?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.validate()?;

    let root = manifest.root_dir();
    for case in &mut manifest.cases {
        let file = root.join(&case.path);
        case.source_text = std::fs::read_to_string(&file).map_err(|source| CorpusError::Io {
            path: file.clone(),
            source,
        })?;
        if case.source_text.is_empty() {
            return Err(CorpusError::EmptySource {
                id: case.id.clone(),
                path: case.path.clone(),
            });
        }
    }
    Ok(manifest)
}

/// Writes the manifest JSON atomically. Source files are not touched.
pub fn save_manifest(manifest: &CorpusManifest, path: &Path) -> Result<(), CorpusError> {
    atomic_write(path, manifest.to_json().as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds a manifest from a Juliet-style tree.
///
/// Every `.c`/`.cc`/`.cpp` file whose relative path contains a `CWE<digits>`
/// token becomes one case, ordered by relative path. Support directories are
/// skipped. An empty result is logged, not treated as an error.
pub fn import_tree(root: &Path, cwe_filter: Option<&[u32]>) -> Result<CorpusManifest, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "corpus root is not a readable directory"),
        });
    }

    let mut found: Vec<(String, PathBuf, Language, u32)> = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).into_iter().filter_entry(|e| {
        !(e.file_type().is_dir() && SUPPORT_DIRS.iter().any(|d| e.file_name() == *d))
    });
    for entry in walker {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(language) = Language::from_path(entry.path()) else {
            continue;
        };
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path()).to_path_buf();
        let rel_str = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let Some(cwe) = cwe_from_path(&rel_str) else {
            continue;
        };
        if let Some(filter) = cwe_filter {
            if !filter.contains(&cwe) {
                continue;
            }
        }
        found.push((rel_str, rel, language, cwe));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));

    let mut manifest = CorpusManifest::new(root);
    manifest.base_dir = PathBuf::new();
    let mut ids = HashSet::new();
    for (_, rel, language, cwe) in found {
        let stem = rel
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut id = stem.clone();
        let mut n = 2;
        while !ids.insert(id.clone()) {
            id = format!("{stem}-{n}");
            n += 1;
        }
        let file = root.join(&rel);
        let source_text = std::fs::read_to_string(&file).map_err(|source| CorpusError::Io {
            path: file.clone(),
            source,
        })?;
        manifest.cases.push(TestCase {
            id,
            cwe,
            name: stem,
            language,
            path: rel,
            source_text,
            expected_check_ids: None,
            provenance: Provenance::JulietImport,
        });
    }
    if manifest.cases.is_empty() {
        tracing::warn!(root = %root.display(), "no CWE-named C/C++ files found; manifest is empty");
    }
    Ok(manifest)
}

/// Writes `case.source_text` byte-exactly to `out_dir/<id>.<ext>`.
pub fn write_case(case: &TestCase, out_dir: &Path) -> Result<PathBuf, CorpusError> {
    let path = out_dir.join(case.file_name());
    atomic_write(&path, case.source_text.as_bytes()).map_err(|source| CorpusError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn case(id: &str, path: &str) -> serde_json::Value {
        serde_json::json!({
            "id": id, "cwe": 369, "name": id, "language": "c",
            "path": path, "provenance": "fixture"
        })
    }

    fn write_manifest(dir: &Path, cases: Vec<serde_json::Value>) -> PathBuf {
        let m = serde_json::json!({ "version": 1, "root": ".", "cases": cases });
        let p = dir.join("manifest.json");
        fs::write(&p, serde_json::to_string(&m).unwrap()).unwrap();
        p
    }

    #[test]
    fn loads_two_distinct_cases() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "int main(void){return 0;}\n").unwrap();
        fs::write(dir.path().join("b.c"), "int x;\n").unwrap();
        let p = write_manifest(dir.path(), vec![case("a", "a.c"), case("b", "b.c")]);
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get("b").unwrap().source_text, "int x;\n");
    }

    #[test]
    fn duplicate_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "int a;\n").unwrap();
        let p = write_manifest(dir.path(), vec![case("dz01", "a.c"), case("dz01", "a.c")]);
        let err = load_manifest(&p).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { ref id } if id == "dz01"));
        assert!(err.to_string().contains("dz01"));
    }

    #[test]
    fn dangling_path_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(dir.path(), vec![case("x", "gone.c")]);
        let err = load_manifest(&p).unwrap_err();
        assert!(matches!(err, CorpusError::DanglingPath { ref path, .. } if path == Path::new("gone.c")));
    }

    #[test]
    fn language_must_match_extension() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.cpp"), "int a;\n").unwrap();
        let p = write_manifest(dir.path(), vec![case("x", "a.cpp")]);
        assert!(matches!(load_manifest(&p), Err(CorpusError::LanguageMismatch { .. })));
    }

    #[test]
    fn rejects_other_versions_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, r#"{"version": 2, "root": ".", "cases": []}"#).unwrap();
        assert!(matches!(load_manifest(&p), Err(CorpusError::UnsupportedVersion { found: 2, .. })));
        fs::write(&p, "{ not json").unwrap();
        assert!(matches!(load_manifest(&p), Err(CorpusError::Parse { .. })));
    }

    fn juliet_tree() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let r = dir.path();
        fs::create_dir_all(r.join("CWE369_x")).unwrap();
        fs::create_dir_all(r.join("CWE121_y")).unwrap();
        fs::create_dir_all(r.join("testcasesupport")).unwrap();
        fs::write(r.join("CWE369_x/a.c"), "int a;\n").unwrap();
        fs::write(r.join("CWE121_y/b.cpp"), "int b;\n").unwrap();
        fs::write(r.join("CWE121_y/notes.txt"), "hello\n").unwrap();
        fs::write(r.join("CWE121_y/std_testcase.h"), "#pragma once\n").unwrap();
        fs::write(r.join("testcasesupport/CWE000_io.c"), "int io;\n").unwrap();
        dir
    }

    #[test]
    fn import_filters_by_cwe() {
        let dir = juliet_tree();
        let m = import_tree(dir.path(), Some(&[369])).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.cases[0].cwe, 369);
        assert_eq!(m.cases[0].provenance, Provenance::JulietImport);
    }

    #[test]
    fn import_orders_by_path_and_skips_non_sources() {
        let dir = juliet_tree();
        let m = import_tree(dir.path(), None).unwrap();
        let paths: Vec<_> = m.cases.iter().map(|c| c.path.to_string_lossy().into_owned()).collect();
        assert_eq!(paths, vec!["CWE121_y/b.cpp", "CWE369_x/a.c"]);
        assert_eq!(m.cases[0].language, Language::Cpp);
    }

    #[test]
    fn import_of_tree_without_matches_is_empty_not_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("main.c"), "int main;\n").unwrap();
        assert!(import_tree(dir.path(), None).unwrap().is_empty());
    }

    #[test]
    fn import_of_missing_root_fails() {
        assert!(import_tree(Path::new("/definitely/not/here"), None).is_err());
    }

    #[test]
    fn write_case_uses_id_and_language() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = TestCase {
            id: "dz01".into(),
            cwe: 369,
            name: "dz".into(),
            language: Language::C,
            path: "dz01.c".into(),
            source_text: "int main(void) { return 1/0; }\r\n".into(),
            expected_check_ids: None,
            provenance: Provenance::Fixture,
        };
        let p = write_case(&c, dir.path()).unwrap();
        assert_eq!(p, dir.path().join("dz01.c"));
        assert_eq!(fs::read_to_string(&p).unwrap(), c.source_text);
        c.id = "bo01".into();
        c.language = Language::Cpp;
        assert_eq!(write_case(&c, dir.path()).unwrap(), dir.path().join("bo01.cpp"));
    }

    #[test]
    fn write_case_into_unwritable_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        // a regular file standing in for the output directory
        let blocker = dir.path().join("not-a-dir");
        fs::write(&blocker, "x").unwrap();
        let case = TestCase {
            id: "x".into(),
            cwe: 1,
            name: "x".into(),
            language: Language::C,
            path: "x.c".into(),
            source_text: "int x;".into(),
            expected_check_ids: None,
            provenance: Provenance::User,
        };
        assert!(matches!(write_case(&case, &blocker), Err(CorpusError::Io { .. })));
    }

    #[test]
    fn cwe_token_parsing() {
        assert_eq!(cwe_from_path("juliet/CWE369_Divide_by_Zero/s01/CWE369_a.c"), Some(369));
        assert_eq!(cwe_from_path("CWE0/a.c"), None);
        assert_eq!(cwe_from_path("plain/a.c"), None);
    }
}
