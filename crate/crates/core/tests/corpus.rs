//! The bundled corpus: loading, invariants and expected verdicts.

mod common;

use std::fs;
use std::path::PathBuf;

use spskit_core::corpus::{load_case, load_corpus, CaseVariant, CorpusError, Expected};
use spskit_core::lang::{parse_source, source_to_string};

use common::corpus_dir;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spskit-corpus-test-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn corpus_is_complete() {
    let cases = load_corpus(corpus_dir()).unwrap();
    assert!(cases.len() >= 12);
    let names: Vec<&str> = cases.iter().map(|c| c.name.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for c in &cases {
        let text = source_to_string(&c.program);
        assert_eq!(parse_source(&text).unwrap(), c.program, "{}", c.name);
        if c.variant != CaseVariant::Vulnerable {
            assert_eq!(c.expected, Expected::NoViolation, "{}", c.name);
        }
    }
    for base in ["initialization", "kocher_case01", "kocher_case05", "v4_stl"] {
        let mitigated = cases.iter().filter(|c| c.name.starts_with(base) && c.variant != CaseVariant::Vulnerable);
        assert!(mitigated.count() >= 1, "{base} has no mitigated variant");
    }
}

#[test]
fn every_case_meets_its_expectation() {
    for c in load_corpus(corpus_dir()).unwrap() {
        let v = c.check().unwrap();
        assert!(c.expected.matches(&v), "{}: expected {}, got {}", c.name, c.expected, v.result);
    }
}

fn write_case(dir: &PathBuf, manifest: &str, program: &str) {
    fs::write(dir.join("manifest.json"), manifest).unwrap();
    fs::write(dir.join("program.sps"), program).unwrap();
    fs::write(dir.join("phi.json"), r#"{"public_vars": ["x"]}"#).unwrap();
}

#[test]
fn malformed_cases_are_reported() {
    let root = scratch("bad");
    let dir = root.join("leaky");
    fs::create_dir_all(&dir).unwrap();
    let manifest = r#"{"name": "leaky", "variant": "vulnerable", "spectre": "v1", "model": "baseline", "expected": "Violation"}"#;

    write_case(&dir, manifest, "leak s < 1;");
    let c = load_case(&dir).unwrap();
    assert!(c.expected.matches(&c.check().unwrap()));

    write_case(&dir, manifest, "leak s < ;");
    assert!(matches!(load_case(&dir), Err(CorpusError::Parse { .. })));

    write_case(&dir, &manifest.replace("\"leaky\"", "\"other\""), "skip;");
    assert!(matches!(load_case(&dir), Err(CorpusError::NameMismatch { .. })));

    write_case(&dir, &manifest.replace("vulnerable", "unknown"), "skip;");
    assert!(matches!(load_case(&dir), Err(CorpusError::Manifest { .. })));

    fs::remove_file(dir.join("program.sps")).unwrap();
    write_case(&dir, manifest, "skip;");
    fs::remove_file(dir.join("phi.json")).unwrap();
    let e = load_case(&dir).unwrap_err();
    assert!(matches!(e, CorpusError::Io { .. }));
    assert!(e.to_string().contains("phi.json"));
    fs::remove_dir_all(root).unwrap();
}
