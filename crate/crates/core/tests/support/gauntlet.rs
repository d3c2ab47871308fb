//! Runs the config fixture corpus.
//!
//! Valid fixtures must parse with no violations. Invalid fixtures start with
//! `# expect: Kind[, Kind...]` and must fail with exactly that multiset of
//! violation kinds.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pulsekit_core::config::{parse_config, ConfigError, ViolationKind};

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/config")
        .canonicalize()
        .expect("fixture directory exists")
}

fn yaml_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .expect("readable fixture dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "yaml"))
        .collect();
    files.sort();
    files
}

fn expected_kinds(text: &str) -> Result<Vec<ViolationKind>, String> {
    let line = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# expect:"))
        .ok_or("missing `# expect:` header")?;
    let mut kinds = line
        .split(',')
        .map(|k| ViolationKind::from_name(k.trim()).ok_or(format!("unknown kind `{}`", k.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    kinds.sort();
    Ok(kinds)
}

/// File name paired with Ok or a description of the mismatch.
pub type Entry = (String, Result<(), String>);

/// Results for the valid and the invalid corpus.
pub fn run(root: &Path) -> (Vec<Entry>, Vec<Entry>) {
    let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
    let valid = yaml_files(&root.join("valid"))
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let r = parse_config(&text).map(|_| ()).map_err(|e| e.to_string());
            (name(&p), r)
        })
        .collect();
    let invalid = yaml_files(&root.join("invalid"))
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let r = expected_kinds(&text).and_then(|want| match parse_config(&text) {
                Ok(_) => Err(format!("expected {want:?}, parsed cleanly")),
                Err(e @ ConfigError::Invalid(_)) => {
                    let mut got: Vec<ViolationKind> =
                        e.violations().iter().map(|v| v.kind()).collect();
                    got.sort();
                    if got == want {
                        Ok(())
                    } else {
                        Err(format!("expected {want:?}, got {got:?}: {e}"))
                    }
                }
                Err(e) => Err(format!("expected {want:?}, got {e}")),
            });
            (name(&p), r)
        })
        .collect();
    (valid, invalid)
}
