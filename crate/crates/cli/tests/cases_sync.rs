//! Keeps the committed files under `cases/` byte-identical to the builders
//! in `cases::bundled_files`. Run with `SIDEFLOW_BLESS_CASES=1` to rewrite
//! the directory after changing a builder.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use sideflow_cli::cases::bundled_files;

fn cases_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases")
}

#[test]
fn bundled_case_files_match_builders() {
    let dir = cases_dir();
    let files = bundled_files();
    if std::env::var_os("SIDEFLOW_BLESS_CASES").is_some() {
        fs::create_dir_all(&dir).unwrap();
        for (name, content) in &files {
            fs::write(dir.join(name), content).unwrap();
        }
        return;
    }
    let mut expected = BTreeSet::new();
    for (name, content) in &files {
        expected.insert(name.clone());
        let path = dir.join(name);
        let on_disk = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("missing bundled file {}: {e}", path.display()));
        assert_eq!(
            &on_disk, content,
            "{name} is stale; rerun with SIDEFLOW_BLESS_CASES=1"
        );
    }
    for entry in fs::read_dir(&dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(
            expected.contains(&name),
            "{name} is not produced by any builder"
        );
    }
}
