//! Scenarios shipped inside the binary.

use std::fs;
use std::io;
use std::path::Path;

pub const DEMOS: [(&str, &str); 6] = [
    ("a1_sym", include_str!("../demo/a1_sym.scn")),
    ("a1_asym", include_str!("../demo/a1_asym.scn")),
    ("a2_plus", include_str!("../demo/a2_plus.scn")),
    ("a3_sliding", include_str!("../demo/a3_sliding.scn")),
    ("a4_example", include_str!("../demo/a4_example.scn")),
    ("bafico_baldi", include_str!("../demo/bafico_baldi.scn")),
];

/// Bundled text for `demo/<name>` (with or without `.scn`).
pub fn bundled(path: &Path) -> Option<&'static str> {
    let parent = path.parent()?.file_name()?;
    if parent != "demo" {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    if path.extension().is_some_and(|e| e != "scn") {
        return None;
    }
    DEMOS.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}

pub fn write_all(dir: &Path) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, text) in DEMOS {
        let p = dir.join(format!("{name}.scn"));
        fs::write(&p, text)?;
        written.push(p.display().to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use znl::dsl::parse_scenario;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in DEMOS {
            let s = parse_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn lookup_by_demo_path() {
        assert!(bundled(Path::new("demo/a1_sym")).is_some());
        assert!(bundled(Path::new("./demo/a1_sym.scn")).is_some());
        assert!(bundled(Path::new("a1_sym")).is_none());
        assert!(bundled(Path::new("demo/nope")).is_none());
    }
}
