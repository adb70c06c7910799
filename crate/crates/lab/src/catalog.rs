//! Built-in scenarios plus any `*.toml` found in a user directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::LabError;

pub const BUILTINS: [(&str, &str); 6] = [
    ("stationary", include_str!("../scenarios/stationary.toml")),
    ("perturbed", include_str!("../scenarios/perturbed.toml")),
    ("ode-pipeline", include_str!("../scenarios/ode-pipeline.toml")),
    ("frame-shift", include_str!("../scenarios/frame-shift.toml")),
    ("klein-gordon", include_str!("../scenarios/klein-gordon.toml")),
    ("refinement-study", include_str!("../scenarios/refinement-study.toml")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Builtin,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub source: Source,
    pub config: Config,
}

pub fn builtin(name: &str) -> Option<Config> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Config::from_toml(text).expect("built-in scenarios parse"))
}

/// Built-ins first, then the parseable files of `dir` sorted by path.
/// Unparseable files are reported on stderr and skipped.
pub fn list(dir: Option<&Path>) -> Result<Vec<Entry>, LabError> {
    let mut entries: Vec<Entry> = BUILTINS
        .iter()
        .map(|(name, _)| Entry {
            source: Source::Builtin,
            config: builtin(name).expect("listed"),
        })
        .collect();
    let Some(dir) = dir else {
        return Ok(entries);
    };
    let read = fs::read_dir(dir).map_err(|e| LabError::Config(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    for path in paths {
        match Config::from_path(&path) {
            Ok(config) => entries.push(Entry {
                source: Source::File(path),
                config,
            }),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    Ok(entries)
}

/// Resolves a path to a TOML file, or else a built-in name.
pub fn resolve(spec: &str) -> Result<Config, LabError> {
    let path = Path::new(spec);
    if path.is_file() {
        return Config::from_path(path);
    }
    builtin(spec).ok_or_else(|| LabError::Config(format!("{spec} is neither a file nor a built-in scenario")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for (name, _) in BUILTINS {
            let config = builtin(name).unwrap();
            assert_eq!(config.name, name);
            config.validate().unwrap();
        }
    }

    #[test]
    fn unknown_name_is_a_config_error() {
        assert!(matches!(resolve("no-such-scenario"), Err(LabError::Config(_))));
    }
}
