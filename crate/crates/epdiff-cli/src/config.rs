//! Plain-text experiment configs: `key = value` pairs grouped into
//! `[section]` blocks, `#` comments. Human-editable and diff-friendly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use epdiff_core::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// section -> key -> value; top-level keys live under "".
    sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Directory of the config file; relative paths resolve against it.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        sections.entry(current.clone()).or_default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value, got '{line}'", ln + 1))
            })?;
            let prev = sections
                .get_mut(&current)
                .expect("section exists")
                .insert(key.trim().to_string(), value.trim().to_string());
            if prev.is_some() {
                return Err(Error::Parse(format!(
                    "line {}: duplicate key '{}' in section [{}]",
                    ln + 1,
                    key.trim(),
                    current
                )));
            }
        }
        Ok(Config {
            sections,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(PathBuf::from).unwrap_or_default();
        Config::parse(&text, &base)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|m| m.get(key))
            .map(|s| s.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key).ok_or_else(|| {
            Error::InvalidParameter(if section.is_empty() {
                format!("missing top-level key '{key}'")
            } else {
                format!("missing key '{key}' in section [{section}]")
            })
        })
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| Error::InvalidParameter(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64> {
        self.require(section, key)?
            .parse::<f64>()
            .map_err(|e| Error::InvalidParameter(format!("[{section}] {key}: {e}")))
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|e| Error::InvalidParameter(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn require_usize(&self, section: &str, key: &str) -> Result<usize> {
        self.require(section, key)?
            .parse::<usize>()
            .map_err(|e| Error::InvalidParameter(format!("[{section}] {key}: {e}")))
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|e| Error::InvalidParameter(format!("{key} = '{v}': {e}"))),
        }
    }

    /// Comma-separated list of floats.
    pub fn require_f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        self.require(section, key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("[{section}] {key}: {e}")))
            })
            .collect()
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let c = Config::parse(
            "kind = geodesic_eulerian\nseed = 7 # comment\n[grid]\ndim = 1\nn = 64\n",
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(c.get("", "kind"), Some("geodesic_eulerian"));
        assert_eq!(c.get_u64("", "seed").unwrap(), Some(7));
        assert_eq!(c.require_usize("grid", "n").unwrap(), 64);
        assert!(c.require("grid", "missing").is_err());
    }

    #[test]
    fn rejects_malformed_lines_and_duplicates() {
        assert!(Config::parse("just a line\n", Path::new(".")).is_err());
        assert!(Config::parse("a = 1\na = 2\n", Path::new(".")).is_err());
    }
}
