//! Line-oriented `key = value` configuration files.
//!
//! `#` starts a comment line. `include = <path>` splices in another file,
//! resolved relative to the including file. Keys may repeat; single-valued
//! lookups take the last occurrence.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::textfmt::{self, FormatError};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: String,
    pub line: usize,
}

impl Entry {
    pub fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Line {
            origin: self.origin.clone(),
            line: self.line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<Entry>,
    /// Directory of the top-level file; relative paths in values resolve here.
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let mut entries = Vec::new();
        let mut stack = HashSet::new();
        load_into(path, &mut entries, &mut stack)?;
        Ok(Self {
            entries,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn parse_str(text: &str, origin: &str) -> Result<Self, FormatError> {
        let mut entries = Vec::new();
        for (line, raw) in text.lines().enumerate() {
            if let Some(entry) = parse_line(raw, origin, line + 1)? {
                if entry.key == "include" {
                    return Err(entry.error("include is only supported for files on disk"));
                }
                entries.push(entry);
            }
        }
        Ok(Self {
            entries,
            base_dir: PathBuf::new(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// Resolves a path-valued key against the including file's directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|e| resolve(&e.origin, &e.value))
    }
}

/// Resolves `value` relative to the directory of the file named by `origin`.
pub fn resolve(origin: &str, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match Path::new(origin).parent() {
        Some(dir) => dir.join(p),
        None => p.to_path_buf(),
    }
}

fn parse_line(raw: &str, origin: &str, line: usize) -> Result<Option<Entry>, FormatError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let (key, value) = trimmed.split_once('=').ok_or_else(|| FormatError::Line {
        origin: origin.to_string(),
        line,
        message: format!("expected `key = value`, found `{trimmed}`"),
    })?;
    let key = key.trim();
    if key.is_empty() {
        return Err(FormatError::Line {
            origin: origin.to_string(),
            line,
            message: "empty key".into(),
        });
    }
    Ok(Some(Entry {
        key: key.to_string(),
        value: value.trim().to_string(),
        origin: origin.to_string(),
        line,
    }))
}

fn load_into(path: &Path, entries: &mut Vec<Entry>, stack: &mut HashSet<PathBuf>) -> Result<(), FormatError> {
    let canonical = path.canonicalize().map_err(|e| FormatError::io(path, e))?;
    let origin = path.display().to_string();
    if !stack.insert(canonical.clone()) {
        return Err(FormatError::Line {
            origin,
            line: 0,
            message: "include cycle".into(),
        });
    }
    let text = textfmt::read_file(path)?;
    for (line, raw) in text.lines().enumerate() {
        let Some(entry) = parse_line(raw, &origin, line + 1)? else {
            continue;
        };
        if entry.key == "include" {
            let target = resolve(&origin, &entry.value);
            load_into(&target, entries, stack)?;
        } else {
            entries.push(entry);
        }
    }
    stack.remove(&canonical);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = ConfigFile::parse_str("# c\niou = 0.5\n\nsubset=all\niou=0.6\n", "mem").unwrap();
        assert_eq!(cfg.value("iou"), Some("0.6"));
        assert_eq!(cfg.value("subset"), Some("all"));
        assert_eq!(cfg.all("iou").count(), 2);
        assert!(ConfigFile::parse_str("novalue\n", "mem").is_err());
    }

    #[test]
    fn includes_resolve_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/part.cfg"), "cell = a b 1\ngt = x.gt\n").unwrap();
        fs::write(dir.path().join("main.cfg"), "include = sub/part.cfg\ncell = a c 2\n").unwrap();
        let cfg = ConfigFile::load(&dir.path().join("main.cfg")).unwrap();
        assert_eq!(cfg.all("cell").count(), 2);
        assert_eq!(cfg.path("gt").unwrap(), dir.path().join("sub/x.gt"));
    }

    #[test]
    fn include_cycles_fail() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.cfg"), "include = b.cfg\n").unwrap();
        fs::write(dir.path().join("b.cfg"), "include = a.cfg\n").unwrap();
        let err = ConfigFile::load(&dir.path().join("a.cfg")).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }
}
