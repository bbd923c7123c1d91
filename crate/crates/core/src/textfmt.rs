//! Shared plumbing for the line-oriented text formats.
//!
//! Every format starts with a one-line magic header. Blank lines and lines
//! whose first non-space character is `#` are skipped. Fields are separated
//! by whitespace and reals are written with the shortest representation that
//! parses back to the same `f64`, which keeps round trips byte-identical.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{origin}: missing header, expected `{expected}`")]
    MissingHeader { origin: String, expected: &'static str },
    #[error("{origin}:{line}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        origin: String,
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("{origin}:{line}: {message}")]
    Line {
        origin: String,
        line: usize,
        message: String,
    },
}

impl FormatError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| FormatError::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| FormatError::io(path, e))
}

/// A data line: 1-based line number plus its whitespace-separated fields.
#[derive(Debug)]
pub struct Record<'a> {
    pub origin: &'a str,
    pub line: usize,
    pub fields: Vec<&'a str>,
}

impl<'a> Record<'a> {
    pub fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Line {
            origin: self.origin.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    pub fn expect_len(&self, names: &[&str]) -> Result<(), FormatError> {
        if self.fields.len() != names.len() {
            return Err(self.error(format!(
                "expected {} fields ({}), found {}",
                names.len(),
                names.join(" "),
                self.fields.len()
            )));
        }
        Ok(())
    }

    pub fn parse<T: FromStr>(&self, index: usize, name: &str) -> Result<T, FormatError> {
        let raw = self
            .fields
            .get(index)
            .ok_or_else(|| self.error(format!("missing field `{name}`")))?;
        raw.parse()
            .map_err(|_| self.error(format!("invalid value `{raw}` for field `{name}`")))
    }

    /// Parses a finite real.
    pub fn real(&self, index: usize, name: &str) -> Result<f64, FormatError> {
        let value: f64 = self.parse(index, name)?;
        if !value.is_finite() {
            return Err(self.error(format!("field `{name}` must be finite")));
        }
        Ok(value)
    }

    pub fn flag(&self, index: usize, name: &str) -> Result<bool, FormatError> {
        match self.fields.get(index).copied() {
            Some("0") => Ok(false),
            Some("1") => Ok(true),
            Some(other) => Err(self.error(format!("field `{name}` must be 0 or 1, found `{other}`"))),
            None => Err(self.error(format!("missing field `{name}`"))),
        }
    }
}

fn is_skipped(line: &str) -> bool {
    let trimmed = line.trim();
    trimmed.is_empty() || trimmed.starts_with('#')
}

/// Checks the magic header and returns the remaining data lines.
pub fn records<'a>(
    text: &'a str,
    origin: &'a str,
    header: &'static str,
) -> Result<Vec<Record<'a>>, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !is_skipped(l));
    match lines.next() {
        None => {
            return Err(FormatError::MissingHeader {
                origin: origin.to_string(),
                expected: header,
            })
        }
        Some((line, found)) if found.trim() != header => {
            return Err(FormatError::BadHeader {
                origin: origin.to_string(),
                line,
                expected: header,
                found: found.trim().to_string(),
            })
        }
        Some(_) => {}
    }
    Ok(lines
        .map(|(line, text)| Record {
            origin,
            line,
            fields: text.split_whitespace().collect(),
        })
        .collect())
}

/// Joins fields with single spaces and terminates the line.
pub fn push_line(out: &mut String, fields: &[&dyn Display]) {
    use std::fmt::Write;
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{field}");
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blank_lines() {
        let text = "# leading comment\nmagic v1\n\n  # indented\na 1\nb 2\n";
        let recs = records(text, "mem", "magic v1").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].line, 5);
        assert_eq!(recs[1].fields, vec!["b", "2"]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            records("", "mem", "magic v1"),
            Err(FormatError::MissingHeader { .. })
        ));
        let err = records("other v2\n", "mem", "magic v1").unwrap_err();
        assert_eq!(
            err.to_string(),
            "mem:1: expected header `magic v1`, found `other v2`"
        );
    }

    #[test]
    fn field_errors_name_the_field() {
        let recs = records("magic v1\nx nan 2\n", "f.txt", "magic v1").unwrap();
        let err = recs[0].real(1, "score").unwrap_err();
        assert_eq!(err.to_string(), "f.txt:2: field `score` must be finite");
        let err = recs[0].flag(2, "ignore").unwrap_err();
        assert!(err.to_string().contains("`ignore` must be 0 or 1"));
    }

    #[test]
    fn reals_round_trip_through_display() {
        for v in [0.1, 1.0 / 3.0, 640.0, 1e-7, 123456.789] {
            let mut s = String::new();
            push_line(&mut s, &[&v]);
            assert_eq!(s.trim().parse::<f64>().unwrap(), v);
        }
    }
}
