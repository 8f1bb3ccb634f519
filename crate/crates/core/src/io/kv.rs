//! Line-oriented `key = value` text with optional `[section]` headers and `#`
//! comments. Shared by run configs and reports.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str, allow_sections: bool) -> Result<Vec<Entry>> {
    let mut section = None;
    let mut entries = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with('[') {
            if !allow_sections {
                return Err(Error::Config {
                    line,
                    message: "sections are not allowed here".into(),
                });
            }
            let name = trimmed
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Config {
                    line,
                    message: format!("malformed section header `{trimmed}`"),
                })?;
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config {
                line,
                message: "empty key".into(),
            });
        }
        entries.push(Entry {
            line,
            section: section.clone(),
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

/// Accumulates `key = value` lines in insertion order.
#[derive(Debug, Default)]
pub struct Writer {
    out: String,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        self.out.push_str("# ");
        self.out.push_str(text);
        self.out.push('\n');
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        self.out.push('[');
        self.out.push_str(name);
        self.out.push_str("]\n");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.out.push_str(key);
        self.out.push_str(" = ");
        self.out.push_str(&value.to_string());
        self.out.push('\n');
        self
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "# top\na = 1\n\n[s]\n  b =  two words \n";
        let e = parse(text, true).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].section, None);
        assert_eq!((e[1].section.as_deref(), e[1].key.as_str(), e[1].value.as_str()), (Some("s"), "b", "two words"));
        assert_eq!(e[1].line, 5);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("just words\n", false).is_err());
        assert!(parse("[s]\n", false).is_err());
        assert!(parse("[\n", true).is_err());
        assert!(parse(" = 3\n", true).is_err());
    }
}
