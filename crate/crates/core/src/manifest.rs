//! Plain-text `key = value` files.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Ordered `key = value` pairs. Blank lines and lines starting with `#` are
/// ignored; keys must be unique.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Model(format!("manifest lacks required key '{key}'")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (no, line) in text.lines().enumerate() {
            let t = line.trim_start();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let indent = line.len() - t.len();
            let Some(eq) = line.find('=') else {
                return Err(Error::parse("expected 'key = value'", no + 1, indent + 1));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::parse("malformed key", no + 1, indent + 1));
            }
            if m.get(key).is_some() {
                return Err(Error::parse(format!("duplicate key '{key}'"), no + 1, indent + 1));
            }
            m.entries.push((key.to_string(), value.to_string()));
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let m = Manifest::parse("# c\nkind = stranded\n  X = x.mtx\n").unwrap();
        assert_eq!(m.get("X"), Some("x.mtx"));
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
        match Manifest::parse("a = 1\nb 2\n") {
            Err(Error::Parse { location, .. }) => assert_eq!(location.line, 2),
            other => panic!("{other:?}"),
        }
        assert!(Manifest::parse("a = 1\na = 2\n").is_err());
    }
}
