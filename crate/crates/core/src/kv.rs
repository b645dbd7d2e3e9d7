//! Plain `key=value` text documents.
//!
//! Used for run configs, measurement sidecars, model headers, and reports.
//! Lines are `key=value`; blank lines and lines starting with `#` are
//! ignored. Keys keep insertion order when written back out.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse("key=value document", format!("line {}: missing '='", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse("key=value document", format!("line {}: empty key", lineno + 1)));
            }
            doc.set(k, v.trim());
        }
        Ok(doc)
    }

    /// Insert or replace.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse("key=value document", format!("missing key {key:?}")))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::parse("key=value document", format!("bad value for {key:?}: {raw:?}")))
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            Some(_) => self.parsed(key),
            None => Ok(default),
        }
    }

    /// Comma-separated list value.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| {
                    Error::parse("key=value document", format!("bad list item for {key:?}: {s:?}"))
                })
            })
            .collect()
    }

    pub fn merge(&mut self, other: &KvDoc) {
        for (k, v) in &other.entries {
            self.set(k, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

pub fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let doc = KvDoc::parse("# run\nseed=7\n\nsize = 64x64\nseed=9\n").unwrap();
        assert_eq!(doc.get("seed"), Some("9"));
        assert_eq!(doc.get("size"), Some("64x64"));
        assert_eq!(doc.len(), 2);
    }

    #[test]
    fn rejects_missing_equals() {
        assert!(KvDoc::parse("just text").is_err());
        assert!(KvDoc::parse("=3").is_err());
    }

    #[test]
    fn lists() {
        let doc = KvDoc::parse("q=1, 3,5\nempty=").unwrap();
        assert_eq!(doc.list::<usize>("q").unwrap(), vec![1, 3, 5]);
        assert!(doc.list::<usize>("empty").unwrap().is_empty());
        assert!(doc.list::<usize>("missing").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut doc = KvDoc::new();
        doc.set("a", 1);
        doc.set("b", "x,y");
        assert_eq!(KvDoc::parse(&doc.to_text()).unwrap(), doc);
    }
}
