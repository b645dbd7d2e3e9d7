//! Resolved run configuration: command-line flag, then config file, then
//! built-in default. Every lookup is recorded so the exact settings of a run
//! can be written next to its outputs.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use specbench::kv::KvDoc;
use specbench::{Error, Result};

pub struct Run {
    file: KvDoc,
    resolved: KvDoc,
}

impl Run {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => {
                require_file(p)?;
                KvDoc::parse(&std::fs::read_to_string(p)?)?
            }
            None => KvDoc::new(),
        };
        Ok(Self { file, resolved: KvDoc::new() })
    }

    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => self.file.parsed_or(key, default)?,
        };
        self.resolved.set(key, &v);
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None if self.file.get(key).is_some() => Some(self.file.parsed(key)?),
            None => None,
        };
        if let Some(v) = &v {
            self.resolved.set(key, v);
        }
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        self.optional(key, flag)?
            .ok_or_else(|| Error::Config(format!("missing --{} (or `{key}` in the config file)", key.replace('_', "-"))))
    }

    /// Comma-separated list, recorded as given.
    pub fn list<T: FromStr>(&mut self, key: &str, flag: Option<String>, default: &str) -> Result<Vec<T>> {
        let text = self.value(key, flag, default.to_string())?;
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Config(format!("bad entry {s:?} in {key}"))))
            .collect()
    }

    pub fn output(&mut self, key: &str, flag: Option<PathBuf>, default: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.value(key, flag.map(|p| p.display().to_string()), default.to_string())?))
    }

    /// An input file that must already exist.
    pub fn input(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let p = PathBuf::from(self.required(key, flag.map(|p| p.display().to_string()))?);
        require_file(&p)?;
        Ok(p)
    }

    pub fn optional_input(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let p = self.optional(key, flag.map(|p| p.display().to_string()))?.map(PathBuf::from);
        if let Some(p) = &p {
            require_file(p)?;
        }
        Ok(p)
    }

    /// Writes `<out>.config.kv`.
    pub fn write_beside(&self, out: &Path) -> Result<PathBuf> {
        let path = beside(out, "config.kv");
        std::fs::write(&path, self.resolved.to_text())?;
        Ok(path)
    }
}

/// `<out>.<suffix>`, keeping any existing extension of `out`.
pub fn beside(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file {} does not exist", p.display())))
    }
}

/// `WxH` with both sides positive.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("invalid size {s:?} (expected WxH, e.g. 64x64)"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("64x32").unwrap(), (64, 32));
        for bad in ["64", "0x4", "ax4", "4x", ""] {
            assert!(parse_size(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.kv");
        std::fs::write(&cfg, "seed=4\nepochs=9\n").unwrap();
        let mut run = Run::new(Some(&cfg)).unwrap();
        assert_eq!(run.value("seed", Some(1u64), 0).unwrap(), 1);
        assert_eq!(run.value("epochs", None, 3usize).unwrap(), 9);
        assert_eq!(run.value("batch", None, 7usize).unwrap(), 7);
        let written = run.write_beside(&dir.path().join("out.hsc")).unwrap();
        let doc = KvDoc::parse(&std::fs::read_to_string(written).unwrap()).unwrap();
        assert_eq!(doc.get("seed"), Some("1"));
        assert_eq!(doc.get("epochs"), Some("9"));
        assert_eq!(doc.get("batch"), Some("7"));
    }
}
