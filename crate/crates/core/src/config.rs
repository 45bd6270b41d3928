//! `key = value` configuration files.
//!
//! One file may carry simulator, objective, camera and classification
//! settings at once; each consumer reads the keys it owns and the loader
//! rejects keys nobody owns.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: format!("line {line_no}"),
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    location: format!("line {line_no}"),
                    message: "empty key".into(),
                });
            }
            if entries
                .insert(key.to_string(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(Error::Parse {
                    location: format!("line {line_no}"),
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn location(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((_, 0)) | None => format!("key `{key}`"),
            Some((_, line)) => format!("line {line} (`{key}`)"),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|e| Error::Parse {
                location: self.location(key),
                message: format!("not a number: {e}"),
            }),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|e| Error::Parse {
                location: self.location(key),
                message: format!("not a non-negative integer: {e}"),
            }),
        }
    }

    pub fn get_vec3(&self, key: &str) -> Result<Option<[f64; 3]>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = v
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let bad = |message: String| Error::Parse {
            location: self.location(key),
            message,
        };
        match parts.as_slice() {
            // a bare scalar means a vector with that value on every axis
            [one] => {
                let x: f64 = one.parse().map_err(|e| bad(format!("not a number: {e}")))?;
                Ok(Some([x, x, x]))
            }
            [a, b, c] => {
                let mut out = [0.0; 3];
                for (slot, s) in out.iter_mut().zip([a, b, c]) {
                    *slot = s.parse().map_err(|e| bad(format!("not a number: {e}")))?;
                }
                Ok(Some(out))
            }
            _ => Err(bad(format!("expected 1 or 3 components, found {}", parts.len()))),
        }
    }

    /// Fails on the first key not in `known`.
    pub fn ensure_known(&self, known: &[&str]) -> Result<()> {
        for key in self.keys() {
            if !known.contains(&key) {
                return Err(Error::Parse {
                    location: self.location(key),
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, (v, _)) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_vectors() {
        let cfg = KvConfig::parse("# sim\nsubsteps = 60\ngravity = 0, 0, -9.8 # down\nke=1e5\n").unwrap();
        assert_eq!(cfg.get_usize("substeps").unwrap(), Some(60));
        assert_eq!(cfg.get_vec3("gravity").unwrap(), Some([0.0, 0.0, -9.8]));
        assert_eq!(cfg.get_f64("ke").unwrap(), Some(1e5));
        assert_eq!(cfg.get_f64("kd").unwrap(), None);
    }

    #[test]
    fn reports_line_numbers() {
        let err = KvConfig::parse("a = 1\nbroken line\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let cfg = KvConfig::parse("a = 1\nb = x\n").unwrap();
        let err = cfg.get_f64("b").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(cfg.ensure_known(&["a"]).is_err());
    }

    #[test]
    fn rejects_duplicates() {
        assert!(KvConfig::parse("a = 1\na = 2\n").is_err());
    }
}
