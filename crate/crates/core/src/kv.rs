//! Flat `key=value` text used by experiment configs and synthetic dataset specs.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KvError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(KvError::Syntax { line: idx + 1 })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(KvError::Syntax { line: idx + 1 });
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(KvError::Duplicate { line: idx + 1, key });
        }
    }
    Ok(map)
}

/// Typed lookup helper over a parsed map.
pub(crate) struct KvReader<'a> {
    map: &'a BTreeMap<String, String>,
}

impl<'a> KvReader<'a> {
    pub fn new(map: &'a BTreeMap<String, String>, known: &[&str]) -> Result<Self, KvError> {
        if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(KvError::UnknownKey(k.clone()));
        }
        Ok(Self { map })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        self.map
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| KvError::Value {
                    key: key.to_string(),
                    value: v.clone(),
                })
            })
            .transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T, KvError> {
        self.get(key)?.ok_or_else(|| KvError::Missing(key.to_string()))
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let m = parse_key_values("# comment\n a = 1 \n\nb=x=y\n").unwrap();
        assert_eq!(m["a"], "1");
        assert_eq!(m["b"], "x=y");
        assert_eq!(parse_key_values("a=1\nnope\n"), Err(KvError::Syntax { line: 2 }));
        assert!(matches!(parse_key_values("a=1\na=2"), Err(KvError::Duplicate { line: 2, .. })));
    }

    #[test]
    fn reader_checks_keys_and_types() {
        let m = parse_key_values("a=1\nb=zz").unwrap();
        assert!(matches!(KvReader::new(&m, &["a"]), Err(KvError::UnknownKey(_))));
        let r = KvReader::new(&m, &["a", "b", "c"]).unwrap();
        assert_eq!(r.required::<u32>("a").unwrap(), 1);
        assert!(matches!(r.get::<u32>("b"), Err(KvError::Value { .. })));
        assert_eq!(r.or("c", 7u32).unwrap(), 7);
        assert!(matches!(r.required::<u32>("c"), Err(KvError::Missing(_))));
    }
}
