//! `key = value` run configuration.
//!
//! Values resolve as config file < `NEGEST_*` environment < command-line
//! flag. Clap already merges flags over the environment, so a config value
//! is only consulted when neither was given.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = normalize(k);
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", i + 1);
            }
        }
        Ok(ConfigFile { values, source: None })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    /// Flag (or environment) value, else the config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| anyhow!("config key '{key}' = '{v}': {e}")),
        }
    }

    pub fn get_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Warn about keys no command option consumed.
    pub fn warn_unknown(&self, known: &[&str]) {
        for key in self.values.keys() {
            if !known.iter().any(|k| normalize(k) == *key) {
                let src = self.source.as_ref().map_or(String::new(), |p| format!(" in {}", p.display()));
                log::warn!("ignoring unknown config key '{key}'{src}");
            }
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// `"a,b,c"` into a list.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| anyhow!("invalid list entry '{t}': {e}")))
        .collect()
}

/// `"lo:hi"` into a pair.
pub fn parse_pair<T>(s: &str) -> Result<(T, T)>
where
    T: FromStr,
    T::Err: Display,
{
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("expected 'a:b', got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<T>().map_err(|e| anyhow!("invalid value '{t}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_normalizes_keys() {
        let cfg = ConfigFile::parse("# run\nSamples = 10\nm-copies=3 # order\n\n").unwrap();
        assert_eq!(cfg.raw("samples"), Some("10"));
        assert_eq!(cfg.raw("m_copies"), Some("3"));
        assert_eq!(cfg.get_or::<usize>(None, "samples", 1).unwrap(), 10);
        assert_eq!(cfg.get_or(Some(7usize), "samples", 1).unwrap(), 7);
        assert_eq!(cfg.get_or::<usize>(None, "epochs", 4).unwrap(), 4);
        assert!(cfg.pick::<f64>(None, "m_copies").unwrap() == Some(3.0));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("novalue\n").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2\n").is_err());
        let cfg = ConfigFile::parse("samples = many\n").unwrap();
        assert!(cfg.pick::<usize>(None, "samples").is_err());
    }

    #[test]
    fn lists_and_pairs() {
        assert_eq!(parse_list::<usize>("10, 20,").unwrap(), vec![10, 20]);
        assert_eq!(parse_pair::<usize>("3:14").unwrap(), (3, 14));
        assert!(parse_pair::<usize>("3-14").is_err());
    }
}
