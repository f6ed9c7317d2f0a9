//! `key = value` config files. Flags given on the command line win.

use std::collections::BTreeMap;
use std::path::Path;

pub const KEYS: &[&str] = &["k", "q", "r", "n", "precision_bits", "format", "output", "jobs", "mode"];

#[derive(Debug, Default, Clone)]
pub struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    /// Blank lines and `#` comments are skipped; unknown keys are errors.
    pub fn parse(text: &str) -> Result<FileConfig, String> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim().replace('-', "_"), v.trim().to_string());
            if !KEYS.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key `{k}`", i + 1));
            }
            map.insert(k, v);
        }
        Ok(FileConfig(map))
    }

    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        FileConfig::parse(&text)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.get_str(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("config: bad value `{v}` for `{key}`")))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = FileConfig::parse("# comment\nk = 2\nprecision-bits=512  # trailing\n\n").unwrap();
        assert_eq!(c.get::<u32>("k").unwrap(), Some(2));
        assert_eq!(c.get::<u32>("precision_bits").unwrap(), Some(512));
        assert_eq!(c.get::<u32>("q").unwrap(), None);
        assert!(FileConfig::parse("bogus = 1").is_err());
        assert!(FileConfig::parse("k 2").is_err());
        assert!(c.get::<u32>("k").is_ok());
        assert!(FileConfig::parse("k = x").unwrap().get::<u32>("k").is_err());
    }
}
