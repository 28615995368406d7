//! Key/value config files with `[section]` headers.
//!
//! Flags given on the command line take precedence over config entries; the
//! lookup key is `section.key`. Lines starting with `#` or `;` are comments.

use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|(line, msg)| {
            format!("{}:{line}: {msg}", path.display())
        })
    }

    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut entries = HashMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or((no + 1, "unterminated section header".to_string()))?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or((no + 1, format!("expected `key = value`, got `{line}`")))?;
            let full = if section.is_empty() {
                key.trim().to_ascii_lowercase()
            } else {
                format!("{section}.{}", key.trim().to_ascii_lowercase())
            };
            entries.insert(full, value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
        }
    }
}
