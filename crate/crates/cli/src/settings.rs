use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use npk_core::kv::KeyValues;

/// Config-file values behind command-line flags.
pub struct Settings {
    pub kv: KeyValues,
    pub seed: u64,
}

impl Settings {
    pub fn load(path: Option<&Path>, seed_flag: Option<u64>) -> Result<Self> {
        let kv = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                KeyValues::parse(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => KeyValues::default(),
        };
        let mut s = Self { kv, seed: 0 };
        s.seed = s.pick(seed_flag, "seed", 0)?;
        Ok(s)
    }

    /// Flag, then config key, then default.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.kv.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| anyhow::anyhow!("config key {key}: cannot parse {raw:?}")),
            None => Ok(default),
        }
    }
}
