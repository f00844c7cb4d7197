//! TOML service configuration.
//!
//! ```toml
//! store = "store"
//! registry = "models/registry.json"
//! bind = "127.0.0.1:8080"
//! threshold = 0.5
//!
//! [source]
//! kind = "http_poll"
//! location = "http://127.0.0.1:9000/tweets"
//! keywords = ["elektroauto", "e-auto", "ladesäule"]
//! interval_secs = 60
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::orchestrate::Thresholds;
use crate::source::SourceSpec;
use crate::store::DEFAULT_COMPACT_EVERY;

pub const CONFIG_ENV: &str = "NEEDMINER_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "needminer.toml";

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn half() -> f64 {
    0.5
}

fn default_compact() -> usize {
    DEFAULT_COMPACT_EVERY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub store: PathBuf,
    pub registry: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "half")]
    pub threshold: f64,
    #[serde(default = "half")]
    pub category_threshold: f64,
    #[serde(default)]
    pub sentiment_lexicon: Option<PathBuf>,
    #[serde(default)]
    pub name_lexicon: Option<PathBuf>,
    #[serde(default = "default_compact")]
    pub compact_every: usize,
    #[serde(default)]
    pub source: Option<SourceSpec>,
}

/// The config file to read: an explicit path wins, then `NEEDMINER_CONFIG`,
/// then `needminer.toml` in the working directory.
pub fn config_path(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(DEFAULT_CONFIG_FILE),
    }
}

impl ServiceConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.store);
        rebase(&mut cfg.registry);
        if let Some(p) = cfg.sentiment_lexicon.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.name_lexicon.as_mut() {
            rebase(p);
        }
        if let Some(src) = cfg.source.as_mut() {
            if src.kind == crate::source::SourceKind::FileReplay {
                let mut p = PathBuf::from(&src.location);
                rebase(&mut p);
                src.location = p.display().to_string();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ServiceError::Config(m) => ServiceError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            need: self.threshold,
            category: self.category_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds().validate()?;
        if self.bind.parse::<std::net::SocketAddr>().is_err() {
            return Err(ServiceError::Config(format!(
                "bind address {:?} is not host:port",
                self.bind
            )));
        }
        if let Some(s) = &self.source {
            s.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_rebasing() {
        let c = ServiceConfig::parse(
            "store = \"s\"\nregistry = \"/abs/r.json\"\n",
            Path::new("/etc/nm"),
        )
        .unwrap();
        assert_eq!(c.store, PathBuf::from("/etc/nm/s"));
        assert_eq!(c.registry, PathBuf::from("/abs/r.json"));
        assert_eq!(c.bind, "127.0.0.1:8080");
        assert_eq!(c.threshold, 0.5);
        assert!(c.source.is_none());
    }

    #[test]
    fn source_section() {
        let text = r#"
store = "s"
registry = "r.json"
[source]
kind = "file_replay"
location = "tweets.jsonl"
keywords = ["e-auto"]
"#;
        let c = ServiceConfig::parse(text, Path::new("/d")).unwrap();
        let s = c.source.unwrap();
        assert_eq!(s.location, "/d/tweets.jsonl");
        assert_eq!(s.interval_secs, 1);
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        assert!(
            ServiceConfig::parse("store = \"s\"\nregistry = \"r\"\nthreshold = 1.5\n", base)
                .is_err()
        );
        assert!(ServiceConfig::parse(
            "store = \"s\"\nregistry = \"r\"\nbind = \"nowhere\"\n",
            base
        )
        .is_err());
        assert!(
            ServiceConfig::parse("store = \"s\"\nregistry = \"r\"\ncolour = 1\n", base).is_err()
        );
        assert!(ServiceConfig::parse("store = \"s\"\n", base).is_err());
    }

    #[test]
    fn explicit_path_wins() {
        assert_eq!(
            config_path(Some(Path::new("x.toml"))),
            PathBuf::from("x.toml")
        );
    }
}
