//! Versioned model files per role, with an active-version pointer each.
//!
//! Roles are `need` plus the eight category names. The registry is a JSON
//! file; model paths inside it are resolved relative to its directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use needminer_core::learners::{load_model, TrainedModel};
use needminer_core::needcat::NeedCategory;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const NEED_ROLE: &str = "need";

/// Active version per role.
pub type ModelVersions = BTreeMap<String, u32>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleEntry {
    pub active: u32,
    pub versions: BTreeMap<u32, PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRegistry {
    #[serde(skip)]
    path: PathBuf,
    pub roles: BTreeMap<String, RoleEntry>,
}

/// Every active model, loaded together.
#[derive(Debug, Clone)]
pub struct LoadedModels {
    pub need: TrainedModel,
    pub categories: BTreeMap<NeedCategory, TrainedModel>,
    pub versions: ModelVersions,
}

fn check_role(role: &str) -> Result<()> {
    if role == NEED_ROLE || role.parse::<NeedCategory>().is_ok() {
        Ok(())
    } else {
        Err(ServiceError::Registry(format!(
            "unknown role {role:?}; expected \"need\" or a category name"
        )))
    }
}

impl ModelRegistry {
    /// Reads `path`, or starts an empty registry there if it does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut reg = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str::<ModelRegistry>(&text)
                .map_err(|e| ServiceError::Registry(format!("{}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => ModelRegistry::default(),
            Err(e) => return Err(ServiceError::io(&path, e)),
        };
        for (role, entry) in &reg.roles {
            check_role(role)?;
            if !entry.versions.contains_key(&entry.active) {
                return Err(ServiceError::Registry(format!(
                    "role {role}: active version {} is not registered",
                    entry.active
                )));
            }
        }
        reg.path = path;
        Ok(reg)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes through a temporary file and a rename.
    pub fn save(&self) -> Result<()> {
        let tmp = self.path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("registry serializes");
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
        }
        std::fs::write(&tmp, text).map_err(|e| ServiceError::io(&tmp, e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| ServiceError::io(&self.path, e))
    }

    /// Adds `file` as the next version of `role` and makes it active.
    pub fn register(&mut self, role: &str, file: impl Into<PathBuf>) -> Result<u32> {
        check_role(role)?;
        let entry = self.roles.entry(role.to_string()).or_default();
        let version = entry.versions.keys().next_back().map_or(1, |v| v + 1);
        entry.versions.insert(version, file.into());
        entry.active = version;
        Ok(version)
    }

    pub fn activate(&mut self, role: &str, version: u32) -> Result<()> {
        let entry = self
            .roles
            .get_mut(role)
            .ok_or_else(|| ServiceError::Registry(format!("role {role} has no models")))?;
        if !entry.versions.contains_key(&version) {
            return Err(ServiceError::Registry(format!(
                "role {role} has no version {version}"
            )));
        }
        entry.active = version;
        Ok(())
    }

    pub fn active_versions(&self) -> ModelVersions {
        self.roles
            .iter()
            .map(|(r, e)| (r.clone(), e.active))
            .collect()
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Loads every active model, or fails without returning any of them.
    /// The need model is required; category roles are optional.
    pub fn load(&self) -> Result<LoadedModels> {
        let mut need = None;
        let mut categories = BTreeMap::new();
        for (role, entry) in &self.roles {
            let file = self.resolve(&entry.versions[&entry.active]);
            let model = load_model(&file).map_err(|e| {
                ServiceError::Registry(format!("role {role} v{}: {e}", entry.active))
            })?;
            if role == NEED_ROLE {
                need = Some(model);
            } else {
                categories.insert(role.parse::<NeedCategory>()?, model);
            }
        }
        let need = need.ok_or_else(|| ServiceError::Registry("no need model registered".into()))?;
        Ok(LoadedModels {
            need,
            categories,
            versions: self.active_versions(),
        })
    }
}
