//! Service configuration, loaded from TOML and validated as a whole before
//! anything starts.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentEnv, Definitions, RiskTable};
use crate::error::{Error, Result};
use crate::grading::GradeMapping;
use crate::outcomes::{OutcomeConfig, Ruleset};
use crate::store::AttendancePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Instructor,
    Coordinator,
    Admin,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Instructor => "instructor",
            Role::Coordinator => "coordinator",
            Role::Admin => "admin",
        }
    }
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Store directory; relative paths resolve against the config file.
    pub store: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    /// Workflow definitions file.
    #[serde(default)]
    pub workflows: Option<PathBuf>,
    #[serde(default)]
    pub outcomes: OutcomeConfig,
    #[serde(default)]
    pub attendance: AttendancePolicy,
    #[serde(default)]
    pub risk: RiskTable,
    #[serde(default)]
    pub grading: GradeMapping,
    #[serde(default)]
    pub compliance: Ruleset,
    /// Actor id to role.
    #[serde(default)]
    pub roles: BTreeMap<String, Role>,
}

impl ServiceConfig {
    /// Defaults everywhere, store at `store`.
    pub fn with_store(store: impl Into<PathBuf>) -> Self {
        Self {
            store: store.into(),
            listen: default_listen(),
            workflows: None,
            outcomes: OutcomeConfig::default(),
            attendance: AttendancePolicy::default(),
            risk: RiskTable::default(),
            grading: GradeMapping::default(),
            compliance: Ruleset::default(),
            roles: BTreeMap::new(),
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if cfg.store.is_relative() {
            cfg.store = base.join(&cfg.store);
        }
        if let Some(w) = &cfg.workflows {
            if w.is_relative() {
                cfg.workflows = Some(base.join(w));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.outcomes.validate()?;
        self.risk.validate()?;
        self.listen
            .parse::<SocketAddr>()
            .map_err(|e| Error::Config(format!("listen: `{}`: {e}", self.listen)))?;
        if !(self.compliance.weight_tolerance >= 0.0) {
            return Err(Error::Config(
                "compliance.weight_tolerance must be non-negative".into(),
            ));
        }
        self.definitions()?;
        Ok(())
    }

    pub fn definitions(&self) -> Result<Definitions> {
        match &self.workflows {
            Some(p) => Definitions::load(p),
            None => Ok(Definitions::default()),
        }
    }

    pub fn env(&self) -> AgentEnv {
        AgentEnv::new(self.risk, self.attendance, self.outcomes)
    }

    pub fn role_of(&self, actor: &str) -> Option<Role> {
        self.roles.get(actor).copied()
    }
}
