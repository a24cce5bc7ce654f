//! Six-step autonomy ladder governing how far an automated action may go
//! before a human must approve it. Level 5 is accepted as a concept but
//! cannot be configured.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct AutonomyLevel(u8);

impl AutonomyLevel {
    pub const MANUAL: AutonomyLevel = AutonomyLevel(0);
    pub const ASSISTED: AutonomyLevel = AutonomyLevel(1);
    pub const PARTIAL: AutonomyLevel = AutonomyLevel(2);
    pub const CONDITIONAL: AutonomyLevel = AutonomyLevel(3);
    pub const HIGH: AutonomyLevel = AutonomyLevel(4);

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn description(self) -> &'static str {
        match self.0 {
            0 => "Fully Manual",
            1 => "Basic Assistance",
            2 => "Partial Automation",
            3 => "Conditional",
            _ => "High Automation",
        }
    }

    /// Levels 0-2: every AI contribution is reviewed before it takes effect.
    pub fn requires_review(self) -> bool {
        self.0 <= 2
    }
}

impl TryFrom<u8> for AutonomyLevel {
    type Error = Error;

    fn try_from(level: u8) -> Result<Self, Error> {
        match level {
            0..=4 => Ok(AutonomyLevel(level)),
            5 => Err(Error::Config(
                "autonomy level 5 not implementable: full autonomy is an aspirational boundary"
                    .into(),
            )),
            _ => Err(Error::Config(format!(
                "autonomy level {level} is outside 0..=5"
            ))),
        }
    }
}

impl From<AutonomyLevel> for u8 {
    fn from(level: AutonomyLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for AutonomyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Level {} ({})", self.0, self.description())
    }
}
